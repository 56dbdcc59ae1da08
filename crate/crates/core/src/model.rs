//! States, spin operators and the entangling generator in the usual representation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilator, creator, matrix_exponential, number_operator, vacuum_state, FockOperator, FockState, ModeLabel,
    ModeRegistry, Region, Spin,
};
use crate::wavepackets::{GridFunction, PacketLayout, DEFAULT_APERTURE_TOL, DEFAULT_WSW_TOL};

/// Largest κ for which first-order results are trusted.
pub const KAPPA_FIRST_ORDER_MAX: f64 = 0.2;
pub const EXPM_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Spin quantization direction (θ, φ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinDirection {
    theta: f64,
    phi: f64,
}

impl SpinDirection {
    /// θ must lie in [0, π]; φ is wrapped into [0, 2π).
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidDirection(format!("theta={theta}, phi={phi}")));
        }
        if !(-1e-12..=PI + 1e-12).contains(&theta) {
            return Err(Error::InvalidDirection(format!("theta={theta} outside [0, pi]")));
        }
        let mut phi = phi.rem_euclid(2.0 * PI);
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        Ok(SpinDirection { theta: theta.clamp(0.0, PI), phi })
    }

    pub fn x1() -> Self {
        SpinDirection { theta: PI / 2.0, phi: 0.0 }
    }

    pub fn x2() -> Self {
        SpinDirection { theta: PI / 2.0, phi: PI / 2.0 }
    }

    pub fn x3() -> Self {
        SpinDirection { theta: 0.0, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// (sinθ cosφ, sinθ sinφ, cosθ).
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn dot(&self, other: &SpinDirection) -> f64 {
        let (a, b) = (self.unit_vector(), other.unit_vector());
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    /// Third component u_3 = cosθ.
    pub fn u3(&self) -> f64 {
        self.theta.cos()
    }
}

/// θ at `n_theta` evenly spaced values in [0, π], φ at k·2π/`n_phi`.
pub fn direction_grid(n_theta: usize, n_phi: usize) -> Vec<SpinDirection> {
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = if n_theta == 1 { 0.0 } else { PI * i as f64 / (n_theta - 1) as f64 };
        for k in 0..n_phi {
            out.push(SpinDirection { theta, phi: 2.0 * PI * k as f64 / n_phi as f64 });
        }
    }
    out
}

/// Geometry, mode registry and entanglement strength κ.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    registry: ModeRegistry,
    layout: PacketLayout,
    kappa: f64,
    probe_points: Vec<f64>,
    probe_functions: Vec<GridFunction>,
}

impl SystemConfig {
    /// Validates the layout against the default WSW and aperture tolerances.
    pub fn new(layout: PacketLayout, kappa: f64, probe_points: &[f64]) -> Result<Self> {
        Self::with_tolerances(layout, kappa, probe_points, DEFAULT_WSW_TOL, DEFAULT_APERTURE_TOL)
    }

    pub fn with_tolerances(
        layout: PacketLayout,
        kappa: f64,
        probe_points: &[f64],
        wsw_tol: f64,
        aperture_tol: f64,
    ) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidKappa(kappa));
        }
        let w = layout.wsw(wsw_tol);
        if !w.pass {
            return Err(Error::InvalidGrid(format!("packets overlap: max product {:e}", w.max_product)));
        }
        let a = layout.aperture(aperture_tol)?;
        if !a.pass {
            return Err(Error::InvalidGrid(format!("aperture conditions fail: integral error {:e}", a.integral_error)));
        }
        let registry = ModeRegistry::standard(probe_points.len() as u32)?;
        let probe_functions = layout.probe_functions(probe_points)?;
        Ok(SystemConfig { registry, layout, kappa, probe_points: probe_points.to_vec(), probe_functions })
    }

    /// Standard layout, κ = 0, no probe modes.
    pub fn standard() -> Result<Self> {
        Self::new(PacketLayout::standard()?, 0.0, &[])
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidKappa(kappa));
        }
        Ok(SystemConfig { kappa, ..self.clone() })
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn layout(&self) -> &PacketLayout {
        &self.layout
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn first_order_valid(&self) -> bool {
        self.kappa <= KAPPA_FIRST_ORDER_MAX
    }

    pub fn probe_points(&self) -> &[f64] {
        &self.probe_points
    }

    pub fn probe_functions(&self) -> &[GridFunction] {
        &self.probe_functions
    }

    /// b_{s,r}.
    pub fn b(&self, s: Spin, r: Region) -> FockOperator {
        annihilator(&self.registry, ModeLabel::Physical(s, r)).expect("physical modes are always registered")
    }

    pub fn b_dag(&self, s: Spin, r: Region) -> FockOperator {
        creator(&self.registry, ModeLabel::Physical(s, r)).expect("physical modes are always registered")
    }

    /// a_{(j)}, j in 1..=3.
    pub fn a(&self, j: u8) -> Result<FockOperator> {
        annihilator(&self.registry, ModeLabel::Auxiliary(j))
    }

    pub fn a_dag(&self, j: u8) -> Result<FockOperator> {
        creator(&self.registry, ModeLabel::Auxiliary(j))
    }
}

/// Ordered creator list: physical (spin, region) first, then auxiliary indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupationDescriptor {
    pub physical: Vec<(Spin, Region)>,
    pub auxiliary: Vec<u8>,
}

impl OccupationDescriptor {
    pub fn new(physical: Vec<(Spin, Region)>, auxiliary: Vec<u8>) -> Result<Self> {
        for (i, p) in physical.iter().enumerate() {
            if physical[..i].contains(p) {
                return Err(Error::DuplicateOccupation(format!("{},{}", p.0, p.1)));
            }
        }
        for (i, j) in auxiliary.iter().enumerate() {
            if !(1..=3).contains(j) {
                return Err(Error::UnknownMode(ModeLabel::Auxiliary(*j).to_string()));
            }
            if auxiliary[..i].contains(j) {
                return Err(Error::DuplicateOccupation(format!("aux {j}")));
            }
        }
        Ok(OccupationDescriptor { physical, auxiliary })
    }

    /// One particle per region with the given spins, plus all three auxiliary quanta.
    pub fn spins(s1: Spin, s2: Spin, s3: Spin) -> Self {
        OccupationDescriptor {
            physical: vec![(s1, Region::R1), (s2, Region::R2), (s3, Region::R3)],
            auxiliary: vec![1, 2, 3],
        }
    }

    /// Spin up in region 1, down in regions 2 and 3.
    pub fn unentangled() -> Self {
        Self::spins(Spin::Up, Spin::Down, Spin::Down)
    }
}

/// Ordered creator product on the vacuum. Auxiliary wavefunctions only enter
/// through their normalization, which is checked.
pub fn build_state(cfg: &SystemConfig, desc: &OccupationDescriptor) -> Result<FockState> {
    let desc = OccupationDescriptor::new(desc.physical.clone(), desc.auxiliary.clone())?;
    for &j in &desc.auxiliary {
        let f = &cfg.layout.auxiliary[j as usize - 1];
        if !f.is_normalized() {
            return Err(Error::NotNormalized(f.norm()));
        }
    }
    let mut ops: Vec<FockOperator> = desc.physical.iter().map(|&(s, r)| cfg.b_dag(s, r)).collect();
    for &j in &desc.auxiliary {
        ops.push(cfg.a_dag(j)?);
    }
    let mut state = vacuum_state(&cfg.registry);
    for op in ops.iter().rev() {
        state = op.apply(&state)?;
    }
    Ok(state)
}

/// The four region-local pieces of a spin operator: n_up, n_down, b†_down b_up, b†_up b_down.
#[derive(Debug, Clone)]
pub struct SpinParts {
    pub n_up: FockOperator,
    pub n_down: FockOperator,
    pub lower: FockOperator,
    pub raise: FockOperator,
}

impl SpinParts {
    pub fn new(cfg: &SystemConfig, region: Region) -> Result<Self> {
        let reg = &cfg.registry;
        let up = ModeLabel::Physical(Spin::Up, region);
        let down = ModeLabel::Physical(Spin::Down, region);
        Ok(SpinParts {
            n_up: number_operator(reg, up)?,
            n_down: number_operator(reg, down)?,
            lower: creator(reg, down)?.try_mul(&annihilator(reg, up)?)?,
            raise: creator(reg, up)?.try_mul(&annihilator(reg, down)?)?,
        })
    }

    /// Coefficients of (n_up, n_down, lower, raise) for direction `dir`.
    pub fn coefficients(dir: &SpinDirection) -> [Complex64; 4] {
        let (st, ct) = dir.theta.sin_cos();
        [c(ct, 0.0), c(-ct, 0.0), Complex64::from_polar(st, dir.phi), Complex64::from_polar(st, -dir.phi)]
    }

    pub fn combine(&self, dir: &SpinDirection) -> FockOperator {
        let k = Self::coefficients(dir);
        let a = self.n_up.combine(k[0], &self.n_down, k[1]).expect("same registry");
        let b = self.lower.combine(k[2], &self.raise, k[3]).expect("same registry");
        &a + &b
    }

    pub fn map(&self, f: impl Fn(&FockOperator) -> Result<FockOperator>) -> Result<Self> {
        Ok(SpinParts { n_up: f(&self.n_up)?, n_down: f(&self.n_down)?, lower: f(&self.lower)?, raise: f(&self.raise)? })
    }
}

/// The four spin pieces of every region applied to one state, so that
/// Ŝ_r(u⃗)|ψ⟩ for any direction is a linear combination.
#[derive(Debug, Clone)]
pub struct SpinVectors {
    applied: [[FockState; 4]; 3],
}

impl SpinVectors {
    pub fn new(parts: &[SpinParts; 3], state: &FockState) -> Result<Self> {
        let ap = |p: &SpinParts| -> Result<[FockState; 4]> {
            Ok([p.n_up.apply(state)?, p.n_down.apply(state)?, p.lower.apply(state)?, p.raise.apply(state)?])
        };
        Ok(SpinVectors { applied: [ap(&parts[0])?, ap(&parts[1])?, ap(&parts[2])?] })
    }

    /// Usual-representation vectors for a state, normalized first.
    pub fn for_state(cfg: &SystemConfig, state: &FockState) -> Result<Self> {
        let parts =
            [SpinParts::new(cfg, Region::R1)?, SpinParts::new(cfg, Region::R2)?, SpinParts::new(cfg, Region::R3)?];
        Self::new(&parts, &state.normalized())
    }

    /// Ŝ_r(u⃗)|ψ⟩.
    pub fn vector(&self, r: Region, dir: &SpinDirection) -> FockState {
        let k = SpinParts::coefficients(dir);
        let v = &self.applied[r.index()];
        let a = v[0].combine(k[0], &v[1], k[1]).expect("same registry");
        let b = v[2].combine(k[2], &v[3], k[3]).expect("same registry");
        a.combine(c(1.0, 0.0), &b, c(1.0, 0.0)).expect("same registry")
    }

    /// ⟨ψ|Ŝ|ψ⟩, with ψ the state the vectors were built on.
    pub fn expectation(&self, state: &FockState, r: Region, dir: &SpinDirection) -> Result<f64> {
        real_part(state.inner(&self.vector(r, dir))?)
    }

    /// ⟨Ŝ_a ψ|Ŝ_b ψ⟩, which equals ⟨ψ|Ŝ_a Ŝ_b|ψ⟩ for Hermitian Ŝ_a.
    pub fn correlation(&self, ra: Region, da: &SpinDirection, rb: Region, db: &SpinDirection) -> Result<f64> {
        if ra == rb {
            return Err(Error::SameRegion);
        }
        real_part(self.vector(ra, da).inner(&self.vector(rb, db))?)
    }
}

/// cosθ(n_up − n_down) + sinθ(e^{iφ} b†_down b_up + e^{−iφ} b†_up b_down) on one region.
pub fn localized_spin_operator(cfg: &SystemConfig, region: Region, dir: &SpinDirection) -> Result<FockOperator> {
    Ok(SpinParts::new(cfg, region)?.combine(dir))
}

/// Creator for spin along (`Spin::Up`) or against (`Spin::Down`) `dir` in a region.
pub fn rotated_creator(cfg: &SystemConfig, region: Region, along: Spin, dir: &SpinDirection) -> Result<FockOperator> {
    let (sh, ch) = (dir.theta / 2.0).sin_cos();
    let em = Complex64::from_polar(1.0, -dir.phi / 2.0);
    let ep = Complex64::from_polar(1.0, dir.phi / 2.0);
    let (cu, cd) = match along {
        Spin::Up => (em * ch, ep * sh),
        Spin::Down => (-em * sh, ep * ch),
    };
    cfg.b_dag(Spin::Up, region).combine(cu, &cfg.b_dag(Spin::Down, region), cd)
}

/// G = −iκ(b†_{down,1} b†_{up,2} b_{down,2} b_{up,1} − h.c.), the dimensionless
/// generator HΔt/ħ of the entangling evolution.
pub fn entangling_generator(cfg: &SystemConfig) -> Result<FockOperator> {
    let t = &(&(&cfg.b_dag(Spin::Down, Region::R1) * &cfg.b_dag(Spin::Up, Region::R2))
        * &cfg.b(Spin::Down, Region::R2))
        * &cfg.b(Spin::Up, Region::R1);
    let diff = &t - &t.adjoint();
    Ok(diff.scale(c(0.0, -cfg.kappa)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    First,
    Exact,
}

#[derive(Debug, Clone)]
pub struct Evolved {
    pub state: FockState,
    /// Set when a first-order result is requested outside the perturbative guard.
    pub outside_first_order: bool,
}

/// First order: (1 − iG)|ψ⟩, left unnormalized. Exact: exp(−iG)|ψ⟩.
pub fn evolve(cfg: &SystemConfig, state: &FockState, order: Order) -> Result<Evolved> {
    let g = entangling_generator(cfg)?;
    let state = match order {
        Order::First => state.combine(c(1.0, 0.0), &g.apply(state)?, c(0.0, -1.0))?,
        Order::Exact => matrix_exponential(&g.scale(c(0.0, -1.0)), EXPM_TOL)?.apply(state)?,
    };
    Ok(Evolved { state, outside_first_order: order == Order::First && !cfg.first_order_valid() })
}

pub(crate) fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() > 1e-10 {
        return Err(Error::NonReal(z.im));
    }
    Ok(z.re)
}

/// ⟨Ŝ⟩ in `state` after normalizing it.
pub fn spin_expectation(cfg: &SystemConfig, state: &FockState, region: Region, dir: &SpinDirection) -> Result<f64> {
    let psi = state.normalized();
    let s = localized_spin_operator(cfg, region, dir)?;
    real_part(psi.inner(&s.apply(&psi)?)?)
}

/// ⟨Ŝ_a Ŝ_b⟩ in `state` after normalizing it.
pub fn spin_correlation(
    cfg: &SystemConfig,
    state: &FockState,
    ra: Region,
    da: &SpinDirection,
    rb: Region,
    db: &SpinDirection,
) -> Result<f64> {
    if ra == rb {
        return Err(Error::SameRegion);
    }
    let psi = state.normalized();
    let sa = localized_spin_operator(cfg, ra, da)?.apply(&psi)?;
    let sb = localized_spin_operator(cfg, rb, db)?.apply(&psi)?;
    real_part(sa.inner(&sb)?)
}

/// Determinant of the region-1/region-2 spin amplitude matrix
/// M[s1][s2] = ⟨ψ_{s1,s2,down}|ψ⟩. Zero for a product of the two spins.
pub fn pair_determinant(cfg: &SystemConfig, state: &FockState) -> Result<Complex64> {
    let mut m = [[c(0.0, 0.0); 2]; 2];
    for (i, &s1) in Spin::BOTH.iter().enumerate() {
        for (j, &s2) in Spin::BOTH.iter().enumerate() {
            let basis = build_state(cfg, &OccupationDescriptor::spins(s1, s2, Spin::Down))?;
            m[i][j] = basis.inner(state)?;
        }
    }
    Ok(m[0][0] * m[1][1] - m[0][1] * m[1][0])
}

/// Analytic values for the three-particle state.
pub mod closed_form {
    use super::SpinDirection;
    use crate::fock::Region;

    /// z-sign of each region's particle in the unentangled state.
    pub fn z_sign(r: Region) -> f64 {
        match r {
            Region::R1 => 1.0,
            Region::R2 | Region::R3 => -1.0,
        }
    }

    /// ±u_{r,3}; unchanged at first order in κ.
    pub fn expectation(r: Region, d: &SpinDirection) -> f64 {
        z_sign(r) * d.u3()
    }

    /// (1,2) → −u_{1,3}u_{2,3}, (2,3) → +u_{2,3}u_{3,3}, (3,1) → −u_{3,3}u_{1,3}.
    pub fn unentangled_correlation(ra: Region, da: &SpinDirection, rb: Region, db: &SpinDirection) -> f64 {
        z_sign(ra) * z_sign(rb) * da.u3() * db.u3()
    }

    /// First order in κ: the (1,2) pair becomes −(1−2κ)u_{1,3}u_{2,3} − 2κ u⃗₁·u⃗₂.
    pub fn entangled_correlation(kappa: f64, ra: Region, da: &SpinDirection, rb: Region, db: &SpinDirection) -> f64 {
        let mut pair = [ra, rb];
        pair.sort();
        if pair == [Region::R1, Region::R2] {
            -(1.0 - 2.0 * kappa) * da.u3() * db.u3() - 2.0 * kappa * da.dot(db)
        } else {
            unentangled_correlation(ra, da, rb, db)
        }
    }
}
