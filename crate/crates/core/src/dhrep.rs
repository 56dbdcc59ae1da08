//! Deutsch-Hayden transformations, transformed operators and locality diagnostics.
//!
//! The unentangled transform is V = V3 V2 V1 with V_i = exp(θ_i W_i) and
//! W_i = g_i(a_i b_i − b_i† a_i†) pairing (up,1)↔a1, (down,2)↔a2, (down,3)↔a3.
//! The entangled transform is V_en = V exp(iG).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilator, creator, matrix_exponential, number_operator, operator_distance, vacuum_state, FockOperator,
    FockState, ModeLabel, ModeRegistry, Region, Spin,
};
use crate::model::{
    build_state, entangling_generator, real_part, OccupationDescriptor, SpinDirection, SpinParts, SpinVectors,
    SystemConfig, EXPM_TOL,
};
use crate::wavepackets::{gaussian_packet, Grid, GridFunction};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// (spin, region, auxiliary index) removed by each factor, in application order.
pub const FACTOR_MODES: [(Spin, Region, u8); 3] =
    [(Spin::Up, Region::R1, 1), (Spin::Down, Region::R2, 2), (Spin::Down, Region::R3, 3)];

/// Parameters of one factor exp(θW) with cos(θg) = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhFactorParams {
    pub g: f64,
    pub theta: f64,
    /// sin(θg), either +1 or −1.
    pub s: i32,
}

impl DhFactorParams {
    pub fn new(g: f64, theta: f64) -> Result<Self> {
        let x = theta * g;
        if !x.is_finite() || x.cos().abs() > 1e-12 {
            return Err(Error::FactorParams(format!("g={g}, theta={theta}")));
        }
        Ok(DhFactorParams { g, theta, s: if x.sin() > 0.0 { 1 } else { -1 } })
    }

    /// g = 1, θ = s·π/2.
    pub fn from_sign(s: i32) -> Result<Self> {
        match s {
            1 | -1 => Self::new(1.0, s as f64 * FRAC_PI_2),
            _ => Err(Error::FactorParams(format!("sign {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "snake_case")]
pub enum DhFlavor {
    Unentangled,
    Entangled { kappa: f64 },
}

#[derive(Debug, Clone)]
pub struct DhTransform {
    v: FockOperator,
    base: FockOperator,
    factors: [DhFactorParams; 3],
    flavor: DhFlavor,
}

impl DhTransform {
    pub fn v(&self) -> &FockOperator {
        &self.v
    }

    /// The unentangled transform this one was built from (itself if unentangled).
    pub fn base(&self) -> &FockOperator {
        &self.base
    }

    pub fn factors(&self) -> &[DhFactorParams; 3] {
        &self.factors
    }

    pub fn signs(&self) -> [i32; 3] {
        self.factors.map(|f| f.s)
    }

    pub fn flavor(&self) -> DhFlavor {
        self.flavor
    }

    pub fn registry(&self) -> &ModeRegistry {
        self.v.registry()
    }

    pub fn kappa(&self) -> f64 {
        match self.flavor {
            DhFlavor::Unentangled => 0.0,
            DhFlavor::Entangled { kappa } => kappa,
        }
    }

    pub fn conjugate(&self, op: &FockOperator) -> Result<FockOperator> {
        conjugate(self, op)
    }
}

/// g(a_j b_{s,r} − b†_{s,r} a†_j).
pub fn removal_generator(cfg: &SystemConfig, spin: Spin, region: Region, aux: u8, g: f64) -> Result<FockOperator> {
    let b = cfg.b(spin, region);
    let a = cfg.a(aux)?;
    let w = &(&a * &b) - &(&b.adjoint() * &a.adjoint());
    Ok(w.scale(c(g, 0.0)))
}

/// exp(θ_i W_i) for factor i in 0..3.
pub fn removal_factor(cfg: &SystemConfig, i: usize, p: &DhFactorParams) -> Result<FockOperator> {
    let (s, r, j) = FACTOR_MODES[i];
    let w = removal_generator(cfg, s, r, j, p.g)?;
    matrix_exponential(&w.scale(c(p.theta, 0.0)), EXPM_TOL)
}

fn check_signs(signs: [i32; 3]) -> Result<()> {
    let p = signs[0] * signs[1] * signs[2];
    if p != -1 || signs.iter().any(|s| s.abs() != 1) {
        return Err(Error::SignConstraint(p));
    }
    Ok(())
}

/// V = V3 V2 V1 with g_i = 1, θ_i = s_i π/2; requires s1 s2 s3 = −1.
pub fn build_unentangled_transform(cfg: &SystemConfig, signs: [i32; 3]) -> Result<DhTransform> {
    check_signs(signs)?;
    let factors = [
        DhFactorParams::from_sign(signs[0])?,
        DhFactorParams::from_sign(signs[1])?,
        DhFactorParams::from_sign(signs[2])?,
    ];
    let mut v = FockOperator::identity(cfg.registry());
    for (i, p) in factors.iter().enumerate() {
        v = removal_factor(cfg, i, p)?.try_mul(&v)?;
    }
    Ok(DhTransform { base: v.clone(), v, factors, flavor: DhFlavor::Unentangled })
}

/// V_en = V exp(iG) with G built at `cfg.kappa()`.
pub fn build_entangled_transform(cfg: &SystemConfig, base: &DhTransform) -> Result<DhTransform> {
    if base.flavor != DhFlavor::Unentangled {
        return Err(Error::FlavorMismatch("entangled transform needs an unentangled base"));
    }
    let g = entangling_generator(cfg)?;
    let u = matrix_exponential(&g.scale(c(0.0, 1.0)), EXPM_TOL)?;
    Ok(DhTransform {
        v: base.v.try_mul(&u)?,
        base: base.v.clone(),
        factors: base.factors,
        flavor: DhFlavor::Entangled { kappa: cfg.kappa() },
    })
}

/// V A V†.
pub fn conjugate(t: &DhTransform, op: &FockOperator) -> Result<FockOperator> {
    t.v.try_mul(op)?.try_mul(&t.v.adjoint())
}

/// V(A + i[G, A])V† with V the unentangled base and G at the transform's κ.
pub fn first_order_conjugate(cfg: &SystemConfig, t: &DhTransform, op: &FockOperator) -> Result<FockOperator> {
    let g = entangling_generator(&cfg.with_kappa(t.kappa())?)?;
    let inner = op.try_add(&g.commutator(op)?.scale(c(0.0, 1.0)))?;
    t.base.try_mul(&inner)?.try_mul(&t.base.adjoint())
}

/// A|0⟩.
pub fn vacuum_action(op: &FockOperator) -> FockState {
    op.apply(&vacuum_state(op.registry())).expect("vacuum shares the operator registry")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Usual,
    DhUnentangledClosedForm,
    DhEntangledClosedForm,
    /// Exact conjugation by the transform.
    Conjugated,
    /// V(A + i[G, A])V†.
    FirstOrderConjugated,
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::Usual => "usual",
            Provenance::DhUnentangledClosedForm => "dh_unentangled_closed_form",
            Provenance::DhEntangledClosedForm => "dh_entangled_closed_form",
            Provenance::Conjugated => "conjugated",
            Provenance::FirstOrderConjugated => "first_order_conjugated",
        }
    }
}

/// Point-evaluated field operators φ_s(x) for a list of grid points.
#[derive(Debug, Clone)]
pub struct FieldSection {
    pub points: Vec<f64>,
    pub provenance: Provenance,
    pub up: Vec<FockOperator>,
    pub down: Vec<FockOperator>,
}

impl FieldSection {
    pub fn get(&self, i: usize, spin: Spin) -> &FockOperator {
        match spin {
            Spin::Up => &self.up[i],
            Spin::Down => &self.down[i],
        }
    }
}

/// Mode coefficients of φ_s(x): packet values ψ_r(x) and probe values χ_p(x).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCoefficients {
    pub packets: [Complex64; 3],
    pub probes: Vec<Complex64>,
}

pub fn point_coefficients(cfg: &SystemConfig, x: f64) -> Result<PointCoefficients> {
    Ok(PointCoefficients {
        packets: cfg.layout().packet_values(x)?,
        probes: cfg.probe_functions().iter().map(|f| f.value_at(x)).collect::<Result<_>>()?,
    })
}

/// Images of the annihilators entering φ_s(x) under some linear map.
struct ModeImages {
    physical: [[FockOperator; 3]; 2],
    probes: Vec<FockOperator>,
}

impl ModeImages {
    fn new(cfg: &SystemConfig, f: impl Fn(&FockOperator) -> Result<FockOperator>) -> Result<Self> {
        let reg = cfg.registry();
        let row = |s: Spin| -> Result<[FockOperator; 3]> {
            Ok([f(&cfg.b(s, Region::R1))?, f(&cfg.b(s, Region::R2))?, f(&cfg.b(s, Region::R3))?])
        };
        let probes = reg.probes().map(|m| f(&annihilator(reg, m)?)).collect::<Result<_>>()?;
        Ok(ModeImages { physical: [row(Spin::Up)?, row(Spin::Down)?], probes })
    }

    fn field(&self, cfg: &SystemConfig, spin: Spin, k: &PointCoefficients) -> FockOperator {
        let mut out = FockOperator::zero(cfg.registry());
        let modes = &self.physical[(spin == Spin::Down) as usize];
        for (op, &z) in modes.iter().zip(&k.packets) {
            out = &out + &op.scale(z);
        }
        for (op, &z) in self.probes.iter().zip(&k.probes) {
            out = &out + &op.scale(z);
        }
        out
    }
}

fn aux_term(cfg: &SystemConfig, j: u8, s: i32, dagger: bool) -> Result<FockOperator> {
    let a = if dagger { cfg.a_dag(j)? } else { cfg.a(j)? };
    Ok(a.scale(c(s as f64, 0.0)))
}

/// Closed-form unentangled DH field: φ_s(x) plus ψ_r(x)(s_r a†_r − b_{s,r})
/// for every factor that removes a spin-s quantum.
fn dh_unentangled_field(
    cfg: &SystemConfig,
    t: &DhTransform,
    spin: Spin,
    k: &PointCoefficients,
    usual: &FockOperator,
) -> Result<FockOperator> {
    let mut out = usual.clone();
    for (i, &(s, r, j)) in FACTOR_MODES.iter().enumerate() {
        if s != spin {
            continue;
        }
        let corr = aux_term(cfg, j, t.factors[i].s, true)?.try_sub(&cfg.b(s, r))?;
        out = out.try_add(&corr.scale(k.packets[r.index()]))?;
    }
    Ok(out)
}

/// κ terms of the entangled DH field at first order.
fn dh_entangled_correction(
    cfg: &SystemConfig,
    t: &DhTransform,
    spin: Spin,
    k: &PointCoefficients,
) -> Result<FockOperator> {
    let [s1, s2, _] = t.signs();
    let kappa = t.kappa();
    let (psi1, psi2) = (k.packets[0], k.packets[1]);
    let (d1, u2) = (cfg.b(Spin::Down, Region::R1), cfg.b(Spin::Up, Region::R2));
    let a1d = aux_term(cfg, 1, s1, true)?;
    let a2d = aux_term(cfg, 2, s2, true)?;
    let term = match spin {
        // ψ2 b†_{d1} (s2 a†2)(s1 a†1) − ψ1 (s2 a2) b_{d1} b_{u2}
        Spin::Up => {
            let p = &(&d1.adjoint() * &a2d) * &a1d;
            let q = &(&aux_term(cfg, 2, s2, false)? * &d1) * &u2;
            p.combine(psi2, &q, -psi1)?
        }
        // ψ1 b†_{u2} (s1 a†1)(s2 a†2) − ψ2 (s1 a1) b_{u2} b_{d1}
        Spin::Down => {
            let p = &(&u2.adjoint() * &a1d) * &a2d;
            let q = &(&aux_term(cfg, 1, s1, false)? * &u2) * &d1;
            p.combine(psi1, &q, -psi2)?
        }
    };
    Ok(term.scale(c(kappa, 0.0)))
}

/// Assembles φ_s(x) at each point in the requested representation.
pub fn field_section(
    cfg: &SystemConfig,
    t: &DhTransform,
    provenance: Provenance,
    points: &[f64],
) -> Result<FieldSection> {
    if t.registry() != cfg.registry() {
        return Err(Error::RegistryMismatch);
    }
    let needs_entangled =
        provenance == Provenance::DhEntangledClosedForm || provenance == Provenance::FirstOrderConjugated;
    if needs_entangled && t.flavor == DhFlavor::Unentangled {
        return Err(Error::FlavorMismatch("entangled representation needs an entangled transform"));
    }
    let identity = ModeImages::new(cfg, |op| Ok(op.clone()))?;
    let images = match provenance {
        Provenance::Conjugated => Some(ModeImages::new(cfg, |op| conjugate(t, op))?),
        Provenance::FirstOrderConjugated => Some(ModeImages::new(cfg, |op| first_order_conjugate(cfg, t, op))?),
        _ => None,
    };
    let mut up = Vec::with_capacity(points.len());
    let mut down = Vec::with_capacity(points.len());
    for &x in points {
        let k = point_coefficients(cfg, x)?;
        for spin in Spin::BOTH {
            let usual = identity.field(cfg, spin, &k);
            let op = match provenance {
                Provenance::Usual => usual,
                Provenance::Conjugated | Provenance::FirstOrderConjugated => {
                    images.as_ref().expect("images built above").field(cfg, spin, &k)
                }
                Provenance::DhUnentangledClosedForm => dh_unentangled_field(cfg, t, spin, &k, &usual)?,
                Provenance::DhEntangledClosedForm => dh_unentangled_field(cfg, t, spin, &k, &usual)?
                    .try_add(&dh_entangled_correction(cfg, t, spin, &k)?)?,
            };
            match spin {
                Spin::Up => up.push(op),
                Spin::Down => down.push(op),
            }
        }
    }
    Ok(FieldSection { points: points.to_vec(), provenance, up, down })
}

/// Spin operators of all three regions mapped into a representation, kept as
/// their four linear pieces so any direction is a cheap combination.
#[derive(Debug, Clone)]
pub struct SpinFrame {
    parts: [SpinParts; 3],
    vacuum: SpinVectors,
    vac: FockState,
}

impl SpinFrame {
    fn from_map(cfg: &SystemConfig, f: impl Fn(&FockOperator) -> Result<FockOperator>) -> Result<Self> {
        let mk = |r: Region| SpinParts::new(cfg, r)?.map(&f);
        let parts = [mk(Region::R1)?, mk(Region::R2)?, mk(Region::R3)?];
        let vac = vacuum_state(cfg.registry());
        let vacuum = SpinVectors::new(&parts, &vac)?;
        Ok(SpinFrame { parts, vacuum, vac })
    }

    /// Exact conjugation V S V†.
    pub fn conjugated(cfg: &SystemConfig, t: &DhTransform) -> Result<Self> {
        Self::from_map(cfg, |op| conjugate(t, op))
    }

    /// V(S + i[G, S])V†.
    pub fn first_order(cfg: &SystemConfig, t: &DhTransform) -> Result<Self> {
        Self::from_map(cfg, |op| first_order_conjugate(cfg, t, op))
    }

    pub fn operator(&self, r: Region, dir: &SpinDirection) -> FockOperator {
        self.parts[r.index()].combine(dir)
    }

    /// S|0⟩.
    pub fn vacuum_vector(&self, r: Region, dir: &SpinDirection) -> FockState {
        self.vacuum.vector(r, dir)
    }

    /// ⟨0|S|0⟩.
    pub fn expectation(&self, r: Region, dir: &SpinDirection) -> Result<f64> {
        self.vacuum.expectation(&self.vac, r, dir)
    }

    /// ⟨0|S_a S_b|0⟩ = ⟨S_a 0|S_b 0⟩ for Hermitian S_a.
    pub fn correlation(&self, ra: Region, da: &SpinDirection, rb: Region, db: &SpinDirection) -> Result<f64> {
        self.vacuum.correlation(ra, da, rb, db)
    }
}

/// ⟨0|V S V†|0⟩.
pub fn dh_vacuum_spin(cfg: &SystemConfig, t: &DhTransform, region: Region, dir: &SpinDirection) -> Result<f64> {
    let s = conjugate(t, &crate::model::localized_spin_operator(cfg, region, dir)?)?;
    real_part(vacuum_action(&s).amplitudes()[0])
}

/// ⟨0|(V S_a V†)(V S_b V†)|0⟩.
pub fn dh_vacuum_correlation(
    cfg: &SystemConfig,
    t: &DhTransform,
    ra: Region,
    da: &SpinDirection,
    rb: Region,
    db: &SpinDirection,
) -> Result<f64> {
    if ra == rb {
        return Err(Error::SameRegion);
    }
    let sa = conjugate(t, &crate::model::localized_spin_operator(cfg, ra, da)?)?;
    let sb = conjugate(t, &crate::model::localized_spin_operator(cfg, rb, db)?)?;
    let vac = vacuum_state(cfg.registry());
    real_part(vac.inner(&sa.try_mul(&sb)?.apply(&vac)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityEntry {
    pub point: f64,
    pub spin: Spin,
    pub representation: String,
    /// Frobenius distance between the DH and usual field operators.
    pub distance: f64,
    /// |ψ_1(x)|, |ψ_2(x)|, |ψ_3(x)|.
    pub packet_magnitudes: [f64; 3],
    /// Regions whose packets carry a spin-s quantum in the physical state.
    pub relevant_regions: Vec<usize>,
    /// All relevant packet magnitudes are at most `support_cut`.
    pub outside_relevant_support: bool,
    pub within_tol: bool,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityReport {
    pub flavor: DhFlavor,
    pub tol: f64,
    pub support_cut: f64,
    pub entries: Vec<LocalityEntry>,
    /// Every entry outside the relevant supports is within `tol`.
    pub pass: bool,
}

pub const SUPPORT_CUT: f64 = 1e-12;

/// Regions r with ⟨n_{s,r}⟩ > 1e-12 in the physical state V†|0⟩.
pub fn relevant_regions(cfg: &SystemConfig, t: &DhTransform, spin: Spin) -> Result<Vec<Region>> {
    let phys = t.v.adjoint().apply(&vacuum_state(cfg.registry()))?;
    let mut out = Vec::new();
    for r in Region::ALL {
        let n = number_operator(cfg.registry(), ModeLabel::Physical(spin, r))?;
        if phys.inner(&n.apply(&phys)?)?.re > 1e-12 {
            out.push(r);
        }
    }
    Ok(out)
}

/// Distance between conjugated and usual field operators at each point and spin.
pub fn locality_report(cfg: &SystemConfig, t: &DhTransform, points: &[f64], tol: f64) -> Result<LocalityReport> {
    let usual = field_section(cfg, t, Provenance::Usual, points)?;
    let dh = field_section(cfg, t, Provenance::Conjugated, points)?;
    let relevant = [relevant_regions(cfg, t, Spin::Up)?, relevant_regions(cfg, t, Spin::Down)?];
    let mut entries = Vec::new();
    for (i, &x) in points.iter().enumerate() {
        let mags = cfg.layout().packet_values(x)?.map(|z| z.norm());
        for spin in Spin::BOTH {
            let rel = &relevant[(spin == Spin::Down) as usize];
            let distance = operator_distance(dh.get(i, spin), usual.get(i, spin))?;
            let outside = rel.iter().all(|r| mags[r.index()] <= SUPPORT_CUT);
            entries.push(LocalityEntry {
                point: x,
                spin,
                representation: Provenance::Conjugated.name().to_string(),
                distance,
                packet_magnitudes: mags,
                relevant_regions: rel.iter().map(|r| r.number()).collect(),
                outside_relevant_support: outside,
                within_tol: distance <= tol,
                dim: cfg.registry().dim(),
            });
        }
    }
    let pass = entries.iter().all(|e| !e.outside_relevant_support || e.within_tol);
    Ok(LocalityReport { flavor: t.flavor, tol, support_cut: SUPPORT_CUT, entries, pass })
}

/// Analytic DH-representation states.
pub mod closed_form {
    use super::*;

    fn ket(cfg: &SystemConfig, phys: &[(Spin, Region)], aux: &[u8]) -> Result<FockState> {
        build_state(cfg, &OccupationDescriptor::new(phys.to_vec(), aux.to_vec())?)
    }

    fn sum(terms: &[(Complex64, FockState)]) -> Result<FockState> {
        let mut out = terms[0].1.scale(terms[0].0);
        for (z, s) in &terms[1..] {
            out = out.combine(c(1.0, 0.0), s, *z)?;
        }
        Ok(out)
    }

    /// φ_{s,DH}(x)|0⟩, unentangled (κ = 0) or entangled at first order.
    pub fn field_vacuum(cfg: &SystemConfig, t: &DhTransform, spin: Spin, x: f64) -> Result<FockState> {
        let [s1, s2, s3] = t.signs().map(|s| s as f64);
        let kappa = t.kappa();
        let [p1, p2, p3] = cfg.layout().packet_values(x)?;
        let (u, d) = (Spin::Up, Spin::Down);
        match spin {
            Spin::Up => {
                sum(&[(p1 * s1, ket(cfg, &[], &[1])?), (-p2 * s1 * s2 * kappa, ket(cfg, &[(d, Region::R1)], &[1, 2])?)])
            }
            Spin::Down => sum(&[
                (p2 * s2, ket(cfg, &[], &[2])?),
                (p3 * s3, ket(cfg, &[], &[3])?),
                (p1 * s1 * s2 * kappa, ket(cfg, &[(u, Region::R2)], &[1, 2])?),
            ]),
        }
    }

    /// φ†_{s,DH}(x)|0⟩ for the unentangled transform: only packets that
    /// carry no spin-s quantum and the probes contribute.
    pub fn field_dagger_vacuum(cfg: &SystemConfig, spin: Spin, x: f64) -> Result<FockState> {
        let k = point_coefficients(cfg, x)?;
        let reg = cfg.registry();
        let mut out = FockState::zero(reg);
        for r in Region::ALL {
            let removed = FACTOR_MODES.iter().any(|&(s, rr, _)| s == spin && rr == r);
            if !removed {
                out = out.combine(c(1.0, 0.0), &ket(cfg, &[(spin, r)], &[])?, k.packets[r.index()].conj())?;
            }
        }
        for (m, z) in reg.probes().zip(&k.probes) {
            out = out.combine(c(1.0, 0.0), &vacuum_action(&creator(reg, m)?), z.conj())?;
        }
        Ok(out)
    }

    /// S_{r,DH,en}|0⟩ at first order in κ.
    pub fn spin_vacuum(cfg: &SystemConfig, t: &DhTransform, r: Region, dir: &SpinDirection) -> Result<FockState> {
        let [s1, s2, s3] = t.signs().map(|s| s as f64);
        let kappa = t.kappa();
        let (st, ct) = dir.theta().sin_cos();
        let ep = Complex64::from_polar(1.0, dir.phi());
        let em = ep.conj();
        let (u, d) = (Spin::Up, Spin::Down);
        let vac = vacuum_state(cfg.registry());
        let one = c(1.0, 0.0);
        let pair = || ket(cfg, &[(u, Region::R2), (d, Region::R1)], &[1, 2]);
        let d1a1 = || ket(cfg, &[(d, Region::R1)], &[1]);
        let u2a2 = || ket(cfg, &[(u, Region::R2)], &[2]);
        match r {
            Region::R1 => sum(&[
                (one * ct, vac),
                (ep * st * s1, d1a1()?),
                (one * 2.0 * kappa * ct * s1 * s2, pair()?),
                (-em * kappa * st * s2, u2a2()?),
            ]),
            Region::R2 => sum(&[
                (-one * ct, vac),
                (em * st * s2, u2a2()?),
                (-one * 2.0 * kappa * ct * s1 * s2, pair()?),
                (-ep * kappa * st * s1, d1a1()?),
            ]),
            Region::R3 => sum(&[(-one * ct, vac), (em * st * s3, ket(cfg, &[(u, Region::R3)], &[3])?)]),
        }
    }
}

/// Single packet and one probe mode, with no auxiliary modes.
#[derive(Debug, Clone)]
pub struct NoAuxSetup {
    pub registry: ModeRegistry,
    pub packet: GridFunction,
    pub probe: GridFunction,
    pub probe_point: f64,
    pub separation: f64,
}

impl NoAuxSetup {
    /// Packet of `width` at 0 and probe point at `separation`, on a grid
    /// spanning 10 widths beyond each with spacing 0.05 widths.
    pub fn new(separation: f64, width: f64) -> Result<Self> {
        let start = -10.0 * width;
        let end = separation + 10.0 * width;
        let points = ((end - start) / (0.05 * width)).round() as usize + 1;
        let grid = Grid::new(start, end, points)?;
        let packet = gaussian_packet(0.0, width, &grid)?;
        let probe = orthogonal_delta(&grid, separation, &packet)?;
        let registry = ModeRegistry::new(vec![ModeLabel::Physical(Spin::Up, Region::R1), ModeLabel::Probe(1)])?;
        Ok(NoAuxSetup { registry, packet, probe, probe_point: separation, separation })
    }

    pub fn b(&self) -> FockOperator {
        annihilator(&self.registry, ModeLabel::Physical(Spin::Up, Region::R1)).expect("registered")
    }

    pub fn b_probe(&self) -> FockOperator {
        annihilator(&self.registry, ModeLabel::Probe(1)).expect("registered")
    }

    /// φ(x) = ψ(x) b + χ(x) b_p.
    pub fn field(&self, x: f64) -> Result<FockOperator> {
        self.b().combine(self.packet.value_at(x)?, &self.b_probe(), self.probe.value_at(x)?)
    }

    /// W = b − b†, the mode projection of ∫(ψ* φ − ψ φ†).
    pub fn generator(&self) -> FockOperator {
        let b = self.b();
        &b - &b.adjoint()
    }
}

fn orthogonal_delta(grid: &Grid, x: f64, packet: &GridFunction) -> Result<GridFunction> {
    let i = grid.index_of(x)?;
    let mut samples = vec![c(0.0, 0.0); grid.len()];
    samples[i] = c(1.0 / grid.step().sqrt(), 0.0);
    let mut f = GridFunction::new(*grid, samples)?;
    for _ in 0..2 {
        let k = crate::wavepackets::inner(packet, &f)?;
        f = GridFunction::new(*grid, f.samples().iter().zip(packet.samples()).map(|(s, p)| s - k * p).collect())?;
    }
    f.normalized()
}

#[derive(Debug, Clone)]
pub struct NoAuxTransform {
    pub v: FockOperator,
    pub theta: f64,
}

/// V(θ) = exp(θW).
pub fn noaux_transform(setup: &NoAuxSetup, theta: f64) -> Result<NoAuxTransform> {
    Ok(NoAuxTransform { v: matrix_exponential(&setup.generator().scale(c(theta, 0.0)), EXPM_TOL)?, theta })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoAuxReport {
    pub separation: f64,
    pub theta: f64,
    /// ‖V b_p V† − b_p‖_F.
    pub probe_mode_distance: f64,
    /// ‖V φ(x_p) V† − φ(x_p)‖_F at the probe point.
    pub probe_point_distance: f64,
    /// |ψ(x_p)|.
    pub packet_magnitude: f64,
    pub dim: usize,
}

pub fn noaux_locality_report(setup: &NoAuxSetup, t: &NoAuxTransform) -> Result<NoAuxReport> {
    let conj = |op: &FockOperator| t.v.try_mul(op)?.try_mul(&t.v.adjoint());
    let bp = setup.b_probe();
    let phi = setup.field(setup.probe_point)?;
    Ok(NoAuxReport {
        separation: setup.separation,
        theta: t.theta,
        probe_mode_distance: operator_distance(&conj(&bp)?, &bp)?,
        probe_point_distance: operator_distance(&conj(&phi)?, &phi)?,
        packet_magnitude: setup.packet.value_at(setup.probe_point)?.norm(),
        dim: setup.registry.dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::normalized_distance;
    use crate::model::{direction_grid, evolve, localized_spin_operator, spin_correlation, spin_expectation, Order};
    use crate::wavepackets::PacketLayout;
    use std::f64::consts::PI;
    use std::sync::OnceLock;
    use Spin::{Down as D, Up as U};

    pub const SIGN_SETS: [[i32; 3]; 4] = [[1, 1, -1], [1, -1, 1], [-1, 1, 1], [-1, -1, -1]];

    fn cfg() -> &'static SystemConfig {
        static CFG: OnceLock<SystemConfig> = OnceLock::new();
        CFG.get_or_init(|| SystemConfig::new(PacketLayout::standard().unwrap(), 0.0, &[32.0]).unwrap())
    }

    fn psi(cfg: &SystemConfig, phys: &[(Spin, Region)], aux: &[u8]) -> FockState {
        build_state(cfg, &OccupationDescriptor::new(phys.to_vec(), aux.to_vec()).unwrap()).unwrap()
    }

    fn psi_un(cfg: &SystemConfig) -> FockState {
        build_state(cfg, &OccupationDescriptor::unentangled()).unwrap()
    }

    fn dist(a: &FockState, b: &FockState) -> f64 {
        a.distance(b).unwrap()
    }

    #[test]
    fn factor_params() {
        let p = DhFactorParams::from_sign(-1).unwrap();
        assert_eq!((p.g, p.s), (1.0, -1));
        assert!((p.theta + FRAC_PI_2).abs() < 1e-15);
        assert!(DhFactorParams::new(1.0, 1.0).is_err());
        assert_eq!(DhFactorParams::new(2.0, 3.0 * PI / 4.0).unwrap().s, -1);
    }

    #[test]
    fn removal_generator_actions() {
        let cfg = cfg();
        let g = 0.8;
        let w = removal_generator(cfg, U, Region::R1, 1, g).unwrap();
        let rest = psi(cfg, &[(D, Region::R2), (D, Region::R3)], &[2, 3]);
        let un = psi_un(cfg);
        assert!(dist(&w.apply(&un).unwrap(), &rest.scale(c(g, 0.0))) < 1e-15);
        assert!(dist(&w.apply(&rest).unwrap(), &un.scale(c(-g, 0.0))) < 1e-15);
        assert!((&w + &w.adjoint()).is_zero());
    }

    #[test]
    fn generator_cubes_to_minus_g_squared() {
        let w = removal_generator(cfg(), D, Region::R2, 2, 0.7).unwrap();
        let w3 = &(&w * &w) * &w;
        assert!(normalized_distance(&w3, &w.scale(c(-0.49, 0.0))).unwrap() < 1e-15);
    }

    #[test]
    fn factor_exponential_matches_closed_form() {
        // exp(θW) = I + sin(θg)/g W + (1 − cos θg)/g² W²
        let cfg = cfg();
        for (g, th) in [(1.0, FRAC_PI_2), (0.6, 1.3), (2.0, -0.4)] {
            let w = removal_generator(cfg, D, Region::R3, 3, g).unwrap();
            let e = matrix_exponential(&w.scale(c(th, 0.0)), EXPM_TOL).unwrap();
            let x = th * g;
            let want = &(&FockOperator::identity(cfg.registry()) + &w.scale(c(x.sin() / g, 0.0)))
                + &(&w * &w).scale(c((1.0 - x.cos()) / (g * g), 0.0));
            assert!(normalized_distance(&e, &want).unwrap() < 1e-13);
        }
    }

    #[test]
    fn standardization_for_admissible_signs() {
        let cfg = cfg();
        let un = psi_un(cfg);
        let vac = vacuum_state(cfg.registry());
        for signs in SIGN_SETS {
            let t = build_unentangled_transform(cfg, signs).unwrap();
            let amp = vac.inner(&t.v().apply(&un).unwrap()).unwrap();
            assert!((amp - c(1.0, 0.0)).norm() <= 1e-10, "{signs:?}: {amp}");
            assert!(t.v().unitarity_defect() <= 1e-10);
        }
        for bad in [[1, 1, 1], [1, -1, -1], [-1, -1, 1], [2, 1, -1]] {
            assert!(matches!(build_unentangled_transform(cfg, bad), Err(Error::SignConstraint(_))));
        }
    }

    #[test]
    fn single_factor_steps() {
        let cfg = cfg();
        let un = psi_un(cfg);
        for signs in SIGN_SETS {
            let f: Vec<_> = signs.iter().map(|&s| DhFactorParams::from_sign(s).unwrap()).collect();
            let v1 = removal_factor(cfg, 0, &f[0]).unwrap();
            let v2 = removal_factor(cfg, 1, &f[1]).unwrap();
            let v3 = removal_factor(cfg, 2, &f[2]).unwrap();
            let s1 = v1.apply(&un).unwrap();
            let rest = psi(cfg, &[(D, Region::R2), (D, Region::R3)], &[2, 3]);
            assert!(dist(&s1, &rest.scale(c(signs[0] as f64, 0.0))) < 1e-12);
            let s2 = v2.apply(&s1).unwrap();
            // a2 passes b†_{d3} on its way to a†2, hence the extra minus sign
            let last = psi(cfg, &[(D, Region::R3)], &[3]);
            assert!(dist(&s2, &last.scale(c(-(signs[0] * signs[1]) as f64, 0.0))) < 1e-12);
            let s3 = v3.apply(&s2).unwrap();
            let vac = vacuum_state(cfg.registry());
            let p = -(signs[0] * signs[1] * signs[2]) as f64;
            assert!(dist(&s3, &vac.scale(c(p, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn generic_conjugation_of_modes() {
        let cfg = cfg();
        for signs in SIGN_SETS {
            let t = build_unentangled_transform(cfg, signs).unwrap();
            for (i, &(s, r, j)) in FACTOR_MODES.iter().enumerate() {
                let got = t.conjugate(&cfg.b(s, r)).unwrap();
                let want = cfg.a_dag(j).unwrap().scale(c(signs[i] as f64, 0.0));
                assert!(operator_distance(&got, &want).unwrap() <= 1e-10);
            }
            for (s, r) in [(D, Region::R1), (U, Region::R2), (U, Region::R3)] {
                let b = cfg.b(s, r);
                assert!(operator_distance(&t.conjugate(&b).unwrap(), &b).unwrap() <= 1e-10);
            }
            let bp = annihilator(cfg.registry(), ModeLabel::Probe(1)).unwrap();
            assert!(operator_distance(&t.conjugate(&bp).unwrap(), &bp).unwrap() <= 1e-10);
            let id = FockOperator::identity(cfg.registry());
            assert!(operator_distance(&t.conjugate(&id).unwrap(), &id).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn unentangled_closed_form_fields() {
        let cfg = cfg();
        let pts = [-20.0, -19.0, -1.0, 0.0, 0.5, 19.0, 20.0, 32.0];
        for signs in SIGN_SETS {
            let t = build_unentangled_transform(cfg, signs).unwrap();
            let closed = field_section(cfg, &t, Provenance::DhUnentangledClosedForm, &pts).unwrap();
            let conj = field_section(cfg, &t, Provenance::Conjugated, &pts).unwrap();
            for i in 0..pts.len() {
                for s in Spin::BOTH {
                    let d = operator_distance(closed.get(i, s), conj.get(i, s)).unwrap();
                    assert!(d <= 1e-10, "x={} {s}: {d}", pts[i]);
                }
            }
            let usual = field_section(cfg, &t, Provenance::Usual, &pts).unwrap();
            // region-3 up and far probe point coincide with the usual section
            assert!(operator_distance(closed.get(6, U), usual.get(6, U)).unwrap() <= 1e-10);
            assert!(operator_distance(closed.get(7, D), usual.get(7, D)).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn vacuum_actions_unentangled() {
        let cfg = cfg();
        let t = build_unentangled_transform(cfg, [1, -1, 1]).unwrap();
        let pts = [-20.0, -19.5, 0.0, 1.0, 20.0, 32.0];
        let sec = field_section(cfg, &t, Provenance::Conjugated, &pts).unwrap();
        for (i, &x) in pts.iter().enumerate() {
            for s in Spin::BOTH {
                let got = vacuum_action(sec.get(i, s));
                let want = closed_form::field_vacuum(cfg, &t, s, x).unwrap();
                assert!(dist(&got, &want) <= 1e-10);
                let got = vacuum_action(&sec.get(i, s).adjoint());
                let want = closed_form::field_dagger_vacuum(cfg, s, x).unwrap();
                assert!(dist(&got, &want) <= 1e-10, "dagger x={x} {s}");
            }
        }
    }

    fn entangled(kappa: f64, signs: [i32; 3]) -> (SystemConfig, DhTransform) {
        let k = cfg().with_kappa(kappa).unwrap();
        let base = build_unentangled_transform(&k, signs).unwrap();
        let t = build_entangled_transform(&k, &base).unwrap();
        (k, t)
    }

    #[test]
    fn entangled_transform_standardizes() {
        for kappa in [0.0, 0.02, 0.05, 0.1] {
            let (k, t) = entangled(kappa, [1, 1, -1]);
            let e = evolve(&k, &psi_un(&k), Order::Exact).unwrap().state;
            let vac = vacuum_state(k.registry());
            assert!(dist(&t.v().apply(&e).unwrap(), &vac) <= 1e-10);
            assert!(t.v().unitarity_defect() <= 1e-10);
        }
        let (k, t) = entangled(0.0, [1, 1, -1]);
        let base = build_unentangled_transform(&k, [1, 1, -1]).unwrap();
        assert!(operator_distance(t.v(), base.v()).unwrap() <= 1e-12);
        assert!(build_entangled_transform(&k, &t).is_err());
    }

    #[test]
    fn entangled_closed_forms_equal_first_order_conjugation() {
        let pts = [-20.0, -19.0, -1.0, 0.0, 0.5, 19.0, 20.0, 32.0];
        for signs in SIGN_SETS {
            let (k, t) = entangled(0.05, signs);
            let closed = field_section(&k, &t, Provenance::DhEntangledClosedForm, &pts).unwrap();
            let first = field_section(&k, &t, Provenance::FirstOrderConjugated, &pts).unwrap();
            let exact = field_section(&k, &t, Provenance::Conjugated, &pts).unwrap();
            for (i, &x) in pts.iter().enumerate() {
                for s in Spin::BOTH {
                    let d = operator_distance(closed.get(i, s), first.get(i, s)).unwrap();
                    assert!(d <= 1e-10, "{signs:?} x={x} {s}: {d}");
                    let n = normalized_distance(closed.get(i, s), exact.get(i, s)).unwrap();
                    assert!(n <= 0.05 * 0.05, "exact x={x} {s}: {n}");
                    let got = vacuum_action(first.get(i, s));
                    let want = closed_form::field_vacuum(&k, &t, s, x).unwrap();
                    assert!(dist(&got, &want) <= 1e-10);
                }
            }
            let un = field_section(&k, &t, Provenance::DhUnentangledClosedForm, &[20.0]).unwrap();
            for s in Spin::BOTH {
                assert!(operator_distance(closed.get(6, s), un.get(0, s)).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn entangled_spin_vacuum_actions() {
        for signs in SIGN_SETS {
            let (k, t) = entangled(0.1, signs);
            let frame = SpinFrame::first_order(&k, &t).unwrap();
            for d in direction_grid(4, 4) {
                for r in Region::ALL {
                    let want = closed_form::spin_vacuum(&k, &t, r, &d).unwrap();
                    assert!(dist(&frame.vacuum_vector(r, &d), &want) <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn dh_vacuum_values_match_usual_representation() {
        let x3 = SpinDirection::x3();
        let cfg = cfg();
        let t = build_unentangled_transform(cfg, [1, 1, -1]).unwrap();
        assert!((dh_vacuum_spin(cfg, &t, Region::R1, &x3).unwrap() - 1.0).abs() <= 1e-10);
        for kappa in [0.0, 0.05, 0.1] {
            let (k, t) = entangled(kappa, [-1, 1, 1]);
            let frame = SpinFrame::conjugated(&k, &t).unwrap();
            let exact = evolve(&k, &psi_un(&k), Order::Exact).unwrap().state;
            let dirs = direction_grid(3, 4);
            for a in &dirs {
                for r in Region::ALL {
                    let usual = spin_expectation(&k, &exact, r, a).unwrap();
                    assert!((frame.expectation(r, a).unwrap() - usual).abs() <= kappa * kappa + 1e-10);
                }
                for b in &dirs {
                    for (ra, rb) in [(Region::R1, Region::R2), (Region::R2, Region::R3), (Region::R3, Region::R1)] {
                        let usual = spin_correlation(&k, &exact, ra, a, rb, b).unwrap();
                        let dh = frame.correlation(ra, a, rb, b).unwrap();
                        assert!((dh - usual).abs() <= kappa * kappa + 1e-10);
                    }
                }
            }
            let a = SpinDirection::new(0.9, 2.0).unwrap();
            let b = SpinDirection::new(2.2, 0.3).unwrap();
            let direct = dh_vacuum_correlation(&k, &t, Region::R3, &a, Region::R1, &b).unwrap();
            assert!((direct - frame.correlation(Region::R3, &a, Region::R1, &b).unwrap()).abs() < 1e-12);
            assert!((direct + a.u3() * b.u3()).abs() <= kappa * kappa + 1e-10);
            assert_eq!(frame.correlation(Region::R1, &a, Region::R1, &b), Err(Error::SameRegion));
        }
    }

    #[test]
    fn conjugation_preserves_spectrum() {
        // S on one region has eigenvalues ±1 and 0; S² − S³-type polynomial identity S³ = S
        let cfg = cfg();
        let t = build_unentangled_transform(cfg, [1, 1, -1]).unwrap();
        let d = SpinDirection::new(1.2, 0.7).unwrap();
        let s = t.conjugate(&localized_spin_operator(cfg, Region::R1, &d).unwrap()).unwrap();
        let s3 = &(&s * &s) * &s;
        assert!(normalized_distance(&s3, &s).unwrap() < 1e-12);
        let tr_s2 = (&s * &s).matrix().trace();
        let raw = localized_spin_operator(cfg, Region::R1, &d).unwrap();
        assert!((tr_s2 - (&raw * &raw).matrix().trace()).norm() < 1e-9);
    }

    #[test]
    fn locality_unentangled() {
        let cfg = cfg();
        let t = build_unentangled_transform(cfg, [1, 1, -1]).unwrap();
        let pts = [-20.0, -10.0, 0.0, 10.0, 20.0, 32.0];
        let rep = locality_report(cfg, &t, &pts, 1e-10).unwrap();
        assert!(rep.pass);
        let get = |x: f64, s: Spin| rep.entries.iter().find(|e| e.point == x && e.spin == s).unwrap().clone();
        assert!(get(20.0, U).distance <= 1e-10);
        assert!(get(32.0, U).distance <= 1e-10 && get(32.0, D).distance <= 1e-10);
        assert!(get(-20.0, U).distance > 0.1);
        assert_eq!(get(0.0, U).relevant_regions, vec![1]);
        assert_eq!(get(0.0, D).relevant_regions, vec![2, 3]);
    }

    #[test]
    fn locality_entangled_cross_region_term() {
        let (k, t) = entangled(0.05, [1, 1, -1]);
        let rep = locality_report(&k, &t, &[0.0, 20.0, 32.0], 1e-10).unwrap();
        assert!(rep.pass);
        let at0 = rep.entries.iter().find(|e| e.point == 0.0 && e.spin == U).unwrap();
        assert!(at0.distance >= 0.05 * 0.5, "{}", at0.distance);
        let far = rep.entries.iter().find(|e| e.point == 32.0 && e.spin == U).unwrap();
        assert!(far.distance <= 1e-10);
    }

    #[test]
    fn noaux_rotation_and_nonlocality() {
        let setup = NoAuxSetup::new(20.0, 1.0).unwrap();
        let b = setup.b();
        let psi1 = vacuum_action(&b.adjoint());
        let vac = vacuum_state(&setup.registry);
        for th in [PI / 6.0, PI / 3.0, FRAC_PI_2] {
            let t = noaux_transform(&setup, th).unwrap();
            let got = t.v.apply(&psi1).unwrap();
            let want = psi1.combine(c(th.cos(), 0.0), &vac, c(th.sin(), 0.0)).unwrap();
            assert!(dist(&got, &want) <= 1e-10);
            // W² = −1, so exp(θW) = cos θ + sin θ W
            let closed =
                &FockOperator::scalar(&setup.registry, c(th.cos(), 0.0)) + &setup.generator().scale(c(th.sin(), 0.0));
            assert!(operator_distance(&t.v, &closed).unwrap() <= 1e-12);
        }
        let t = noaux_transform(&setup, FRAC_PI_2).unwrap();
        let rep = noaux_locality_report(&setup, &t).unwrap();
        assert!((rep.probe_mode_distance - 2.0 * 2f64.sqrt()).abs() <= 1e-10);
        assert!(rep.packet_magnitude < 1e-40);
    }

    #[test]
    fn noaux_field_commutator() {
        // [φ(x), W] = 2φ(x)W + ψ(x)
        let setup = NoAuxSetup::new(10.0, 1.0).unwrap();
        let w = setup.generator();
        for x in [0.0, 0.5, 10.0] {
            let phi = setup.field(x).unwrap();
            let lhs = phi.commutator(&w).unwrap();
            let psi = setup.packet.value_at(x).unwrap();
            let rhs = &(&phi * &w).scale(c(2.0, 0.0)) + &FockOperator::scalar(&setup.registry, psi);
            assert!(operator_distance(&lhs, &rhs).unwrap() < 1e-14);
        }
    }

    #[test]
    fn noaux_distance_independent_of_separation() {
        let d: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&s| {
                let setup = NoAuxSetup::new(s, 1.0).unwrap();
                noaux_locality_report(&setup, &noaux_transform(&setup, FRAC_PI_2).unwrap()).unwrap().probe_mode_distance
            })
            .collect();
        assert!(d.iter().all(|&x| x > 0.1));
        assert!((d[0] - d[1]).abs() <= 1e-10 && (d[1] - d[2]).abs() <= 1e-10);
    }

    #[test]
    fn locality_entries_serialize_with_public_field_names() {
        let cfg = cfg();
        let t = build_unentangled_transform(cfg, [1, 1, -1]).unwrap();
        let rep = locality_report(cfg, &t, &[32.0], 1e-10).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["flavor"]["flavor"], "unentangled");
        let e = &v["entries"][0];
        for key in ["point", "spin", "representation", "distance", "packet_magnitudes"] {
            assert!(e.get(key).is_some(), "{key}");
        }
        assert_eq!(e["spin"], "up");
        assert_eq!(e["packet_magnitudes"].as_array().unwrap().len(), 3);
    }
}
