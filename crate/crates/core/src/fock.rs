//! Fermionic Fock space over a finite, ordered set of modes.
//!
//! Basis index bit k holds the occupation of mode k in registry order. The
//! annihilator c_k clears bit k and picks up a sign (-1)^p, where p counts
//! the occupied modes ordered before k.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm;
use crate::sparse::CsrMatrix;

pub const DEFAULT_MODE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Up => "up",
            Spin::Down => "down",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    R1,
    R2,
    R3,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::R1, Region::R2, Region::R3];

    /// 1-based region number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_number(n: usize) -> Option<Region> {
        match n {
            1 => Some(Region::R1),
            2 => Some(Region::R2),
            3 => Some(Region::R3),
            _ => None,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    Physical(Spin, Region),
    /// Auxiliary mode, index 1..=3.
    Auxiliary(u8),
    /// Probe mode, index >= 1.
    Probe(u32),
}

impl ModeLabel {
    fn key(&self) -> (u8, u32) {
        match *self {
            ModeLabel::Physical(s, r) => (0, 2 * r.index() as u32 + (s == Spin::Down) as u32),
            ModeLabel::Auxiliary(j) => (1, j as u32),
            ModeLabel::Probe(i) => (2, i),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ModeLabel::Auxiliary(j) if !(1..=3).contains(&j) => Err(Error::UnknownMode(self.to_string())),
            ModeLabel::Probe(0) => Err(Error::UnknownMode(self.to_string())),
            _ => Ok(()),
        }
    }
}

impl PartialOrd for ModeLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: physical (up,1), (down,1), (up,2), ..., auxiliary 1..3, probes.
impl Ord for ModeLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Physical(s, r) => write!(f, "b({s},{r})"),
            ModeLabel::Auxiliary(j) => write!(f, "a({j})"),
            ModeLabel::Probe(i) => write!(f, "p({i})"),
        }
    }
}

/// Ordered set of modes generating the Fock space. Cheap to clone.
#[derive(Debug, Clone)]
pub struct ModeRegistry {
    modes: Arc<Vec<ModeLabel>>,
}

impl PartialEq for ModeRegistry {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.modes, &other.modes) || self.modes == other.modes
    }
}

impl Eq for ModeRegistry {}

impl ModeRegistry {
    pub fn new(modes: Vec<ModeLabel>) -> Result<Self> {
        Self::with_cap(modes, DEFAULT_MODE_CAP)
    }

    /// Sorts the labels into canonical order and checks distinctness and the cap.
    pub fn with_cap(mut modes: Vec<ModeLabel>, cap: usize) -> Result<Self> {
        for m in &modes {
            m.validate()?;
        }
        modes.sort();
        if let Some(w) = modes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateMode(w[0].to_string()));
        }
        if modes.len() > cap {
            return Err(Error::TooManyModes { count: modes.len(), cap });
        }
        Ok(ModeRegistry { modes: Arc::new(modes) })
    }

    /// Six physical modes, three auxiliary modes and `probes` probe modes.
    pub fn standard(probes: u32) -> Result<Self> {
        let mut modes: Vec<ModeLabel> =
            Region::ALL.iter().flat_map(|&r| Spin::BOTH.map(|s| ModeLabel::Physical(s, r))).collect();
        modes.extend((1..=3).map(ModeLabel::Auxiliary));
        modes.extend((1..=probes).map(ModeLabel::Probe));
        Self::new(modes)
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dim(&self) -> usize {
        1 << self.modes.len()
    }

    pub fn position(&self, label: ModeLabel) -> Result<usize> {
        self.modes.binary_search(&label).map_err(|_| Error::UnknownMode(label.to_string()))
    }

    pub fn contains(&self, label: ModeLabel) -> bool {
        self.modes.binary_search(&label).is_ok()
    }

    pub fn probes(&self) -> impl Iterator<Item = ModeLabel> + '_ {
        self.modes.iter().copied().filter(|m| matches!(m, ModeLabel::Probe(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraKind {
    Add,
    Multiply,
    Commutator,
    Anticommutator,
}

/// Operator on the Fock space of a registry.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    registry: ModeRegistry,
    matrix: CsrMatrix,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl FockOperator {
    pub fn from_matrix(registry: &ModeRegistry, matrix: CsrMatrix) -> Result<Self> {
        if matrix.dim() != registry.dim() {
            return Err(Error::DimensionMismatch { expected: registry.dim(), got: matrix.dim() });
        }
        Ok(FockOperator { registry: registry.clone(), matrix })
    }

    pub fn identity(registry: &ModeRegistry) -> Self {
        FockOperator { registry: registry.clone(), matrix: CsrMatrix::identity(registry.dim()) }
    }

    pub fn zero(registry: &ModeRegistry) -> Self {
        FockOperator { registry: registry.clone(), matrix: CsrMatrix::zeros(registry.dim()) }
    }

    pub fn scalar(registry: &ModeRegistry, z: Complex64) -> Self {
        FockOperator { registry: registry.clone(), matrix: CsrMatrix::scaled_identity(registry.dim(), z) }
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn adjoint(&self) -> Self {
        FockOperator { registry: self.registry.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        FockOperator { registry: self.registry.clone(), matrix: self.matrix.scale(z) }
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.nnz() == 0
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch);
        }
        Ok(())
    }

    /// alpha * self + beta * other.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        self.check(other)?;
        Ok(FockOperator { registry: self.registry.clone(), matrix: self.matrix.axpby(alpha, &other.matrix, beta) })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.combine(one(), other, one())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.combine(one(), other, -one())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(FockOperator { registry: self.registry.clone(), matrix: self.matrix.matmul(&other.matrix) })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        algebra(self, other, AlgebraKind::Commutator, None)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        algebra(self, other, AlgebraKind::Anticommutator, None)
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        if self.registry != state.registry {
            return Err(Error::RegistryMismatch);
        }
        Ok(FockState { registry: self.registry.clone(), amplitudes: self.matrix.apply(&state.amplitudes) })
    }

    /// Hermitian-conjugate defect ‖A − A†‖ (max entry).
    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.sub(&self.matrix.adjoint()).max_abs()
    }

    /// ‖A A† − I‖ (max entry).
    pub fn unitarity_defect(&self) -> f64 {
        self.matrix.matmul(&self.matrix.adjoint()).sub(&CsrMatrix::identity(self.dim())).max_abs()
    }

    /// Largest entry magnitude; zero exactly when the operator is zero.
    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $m:ident) => {
        impl $tr<&FockOperator> for &FockOperator {
            type Output = FockOperator;
            /// Panics if the operands belong to different registries.
            fn $f(self, rhs: &FockOperator) -> FockOperator {
                self.$m(rhs).expect("operator registries differ")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Mul<&FockOperator> for Complex64 {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        rhs.scale(self)
    }
}

impl Mul<&FockOperator> for f64 {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        rhs.scale(Complex64::new(self, 0.0))
    }
}

impl Neg for &FockOperator {
    type Output = FockOperator;
    fn neg(self) -> FockOperator {
        self.scale(-one())
    }
}

/// State vector on the Fock space of a registry.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    registry: ModeRegistry,
    amplitudes: Vec<Complex64>,
}

impl FockState {
    pub fn from_amplitudes(registry: &ModeRegistry, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != registry.dim() {
            return Err(Error::DimensionMismatch { expected: registry.dim(), got: amplitudes.len() });
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(FockState { registry: registry.clone(), amplitudes })
    }

    pub fn zero(registry: &ModeRegistry) -> Self {
        FockState { registry: registry.clone(), amplitudes: vec![Complex64::new(0.0, 0.0); registry.dim()] }
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        FockState { registry: self.registry.clone(), amplitudes: self.amplitudes.iter().map(|&a| a * z).collect() }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &FockState) -> Result<Complex64> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch);
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// alpha * self + beta * other.
    pub fn combine(&self, alpha: Complex64, other: &FockState, beta: Complex64) -> Result<Self> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch);
        }
        Ok(FockState {
            registry: self.registry.clone(),
            amplitudes: self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| alpha * a + beta * b).collect(),
        })
    }

    /// Euclidean distance ‖self − other‖.
    pub fn distance(&self, other: &FockState) -> Result<f64> {
        Ok(self.combine(one(), other, -one())?.norm())
    }
}

/// Annihilator (or creator when `dagger`) of a registry mode.
pub fn mode_operator(reg: &ModeRegistry, label: ModeLabel, dagger: bool) -> Result<FockOperator> {
    let k = reg.position(label)?;
    let bit = 1usize << k;
    let below = bit - 1;
    let trip = (0..reg.dim())
        .filter(|&n| n & bit != 0)
        .map(|n| {
            let sign = if (n & below).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            let v = Complex64::new(sign, 0.0);
            if dagger {
                (n, n ^ bit, v)
            } else {
                (n ^ bit, n, v)
            }
        })
        .collect();
    Ok(FockOperator { registry: reg.clone(), matrix: CsrMatrix::from_triplets(reg.dim(), trip) })
}

pub fn annihilator(reg: &ModeRegistry, label: ModeLabel) -> Result<FockOperator> {
    mode_operator(reg, label, false)
}

pub fn creator(reg: &ModeRegistry, label: ModeLabel) -> Result<FockOperator> {
    mode_operator(reg, label, true)
}

/// Number operator c†c, diagonal.
pub fn number_operator(reg: &ModeRegistry, label: ModeLabel) -> Result<FockOperator> {
    let bit = 1usize << reg.position(label)?;
    let trip = (0..reg.dim()).filter(|&n| n & bit != 0).map(|n| (n, n, one())).collect();
    Ok(FockOperator { registry: reg.clone(), matrix: CsrMatrix::from_triplets(reg.dim(), trip) })
}

pub fn vacuum_state(reg: &ModeRegistry) -> FockState {
    let mut s = FockState::zero(reg);
    s.amplitudes[0] = one();
    s
}

/// Exact operator arithmetic. `scalars` applies to `Add` as (alpha, beta).
pub fn algebra(
    a: &FockOperator,
    b: &FockOperator,
    kind: AlgebraKind,
    scalars: Option<(Complex64, Complex64)>,
) -> Result<FockOperator> {
    a.check(b)?;
    match kind {
        AlgebraKind::Add => {
            let (alpha, beta) = scalars.unwrap_or((one(), one()));
            a.combine(alpha, b, beta)
        }
        AlgebraKind::Multiply => a.try_mul(b),
        AlgebraKind::Commutator => a.try_mul(b)?.try_sub(&b.try_mul(a)?),
        AlgebraKind::Anticommutator => a.try_mul(b)?.try_add(&b.try_mul(a)?),
    }
}

pub fn matrix_exponential(a: &FockOperator, tol: f64) -> Result<FockOperator> {
    Ok(FockOperator { registry: a.registry.clone(), matrix: expm::expm(&a.matrix, tol)? })
}

/// ⟨ψ|A|ψ⟩.
pub fn expectation(state: &FockState, op: &FockOperator) -> Result<Complex64> {
    state.inner(&op.apply(state)?)
}

/// Frobenius norm of a − b. The matrix dimension is `a.dim()`.
pub fn operator_distance(a: &FockOperator, b: &FockOperator) -> Result<f64> {
    Ok(a.try_sub(b)?.frobenius_norm())
}

/// Frobenius distance divided by sqrt(dim), so that ‖I‖ = 1.
pub fn normalized_distance(a: &FockOperator, b: &FockOperator) -> Result<f64> {
    Ok(operator_distance(a, b)? / (a.dim() as f64).sqrt())
}
