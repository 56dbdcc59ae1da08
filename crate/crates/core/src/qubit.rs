//! Three distinguishable spin-1/2 particles as an 8-dimensional qubit register.
//!
//! Basis index = 4 q1 + 2 q2 + q3 with q = 0 for spin up (|1⟩) and 1 for
//! spin down (|2⟩).

use nalgebra::{Matrix2, SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Spin;
use crate::model::SpinDirection;

pub type QubitState = SVector<Complex64, 8>;
pub type QubitOp = SMatrix<Complex64, 8, 8>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bit(s: Spin) -> usize {
    (s == Spin::Down) as usize
}

fn index(s1: Spin, s2: Spin, s3: Spin) -> usize {
    4 * bit(s1) + 2 * bit(s2) + bit(s3)
}

/// |s1⟩|s2⟩|s3⟩.
pub fn product_state(s1: Spin, s2: Spin, s3: Spin) -> QubitState {
    let mut v = QubitState::zeros();
    v[index(s1, s2, s3)] = c(1.0, 0.0);
    v
}

/// Particle 1 up, particles 2 and 3 down.
pub fn unentangled() -> QubitState {
    product_state(Spin::Up, Spin::Down, Spin::Down)
}

/// Particles 1 and 2 swapped relative to `unentangled`.
pub fn swapped() -> QubitState {
    product_state(Spin::Down, Spin::Up, Spin::Down)
}

/// G = −iκ(|2⟩|1⟩⟨1|⟨2| − |1⟩|2⟩⟨2|⟨1|) ⊗ I on particles 1 and 2.
pub fn build_h1q(kappa: f64) -> Result<QubitOp> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidKappa(kappa));
    }
    let (u, d) = (Spin::Up, Spin::Down);
    let mut g = QubitOp::zeros();
    for s3 in Spin::BOTH {
        let a = index(u, d, s3);
        let b = index(d, u, s3);
        g[(b, a)] = c(0.0, -kappa);
        g[(a, b)] = c(0.0, kappa);
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitOrder {
    Exact,
    /// (1 − iG − G²/2)|ψ⟩, unnormalized.
    Second,
}

pub fn evolve_qubits(state: &QubitState, kappa: f64, order: QubitOrder) -> Result<QubitState> {
    let g = build_h1q(kappa)?;
    let minus_i = c(0.0, -1.0);
    Ok(match order {
        QubitOrder::Exact => (g * minus_i).exp() * state,
        QubitOrder::Second => {
            let gp = g * state;
            state + gp * minus_i - (g * gp) * c(0.5, 0.0)
        }
    })
}

/// σ_axis (axis 1, 2, 3) on a single qubit.
pub fn pauli_2x2(axis: usize) -> Matrix2<Complex64> {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match axis {
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -i, i, z),
        3 => Matrix2::new(o, z, z, -o),
        _ => panic!("Pauli axis must be 1, 2 or 3"),
    }
}

fn embed(qubit: usize, m: &Matrix2<Complex64>) -> Result<QubitOp> {
    if !(1..=3).contains(&qubit) {
        return Err(Error::QubitIndex(qubit));
    }
    let shift = 3 - qubit;
    let mut out = QubitOp::zeros();
    for i in 0..8 {
        for j in 0..8 {
            if (i ^ j) & !(1 << shift) & 7 != 0 {
                continue;
            }
            out[(i, j)] = m[((i >> shift) & 1, (j >> shift) & 1)];
        }
    }
    Ok(out)
}

/// σ_axis acting on one qubit slot.
pub fn pauli(qubit: usize, axis: usize) -> Result<QubitOp> {
    embed(qubit, &pauli_2x2(axis))
}

/// u⃗·σ⃗ on one qubit slot.
pub fn pauli_along(qubit: usize, dir: &SpinDirection) -> Result<QubitOp> {
    let u = dir.unit_vector();
    let m = pauli_2x2(1) * c(u[0], 0.0) + pauli_2x2(2) * c(u[1], 0.0) + pauli_2x2(3) * c(u[2], 0.0);
    embed(qubit, &m)
}

fn real(z: Complex64) -> Result<f64> {
    if z.im.abs() > 1e-10 {
        return Err(Error::NonReal(z.im));
    }
    Ok(z.re)
}

/// ⟨u⃗·σ⃗_q⟩ in the normalized state.
pub fn pauli_expectation(state: &QubitState, qubit: usize, dir: &SpinDirection) -> Result<f64> {
    let psi = state.normalize();
    real(psi.dotc(&(pauli_along(qubit, dir)? * psi)))
}

/// ⟨(u⃗_a·σ⃗_a)(u⃗_b·σ⃗_b)⟩ in the normalized state.
pub fn pauli_correlation(
    state: &QubitState,
    qa: usize,
    da: &SpinDirection,
    qb: usize,
    db: &SpinDirection,
) -> Result<f64> {
    if qa == qb {
        return Err(Error::SameQubit);
    }
    let psi = state.normalize();
    real(psi.dotc(&(pauli_along(qa, da)? * pauli_along(qb, db)? * psi)))
}

/// Largest 2×2 minor of the state reshaped as (q1 q2) × q3; zero iff qubit 3 factors out.
pub fn qubit3_entanglement(state: &QubitState) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let m = state[2 * i] * state[2 * j + 1] - state[2 * i + 1] * state[2 * j];
            worst = worst.max(m.norm());
        }
    }
    worst
}

/// Second-order values in κ for the state evolved from `unentangled`.
pub mod closed_form {
    use super::SpinDirection;

    pub fn expectation(kappa: f64, qubit: usize, d: &SpinDirection) -> f64 {
        let k2 = 1.0 - 2.0 * kappa * kappa;
        match qubit {
            1 => k2 * d.u3(),
            2 => -k2 * d.u3(),
            _ => -d.u3(),
        }
    }

    /// (1,2): −(1−2κ)u_{1,3}u_{2,3} − 2κ u⃗₁·u⃗₂; (2,3): (1−2κ²)u_{2,3}u_{3,3};
    /// (3,1): −(1−2κ²)u_{3,3}u_{1,3}. Qubit order within a pair does not matter.
    pub fn correlation(kappa: f64, qa: usize, da: &SpinDirection, qb: usize, db: &SpinDirection) -> f64 {
        let k2 = 1.0 - 2.0 * kappa * kappa;
        match (qa.min(qb), qa.max(qb)) {
            (1, 2) => -(1.0 - 2.0 * kappa) * da.u3() * db.u3() - 2.0 * kappa * da.dot(db),
            (2, 3) => k2 * da.u3() * db.u3(),
            _ => -k2 * da.u3() * db.u3(),
        }
    }
}
