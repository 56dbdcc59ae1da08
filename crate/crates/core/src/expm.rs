//! Matrix exponential by scaling and squaring around a Taylor core.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// One-norm bound the scaled matrix must satisfy before the series is summed.
const SCALED_NORM: f64 = 0.5;
pub const MAX_TERMS: usize = 60;

/// exp(a) for a sparse square matrix.
///
/// The matrix is scaled by 2^-s until its one-norm is at most 0.5, the
/// Taylor series is summed until a term drops below `tol * 2^-s / 100`, and
/// the result is squared s times.
pub fn expm(a: &CsrMatrix, tol: f64) -> Result<CsrMatrix> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidTolerance(tol));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    let n = a.dim();
    let norm = a.one_norm();
    let mut s = 0u32;
    if norm > SCALED_NORM {
        s = (norm / SCALED_NORM).log2().ceil() as u32;
    }
    let scale = 0.5f64.powi(s as i32);
    let b = a.scale(Complex64::new(scale, 0.0));
    let stop = tol * scale * 1e-2;

    let mut sum = CsrMatrix::identity(n);
    let mut term = CsrMatrix::identity(n);
    let mut converged = norm == 0.0;
    for k in 1..=MAX_TERMS {
        if converged {
            break;
        }
        term = term.matmul(&b).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
        if term.one_norm() <= stop {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::SeriesDiverged(MAX_TERMS));
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    Ok(sum)
}
