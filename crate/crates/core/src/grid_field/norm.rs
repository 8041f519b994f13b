use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Operator 2-norm (largest singular value).
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(largest_singular_value(a))
}

/// Frobenius norm. Diagnostic only; certified quantities use the operator norm.
pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn largest_singular_value(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// ‖a − a*‖ in operator norm.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    largest_singular_value(&(a - a.adjoint()))
}

/// Spectral radius of a 2x2 Hermitian matrix given by its upper triangle.
/// Eigenvalues are t ± r with t the mean diagonal, so the result is |t| + r.
#[inline]
pub(crate) fn hermitian2_norm(a00: f64, a11: f64, a01: C64) -> f64 {
    let t = 0.5 * (a00 + a11);
    let h = 0.5 * (a00 - a11);
    t.abs() + (h * h + a01.norm_sqr()).sqrt()
}

/// ‖a − b‖ for two row-major m×m blocks.
pub(crate) fn block_diff_norm(a: &[C64], b: &[C64], m: usize, hermitian: bool) -> f64 {
    match (m, hermitian) {
        (1, _) => (a[0] - b[0]).norm(),
        (2, true) => {
            let off = 0.5 * ((a[1] - b[1]) + (a[2] - b[2]).conj());
            hermitian2_norm(a[0].re - b[0].re, a[3].re - b[3].re, off)
        }
        _ => {
            let d = CMatrix::from_fn(m, m, |r, c| a[r * m + c] - b[r * m + c]);
            largest_singular_value(&d)
        }
    }
}

pub(crate) fn block_norm(a: &[C64], m: usize, hermitian: bool) -> f64 {
    match (m, hermitian) {
        (1, _) => a[0].norm(),
        (2, true) => hermitian2_norm(a[0].re, a[3].re, 0.5 * (a[1] + a[2].conj())),
        _ => largest_singular_value(&CMatrix::from_row_slice(m, m, a)),
    }
}
