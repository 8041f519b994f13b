//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid_field::{hermitian_defect, largest_singular_value};
use crate::{CMatrix, C64};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order with the unitary whose columns are the
/// matching eigenvectors: a = u·diag(λ)·u*.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        let d = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| C64::new(l, 0.0)),
        );
        &self.vectors * CMatrix::from_diagonal(&d) * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition. Rejects inputs whose Hermitian defect
/// exceeds 1e−10·(1+‖a‖).
pub fn eigen_hermitian(a: &CMatrix) -> Result<HermitianEigen> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch("eigen_hermitian needs a square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let defect = hermitian_defect(a);
    if defect > 1e-10 * (1.0 + largest_singular_value(a)) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(jacobi(a))
}

fn jacobi(a: &CMatrix) -> HermitianEigen {
    let n = a.nrows();
    // work on the exactly Hermitian part
    let mut w = (a + a.adjoint()) * C64::new(0.5, 0.0);
    for i in 0..n {
        w[(i, i)] = C64::new(w[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n, n);
    let scale = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| w[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| w[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    HermitianEigen {
        eigenvalues,
        vectors,
    }
}

/// One two-sided rotation zeroing w[p,q]. The rotation is J = Φ·R with
/// Φ = diag(1, e^{−iφ}) on (p, q) making the pivot real and R the real
/// symmetric Jacobi rotation.
fn rotate(w: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J entries on the (p, q) block
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = w.nrows();
    for k in 0..n {
        let (wkp, wkq) = (w[(k, p)], w[(k, q)]);
        w[(k, p)] = wkp * jpp + wkq * jqp;
        w[(k, q)] = wkp * jpq + wkq * jqq;
    }
    for k in 0..n {
        let (wpk, wqk) = (w[(p, k)], w[(q, k)]);
        w[(p, k)] = jpp.conj() * wpk + jqp.conj() * wqk;
        w[(q, k)] = jpq.conj() * wpk + jqq.conj() * wqk;
    }
    w[(p, q)] = C64::new(0.0, 0.0);
    w[(q, p)] = C64::new(0.0, 0.0);
    w[(p, p)] = C64::new(w[(p, p)].re, 0.0);
    w[(q, q)] = C64::new(w[(q, q)].re, 0.0);
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}
