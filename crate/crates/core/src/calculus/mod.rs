//! Spectral functional calculus for Hermitian matrices: gap certification,
//! the upper spectral projection, and the resolvent contour integral over the
//! rectangle used to bound Lipschitz seminorms of spectral projections.

mod contour;
mod eigen;

pub use contour::{
    audit_edge_bounds, contour_bound_factor, contour_nodes, contour_projection, edge_bound,
    resolvent_norm, ContourNode, ContourResult, ContourSpec, Edge, EdgeAudit,
};
pub use eigen::{eigen_hermitian, HermitianEigen};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_field::MatrixField;
use crate::{CMatrix, C64};

/// Default cut point of the characteristic function. Any cut in (δ, 1−δ)
/// gives the same projection on gapped input.
pub const DEFAULT_CUT: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub eigenvalue: f64,
}

/// Eigenvalue classification against the open band (δ, 1−δ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted eigenvalues per grid point (not serialized; large).
    #[serde(skip)]
    pub eigenvalues: Vec<Vec<f64>>,
    pub delta: f64,
    pub lower_count: usize,
    pub upper_count: usize,
    pub violations: Vec<Violation>,
    /// max(λ − 1) over upper-branch eigenvalues, floored at 0.
    pub r: f64,
    /// max over eigenvalues of the distance to {0, 1}.
    pub max_distance_from_01: f64,
}

impl SpectrumReport {
    pub fn certified(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn total(&self) -> usize {
        self.eigenvalues.iter().map(Vec::len).sum()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Parameter(format!("delta {delta} not in (0, 1/2)")));
    }
    Ok(())
}

fn classify(eigenvalues: Vec<Vec<f64>>, delta: f64) -> SpectrumReport {
    let mut report = SpectrumReport {
        eigenvalues: Vec::new(),
        delta,
        lower_count: 0,
        upper_count: 0,
        violations: Vec::new(),
        r: 0.0,
        max_distance_from_01: 0.0,
    };
    for (index, values) in eigenvalues.iter().enumerate() {
        for &l in values {
            if l <= delta {
                report.lower_count += 1;
            } else if l >= 1.0 - delta {
                report.upper_count += 1;
                report.r = report.r.max(l - 1.0);
            } else {
                report.violations.push(Violation {
                    index,
                    eigenvalue: l,
                });
            }
            let dist = l.abs().min((l - 1.0).abs());
            report.max_distance_from_01 = report.max_distance_from_01.max(dist);
        }
    }
    report.eigenvalues = eigenvalues;
    report
}

/// Gap report for a single Hermitian matrix.
pub fn spectral_gap(a: &CMatrix, delta: f64) -> Result<SpectrumReport> {
    check_delta(delta)?;
    let e = eigen_hermitian(a)?;
    Ok(classify(vec![e.eigenvalues], delta))
}

/// Gap report over every point of a Hermitian field.
pub fn spectral_gap_field(f: &MatrixField, delta: f64) -> Result<SpectrumReport> {
    check_delta(delta)?;
    let eigenvalues: Result<Vec<Vec<f64>>> = (0..f.len())
        .into_par_iter()
        .map(|i| eigen_hermitian(&f.matrix(i)).map(|e| e.eigenvalues))
        .collect();
    Ok(classify(eigenvalues?, delta))
}

/// Σ u_k u_k* over the columns whose eigenvalue is ≥ cut. Entries below the
/// diagonal are the exact conjugates of those above.
fn projector_from(e: &HermitianEigen, cut: f64) -> CMatrix {
    let n = e.vectors.nrows();
    let cols: Vec<usize> = (0..n).filter(|&k| e.eigenvalues[k] >= cut).collect();
    let mut q = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let mut acc = C64::new(0.0, 0.0);
            for &k in &cols {
                acc += e.vectors[(r, k)] * e.vectors[(c, k)].conj();
            }
            if r == c {
                acc.im = 0.0;
            }
            q[(r, c)] = acc;
            q[(c, r)] = acc.conj();
        }
    }
    q
}

/// Upper spectral projection with an explicit cut point in (δ, 1−δ).
pub fn upper_projection_with_cut(a: &CMatrix, delta: f64, cut: f64) -> Result<CMatrix> {
    check_delta(delta)?;
    if !(cut > delta && cut < 1.0 - delta) {
        return Err(Error::Parameter(format!(
            "cut {cut} not inside ({delta}, {})",
            1.0 - delta
        )));
    }
    let e = eigen_hermitian(a)?;
    if let Some(&l) = e
        .eigenvalues
        .iter()
        .find(|&&l| l > delta && l < 1.0 - delta)
    {
        return Err(Error::GapViolation {
            index: 0,
            eigenvalue: l,
            delta,
        });
    }
    Ok(projector_from(&e, cut))
}

/// Characteristic function of [1−δ, ∞) applied to a gapped Hermitian matrix.
pub fn upper_spectral_projection(a: &CMatrix, delta: f64) -> Result<CMatrix> {
    upper_projection_with_cut(a, delta, DEFAULT_CUT)
}

/// Pointwise upper spectral projection. Fails on the first grid index whose
/// spectrum meets (δ, 1−δ).
pub fn apply_calculus(f: &MatrixField, delta: f64) -> Result<MatrixField> {
    check_delta(delta)?;
    f.try_map(true, |i, a| {
        upper_spectral_projection(&a, delta).map_err(|e| match e {
            Error::GapViolation {
                eigenvalue, delta, ..
            } => Error::GapViolation {
                index: i,
                eigenvalue,
                delta,
            },
            other => other,
        })
    })
    .map_err(|e| match e {
        // parallel collection may surface any failing index; report the first
        Error::GapViolation { delta, .. } => first_violation(f, delta),
        other => other,
    })
}

fn first_violation(f: &MatrixField, delta: f64) -> Error {
    for i in 0..f.len() {
        if let Ok(e) = eigen_hermitian(&f.matrix(i)) {
            if let Some(&l) = e.eigenvalues.iter().find(|&&l| l > delta && l < 1.0 - delta) {
                return Error::GapViolation {
                    index: i,
                    eigenvalue: l,
                    delta,
                };
            }
        }
    }
    unreachable!("gap violation reported but none found")
}
