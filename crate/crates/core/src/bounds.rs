//! Audits of the seminorm inequality L(χ(a)) ≤ L(a)/(1 − 2δ), its inverse
//! hypothesis L(b⁻¹) ≤ ‖b⁻¹‖²·L(b), and the two-point example attaining it.

use serde::{Deserialize, Serialize};

use crate::calculus::{apply_calculus, spectral_gap_field, upper_spectral_projection};
use crate::error::{Error, Result};
use crate::grid_field::{
    largest_singular_value, lipschitz_constant, lipschitz_over, FiniteMetric, MatrixField,
};
use crate::{CMatrix, C64};

/// Relative slack for the inequality checks; covers eigensolver and norm
/// rounding only.
pub const BOUND_RTOL: f64 = 1e-9;

/// Two points at distance `distance`, each carrying a Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointSpace {
    pub distance: f64,
    pub values: [CMatrix; 2],
}

impl TwoPointSpace {
    pub fn new(distance: f64, first: CMatrix, second: CMatrix) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::Parameter(format!("distance {distance} must be positive")));
        }
        if first.shape() != second.shape() {
            return Err(Error::ShapeMismatch("two-point values differ in shape".into()));
        }
        Ok(Self {
            distance,
            values: [first, second],
        })
    }

    pub fn scalars(distance: f64, first: f64, second: f64) -> Result<Self> {
        let s = |x: f64| CMatrix::from_element(1, 1, C64::new(x, 0.0));
        Self::new(distance, s(first), s(second))
    }

    pub fn lipschitz(&self) -> f64 {
        lipschitz_over(self, &self.values)
            .expect("two points always form a valid metric space")
            .value
    }
}

impl FiniteMetric for TwoPointSpace {
    fn len(&self) -> usize {
        2
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.distance
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    pub l_a: f64,
    pub l_fa: f64,
    /// L(a)/(1 − 2δ)
    pub bound: f64,
    /// L(f(a))/bound; 0 when both sides vanish.
    pub ratio: f64,
    pub ok: bool,
}

impl BoundReport {
    fn new(delta: f64, l_a: f64, l_fa: f64) -> Self {
        let bound = l_a / (1.0 - 2.0 * delta);
        let ratio = if bound > 0.0 {
            l_fa / bound
        } else if l_fa == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            delta,
            l_a,
            l_fa,
            bound,
            ratio,
            ok: ratio <= 1.0 + BOUND_RTOL,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Parameter(format!("delta {delta} not in (0, 1/2)")));
    }
    Ok(())
}

/// Grid version of the seminorm inequality for a gapped Hermitian field.
pub fn proposition_bound_check(a: &MatrixField, delta: f64) -> Result<BoundReport> {
    check_delta(delta)?;
    if !a.is_hermitian() {
        return Err(Error::NotHermitian {
            defect: a.max_hermitian_defect(),
        });
    }
    let fa = apply_calculus(a, delta)?;
    let l_a = lipschitz_constant(a)?.value;
    let l_fa = lipschitz_constant(&fa)?.value;
    Ok(BoundReport::new(delta, l_a, l_fa))
}

/// Same check on a two-point space.
pub fn proposition_bound_check_two_point(a: &TwoPointSpace, delta: f64) -> Result<BoundReport> {
    check_delta(delta)?;
    let fa = TwoPointSpace::new(
        a.distance,
        upper_spectral_projection(&a.values[0], delta)?,
        upper_spectral_projection(&a.values[1], delta).map_err(|e| match e {
            Error::GapViolation {
                eigenvalue, delta, ..
            } => Error::GapViolation {
                index: 1,
                eigenvalue,
                delta,
            },
            other => other,
        })?,
    )?;
    Ok(BoundReport::new(delta, a.lipschitz(), fa.lipschitz()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    /// L(b⁻¹)
    pub lhs: f64,
    /// sup‖b⁻¹‖² · L(b)
    pub rhs: f64,
    pub ratio: f64,
    pub ok: bool,
}

fn near_singular(sigma_min: f64) -> bool {
    sigma_min.is_nan() || sigma_min <= 1e-8
}

/// Pointwise inverse of an invertible field.
pub fn invert_field(b: &MatrixField) -> Result<MatrixField> {
    let out = b.try_map(false, |i, a| {
        let sv = a.singular_values();
        let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if near_singular(sigma_min) {
            return Err(Error::NearSingular {
                index: i,
                sigma_min,
            });
        }
        a.try_inverse().ok_or(Error::NearSingular {
            index: i,
            sigma_min,
        })
    });
    // report the lowest failing index deterministically
    out.map_err(|e| match e {
        Error::NearSingular { .. } => (0..b.len())
            .find_map(|i| {
                let sigma_min = b.matrix(i).singular_values().min();
                near_singular(sigma_min).then_some(Error::NearSingular {
                    index: i,
                    sigma_min,
                })
            })
            .unwrap_or(e),
        other => other,
    })
}

/// Checks L(b⁻¹) ≤ ‖b⁻¹‖∞² · L(b) for the grid Lipschitz seminorm.
pub fn inverse_seminorm_check(b: &MatrixField) -> Result<InverseReport> {
    let inv = invert_field(b)?;
    let lhs = lipschitz_constant(&inv)?.value;
    let sup_inv = (0..inv.len())
        .map(|i| largest_singular_value(&inv.matrix(i)))
        .fold(0.0, f64::max);
    let rhs = sup_inv * sup_inv * lipschitz_constant(b)?.value;
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(InverseReport {
        lhs,
        rhs,
        ratio,
        ok: lhs <= rhs * (1.0 + BOUND_RTOL),
    })
}

/// The resolvent family x ↦ z − a(x).
pub fn shifted_field(a: &MatrixField, z: C64) -> Result<MatrixField> {
    let m = a.m();
    a.map(false, |_, x| CMatrix::identity(m, m) * z - x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessReport {
    pub delta: f64,
    pub space: TwoPointSpace,
    pub f_a: [f64; 2],
    pub l_a: f64,
    pub l_fa: f64,
    pub bound: f64,
    pub bound_attained: bool,
}

/// Two points at distance 1 with a(x₁) = δ and a(x₂) = 1 − δ. Here
/// L(a) = 1 − 2δ, f(a) = (0, 1) and L(f(a)) = 1 = L(a)/(1 − 2δ).
pub fn sharpness_example(delta: f64) -> Result<SharpnessReport> {
    check_delta(delta)?;
    let space = TwoPointSpace::scalars(1.0, delta, 1.0 - delta)?;
    let report = proposition_bound_check_two_point(&space, delta)?;
    let f_a = [
        upper_spectral_projection(&space.values[0], delta)?[(0, 0)].re,
        upper_spectral_projection(&space.values[1], delta)?[(0, 0)].re,
    ];
    let bound_attained = (report.l_fa - report.bound).abs() <= 1e-15
        && (report.l_a - (1.0 - 2.0 * delta)).abs() <= 1e-15
        && f_a == [0.0, 1.0];
    Ok(SharpnessReport {
        delta,
        space,
        f_a,
        l_a: report.l_a,
        l_fa: report.l_fa,
        bound: report.bound,
        bound_attained,
    })
}

/// Gap report plus bound check, without failing on a violation.
pub fn gap_then_bound(a: &MatrixField, delta: f64) -> Result<Option<BoundReport>> {
    let gap = spectral_gap_field(a, delta)?;
    if !gap.certified() {
        return Ok(None);
    }
    proposition_bound_check(a, delta).map(Some)
}
