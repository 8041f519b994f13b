//! Flat-torus grids, sampled matrix fields, norms and grid Lipschitz constants.

mod field;
mod grid;
pub mod io;
mod norm;

pub use field::{
    is_projection, lipschitz_constant, lipschitz_over, sup_distance, LipschitzEstimate,
    MatrixField, ProjectionReport, HERMITIAN_TOL,
};
pub use grid::{FiniteMetric, TorusGrid};
pub use norm::{frobenius_norm, hermitian_defect, operator_norm};
pub(crate) use norm::largest_singular_value;

