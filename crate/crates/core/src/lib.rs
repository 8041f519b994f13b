//! Smoothing of Lipschitz projection-valued fields on flat tori.
//!
//! A projection field `p` on T¹ or T² is mollified into a Hermitian field
//! `p₁`, whose spectrum stays near {0, 1}; the upper spectral projection
//! `q = χ[1−δ,∞)(p₁)` is then an exact projection field with
//! `‖p − q‖∞ ≤ 2δ` and `L(q) ≤ L(p₁)/(1 − 2δ)`. Every step is measured on
//! the grid and reported.

pub mod bounds;
pub mod bundles;
pub mod calculus;
pub mod error;
pub mod grid_field;
pub mod mollifier;
pub mod pipeline;
pub mod verify;

pub use error::{Error, Result};
pub use grid_field::{MatrixField, TorusGrid};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
