//! Radial bump kernel and periodic convolution smoothing on flat tori.
//!
//! On a flat torus the exponential map is `exp_x v = x + v`, so Riemannian
//! convolution reduces to a periodic stencil sum. Discrete weights are
//! renormalized to sum to one, which makes constants exact fixed points and
//! turns the contraction `L(f_ε) ≤ L(f)` and the bound `‖f − f_ε‖∞ ≤ L(f)·ε`
//! into exact statements on the grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_field::{MatrixField, TorusGrid};
use crate::C64;

pub const DEFAULT_PLATEAU: f64 = 0.5;

const MIN_PANELS: usize = 4096;
const MAX_PANELS: usize = 1 << 24;

/// exp(−1/t) for t > 0, else 0.
fn sigma(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step from 1 at t ≤ 0 to 0 at t ≥ 1, flat to all orders at both ends.
pub fn transition(t: f64) -> f64 {
    let (a, b) = (sigma(t), sigma(1.0 - t));
    b / (a + b)
}

/// The radial kernel κ: constant on [0, plateau], supported in [0, 1),
/// normalized so that ∫_{ℝⁿ} κ(‖v‖) dv = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierKernel {
    dim: usize,
    plateau: f64,
    norm_const: f64,
}

impl MollifierKernel {
    pub fn new(dim: usize, plateau: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Parameter(format!("kernel dimension {dim} not in {{1, 2}}")));
        }
        if !(plateau > 0.0 && plateau < 1.0) {
            return Err(Error::Parameter(format!("plateau radius {plateau} not in (0, 1)")));
        }
        let unnormalized = Self {
            dim,
            plateau,
            norm_const: 1.0,
        };
        let mass = unnormalized.radial_mass();
        Ok(Self {
            norm_const: 1.0 / mass,
            ..unnormalized
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// κ(r); symmetric in r.
    pub fn profile(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.plateau {
            self.norm_const
        } else if r >= 1.0 {
            0.0
        } else {
            self.norm_const * transition((r - self.plateau) / (1.0 - self.plateau))
        }
    }

    /// ∫_{ℝⁿ} κ(‖v‖) dv by radial quadrature: exact on the plateau, composite
    /// Simpson on the transition, panels doubled until the relative change
    /// drops below 1e−10.
    pub fn radial_mass(&self) -> f64 {
        let rp = self.plateau;
        let (plateau_part, weight): (f64, fn(f64) -> f64) = match self.dim {
            1 => (2.0 * rp, |_| 2.0),
            _ => (std::f64::consts::PI * rp * rp, |r| 2.0 * std::f64::consts::PI * r),
        };
        let integrand = |r: f64| weight(r) * self.profile(r);
        let mut panels = MIN_PANELS;
        let mut prev = simpson(&integrand, rp, 1.0, panels);
        loop {
            panels *= 2;
            let next = simpson(&integrand, rp, 1.0, panels);
            let total = plateau_part * self.norm_const + next;
            if (next - prev).abs() <= 1e-10 * total.abs() || panels >= MAX_PANELS {
                return total;
            }
            prev = next;
        }
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Quadrature weights of κ(‖v‖/ε) on the grid offsets inside the open ε-ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteStencil {
    pub sizes: Vec<usize>,
    pub epsilon: f64,
    /// Lexicographically sorted integer grid offsets.
    pub offsets: Vec<Vec<i64>>,
    pub weights: Vec<f64>,
}

impl DiscreteStencil {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn zero_weight(&self) -> f64 {
        self.offsets
            .iter()
            .position(|v| v.iter().all(|&k| k == 0))
            .map(|i| self.weights[i])
            .unwrap_or(0.0)
    }
}

pub fn discretize(kernel: &MollifierKernel, grid: &TorusGrid, epsilon: f64) -> Result<DiscreteStencil> {
    if kernel.dim != grid.dim() {
        return Err(Error::ShapeMismatch(format!(
            "kernel dimension {} but grid dimension {}",
            kernel.dim,
            grid.dim()
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Parameter(format!(
            "smoothing radius {epsilon} must lie in (0, 1/2) so the support does not wrap"
        )));
    }
    let reach: Vec<i64> = grid
        .sizes()
        .iter()
        .map(|&n| (epsilon * n as f64).floor() as i64)
        .collect();
    let mut offsets = Vec::new();
    let mut raw = Vec::new();
    let mut push = |v: Vec<i64>| {
        let len = grid.offset_length(&v);
        if len < epsilon {
            raw.push(kernel.profile(len / epsilon));
            offsets.push(v);
        }
    };
    match reach.as_slice() {
        [k0] => (-k0..=*k0).for_each(|a| push(vec![a])),
        [k0, k1] => {
            for a in -k0..=*k0 {
                for b in -k1..=*k1 {
                    push(vec![a, b]);
                }
            }
        }
        _ => unreachable!(),
    }
    if offsets.len() <= 1 {
        return Err(Error::Parameter(format!(
            "smoothing radius {epsilon} is below one grid step; stencil would be trivial"
        )));
    }
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    Ok(DiscreteStencil {
        sizes: grid.sizes().to_vec(),
        epsilon,
        offsets,
        weights,
    })
}

/// f_ε(x) = Σ_v w_v f(x + v), periodic.
///
/// Evaluated as f(x) + Σ_v w_v (f(x+v) − f(x)), which is the same sum since
/// the weights add to one.
pub fn smooth(f: &MatrixField, stencil: &DiscreteStencil) -> Result<MatrixField> {
    let grid = f.grid();
    if grid.sizes() != stencil.sizes.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "stencil built for grid {:?}, field lives on {:?}",
            stencil.sizes,
            grid.sizes()
        )));
    }
    let block = f.m() * f.m();
    let data: Vec<Vec<C64>> = (0..f.len())
        .into_par_iter()
        .map(|x| {
            // accumulate increments about f(x) so constant fields are fixed exactly
            let here = f.block(x);
            let mut acc = vec![C64::new(0.0, 0.0); block];
            for (v, &w) in stencil.offsets.iter().zip(&stencil.weights) {
                let src = f.block(grid.translate(x, v));
                for ((a, s), h) in acc.iter_mut().zip(src).zip(here) {
                    *a += (s - h) * w;
                }
            }
            acc.iter().zip(here).map(|(a, h)| h + a).collect::<Vec<_>>()
        })
        .collect();
    MatrixField::new(
        grid.clone(),
        f.m(),
        data.into_iter().flatten().collect(),
        f.is_hermitian(),
    )
}

/// Largest centered second difference ‖f(x+h e_d) − 2f(x) + f(x−h e_d)‖/h².
/// A diagnostic for how rough a field is; grids cannot certify smoothness.
pub fn second_difference_diagnostic(f: &MatrixField) -> f64 {
    let grid = f.grid();
    let m = f.m();
    (0..f.len())
        .into_par_iter()
        .map(|x| {
            let mut worst = 0.0f64;
            for d in 0..grid.dim() {
                let mut e = vec![0i64; grid.dim()];
                e[d] = 1;
                let fwd = f.block(grid.translate(x, &e));
                e[d] = -1;
                let back = f.block(grid.translate(x, &e));
                let here = f.block(x);
                let dd = crate::CMatrix::from_fn(m, m, |r, c| {
                    let k = r * m + c;
                    fwd[k] - 2.0 * here[k] + back[k]
                });
                let h = 1.0 / grid.sizes()[d] as f64;
                worst = worst.max(crate::grid_field::largest_singular_value(&dd) / (h * h));
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CMatrix;

    #[test]
    fn plateau_is_constant() {
        let k = MollifierKernel::new(1, 0.5).unwrap();
        assert_eq!(k.profile(0.25), k.norm_const());
        assert_eq!(k.profile(0.0), k.norm_const());
        assert_eq!(k.profile(0.5), k.norm_const());
    }

    #[test]
    fn support_edge() {
        let k = MollifierKernel::new(2, 0.5).unwrap();
        assert_eq!(k.profile(1.0), 0.0);
        assert!(k.profile(0.999) > 0.0);
        assert_eq!(k.profile(-1.5), 0.0);
    }

    #[test]
    fn rejects_bad_plateau() {
        assert!(MollifierKernel::new(1, 0.0).is_err());
        assert!(MollifierKernel::new(1, 1.0).is_err());
        assert!(MollifierKernel::new(3, 0.5).is_err());
    }

    #[test]
    fn normalized_mass() {
        for dim in [1, 2] {
            for rp in [0.1, 0.5, 0.9] {
                let k = MollifierKernel::new(dim, rp).unwrap();
                assert!((k.radial_mass() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn one_dimensional_support_counting() {
        let k = MollifierKernel::new(1, 0.5).unwrap();
        let g = TorusGrid::circle(64).unwrap();
        let s = discretize(&k, &g, 4.0 / 64.0).unwrap();
        let offs: Vec<i64> = s.offsets.iter().map(|v| v[0]).collect();
        assert_eq!(offs, vec![-3, -2, -1, 0, 1, 2, 3]);
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn just_above_one_step() {
        let k = MollifierKernel::new(2, 0.5).unwrap();
        let g = TorusGrid::square(32).unwrap();
        let s = discretize(&k, &g, 1.0001 / 32.0).unwrap();
        assert_eq!(
            s.offsets,
            vec![vec![-1, 0], vec![0, -1], vec![0, 0], vec![0, 1], vec![1, 0]]
        );
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radial_weights_are_exactly_symmetric() {
        let k = MollifierKernel::new(2, 0.5).unwrap();
        let g = TorusGrid::square(64).unwrap();
        let s = discretize(&k, &g, 6.0 / 64.0).unwrap();
        for (v, w) in s.offsets.iter().zip(&s.weights) {
            for (u, x) in s.offsets.iter().zip(&s.weights) {
                if v[0] * v[0] + v[1] * v[1] == u[0] * u[0] + u[1] * u[1] {
                    assert_eq!(w, x, "{v:?} vs {u:?}");
                }
            }
        }
    }

    #[test]
    fn radius_errors() {
        let k = MollifierKernel::new(1, 0.5).unwrap();
        let g = TorusGrid::circle(64).unwrap();
        assert!(discretize(&k, &g, 0.5).is_err());
        assert!(discretize(&k, &g, 0.5 / 64.0).is_err());
        assert!(discretize(&k, &g, 1.0 / 64.0).is_err());
        assert!(discretize(&k, &TorusGrid::square(8).unwrap(), 0.2).is_err());
    }

    #[test]
    fn kronecker_picks_out_zero_weight() {
        let k = MollifierKernel::new(1, 0.5).unwrap();
        let g = TorusGrid::circle(64).unwrap();
        let s = discretize(&k, &g, 4.0 / 64.0).unwrap();
        let f = MatrixField::from_fn(g, 1, true, |x| {
            CMatrix::from_element(1, 1, C64::new(if x[0] == 0.0 { 1.0 } else { 0.0 }, 0.0))
        })
        .unwrap();
        let out = smooth(&f, &s).unwrap();
        assert!((out.block(0)[0].re - s.zero_weight()).abs() < 1e-15);
    }

    #[test]
    fn constant_is_fixed() {
        let k = MollifierKernel::new(2, 0.5).unwrap();
        let g = TorusGrid::square(16).unwrap();
        let s = discretize(&k, &g, 3.0 / 16.0).unwrap();
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.25, 0.0), C64::new(0.0, 0.5), C64::new(0.0, -0.5), C64::new(1.0, 0.0)],
        );
        let f = MatrixField::constant(g, &a, true).unwrap();
        let out = smooth(&f, &s).unwrap();
        let d = crate::grid_field::sup_distance(&f, &out).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(out, f);
    }
}
