//! Projection-field fixtures on tori and the discrete first Chern number.
//!
//! Chern numbers use plaquette Berry phases: orthonormal range frames at each
//! grid point, link variables det(B(x)*B(x')) between neighbors, and the
//! phase of the link product around each plaquette (traversed anti-clockwise
//! in (x, y)). With this convention both `fixture_loring(k)` and
//! `fixture_bott_pullback(k, 1.0)` have Chern number −k.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::eigen_hermitian;
use crate::error::{Error, Result};
use crate::grid_field::{is_projection, MatrixField, TorusGrid};
use crate::{CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureName {
    LoringK,
    BottPullback,
    RandomNearProjection,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub name: FixtureName,
    pub k: i64,
    pub grid: TorusGrid,
    pub m: usize,
    pub seed: u64,
    pub delta: f64,
}

impl FixtureSpec {
    pub fn build(&self) -> Result<MatrixField> {
        match self.name {
            FixtureName::LoringK => {
                if self.m != 2 {
                    return Err(Error::Parameter("loring_k fixtures are 2x2".into()));
                }
                fixture_loring(self.k, &self.grid)
            }
            FixtureName::BottPullback => {
                if self.m != 2 {
                    return Err(Error::Parameter("bott_pullback fixtures are 2x2".into()));
                }
                fixture_bott_pullback(self.k, 1.0, &self.grid)
            }
            FixtureName::RandomNearProjection => {
                fixture_random_near_projection(self.seed, &self.grid, self.m, self.delta)
            }
            FixtureName::Constant => fixture_constant(&self.grid, self.m, self.m / 2),
        }
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Two-band clutching projection representing the line bundle of degree ±k:
///
/// p(x, y) = [[f, c], [c̄, 1 − f]], f = (1 + cos 2πx)/2,
/// c = g(x) + h(x)·e^{2πiky}, h = sin(2πx)/2 on [0, 1/2], g = −sin(2πx)/2 on
/// [1/2, 1], each zero elsewhere.
///
/// |c|² = f(1 − f) makes every value an exact projection. The field is
/// Lipschitz but has kinks at x ∈ {0, 1/2}.
pub fn fixture_loring(k: i64, grid: &TorusGrid) -> Result<MatrixField> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("loring fixture needs a 2-D grid".into()));
    }
    MatrixField::from_fn(grid.clone(), 2, true, |pos| {
        let (x, y) = (pos[0], pos[1]);
        let (s, co) = (2.0 * PI * x).sin_cos();
        let f = 0.5 * (1.0 + co);
        let h = if x <= 0.5 { 0.5 * s } else { 0.0 };
        let g = if x >= 0.5 { -0.5 * s } else { 0.0 };
        let c = re(g) + C64::from_polar(h, 2.0 * PI * k as f64 * y);
        CMatrix::from_row_slice(2, 2, &[re(f), c, c.conj(), re(1.0 - f)])
    })
}

/// Smooth pullback of the Bott projection (1 + n·σ)/2 along
/// n ∝ (sin 2πx, sin 2πky, mass + cos 2πx + cos 2πky).
/// For 0 < mass < 2 the Chern number is −k in our orientation.
pub fn fixture_bott_pullback(k: i64, mass: f64, grid: &TorusGrid) -> Result<MatrixField> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("bott fixture needs a 2-D grid".into()));
    }
    MatrixField::from_fn(grid.clone(), 2, true, |pos| {
        let (sx, cx) = (2.0 * PI * pos[0]).sin_cos();
        let (sy, cy) = (2.0 * PI * k as f64 * pos[1]).sin_cos();
        let d = [sx, sy, mass + cx + cy];
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let n = [d[0] / norm, d[1] / norm, d[2] / norm];
        let off = 0.5 * C64::new(n[0], -n[1]);
        CMatrix::from_row_slice(
            2,
            2,
            &[re(0.5 * (1.0 + n[2])), off, off.conj(), re(0.5 * (1.0 - n[2]))],
        )
    })
}

/// Constant diag(1, …, 1, 0, …, 0) with `rank` ones.
pub fn fixture_constant(grid: &TorusGrid, m: usize, rank: usize) -> Result<MatrixField> {
    let d = CMatrix::from_fn(m, m, |r, c| re(if r == c && r < rank { 1.0 } else { 0.0 }));
    MatrixField::constant(grid.clone(), &d, true)
}

fn random_hermitian(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CMatrix {
    let mut a = CMatrix::zeros(m, m);
    for r in 0..m {
        a[(r, r)] = re(scale * rng.random_range(-1.0..1.0));
        for c in r + 1..m {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            a[(r, c)] = z;
            a[(c, r)] = z.conj();
        }
    }
    a
}

/// exp(iH) for Hermitian H.
fn unitary_exp(h: &CMatrix) -> CMatrix {
    let e = eigen_hermitian(h).expect("generator is Hermitian by construction");
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        e.eigenvalues.len(),
        e.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)),
    ));
    &e.vectors * d * e.vectors.adjoint()
}

struct Band {
    center: f64,
    amplitude: f64,
    freq: Vec<f64>,
    phase: f64,
}

/// Hermitian field u(x)·diag(λ(x))·u(x)* with eigenvalues confined to
/// [−δ, δ] ∪ [1−δ, 1+δ] (so the gap at δ holds by construction) and a smooth
/// unitary u(x) = exp(iH(x)) built from random trigonometric generators.
pub fn fixture_random_near_projection(
    seed: u64,
    grid: &TorusGrid,
    m: usize,
    delta: f64,
) -> Result<MatrixField> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Parameter(format!("delta {delta} not in (0, 1/2)")));
    }
    if m == 0 {
        return Err(Error::Parameter("matrix size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let rank = if m == 1 {
        rng.random_range(0..=1)
    } else {
        rng.random_range(1..m)
    };
    let bands: Vec<Band> = (0..m)
        .map(|i| Band {
            center: if i < rank { 1.0 } else { 0.0 },
            amplitude: 0.95 * delta * rng.random_range(0.0..1.0),
            freq: (0..dim).map(|_| rng.random_range(-2i32..=2) as f64).collect(),
            phase: rng.random_range(0.0..2.0 * PI),
        })
        .collect();
    let base = random_hermitian(&mut rng, m, 0.5);
    let cos_gen: Vec<CMatrix> = (0..dim).map(|_| random_hermitian(&mut rng, m, 0.5)).collect();
    let sin_gen: Vec<CMatrix> = (0..dim).map(|_| random_hermitian(&mut rng, m, 0.5)).collect();

    let field = MatrixField::from_fn(grid.clone(), m, false, |x| {
        let mut h = base.clone();
        for d in 0..dim {
            let (s, c) = (2.0 * PI * x[d]).sin_cos();
            h += &cos_gen[d] * re(c) + &sin_gen[d] * re(s);
        }
        let u = unitary_exp(&h);
        let lambda = nalgebra::DVector::from_iterator(
            m,
            bands.iter().map(|b| {
                let arg: f64 = b.freq.iter().zip(x).map(|(f, xi)| f * xi).sum::<f64>();
                re(b.center + b.amplitude * (2.0 * PI * arg + b.phase).sin())
            }),
        );
        &u * CMatrix::from_diagonal(&lambda) * u.adjoint()
    })?;
    Ok(field.hermitize())
}

/// Seeded random Hermitian matrix u·diag(λ)·u* with eigenvalues drawn from
/// [−0.95δ, 0.95δ] ∪ [1−0.95δ, 1+0.95δ], at least one in each band when m ≥ 2.
pub fn random_gapped_matrix(seed: u64, m: usize, delta: f64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = if m == 1 {
        rng.random_range(0..=1)
    } else {
        rng.random_range(1..m)
    };
    let lambda = nalgebra::DVector::from_iterator(
        m,
        (0..m).map(|i| {
            let center = if i < rank { 1.0 } else { 0.0 };
            re(center + 0.95 * delta * rng.random_range(-1.0..1.0))
        }),
    );
    let u = unitary_exp(&random_hermitian(&mut rng, m, 2.0));
    let a = &u * CMatrix::from_diagonal(&lambda) * u.adjoint();
    (&a + a.adjoint()) * re(0.5)
}

/// Orthonormal basis of the range of a projection by pivoted Gram–Schmidt on
/// its columns.
pub fn range_basis(p: &CMatrix, rank: usize) -> CMatrix {
    let m = p.nrows();
    let mut cols: Vec<Vec<C64>> = (0..m).map(|c| p.column(c).iter().cloned().collect()).collect();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(rank);
    for _ in 0..rank {
        let (best, _) = cols
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.iter().map(|z| z.norm_sqr()).sum::<f64>()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let v = cols.swap_remove(best);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let e: Vec<C64> = v.iter().map(|z| z / norm).collect();
        for w in cols.iter_mut() {
            let dot: C64 = e.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            for (wi, ei) in w.iter_mut().zip(&e) {
                *wi -= dot * ei;
            }
        }
        basis.push(e);
    }
    CMatrix::from_fn(m, rank, |r, c| basis[c][r])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernReport {
    pub chern: i64,
    pub raw: f64,
    pub residual: f64,
    pub rank: usize,
}

fn link(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = (a.adjoint() * b).determinant();
    let n = d.norm();
    if n > 0.0 {
        d / n
    } else {
        re(1.0)
    }
}

/// First Chern number of a projection field on a T² grid of at least 16×16.
pub fn chern_number(p: &MatrixField) -> Result<ChernReport> {
    let grid = p.grid();
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("Chern number needs a 2-D grid".into()));
    }
    if grid.sizes().iter().any(|&n| n < 16) {
        return Err(Error::InvalidGrid("Chern number needs at least 16x16 points".into()));
    }
    let proj = is_projection(p, 1e-8);
    if !proj.ok {
        return Err(Error::NotProjection(format!(
            "idempotence defect {:e}, self-adjointness defect {:e}",
            proj.max_idem_defect, proj.max_sa_defect
        )));
    }
    let traces: Vec<f64> = (0..p.len())
        .map(|i| p.matrix(i).trace().re)
        .collect();
    let rank = traces[0].round() as usize;
    if let Some(i) = traces.iter().position(|t| t.round() as usize != rank) {
        return Err(Error::RankChange {
            index: i,
            found: traces[i].round() as usize,
            expected: rank,
        });
    }
    if rank == 0 {
        return Ok(ChernReport {
            chern: 0,
            raw: 0.0,
            residual: 0.0,
            rank,
        });
    }
    let frames: Vec<CMatrix> = (0..p.len())
        .into_par_iter()
        .map(|i| range_basis(&p.matrix(i), rank))
        .collect();
    let (nx, ny) = (grid.sizes()[0], grid.sizes()[1]);
    let at = |i: usize, j: usize| &frames[(i % nx) * ny + (j % ny)];
    let phases: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / ny, idx % ny);
            let u1 = link(at(i, j), at(i + 1, j));
            let u2 = link(at(i + 1, j), at(i + 1, j + 1));
            let u3 = link(at(i + 1, j + 1), at(i, j + 1));
            let u4 = link(at(i, j + 1), at(i, j));
            (u1 * u2 * u3 * u4).arg()
        })
        .collect();
    let raw = phases.iter().sum::<f64>() / (2.0 * PI);
    let chern = raw.round();
    let residual = (raw - chern).abs();
    if residual >= 0.1 {
        return Err(Error::ChernResidual { residual });
    }
    Ok(ChernReport {
        chern: chern as i64,
        raw,
        residual,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::spectral_gap_field;

    #[test]
    fn loring_kink_values() {
        let g = TorusGrid::square(16).unwrap();
        for k in [1, 2, -3] {
            let p = fixture_loring(k, &g).unwrap();
            for j in 0..16 {
                let at0 = p.matrix(g.index_of(&[0, j]));
                let at_half = p.matrix(g.index_of(&[8, j]));
                assert!((at0 - CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![re(1.0), re(0.0)]))).norm() < 1e-15);
                assert!((at_half - CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![re(0.0), re(1.0)]))).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn loring_is_projection() {
        let p = fixture_loring(1, &TorusGrid::square(64).unwrap()).unwrap();
        assert!(is_projection(&p, 1e-12).ok);
    }

    #[test]
    fn loring_needs_two_dims() {
        assert!(fixture_loring(1, &TorusGrid::circle(16).unwrap()).is_err());
    }

    #[test]
    fn constant_has_no_holonomy() {
        let p = fixture_constant(&TorusGrid::square(16).unwrap(), 3, 2).unwrap();
        let c = chern_number(&p).unwrap();
        assert_eq!(c.chern, 0);
        assert_eq!(c.rank, 2);
    }

    #[test]
    fn random_fixture_is_gapped_and_deterministic() {
        let g = TorusGrid::circle(32).unwrap();
        for seed in 0..5 {
            let a = fixture_random_near_projection(seed, &g, 3, 0.2).unwrap();
            let b = fixture_random_near_projection(seed, &g, 3, 0.2).unwrap();
            assert_eq!(a, b);
            assert!(spectral_gap_field(&a, 0.2).unwrap().certified());
        }
    }

    #[test]
    fn chern_rejects_non_projection() {
        let g = TorusGrid::square(16).unwrap();
        let a = fixture_random_near_projection(1, &g, 2, 0.2).unwrap();
        assert!(matches!(chern_number(&a), Err(Error::NotProjection(_))));
        let small = fixture_loring(1, &TorusGrid::square(8).unwrap()).unwrap();
        assert!(chern_number(&small).is_err());
    }

    #[test]
    fn range_basis_is_orthonormal() {
        let p = fixture_loring(2, &TorusGrid::square(16).unwrap()).unwrap();
        for i in [0, 5, 77, 200] {
            let b = range_basis(&p.matrix(i), 1);
            assert!(((b.adjoint() * &b)[(0, 0)].re - 1.0).abs() < 1e-14);
            assert!((&b * b.adjoint() - p.matrix(i)).norm() < 1e-14);
        }
    }
}
