use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{FiniteMetric, TorusGrid};
use super::norm::{block_diff_norm, block_norm, hermitian_defect, largest_singular_value};
use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Relative slack allowed for the Hermitian flag: ‖a − a*‖ ≤ 1e−12·(1+‖a‖).
pub const HERMITIAN_TOL: f64 = 1e-12;

/// One m×m complex matrix per torus grid point, stored row-major in
/// lexicographic point order.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    grid: TorusGrid,
    m: usize,
    hermitian: bool,
    data: Vec<C64>,
}

/// Exact grid Lipschitz constant together with the pair attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub witness: (usize, usize),
    pub pair_count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub ok: bool,
    pub max_idem_defect: f64,
    pub max_sa_defect: f64,
}

impl MatrixField {
    pub fn new(grid: TorusGrid, m: usize, data: Vec<C64>, hermitian: bool) -> Result<Self> {
        if m == 0 {
            return Err(Error::ShapeMismatch("matrix dimension must be >= 1".into()));
        }
        let expected = grid.point_count() * m * m;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} entries, got {}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let field = Self {
            grid,
            m,
            hermitian,
            data,
        };
        if hermitian {
            field.check_hermitian()?;
        }
        Ok(field)
    }

    /// Builds a field by evaluating `f` at every grid position.
    pub fn from_fn<F>(grid: TorusGrid, m: usize, hermitian: bool, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> CMatrix + Sync,
    {
        let blocks: Vec<Vec<C64>> = (0..grid.point_count())
            .into_par_iter()
            .map(|i| row_major(&f(&grid.position(i))))
            .collect();
        let data = blocks.into_iter().flatten().collect();
        Self::new(grid, m, data, hermitian)
    }

    pub fn constant(grid: TorusGrid, a: &CMatrix, hermitian: bool) -> Result<Self> {
        let block = row_major(a);
        let data = block
            .iter()
            .cycle()
            .take(block.len() * grid.point_count())
            .cloned()
            .collect();
        Self::new(grid, a.nrows(), data, hermitian)
    }

    /// Applies `f` pointwise; `f` receives the grid index and the matrix.
    pub fn map<F>(&self, hermitian: bool, f: F) -> Result<Self>
    where
        F: Fn(usize, CMatrix) -> CMatrix + Sync,
    {
        let m = self.m;
        let blocks: Vec<Vec<C64>> = (0..self.len())
            .into_par_iter()
            .map(|i| row_major(&f(i, self.matrix(i))))
            .collect();
        let data = blocks.into_iter().flatten().collect();
        Self::new(self.grid.clone(), m, data, hermitian)
    }

    pub fn try_map<F>(&self, hermitian: bool, f: F) -> Result<Self>
    where
        F: Fn(usize, CMatrix) -> Result<CMatrix> + Sync,
    {
        let blocks: Result<Vec<Vec<C64>>> = (0..self.len())
            .into_par_iter()
            .map(|i| f(i, self.matrix(i)).map(|a| row_major(&a)))
            .collect();
        let data = blocks?.into_iter().flatten().collect();
        Self::new(self.grid.clone(), self.m, data, hermitian)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn len(&self) -> usize {
        self.grid.point_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn block(&self, i: usize) -> &[C64] {
        let s = self.m * self.m;
        &self.data[i * s..(i + 1) * s]
    }

    pub fn matrix(&self, i: usize) -> CMatrix {
        CMatrix::from_row_slice(self.m, self.m, self.block(i))
    }

    fn check_hermitian(&self) -> Result<()> {
        for i in 0..self.len() {
            let a = self.matrix(i);
            let defect = hermitian_defect(&a);
            if defect > HERMITIAN_TOL * (1.0 + largest_singular_value(&a)) {
                return Err(Error::NotHermitian { defect });
            }
        }
        Ok(())
    }

    /// Largest Hermitian defect over the grid.
    pub fn max_hermitian_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| hermitian_defect(&self.matrix(i)))
            .fold(0.0, f64::max)
    }

    /// (f + f*)/2, flagged Hermitian.
    pub fn hermitize(&self) -> Self {
        let m = self.m;
        let mut data = self.data.clone();
        for block in data.chunks_mut(m * m) {
            for r in 0..m {
                for c in r..m {
                    let v = 0.5 * (block[r * m + c] + block[c * m + r].conj());
                    block[r * m + c] = v;
                    block[c * m + r] = v.conj();
                }
            }
        }
        Self {
            grid: self.grid.clone(),
            m,
            hermitian: true,
            data,
        }
    }

    /// α·f + g, flagged Hermitian only when both inputs are and α is real.
    pub fn axpy(&self, alpha: C64, other: &MatrixField) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + b)
            .collect();
        let hermitian = self.hermitian && other.hermitian && alpha.im == 0.0;
        Self::new(self.grid.clone(), self.m, data, hermitian)
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            grid: self.grid.clone(),
            m: self.m,
            hermitian: self.hermitian && alpha.im == 0.0,
            data: self.data.iter().map(|a| alpha * a).collect(),
        }
    }

    /// x ↦ u f(x) u* for a fixed matrix u.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.m || u.ncols() != self.m {
            return Err(Error::ShapeMismatch("conjugating matrix has wrong size".into()));
        }
        let ua = u.adjoint();
        let out = self.map(false, |_, a| u * a * &ua)?;
        Ok(if self.hermitian { out.hermitize() } else { out })
    }

    /// Block-diagonal direct sum x ↦ f(x) ⊕ g(x).
    pub fn direct_sum(&self, other: &MatrixField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("grids differ".into()));
        }
        let (m1, m2) = (self.m, other.m);
        let m = m1 + m2;
        let mut data = Vec::with_capacity(self.len() * m * m);
        for i in 0..self.len() {
            let (a, b) = (self.block(i), other.block(i));
            for r in 0..m {
                for c in 0..m {
                    data.push(if r < m1 && c < m1 {
                        a[r * m1 + c]
                    } else if r >= m1 && c >= m1 {
                        b[(r - m1) * m2 + (c - m1)]
                    } else {
                        C64::new(0.0, 0.0)
                    });
                }
            }
        }
        Self::new(self.grid.clone(), m, data, self.hermitian && other.hermitian)
    }

    pub(crate) fn check_same_shape(&self, other: &MatrixField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("grids differ".into()));
        }
        if self.m != other.m {
            return Err(Error::ShapeMismatch(format!(
                "matrix sizes differ ({} vs {})",
                self.m, other.m
            )));
        }
        Ok(())
    }

    /// Largest pointwise operator norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|i| block_norm(self.block(i), self.m, self.hermitian))
            .reduce(|| 0.0, f64::max)
    }
}

fn row_major(a: &CMatrix) -> Vec<C64> {
    let (r, c) = a.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// sup over grid points of ‖f(x) − g(x)‖.
pub fn sup_distance(f: &MatrixField, g: &MatrixField) -> Result<f64> {
    f.check_same_shape(g)?;
    let herm = f.hermitian && g.hermitian;
    Ok((0..f.len())
        .into_par_iter()
        .map(|i| block_diff_norm(f.block(i), g.block(i), f.m, herm))
        .reduce(|| 0.0, f64::max))
}

/// Exact maximum of ‖f(x)−f(y)‖/ρ(x,y) over all unordered grid-point pairs.
pub fn lipschitz_constant(f: &MatrixField) -> Result<LipschitzEstimate> {
    let grid = &f.grid;
    let table = grid.distance_table();
    let dist = |i: usize, j: usize| table[grid.difference_index(i, j)];
    if f.m == 2 && f.hermitian {
        // packed (a00, a11, Re a01, Im a01) for the closed-form 2x2 norm
        let packed: Vec<[f64; 4]> = (0..f.len())
            .map(|i| {
                let b = f.block(i);
                let off = 0.5 * (b[1] + b[2].conj());
                [b[0].re, b[3].re, off.re, off.im]
            })
            .collect();
        let diff = |i: usize, j: usize| {
            let (a, b) = (&packed[i], &packed[j]);
            let t = 0.5 * ((a[0] - b[0]) + (a[1] - b[1]));
            let h = 0.5 * ((a[0] - b[0]) - (a[1] - b[1]));
            let (x, y) = (a[2] - b[2], a[3] - b[3]);
            t.abs() + (h * h + x * x + y * y).sqrt()
        };
        sweep(f.len(), dist, diff)
    } else {
        let diff = |i: usize, j: usize| block_diff_norm(f.block(i), f.block(j), f.m, f.hermitian);
        sweep(f.len(), dist, diff)
    }
}

/// Lipschitz constant of matrix values over an arbitrary finite metric space.
/// `values[i]` is the matrix at point i.
pub fn lipschitz_over<M: FiniteMetric>(metric: &M, values: &[CMatrix]) -> Result<LipschitzEstimate> {
    if values.len() != metric.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} points",
            values.len(),
            metric.len()
        )));
    }
    let diff = |i: usize, j: usize| largest_singular_value(&(&values[i] - &values[j]));
    sweep(metric.len(), |i, j| metric.dist(i, j), diff)
}

fn sweep<D, N>(n: usize, dist: D, diff: N) -> Result<LipschitzEstimate>
where
    D: Fn(usize, usize) -> f64 + Sync,
    N: Fn(usize, usize) -> f64 + Sync,
{
    if n < 2 {
        return Err(Error::InvalidGrid(
            "Lipschitz constant needs at least 2 points".into(),
        ));
    }
    let best = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0f64, (i, i + 1));
            for j in i + 1..n {
                let q = diff(i, j) / dist(i, j);
                if q > best.0 {
                    best = (q, (i, j));
                }
            }
            best
        })
        .reduce(
            || (0.0, (usize::MAX, usize::MAX)),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) {
                    a
                } else {
                    b
                }
            },
        );
    Ok(LipschitzEstimate {
        value: best.0,
        witness: best.1,
        pair_count: (n as u64) * (n as u64 - 1) / 2,
    })
}

/// Pointwise idempotence and self-adjointness check.
pub fn is_projection(f: &MatrixField, tol: f64) -> ProjectionReport {
    let (idem, sa) = (0..f.len())
        .into_par_iter()
        .map(|i| {
            let a = f.matrix(i);
            let idem = largest_singular_value(&(&a * &a - &a));
            (idem, hermitian_defect(&a))
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
    ProjectionReport {
        ok: idem <= tol && sa <= tol,
        max_idem_defect: idem,
        max_sa_defect: sa,
    }
}
