use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite metric space whose points are indexed `0..len()`.
///
/// The Lipschitz sweep is written against this trait so that the same code
/// handles torus grids and the two-point space of the sharpness example.
pub trait FiniteMetric: Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Uniform grid on the flat torus (R/Z)^n, n in {1, 2}, unit circumferences.
///
/// Points are `x_i = i / N_d` per dimension, indexed lexicographically with
/// the first coordinate varying slowest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    sizes: Vec<usize>,
}

impl TorusGrid {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                sizes.len()
            )));
        }
        if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGrid(format!(
                "every dimension needs at least 2 points, got {n}"
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
        })
    }

    pub fn circle(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(&[n, n])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Circumference of each factor circle.
    pub fn lengths(&self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }

    pub fn point_count(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Smallest grid step over all dimensions.
    pub fn min_step(&self) -> f64 {
        1.0 / *self.sizes.iter().max().unwrap() as f64
    }

    /// Largest grid step over all dimensions.
    pub fn max_step(&self) -> f64 {
        1.0 / *self.sizes.iter().min().unwrap() as f64
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim());
        coords
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&c, &n)| acc * n + c % n)
    }

    pub fn coords_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            out[d] = index % self.sizes[d];
            index /= self.sizes[d];
        }
        out
    }

    /// Position of a grid point in [0,1)^n.
    pub fn position(&self, index: usize) -> Vec<f64> {
        self.coords_of(index)
            .iter()
            .zip(&self.sizes)
            .map(|(&c, &n)| c as f64 / n as f64)
            .collect()
    }

    /// Index of the point `index + offset` with periodic wrap.
    pub fn translate(&self, index: usize, offset: &[i64]) -> usize {
        let coords = self.coords_of(index);
        let shifted: Vec<usize> = coords
            .iter()
            .zip(offset)
            .zip(&self.sizes)
            .map(|((&c, &o), &n)| (c as i64 + o).rem_euclid(n as i64) as usize)
            .collect();
        self.index_of(&shifted)
    }

    fn check(&self, index: usize) -> Result<()> {
        let len = self.point_count();
        if index >= len {
            return Err(Error::IndexOutOfRange { index, len });
        }
        Ok(())
    }

    /// Geodesic distance between two grid points.
    pub fn geodesic_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.dist(i, j))
    }

    /// Geodesic length of an integer offset vector.
    pub fn offset_length(&self, offset: &[i64]) -> f64 {
        let wrapped = offset.iter().zip(&self.sizes).map(|(&k, &n)| {
            let k = k.rem_euclid(n as i64);
            k.min(n as i64 - k)
        });
        if self.sizes.iter().all(|&n| n == self.sizes[0]) {
            // integer arithmetic keeps equal-norm offsets bit-identical
            let isq: i64 = wrapped.map(|k| k * k).sum();
            return (isq as f64).sqrt() / self.sizes[0] as f64;
        }
        wrapped
            .zip(&self.sizes)
            .map(|(k, &n)| {
                let d = k as f64 / n as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Table of distances indexed by the wrapped coordinate difference, so the
    /// pairwise sweep does not recompute square roots.
    pub(crate) fn distance_table(&self) -> Vec<f64> {
        let count = self.point_count();
        (0..count)
            .map(|idx| {
                let c = self.coords_of(idx);
                let off: Vec<i64> = c.iter().map(|&v| v as i64).collect();
                self.offset_length(&off)
            })
            .collect()
    }

    /// Index into `distance_table` for the pair (i, j).
    #[inline]
    pub(crate) fn difference_index(&self, i: usize, j: usize) -> usize {
        match self.sizes.as_slice() {
            [n] => (i + n - j) % n,
            [n0, n1] => {
                let (a0, a1) = (i / n1, i % n1);
                let (b0, b1) = (j / n1, j % n1);
                ((a0 + n0 - b0) % n0) * n1 + (a1 + n1 - b1) % n1
            }
            _ => unreachable!(),
        }
    }
}

impl FiniteMetric for TorusGrid {
    fn len(&self) -> usize {
        self.point_count()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let a = self.coords_of(i);
        let b = self.coords_of(j);
        let off: Vec<i64> = a.iter().zip(&b).map(|(&x, &y)| x as i64 - y as i64).collect();
        self.offset_length(&off)
    }
}
