//! Python bindings. Build with `cargo build -p projsmooth-py --release` and
//! import the resulting shared library as `pyprojsmooth`.

use pyo3::exceptions::{PyIOError, PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use projsmooth::bounds::{proposition_bound_check, sharpness_example as sharpness};
use projsmooth::bundles::{
    chern_number, fixture_bott_pullback, fixture_constant, fixture_loring,
    fixture_random_near_projection,
};
use projsmooth::calculus::{
    apply_calculus, contour_projection as contour, spectral_gap_field, upper_spectral_projection,
    ContourSpec,
};
use projsmooth::grid_field::io::{from_json_str, read_field, to_json_string, write_field};
use projsmooth::grid_field::{is_projection, lipschitz_constant, sup_distance};
use projsmooth::mollifier::{discretize, smooth, MollifierKernel, DEFAULT_PLATEAU};
use projsmooth::pipeline::{smooth_project, Choice, PipelineConfig};
use projsmooth::{CMatrix, Error, C64};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        e if e.is_certification_failure() => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(a: &CMatrix) -> Vec<Vec<C64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: Vec<Vec<C64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn choice(v: Option<f64>) -> Choice {
    v.map_or(Choice::Auto, Choice::Value)
}

#[pyclass(name = "TorusGrid", module = "pyprojsmooth", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTorusGrid(projsmooth::TorusGrid);

#[pymethods]
impl PyTorusGrid {
    #[new]
    fn new(sizes: Vec<usize>) -> PyResult<Self> {
        projsmooth::TorusGrid::new(&sizes).map(Self).map_err(err)
    }

    #[getter]
    fn sizes(&self) -> Vec<usize> {
        self.0.sizes().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn point_count(&self) -> usize {
        self.0.point_count()
    }

    fn position(&self, index: usize) -> PyResult<Vec<f64>> {
        self.check(index)?;
        Ok(self.0.position(index))
    }

    fn geodesic_distance(&self, i: usize, j: usize) -> PyResult<f64> {
        self.0.geodesic_distance(i, j).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.point_count()
    }

    fn __repr__(&self) -> String {
        format!("TorusGrid({:?})", self.0.sizes())
    }
}

impl PyTorusGrid {
    fn check(&self, index: usize) -> PyResult<()> {
        if index >= self.0.point_count() {
            return Err(err(Error::IndexOutOfRange {
                index,
                len: self.0.point_count(),
            }));
        }
        Ok(())
    }
}

/// A matrix-valued function sampled on a torus grid.
#[pyclass(name = "MatrixField", module = "pyprojsmooth", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMatrixField(projsmooth::MatrixField);

#[pymethods]
impl PyMatrixField {
    /// Build from a list of square matrices, one per grid point.
    #[new]
    #[pyo3(signature = (grid, matrices, hermitian = true))]
    fn new(grid: &PyTorusGrid, matrices: Vec<Vec<Vec<C64>>>, hermitian: bool) -> PyResult<Self> {
        let m = matrices.first().map_or(0, |a| a.len());
        let mut data = Vec::with_capacity(matrices.len() * m * m);
        for a in matrices {
            if a.len() != m || a.iter().any(|r| r.len() != m) {
                return Err(PyValueError::new_err("matrices must all be m x m"));
            }
            data.extend(a.into_iter().flatten());
        }
        projsmooth::MatrixField::new(grid.0.clone(), m, data, hermitian)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn loring(k: i64, n: usize) -> PyResult<Self> {
        let g = projsmooth::TorusGrid::square(n).map_err(err)?;
        fixture_loring(k, &g).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (k, n, mass = 1.0))]
    fn bott_pullback(k: i64, n: usize, mass: f64) -> PyResult<Self> {
        let g = projsmooth::TorusGrid::square(n).map_err(err)?;
        fixture_bott_pullback(k, mass, &g).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (sizes, m, seed = 0, delta = 0.2))]
    fn random(sizes: Vec<usize>, m: usize, seed: u64, delta: f64) -> PyResult<Self> {
        let g = projsmooth::TorusGrid::new(&sizes).map_err(err)?;
        fixture_random_near_projection(seed, &g, m, delta)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn constant(sizes: Vec<usize>, m: usize, rank: usize) -> PyResult<Self> {
        let g = projsmooth::TorusGrid::new(&sizes).map_err(err)?;
        fixture_constant(&g, m, rank).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        from_json_str(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        read_field(path).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json_string(&self.0).map_err(err)
    }

    fn write(&self, path: &str) -> PyResult<()> {
        write_field(&self.0, path).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyTorusGrid {
        PyTorusGrid(self.0.grid().clone())
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn hermitian(&self) -> bool {
        self.0.is_hermitian()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn matrix(&self, index: usize) -> PyResult<Vec<Vec<C64>>> {
        PyTorusGrid(self.0.grid().clone()).check(index)?;
        Ok(rows(&self.0.matrix(index)))
    }

    /// Returns a dict with `value`, `witness` and `pair_count`.
    fn lipschitz<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let est = py.detach(|| lipschitz_constant(&self.0)).map_err(err)?;
        to_py(py, &est)
    }

    #[pyo3(signature = (epsilon, plateau = DEFAULT_PLATEAU))]
    fn smooth(&self, py: Python<'_>, epsilon: f64, plateau: f64) -> PyResult<Self> {
        py.detach(|| {
            let kernel = MollifierKernel::new(self.0.grid().dim(), plateau)?;
            smooth(&self.0, &discretize(&kernel, self.0.grid(), epsilon)?)
        })
        .map(Self)
        .map_err(err)
    }

    fn sup_distance(&self, other: &PyMatrixField) -> PyResult<f64> {
        sup_distance(&self.0, &other.0).map_err(err)
    }

    #[pyo3(signature = (tol = 1e-10))]
    fn is_projection<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &is_projection(&self.0, tol))
    }

    fn spectral_gap<'py>(&self, py: Python<'py>, delta: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &spectral_gap_field(&self.0, delta).map_err(err)?)
    }

    /// Pointwise upper spectral projection. Fails if the gap is violated.
    fn project(&self, delta: f64) -> PyResult<Self> {
        apply_calculus(&self.0, delta).map(Self).map_err(err)
    }

    fn chern<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &chern_number(&self.0).map_err(err)?)
    }

    fn bound_check<'py>(&self, py: Python<'py>, delta: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &proposition_bound_check(&self.0, delta).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "MatrixField(sizes={:?}, m={}, hermitian={})",
            self.0.grid().sizes(),
            self.0.m(),
            self.0.is_hermitian()
        )
    }
}

/// Smooth `p` and project back. Returns `(q, report_json)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (p, target_eps, delta = None, epsilon_smooth = None,
                    kernel_plateau = DEFAULT_PLATEAU, max_retries = 8, check_chern = false))]
fn pipeline(
    py: Python<'_>,
    p: &PyMatrixField,
    target_eps: f64,
    delta: Option<f64>,
    epsilon_smooth: Option<f64>,
    kernel_plateau: f64,
    max_retries: usize,
    check_chern: bool,
) -> PyResult<(PyMatrixField, String)> {
    let config = PipelineConfig {
        target_eps,
        delta: choice(delta),
        epsilon_smooth: choice(epsilon_smooth),
        kernel_plateau,
        max_retries,
        check_chern,
    };
    let out = py.detach(|| smooth_project(&p.0, &config)).map_err(err)?;
    let report = out.report.to_json().map_err(err)?;
    Ok((PyMatrixField(out.q), report))
}

/// The two-point example: returns `(L(a), L(f(a)), bound, attained)`.
#[pyfunction]
fn sharpness_example(delta: f64) -> PyResult<(f64, f64, f64, bool)> {
    let r = sharpness(delta).map_err(err)?;
    Ok((r.l_a, r.l_fa, r.bound, r.bound_attained))
}

/// Riesz projection of one matrix. Returns `(projection, distance_to_eigen, segments_used)`.
#[pyfunction]
#[pyo3(signature = (matrix, delta, s, segments = 16))]
fn contour_projection(
    matrix: Vec<Vec<C64>>,
    delta: f64,
    s: f64,
    segments: usize,
) -> PyResult<(Vec<Vec<C64>>, f64, usize)> {
    let a = from_rows(matrix)?;
    let spec = ContourSpec::new(s, segments, delta).map_err(err)?;
    let c = contour(&a, &spec).map_err(err)?;
    let q = upper_spectral_projection(&a, delta).map_err(err)?;
    let dist = projsmooth::grid_field::operator_norm(&(&c.projection - q)).map_err(err)?;
    Ok((rows(&c.projection), dist, c.segments_used))
}

#[pymodule]
fn pyprojsmooth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTorusGrid>()?;
    m.add_class::<PyMatrixField>()?;
    m.add_function(wrap_pyfunction!(pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(sharpness_example, m)?)?;
    m.add_function(wrap_pyfunction!(contour_projection, m)?)?;
    Ok(())
}
