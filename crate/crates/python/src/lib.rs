//! Python bindings. Matrices cross the boundary as nested lists of complex
//! numbers (row-major); party indices are 0-based as in the Rust API.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};

use slocc_core::error::Error;
use slocc_core::fixtures::FixtureParams;
use slocc_core::io;
use slocc_core::linalg::{self, ComplexMatrix, ComplexVector};
use slocc_core::shape::SystemShape;
use slocc_core::state::StateRecord;
use slocc_core::verdict::CheckOptions;
use slocc_core::{fixtures, mixed, oracle, pure, state, tensor_factor, verdict};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn value_error(e: Error) -> PyErr {
    err(e)
}

fn shape(dims: Vec<usize>) -> PyResult<SystemShape> {
    SystemShape::new(dims).map_err(value_error)
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(err("rows have different lengths"));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct PureState(state::PureState);

#[pymethods]
impl PureState {
    /// Amplitudes indexed row-major over parties; renormalized when `normalize` is set.
    #[new]
    #[pyo3(signature = (amplitudes, dims, normalize = false))]
    fn new(amplitudes: Vec<Complex64>, dims: Vec<usize>, normalize: bool) -> PyResult<Self> {
        let s = shape(dims)?;
        let v = ComplexVector::from_vec(amplitudes);
        let inner = if normalize {
            state::PureState::normalized(s, v)
        } else {
            state::PureState::new(s, v)
        };
        inner.map(Self).map_err(value_error)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.shape().dims().to_vec()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().iter().copied().collect()
    }

    fn density(&self) -> MixedState {
        MixedState(state::MixedState::from_pure(&self.0))
    }

    fn to_json(&self) -> String {
        io::state_to_json(&StateRecord::Pure(self.0.clone()), None)
    }

    fn __repr__(&self) -> String {
        format!("PureState(dims={:?})", self.0.shape().dims())
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct MixedState(state::MixedState);

#[pymethods]
impl MixedState {
    #[new]
    #[pyo3(signature = (rho, dims, normalize = false))]
    fn new(rho: Vec<Vec<Complex64>>, dims: Vec<usize>, normalize: bool) -> PyResult<Self> {
        let s = shape(dims)?;
        let m = matrix(rho)?;
        let inner = if normalize {
            state::MixedState::normalized(s, m)
        } else {
            state::MixedState::new(s, m)
        };
        inner.map(Self).map_err(value_error)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.shape().dims().to_vec()
    }

    #[getter]
    fn rho(&self) -> Vec<Vec<Complex64>> {
        rows(self.0.rho())
    }

    fn rank(&self) -> usize {
        self.0.rank()
    }

    fn reduced(&self, party: usize) -> PyResult<Vec<Vec<Complex64>>> {
        self.0.reduced(party).map(|m| rows(&m)).map_err(value_error)
    }

    fn to_json(&self) -> String {
        io::state_to_json(&StateRecord::Mixed(self.0.clone()), None)
    }

    fn __repr__(&self) -> String {
        format!("MixedState(dims={:?}, rank={})", self.0.shape().dims(), self.0.rank())
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct FactorSet(tensor_factor::FactorSet);

#[pymethods]
impl FactorSet {
    #[new]
    #[pyo3(signature = (factors, scale = Complex64::new(1.0, 0.0)))]
    fn new(factors: Vec<Vec<Vec<Complex64>>>, scale: Complex64) -> PyResult<Self> {
        let mats = factors.into_iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
        tensor_factor::FactorSet::new(mats, scale).map(Self).map_err(value_error)
    }

    #[getter]
    fn factors(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.0.factors().iter().map(rows).collect()
    }

    #[getter]
    fn scale(&self) -> Complex64 {
        self.0.scale()
    }

    fn kron(&self) -> Vec<Vec<Complex64>> {
        rows(&self.0.kron())
    }

    fn inverse(&self) -> PyResult<Self> {
        self.0.inverse().map(Self).map_err(value_error)
    }

    fn max_condition(&self) -> f64 {
        self.0.max_condition()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(frozen, skip_from_py_object)]
struct Verdict(verdict::Verdict);

#[pymethods]
impl Verdict {
    /// One of "equivalent", "inequivalent", "inconclusive".
    #[getter]
    fn outcome(&self) -> &'static str {
        self.0.outcome.as_str()
    }

    #[getter]
    fn reason(&self) -> String {
        self.0.reason.clone()
    }

    #[getter]
    fn residuals(&self) -> BTreeMap<String, f64> {
        self.0.residuals.clone()
    }

    #[getter]
    fn witness(&self) -> Option<FactorSet> {
        self.0.witness.clone().map(FactorSet)
    }

    #[pyo3(signature = (seed = 0))]
    fn to_json(&self, seed: u64) -> String {
        io::VerdictReport::new(&self.0, seed).to_json()
    }

    fn __repr__(&self) -> String {
        format!("Verdict({}, {:?})", self.0.outcome, self.0.reason)
    }
}

fn options(seed: u64, all_cuts: bool) -> CheckOptions {
    CheckOptions {
        all_cuts,
        ..CheckOptions::with_seed(seed)
    }
}

#[pyfunction]
#[pyo3(signature = (phi, psi, seed = 0, all_cuts = false))]
fn check_pure_equivalence(phi: PyRef<'_, PureState>, psi: PyRef<'_, PureState>, seed: u64, all_cuts: bool) -> PyResult<Verdict> {
    pure::check_pure_equivalence(&phi.0, &psi.0, &options(seed, all_cuts))
        .map(Verdict)
        .map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (rho1, rho2, seed = 0))]
fn check_mixed_equivalence(rho1: PyRef<'_, MixedState>, rho2: PyRef<'_, MixedState>, seed: u64) -> PyResult<Verdict> {
    mixed::check_mixed_equivalence(&rho1.0, &rho2.0, &options(seed, false))
        .map(Verdict)
        .map_err(value_error)
}

#[pyfunction]
fn check_bipartite(phi: PyRef<'_, PureState>, psi: PyRef<'_, PureState>) -> PyResult<Verdict> {
    pure::check_bipartite(&phi.0, &psi.0).map(Verdict).map_err(value_error)
}

/// Coefficient-matrix ranks keyed by the tuple of row parties.
#[pyfunction]
fn rank_signature<'py>(py: Python<'py>, psi: PyRef<'_, PureState>) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for (cut, rank) in pure::rank_signature(&psi.0).entries {
        out.set_item(PyTuple::new(py, cut)?, rank)?;
    }
    Ok(out)
}

#[pyfunction]
fn realign(z: Vec<Vec<Complex64>>, m: usize, n: usize) -> PyResult<Vec<Vec<Complex64>>> {
    linalg::realign(&matrix(z)?, m, n).map(|r| rows(&r)).map_err(value_error)
}

type DecompositionTuple = (bool, bool, Vec<(usize, f64)>);

/// `(decomposable, invertible, [(numerical_rank, rank1_residual) per party])`.
#[pyfunction]
fn decomposability(a: Vec<Vec<Complex64>>, dims: Vec<usize>) -> PyResult<DecompositionTuple> {
    let rep = tensor_factor::decomposability(&matrix(a)?, &shape(dims)?).map_err(value_error)?;
    let parties = rep.per_party.iter().map(|p| (p.numerical_rank, p.rank1_residual)).collect();
    Ok((rep.decomposable, rep.invertible, parties))
}

#[pyfunction]
fn extract_factors(a: Vec<Vec<Complex64>>, dims: Vec<usize>) -> PyResult<FactorSet> {
    tensor_factor::extract_factors(&matrix(a)?, &shape(dims)?)
        .map(FactorSet)
        .map_err(value_error)
}

/// `(relative_residual, passed)` for `φ ∝ W·ψ`.
#[pyfunction]
fn verify_witness_pure(phi: PyRef<'_, PureState>, psi: PyRef<'_, PureState>, w: PyRef<'_, FactorSet>) -> PyResult<(f64, bool)> {
    let c = oracle::verify_witness_pure(&phi.0, &psi.0, &w.0).map_err(value_error)?;
    Ok((c.relative_residual, c.passed))
}

/// `(relative_residual, passed)` for `ρ₁ ∝ W·ρ₂·W†`.
#[pyfunction]
fn verify_witness_mixed(rho1: PyRef<'_, MixedState>, rho2: PyRef<'_, MixedState>, w: PyRef<'_, FactorSet>) -> PyResult<(f64, bool)> {
    let c = oracle::verify_witness_mixed(&rho1.0, &rho2.0, &w.0).map_err(value_error)?;
    Ok((c.relative_residual, c.passed))
}

#[pyfunction]
fn random_ilo(dims: Vec<usize>, seed: u64) -> PyResult<FactorSet> {
    Ok(FactorSet(oracle::random_ilo(&shape(dims)?, seed)))
}

fn into_py(py: Python<'_>, s: StateRecord) -> PyResult<Py<PyAny>> {
    Ok(match s {
        StateRecord::Pure(p) => Py::new(py, PureState(p))?.into_any(),
        StateRecord::Mixed(m) => Py::new(py, MixedState(m))?.into_any(),
    })
}

/// The two states of a worked example; `params` overrides the defaults.
#[pyfunction]
#[pyo3(signature = (example, params = None))]
fn example_states(py: Python<'_>, example: u8, params: Option<BTreeMap<String, f64>>) -> PyResult<(Py<PyAny>, Py<PyAny>)> {
    let pairs: Vec<(String, f64)> = params.unwrap_or_default().into_iter().collect();
    let p = FixtureParams::from_pairs(example, &pairs).map_err(value_error)?;
    let (a, b) = fixtures::fixtures(&p).map_err(value_error)?;
    Ok((into_py(py, a)?, into_py(py, b)?))
}

/// Parses a state file's JSON text.
#[pyfunction]
fn parse_state(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    into_py(py, io::parse_state(text).map_err(err)?)
}

#[pymodule]
fn slocc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PureState>()?;
    m.add_class::<MixedState>()?;
    m.add_class::<FactorSet>()?;
    m.add_class::<Verdict>()?;
    m.add_function(wrap_pyfunction!(check_pure_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(check_mixed_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(check_bipartite, m)?)?;
    m.add_function(wrap_pyfunction!(rank_signature, m)?)?;
    m.add_function(wrap_pyfunction!(realign, m)?)?;
    m.add_function(wrap_pyfunction!(decomposability, m)?)?;
    m.add_function(wrap_pyfunction!(extract_factors, m)?)?;
    m.add_function(wrap_pyfunction!(verify_witness_pure, m)?)?;
    m.add_function(wrap_pyfunction!(verify_witness_mixed, m)?)?;
    m.add_function(wrap_pyfunction!(random_ilo, m)?)?;
    m.add_function(wrap_pyfunction!(example_states, m)?)?;
    m.add_function(wrap_pyfunction!(parse_state, m)?)?;
    m.add("WITNESS_TOL", oracle::WITNESS_TOL)?;
    Ok(())
}
