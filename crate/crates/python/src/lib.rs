//! Python bindings: density matrices, preparation, tomography and
//! entanglement analysis.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nalgebra::DMatrix;
use num_complex::Complex64;
use wstate::entangle;
use wstate::io;
use wstate::ionsim;
use wstate::tomo;

fn err(e: wstate::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Density matrix on a register of subsystems.
#[pyclass(name = "DensityMatrix", frozen)]
struct PyDensityMatrix(wstate::DensityMatrix);

#[pymethods]
impl PyDensityMatrix {
    /// Builds from row-major complex entries; `dims` defaults to qubits.
    #[new]
    #[pyo3(signature = (rows, dims = None))]
    fn new(rows: Vec<Vec<Complex64>>, dims: Option<Vec<usize>>) -> PyResult<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let dims = match dims {
            Some(dims) => dims,
            None if d.is_power_of_two() && d > 1 => {
                wstate::hilbert::qubit_dims(d.trailing_zeros() as usize)
            }
            None => vec![d],
        };
        let m = DMatrix::from_fn(d, d, |r, c| rows[r][c]);
        wstate::DensityMatrix::new(m, dims).map(Self).map_err(err)
    }

    #[staticmethod]
    fn maximally_mixed(n: usize) -> Self {
        Self(wstate::DensityMatrix::maximally_mixed(
            wstate::hilbert::qubit_dims(n),
        ))
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        io::parse_density_matrix(text).map(Self).map_err(err)
    }

    fn to_text(&self) -> String {
        io::write_density_matrix(&self.0)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims().to_vec()
    }

    fn rows(&self) -> Vec<Vec<Complex64>> {
        let m = self.0.entries();
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
            .collect()
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dims={:?})", self.0.dims())
    }
}

/// Complete Pauli tomography dataset.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset(tomo::TomographyDataset);

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        io::parse_dataset(text).map(Self).map_err(err)
    }

    fn to_text(&self) -> String {
        io::write_dataset(&self.0)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn shots_per_basis(&self) -> u64 {
        self.0.shots_per_basis()
    }

    fn __len__(&self) -> usize {
        self.0.records().len()
    }
}

/// `|W_n><W_n|`.
#[pyfunction]
fn w_state(n: usize) -> PyResult<PyDensityMatrix> {
    Ok(PyDensityMatrix(
        ionsim::w_state(n).map_err(err)?.to_density(),
    ))
}

/// Noiseless preparation sequence with the motion traced out.
#[pyfunction]
#[pyo3(signature = (n, n_max = ionsim::DEFAULT_N_MAX))]
fn prepare_w(n: usize, n_max: usize) -> PyResult<PyDensityMatrix> {
    let joint = ionsim::prepare_w_sequence(n, n_max).map_err(err)?;
    Ok(PyDensityMatrix(ionsim::trace_out_motion(&joint)))
}

/// Trajectory-averaged noisy preparation; `config` is the text of a noise
/// configuration file.
#[pyfunction]
#[pyo3(signature = (n, config, trials = 200, seed = 0))]
fn simulate_noisy(n: usize, config: &str, trials: usize, seed: u64) -> PyResult<PyDensityMatrix> {
    let f = io::parse_noise_config(config).map_err(err)?;
    ionsim::simulate_noisy_preparation(n, f.n_max_for(n), &f.noise, trials, seed)
        .map(PyDensityMatrix)
        .map_err(err)
}

/// `<W_n|rho|W_n>` without phase adjustment.
#[pyfunction]
fn fidelity_w(rho: &PyDensityMatrix) -> PyResult<f64> {
    let n = rho
        .0
        .n_qubits()
        .ok_or_else(|| PyValueError::new_err("not a qubit register"))?;
    wstate::fidelity_pure(&rho.0, &ionsim::w_state(n).map_err(err)?).map_err(err)
}

/// Local phases maximizing the W fidelity, and that fidelity.
#[pyfunction]
fn optimize_local_phases(rho: &PyDensityMatrix) -> PyResult<(Vec<f64>, f64)> {
    entangle::optimize_local_phases(&rho.0).map_err(err)
}

#[pyfunction]
fn concurrence(rho: &PyDensityMatrix) -> PyResult<f64> {
    entangle::concurrence(&rho.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (rho, shots = 100, seed = 0))]
fn sample_dataset(rho: &PyDensityMatrix, shots: u64, seed: u64) -> PyResult<PyDataset> {
    tomo::sample_dataset(&rho.0, shots, seed)
        .map(PyDataset)
        .map_err(err)
}

/// Maximum-likelihood reconstruction; returns a dict with the state and
/// convergence details.
#[pyfunction]
#[pyo3(signature = (data, max_iterations = 5000, tolerance = 1e-10))]
fn mle_reconstruct<'py>(
    py: Python<'py>,
    data: &PyDataset,
    max_iterations: usize,
    tolerance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = tomo::MleConfig {
        max_iterations,
        loglik_tolerance: tolerance,
        ..tomo::MleConfig::default()
    };
    let res = py
        .detach(|| tomo::mle_reconstruct(&data.0, &cfg))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rho", PyDensityMatrix(res.rho))?;
    d.set_item("iterations", res.iterations)?;
    d.set_item("log_likelihood", res.log_likelihood)?;
    d.set_item("converged", res.converged)?;
    d.set_item("dilution_fallbacks", res.dilution_fallbacks)?;
    Ok(d)
}

/// Largest `<Q>` over biseparable states for the witness constants.
#[pyfunction]
fn gamma_biseparable(n: usize, alpha: f64, beta: f64) -> PyResult<f64> {
    entangle::gamma_biseparable(n, alpha, beta)
        .map(|g| g.gamma)
        .map_err(err)
}

/// Published `(n, alpha, beta, gamma)` rows.
#[pyfunction]
fn published_witness_rows() -> Vec<(usize, f64, f64, f64)> {
    entangle::PUBLISHED_WITNESS_ROWS.to_vec()
}

/// Fidelity, witnesses and pair concurrences as a dict.
#[pyfunction]
fn entanglement_report<'py>(
    py: Python<'py>,
    rho: &PyDensityMatrix,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| entangle::entanglement_report(&rho.0))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("fidelity", r.fidelity)?;
    d.set_item("phases", r.phases)?;
    d.set_item("simple_witness", r.simple_witness)?;
    d.set_item("advanced_witness", r.advanced_witness)?;
    for (name, s) in [("projected", &r.projected), ("reduced", &r.reduced)] {
        let pairs: Vec<(usize, usize, f64)> = s.pairs.iter().map(|p| (p.k, p.l, p.value)).collect();
        d.set_item(format!("{name}_concurrences"), pairs)?;
        d.set_item(format!("{name}_min"), s.min)?;
        d.set_item(format!("{name}_mean"), s.mean)?;
    }
    d.set_item("distillable", r.distillable)?;
    Ok(d)
}

#[pymodule]
fn wstate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(w_state, m)?)?;
    m.add_function(wrap_pyfunction!(prepare_w, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_noisy, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_w, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_local_phases, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(sample_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(mle_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_biseparable, m)?)?;
    m.add_function(wrap_pyfunction!(published_witness_rows, m)?)?;
    m.add_function(wrap_pyfunction!(entanglement_report, m)?)?;
    Ok(())
}
