//! Python bindings. Density matrices cross the boundary as 4x4 nested lists of
//! complex numbers, kets as length-4 lists, in the basis `00, 01, 10, 11`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use locnot::analysis::ProjectorTag;
use locnot::density::{BellState, DensityMatrix, TwoQubitKet};
use locnot::gate::{self, ExperimentalParams, QubitAmplitudes};
use locnot::noise::{self, OverlapParam};
use locnot::tomography::{self, CountRecord, MleOptions, SettingPair};

type Rows = Vec<Vec<Complex64>>;

fn err(e: locnot::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &Matrix4<Complex64>) -> Rows {
    (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect()
}

fn density(rho: Rows) -> PyResult<DensityMatrix> {
    if rho.len() != 4 || rho.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("density matrix must be 4x4"));
    }
    DensityMatrix::new(Matrix4::from_fn(|i, j| rho[i][j])).map_err(err)
}

fn ket(psi: Vec<Complex64>) -> PyResult<TwoQubitKet> {
    if psi.len() != 4 {
        return Err(PyValueError::new_err("ket must have 4 amplitudes"));
    }
    Ok(Vector4::from_column_slice(&psi))
}

fn qubit(amps: (Complex64, Complex64)) -> PyResult<QubitAmplitudes> {
    QubitAmplitudes::new(amps.0, amps.1).map_err(err)
}

fn overlap(xi: f64) -> PyResult<OverlapParam> {
    OverlapParam::new(xi).map_err(err)
}

#[pyclass(frozen, name = "Circuit")]
struct PyCircuit(gate::Circuit);

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn conceptual() -> Self {
        Self(gate::build_conceptual_cnot())
    }

    /// `theta_third` in degrees, `phi_c` in radians.
    #[staticmethod]
    #[pyo3(signature = (theta_third=None, phi_c=None))]
    fn experimental(theta_third: Option<f64>, phi_c: Option<f64>) -> Self {
        let d = ExperimentalParams::default();
        Self(gate::build_experimental_cnot(ExperimentalParams {
            theta_third: theta_third.unwrap_or(d.theta_third),
            phi_c: phi_c.unwrap_or(d.phi_c),
        }))
    }

    #[staticmethod]
    fn from_dsl(text: &str) -> PyResult<Self> {
        locnot::dsl::parse_circuit_dsl(text).map(Self).map_err(err)
    }

    fn to_dsl(&self) -> String {
        locnot::dsl::to_dsl(&self.0)
    }

    #[getter]
    fn mode_count(&self) -> usize {
        self.0.mode_count()
    }

    /// Single-photon mode transformation as nested rows.
    fn unitary(&self) -> PyResult<Rows> {
        let u = self.0.mode_unitary().map_err(err)?;
        let m = u.matrix();
        Ok((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
    }

    /// Post-selected logical operator, up to the `1/3` amplitude.
    fn logical_operator(&self) -> PyResult<Rows> {
        gate::logical_operator(&self.0).map(|m| rows(&m)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(modes={}, elements={})",
            self.0.mode_count(),
            self.0.elements().len()
        )
    }
}

/// Pure-input run. Returns `(ket or None, success_probability)`.
#[pyfunction]
fn run(
    circuit: &PyCircuit,
    control: (Complex64, Complex64),
    target: (Complex64, Complex64),
) -> PyResult<(Option<Vec<Complex64>>, f64)> {
    let out = gate::run(&circuit.0, &qubit(control)?, &qubit(target)?).map_err(err)?;
    Ok((out.state.map(|s| s.iter().copied().collect()), out.success_probability))
}

/// Run with partial mode overlap `xi`. Returns `(rho or None, success_probability)`.
#[pyfunction]
fn run_with_mismatch(
    circuit: &PyCircuit,
    control: (Complex64, Complex64),
    target: (Complex64, Complex64),
    xi: f64,
) -> PyResult<(Option<Rows>, f64)> {
    let out = noise::run_with_mismatch(&qubit(control)?, &qubit(target)?, &circuit.0, overlap(xi)?).map_err(err)?;
    Ok((out.rho.map(|r| rows(r.matrix())), out.success_probability))
}

/// `table[input][output]`, conditional on coincidence.
#[pyfunction]
#[pyo3(signature = (circuit, xi=1.0))]
fn truth_table(circuit: &PyCircuit, xi: f64) -> PyResult<[[f64; 4]; 4]> {
    noise::truth_table(&circuit.0, overlap(xi)?).map_err(err)
}

#[pyfunction]
fn flip_probability(circuit: &PyCircuit, xi: f64) -> PyResult<f64> {
    noise::flip_probability(&circuit.0, overlap(xi)?).map_err(err)
}

/// Overlap that reproduces the observed `P(11 | 10)`.
#[pyfunction]
fn calibrate_overlap(circuit: &PyCircuit, target_flip_probability: f64) -> PyResult<f64> {
    noise::calibrate_overlap(&circuit.0, target_flip_probability)
        .map(OverlapParam::value)
        .map_err(err)
}

#[pyfunction]
fn bell_state(name: &str) -> PyResult<Vec<Complex64>> {
    BellState::from_name(name)
        .map(|b| b.ket().iter().copied().collect())
        .ok_or_else(|| PyValueError::new_err(format!("unknown Bell state {name:?}")))
}

#[pyfunction]
fn werner(p: f64) -> PyResult<Rows> {
    DensityMatrix::werner(p).map(|r| rows(r.matrix())).map_err(err)
}

#[pyfunction]
fn fidelity(rho: Rows, psi: Vec<Complex64>) -> PyResult<f64> {
    Ok(tomography::fidelity(&density(rho)?, &ket(psi)?))
}

#[pyfunction]
fn concurrence(rho: Rows) -> PyResult<f64> {
    Ok(tomography::concurrence(&density(rho)?))
}

#[pyfunction]
fn tangle(rho: Rows) -> PyResult<f64> {
    Ok(tomography::tangle(&density(rho)?))
}

#[pyfunction]
fn linear_entropy(rho: Rows) -> PyResult<f64> {
    Ok(tomography::linear_entropy(&density(rho)?))
}

#[pyfunction]
fn chsh_max(rho: Rows) -> PyResult<f64> {
    Ok(tomography::chsh_max(&density(rho)?))
}

/// Poisson counts for the sixteen settings as `(control, target, counts)`.
#[pyfunction]
fn simulate_counts(rho: Rows, n_per_setting: u64, seed: u64) -> PyResult<Vec<(String, String, u64)>> {
    let records = tomography::simulate_counts(&density(rho)?, n_per_setting, seed).map_err(err)?;
    Ok(records
        .iter()
        .map(|r| (r.setting.control.to_string(), r.setting.target.to_string(), r.counts))
        .collect())
}

/// Maximum-likelihood state from `(control, target, counts)` triples.
/// Returns `(rho, log_likelihood, iterations)`; raises if the fit does not converge.
#[pyfunction]
#[pyo3(signature = (counts, max_iterations=10_000))]
fn mle(counts: Vec<(String, String, u64)>, max_iterations: usize) -> PyResult<(Rows, f64, usize)> {
    let records = counts
        .iter()
        .map(|(c, t, n)| {
            let control: ProjectorTag = c.parse().map_err(err)?;
            let target: ProjectorTag = t.parse().map_err(err)?;
            Ok(CountRecord {
                setting: SettingPair::new(control, target),
                counts: *n,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let options = MleOptions {
        max_iterations,
        ..MleOptions::default()
    };
    let fit = tomography::mle_reconstruct(&records, &options).map_err(err)?;
    if !fit.converged {
        return Err(PyRuntimeError::new_err(format!(
            "reconstruction did not converge in {} iterations",
            fit.iterations
        )));
    }
    Ok((rows(fit.rho.matrix()), fit.log_likelihood, fit.iterations))
}

#[pymodule]
fn pylocnot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_with_mismatch, m)?)?;
    m.add_function(wrap_pyfunction!(truth_table, m)?)?;
    m.add_function(wrap_pyfunction!(flip_probability, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(bell_state, m)?)?;
    m.add_function(wrap_pyfunction!(werner, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(tangle, m)?)?;
    m.add_function(wrap_pyfunction!(linear_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_max, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(mle, m)?)?;
    Ok(())
}
