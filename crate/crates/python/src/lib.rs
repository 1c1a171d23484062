//! Python bindings: thermal parameters, thermofield states, teleportation,
//! Mandel statistics, the no-go maps and the experiment runner.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use thermofield::diagnostics::{mandel_q, mandel_q_gated_qubit_paths, von_neumann_entropy};
use thermofield::experiment::{render, run_experiment as run_doc, ExperimentConfig, Format};
use thermofield::gates::GateOp;
use thermofield::hilbert::{expectation_nontilde, ComplexMatrix, FockOperators, StateVector};
use thermofield::nogo_maps::cloning_linearity_gap;
use thermofield::random::seeded_rng;
use thermofield::spin_gibbs::{hadamard_transform, spin_gibbs};
use thermofield::teleport::{run_teleport, BranchSelection, ChannelVariant, NumericOptions};
use thermofield::thermo::{
    analytic_vacuum_overlap, bogoliubov_params, excited_thermofield, qubit_state, rho_psi, thermal_density,
    thermal_vacuum, vacuum_overlap,
};
use thermofield::{Engine, InverseTemperature, TfdError, ThermofieldQubit};

fn py_err(e: TfdError) -> PyErr {
    match e {
        TfdError::Config(_) | TfdError::Domain(_) | TfdError::Contract(_) | TfdError::Shape(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn vector(v: &StateVector) -> Vec<Complex64> {
    v.iter().copied().collect()
}

fn matrix(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Bogoliubov parameters of one bosonic mode at one temperature.
#[pyclass(name = "ThermalParams", module = "thermofield_py", frozen)]
struct PyThermalParams {
    inner: thermofield::ThermalParams,
}

#[pymethods]
impl PyThermalParams {
    /// `beta=None` means zero temperature.
    #[new]
    #[pyo3(signature = (beta=None, omega=1.0))]
    fn new(beta: Option<f64>, omega: f64) -> PyResult<Self> {
        let b = beta.map_or(InverseTemperature::Infinite, |x| {
            if x.is_infinite() && x > 0.0 {
                InverseTemperature::Infinite
            } else {
                InverseTemperature::Finite(x)
            }
        });
        Ok(PyThermalParams { inner: bogoliubov_params(b, omega).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (nbar, omega=1.0))]
    fn from_nbar(nbar: f64, omega: f64) -> PyResult<Self> {
        Ok(PyThermalParams { inner: thermofield::ThermalParams::from_nbar(nbar, omega).map_err(py_err)? })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta.as_f64()
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }
    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }
    #[getter]
    fn u(&self) -> f64 {
        self.inner.u
    }
    #[getter]
    fn v(&self) -> f64 {
        self.inner.v
    }
    #[getter]
    fn nbar(&self) -> f64 {
        self.inner.nbar
    }

    fn tail_mass(&self, cutoff: usize) -> f64 {
        self.inner.tail_mass(cutoff)
    }

    fn cutoff_for_tail(&self, tol: f64) -> usize {
        self.inner.cutoff_for_tail(tol)
    }

    fn __repr__(&self) -> String {
        format!("ThermalParams(beta={}, omega={}, nbar={})", self.inner.beta, self.inner.omega, self.inner.nbar)
    }
}

/// Thermal vacuum `|0(β)⟩` as a flat vector over `|n, m̃⟩`, index `n*(N+1)+m`.
#[pyfunction]
fn thermal_vacuum_state(params: &PyThermalParams, cutoff: usize) -> PyResult<Vec<Complex64>> {
    Ok(vector(&thermal_vacuum(&params.inner, cutoff).map_err(py_err)?.state))
}

/// First excitation `|1(β)⟩` in the same layout.
#[pyfunction]
fn excited_state(params: &PyThermalParams, cutoff: usize) -> PyResult<Vec<Complex64>> {
    Ok(vector(&excited_thermofield(&params.inner, cutoff).map_err(py_err)?.state))
}

/// Diagonal thermal density on the non-tilde sector.
#[pyfunction]
fn thermal_density_matrix(params: &PyThermalParams, cutoff: usize) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(matrix(&thermal_density(&params.inner, cutoff).map_err(py_err)?))
}

/// `ρ_ψ` of the qubit `a0|0(β)⟩ + a1|1(β)⟩`.
#[pyfunction]
fn qubit_density(a0: Complex64, a1: Complex64, params: &PyThermalParams, cutoff: usize) -> PyResult<Vec<Vec<Complex64>>> {
    let q = ThermofieldQubit::new(a0, a1, params.inner, cutoff).map_err(py_err)?;
    Ok(matrix(&rho_psi(&q).map_err(py_err)?))
}

/// `(⟨n⟩ from the state, Tr(ρ_ψ n))` for a thermofield qubit.
#[pyfunction]
fn qubit_mean_occupation(a0: Complex64, a1: Complex64, params: &PyThermalParams, cutoff: usize) -> PyResult<(f64, f64)> {
    let q = ThermofieldQubit::new(a0, a1, params.inner, cutoff).map_err(py_err)?;
    let fock = FockOperators::new(cutoff);
    let psi = qubit_state(&q).map_err(py_err)?;
    let direct = expectation_nontilde(&psi, &fock.number).map_err(py_err)?.re;
    let rho = rho_psi(&q).map_err(py_err)?;
    Ok((direct, thermofield::hilbert::trace_of_product(&rho, &fock.number).re))
}

/// Numeric `⟨0(β)|0(β')⟩` and the closed form `1/cosh(θ-θ')`.
#[pyfunction]
fn vacuum_overlaps(p1: &PyThermalParams, p2: &PyThermalParams, cutoff: usize) -> PyResult<(f64, f64)> {
    let num = vacuum_overlap(&p1.inner, &p2.inner, cutoff).map_err(py_err)?;
    Ok((num.re, analytic_vacuum_overlap(&p1.inner, &p2.inner)))
}

/// Mandel `Q` of the thermal density.
#[pyfunction]
fn thermal_mandel_q(params: &PyThermalParams, cutoff: usize) -> PyResult<f64> {
    let rho = thermal_density(&params.inner, cutoff).map_err(py_err)?;
    Ok(mandel_q(&rho, &FockOperators::new(cutoff).number).map_err(py_err)?.q)
}

/// Gated-qubit `Q` via the gated density and via the gated state, for a seeded random gate.
#[pyfunction]
#[pyo3(signature = (a0, a1, params, cutoff, seed=42))]
fn gated_qubit_mandel_q(
    a0: Complex64,
    a1: Complex64,
    params: &PyThermalParams,
    cutoff: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let q = ThermofieldQubit::new(a0, a1, params.inner, cutoff).map_err(py_err)?;
    let g = GateOp::random(cutoff, &mut seeded_rng(seed));
    let paths = mandel_q_gated_qubit_paths(&g, &q).map_err(py_err)?;
    Ok((paths.via_density.q, paths.via_state.q))
}

/// Von Neumann entropy of the thermal density.
#[pyfunction]
fn thermal_entropy(params: &PyThermalParams, cutoff: usize) -> PyResult<f64> {
    von_neumann_entropy(&thermal_density(&params.inner, cutoff).map_err(py_err)?).map_err(py_err)
}

/// `H ρ H†` for the spin-1/2 Gibbs state at `βω`.
#[pyfunction]
fn hadamard_gibbs(beta_omega: f64) -> Vec<Vec<Complex64>> {
    matrix(&hadamard_transform(&spin_gibbs(beta_omega)))
}

/// `‖C(a0 e0 + a1 e1) - a0 C(e0) - a1 C(e1)‖` on the thermofield basis.
#[pyfunction]
#[pyo3(signature = (a0, a1, params, cutoff=8))]
fn cloning_gap(a0: Complex64, a1: Complex64, params: &PyThermalParams, cutoff: usize) -> PyResult<f64> {
    let e0 = thermal_vacuum(&params.inner, cutoff).map_err(py_err)?.state;
    let e1 = excited_thermofield(&params.inner, cutoff).map_err(py_err)?.state;
    cloning_linearity_gap(a0, a1, [&e0, &e1]).map_err(py_err)
}

/// Teleport `a0|0⟩ + a1|1⟩`; returns one dict per Bell branch.
#[pyfunction]
#[pyo3(signature = (a0, a1, alice, bob=None, channel="thermo", engine="abstract", cutoff=24))]
#[allow(clippy::too_many_arguments)]
fn teleport<'py>(
    py: Python<'py>,
    a0: Complex64,
    a1: Complex64,
    alice: &PyThermalParams,
    bob: Option<&PyThermalParams>,
    channel: &str,
    engine: &str,
    cutoff: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let variant: ChannelVariant = channel.parse().map_err(py_err)?;
    let engine = match engine {
        "abstract" => Engine::Abstract,
        "numeric" => Engine::Numeric,
        other => return Err(PyValueError::new_err(format!("unknown engine {other:?}"))),
    };
    let bob = bob.map_or(alice.inner, |b| b.inner);
    let (source, chan) = variant.specs(alice.inner, bob);
    let out = run_teleport([a0, a1], &source, &chan, engine, BranchSelection::All, NumericOptions { cutoff })
        .map_err(py_err)?;
    out.into_iter()
        .map(|o| {
            let d = PyDict::new(py);
            d.set_item("branch", o.branch.to_string())?;
            d.set_item("probability", o.probability)?;
            d.set_item("fidelity", o.fidelity)?;
            d.set_item("source_fidelity", o.source_fidelity)?;
            d.set_item("bob_amplitudes", o.bob_amplitudes.to_vec())?;
            d.set_item("engine", o.engine.to_string())?;
            Ok(d)
        })
        .collect()
}

/// Run a named experiment; `config` maps CLI keys (`nbar`, `cutoff`, ...) to
/// values. Returns the JSON document.
#[pyfunction]
#[pyo3(signature = (name, config=None))]
fn run_experiment(name: &str, config: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    let mut cfg = ExperimentConfig::new(name.parse().map_err(py_err)?);
    if let Some(d) = config {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            let value = v.str()?.to_string();
            cfg.set(&key, &value).map_err(py_err)?;
        }
    }
    let doc = run_doc(&cfg, false).map_err(py_err)?;
    render(&[doc], Format::Json).map_err(py_err)
}

#[pymodule]
fn thermofield_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyThermalParams>()?;
    m.add_function(wrap_pyfunction!(thermal_vacuum_state, m)?)?;
    m.add_function(wrap_pyfunction!(excited_state, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_density_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(qubit_density, m)?)?;
    m.add_function(wrap_pyfunction!(qubit_mean_occupation, m)?)?;
    m.add_function(wrap_pyfunction!(vacuum_overlaps, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_mandel_q, m)?)?;
    m.add_function(wrap_pyfunction!(gated_qubit_mandel_q, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(hadamard_gibbs, m)?)?;
    m.add_function(wrap_pyfunction!(cloning_gap, m)?)?;
    m.add_function(wrap_pyfunction!(teleport, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
