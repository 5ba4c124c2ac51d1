//! Python bindings: λ_N, presets, master-equation populations and
//! trajectory ensembles. Configs travel as TOML strings.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nbundle_core::config::{preset, RunConfig, PRESET_NAMES};
use nbundle_core::hilbert::{PureState, Qubit};
use nbundle_core::lindblad::{evolve_master_with, InvariantSummary};
use nbundle_core::observables::{PopulationColumns, TimeSeries};
use nbundle_core::trajectories::{bundle_statistics, run_ensemble_records, BundleStatistics, EnsembleResult};
use nbundle_core::Error;

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::InvalidTruncation(_)
        | Error::DimensionOverflow(_)
        | Error::EmptyWindow(..)
        | Error::UnknownColumn(_) => PyValueError::new_err(msg),
        Error::InvariantViolation { .. }
        | Error::NormUnderflow(_)
        | Error::StepSizeUnderflow { .. }
        | Error::NotNormalized(_)
        | Error::NonRealExpectation(_)
        | Error::BracketFailure { .. }
        | Error::UndefinedCorrelation(_) => PyArithmeticError::new_err(msg),
        Error::Io(_) => PyOSError::new_err(msg),
        Error::DimensionMismatch { .. } => PyRuntimeError::new_err(msg),
    }
}

fn series_dict<'py>(py: Python<'py>, s: &TimeSeries) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", s.grid().to_vec())?;
    for name in s.names() {
        d.set_item(name, s.column(name).map_err(to_py)?.to_vec())?;
    }
    Ok(d)
}

fn parse(config: &str) -> PyResult<RunConfig> {
    RunConfig::from_toml_str(config).map_err(to_py)
}

/// Smallest positive λ at which the N-photon coupling vanishes.
#[pyfunction]
#[pyo3(signature = (n, tol = 1e-12))]
fn lambda_n(n: usize, tol: f64) -> PyResult<f64> {
    nbundle_core::model::lambda_n(n, tol).map_err(to_py)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

/// Built-in preset as a TOML string.
#[pyfunction]
fn preset_toml(name: &str) -> PyResult<String> {
    Ok(preset(name).map_err(to_py)?.to_toml_string())
}

/// Master-equation populations on the config's output grid.
///
/// Returns a dict with `t`, the population columns and `invariants`.
#[pyfunction]
fn master(py: Python<'_>, config: &str) -> PyResult<Py<PyDict>> {
    let cfg = parse(config)?;
    let (pops, inv) = py
        .detach(|| -> nbundle_core::Result<(TimeSeries, InvariantSummary)> {
            let sys = cfg.system()?;
            let diss = cfg.dissipators()?;
            let settings = cfg.integrator()?;
            let cols = PopulationColumns::new(sys.trunc, sys.bundle_n);
            let rho0 = PureState::basis(&sys.trunc, Qubit::Ground, 0).to_density(cfg.solver.t_start);
            let mut pops = cols.series();
            let inv = evolve_master_with(&rho0, (cfg.solver.t_start, cfg.solver.t_end), &sys, &diss, &settings, |st| {
                pops.push(st.time(), &cols.evaluate(st)?)
            })?;
            Ok((pops, inv))
        })
        .map_err(to_py)?;
    let d = series_dict(py, &pops)?;
    let i = PyDict::new(py);
    i.set_item("max_trace_drift", inv.max_trace_drift)?;
    i.set_item("max_hermiticity", inv.max_hermiticity)?;
    i.set_item("min_eigenvalue", inv.min_eigenvalue)?;
    d.set_item("invariants", i)?;
    Ok(d.unbind())
}

/// Trajectory ensemble: mean, standard error and bundle statistics.
///
/// `n_traj` and `seed` default to the config's `[run]` values.
#[pyfunction]
#[pyo3(signature = (config, n_traj = None, seed = None))]
fn trajectories(py: Python<'_>, config: &str, n_traj: Option<usize>, seed: Option<u64>) -> PyResult<Py<PyDict>> {
    let cfg = parse(config)?;
    let n_traj = n_traj.unwrap_or(cfg.run.trajectories);
    let seed = seed.unwrap_or(cfg.run.seed);
    let (ens, stats) = py
        .detach(|| -> nbundle_core::Result<(EnsembleResult, BundleStatistics)> {
            let sys = cfg.system()?;
            let diss = cfg.dissipators()?;
            let settings = cfg.integrator()?;
            let cols = PopulationColumns::new(sys.trunc, sys.bundle_n);
            let psi0 = PureState::basis(&sys.trunc, Qubit::Ground, 0);
            let span = (cfg.solver.t_start, cfg.solver.t_end);
            let records = run_ensemble_records(&psi0, span, &sys, &diss, &settings, &cols, n_traj, seed)?;
            let ens = EnsembleResult::from_records(&records, diss.channels.len())?;
            let window = if sys.kappa > 0.0 { cfg.run.bundle_window / sys.kappa } else { f64::INFINITY };
            let stats = bundle_statistics(&records, &sys, &diss, window, span.1)?;
            Ok((ens, stats))
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n_traj", ens.n_traj)?;
    d.set_item("mean", series_dict(py, &ens.mean)?)?;
    d.set_item("std_err", series_dict(py, &ens.std_err)?)?;
    d.set_item("jump_counts", ens.jump_counts)?;
    d.set_item("bundle_fraction", stats.fraction())?;
    d.set_item("bundle_histogram", stats.histogram)?;
    d.set_item("qubit_jumps", stats.qubit_jumps)?;
    Ok(d.unbind())
}

#[pymodule]
pub fn nbundle(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(lambda_n, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_toml, m)?)?;
    m.add_function(wrap_pyfunction!(master, m)?)?;
    m.add_function(wrap_pyfunction!(trajectories, m)?)?;
    Ok(())
}
