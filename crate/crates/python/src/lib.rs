//! Python bindings for `optexp`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use optexp::games::{self, DenseGame, MixedStrategy};
use optexp::harness::{self, ExperimentSpec, TrialRecord};
use optexp::instances::{self, InstanceSpec};
use optexp::{Error, SparseDist};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn record<'py>(py: Python<'py>, r: &TrialRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("trial", r.trial)?;
    d.set_item("seed", r.seed)?;
    d.set_item("metric", &r.metric)?;
    d.set_item("checkpoints", r.checkpoints.clone())?;
    d.set_item("value_calls", r.oracle.value_calls)?;
    d.set_item("opt_calls", r.oracle.opt_calls)?;
    d.set_item("br_calls", r.br_calls)?;
    d.set_item("work", r.work)?;
    Ok(d)
}

fn dense(payoffs: Vec<Vec<f64>>) -> PyResult<DenseGame> {
    let n = payoffs.len();
    if payoffs.iter().any(|row| row.len() != n) {
        return Err(PyValueError::new_err("payoff matrix must be square"));
    }
    DenseGame::new(n, payoffs.concat()).map_err(py_err)
}

fn strategy(probs: &[f64]) -> PyResult<MixedStrategy> {
    SparseDist::from_dense(probs).map_err(py_err)
}

/// Runs an experts learner against the canonical adversary of `instance`.
#[pyfunction]
#[pyo3(signature = (alg, instance, t, trials = 1, seed = 0))]
fn run_experts<'py>(
    py: Python<'py>,
    alg: &str,
    instance: &str,
    t: usize,
    trials: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let instance: InstanceSpec = instance.parse().map_err(py_err)?;
    let spec = ExperimentSpec::experts(alg, instance, t, trials, seed);
    let records = py.detach(|| harness::run_experts(&spec)).map_err(py_err)?;
    records.iter().map(|r| record(py, r)).collect()
}

/// Solves random `n x n` games, or the game of an aldous `instance`.
#[pyfunction]
#[pyo3(signature = (alg, n, t, trials = 1, seed = 0, instance = None))]
fn run_game<'py>(
    py: Python<'py>,
    alg: &str,
    n: usize,
    t: usize,
    trials: usize,
    seed: u64,
    instance: Option<&str>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut spec = ExperimentSpec::game(alg, n, t, trials, seed);
    spec.instance = instance.map(str::parse).transpose().map_err(py_err)?;
    let records = py.detach(|| harness::run_game(&spec)).map_err(py_err)?;
    records.iter().map(|r| record(py, r)).collect()
}

/// Solves a dense game given as rows of payoffs in `[0, 1]`.
#[pyfunction]
#[pyo3(signature = (payoffs, t, seed = 0, alg = "main"))]
fn solve_game<'py>(
    py: Python<'py>,
    payoffs: Vec<Vec<f64>>,
    t: usize,
    seed: u64,
    alg: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let game = dense(payoffs)?;
    let n = game.payoffs().len().isqrt();
    let report = py
        .detach(|| match alg {
            "main" => games::solve_game(&game, t, seed),
            "fp" => games::fictitious_play(&game, t, seed),
            other => Err(Error::Spec(format!("unknown game algorithm {other:?}"))),
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("p", report.p.to_dense(n))?;
    d.set_item("q", report.q.to_dense(n))?;
    d.set_item("value", report.value)?;
    d.set_item("duality_gap", report.duality_gap)?;
    d.set_item("rounds", report.rounds)?;
    d.set_item("checkpoints", report.checkpoints)?;
    Ok(d)
}

/// `(passed, duality_gap)` of the profile `(p, q)` at tolerance `eps`.
#[pyfunction]
fn verify_equilibrium(
    payoffs: Vec<Vec<f64>>,
    p: Vec<f64>,
    q: Vec<f64>,
    eps: f64,
) -> PyResult<(bool, f64)> {
    let game = dense(payoffs)?;
    let (ok, report) = games::verify_equilibrium(&game, &strategy(&p)?, &strategy(&q)?, eps);
    Ok((ok, report.duality_gap))
}

#[pyfunction]
fn horizon_for(n: usize, eps: f64, delta: f64) -> PyResult<u64> {
    games::horizon_for(n, eps, delta).map_err(py_err)
}

/// Canonical text form of an instance spec.
#[pyfunction]
fn normalize_instance(text: &str) -> PyResult<String> {
    text.parse::<InstanceSpec>()
        .map(|s| s.to_string())
        .map_err(py_err)
}

#[pyfunction]
fn extend_multilinear(values: Vec<f64>, x: Vec<f64>) -> PyResult<f64> {
    instances::extend_multilinear(&values, &x).map_err(py_err)
}

#[pymodule]
fn pyoptexp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(run_experts, m)?)?;
    m.add_function(wrap_pyfunction!(run_game, m)?)?;
    m.add_function(wrap_pyfunction!(solve_game, m)?)?;
    m.add_function(wrap_pyfunction!(verify_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(horizon_for, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_instance, m)?)?;
    m.add_function(wrap_pyfunction!(extend_multilinear, m)?)?;
    Ok(())
}
