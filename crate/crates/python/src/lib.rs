//! Python bindings for the Countdown domain, the trajectory language,
//! symbolic search, subgoal augmentation and the operation-level RL math.
//!
//! Structured results (verifications, dataset records, advantage records)
//! come back as plain dicts with the same shape as the JSONL files the
//! pipeline writes.

use std::collections::HashSet;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use gsos_core::augment::{self, GsosParams, NodeSelection, SelectionStrategy};
use gsos_core::budget::{Budget, BudgetSpec};
use gsos_core::countdown::{self, OpSpec};
use gsos_core::generator::SymbolicOracle;
use gsos_core::pipeline::{self, PipelineConfig};
use gsos_core::rl::{self, RewardSpec};
use gsos_core::search::{run_symbolic, Heuristic, SearchConfig};
use gsos_core::trajectory::{self, ParseMode, Trajectory};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn budget(spec: &str, limit: Option<usize>) -> PyResult<Budget> {
    let spec: BudgetSpec = spec.parse().map_err(err)?;
    if spec == BudgetSpec::ExternalTokenizer {
        return Err(PyValueError::new_err("external tokenizer budgets need the pipeline bridge"));
    }
    Ok(Budget { spec, limit })
}

fn heuristic(name: &str) -> PyResult<Heuristic> {
    name.parse().map_err(err)
}

/// A Countdown instance.
#[pyclass(name = "Problem", module = "gsos", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyProblem(countdown::Problem);

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (target, inputs, id = 0))]
    fn new(target: u64, inputs: Vec<u64>, id: u64) -> Self {
        PyProblem(countdown::Problem::new(id, target, inputs))
    }

    #[getter]
    fn id(&self) -> u64 {
        self.0.id
    }

    #[getter]
    fn target(&self) -> u64 {
        self.0.target
    }

    #[getter]
    fn inputs(&self) -> Vec<u64> {
        self.0.inputs.clone()
    }

    /// The first line of every trajectory for this problem.
    fn prompt(&self) -> String {
        trajectory::prompt_text(&self.0)
    }

    /// Up to `limit` distinct solutions.
    #[pyo3(signature = (limit = 16))]
    fn solve(&self, limit: usize) -> PyResult<Vec<PyPath>> {
        Ok(countdown::solve_all(&self.0, limit).map_err(err)?.into_iter().map(PyPath).collect())
    }

    fn __repr__(&self) -> String {
        format!("Problem(target={}, inputs={:?}, id={})", self.0.target, self.0.inputs, self.0.id)
    }
}

/// A solving operation sequence and the subgoal states along it.
#[pyclass(name = "OptimalPath", module = "gsos", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPath(countdown::OptimalPath);

#[pymethods]
impl PyPath {
    /// Replays operations such as `"56-15=41"` from the problem root.
    #[staticmethod]
    fn from_ops(problem: &PyProblem, ops: Vec<String>) -> PyResult<Self> {
        let ops = ops.iter().map(|s| s.parse::<OpSpec>().map_err(err)).collect::<PyResult<Vec<_>>>()?;
        Ok(PyPath(countdown::OptimalPath::from_ops(&problem.0, ops).map_err(err)?))
    }

    #[getter]
    fn ops(&self) -> Vec<String> {
        self.0.ops.iter().map(ToString::to_string).collect()
    }

    /// Remaining numbers at subgoals `0..N-1`; index 0 is the root.
    #[getter]
    fn subgoals(&self) -> Vec<Vec<u64>> {
        self.0.subgoal_states.iter().map(|s| s.remaining.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("OptimalPath({:?})", self.ops())
    }
}

/// Deduplicated problems with their generating paths, exactly as the
/// pipeline draws them for a given seed.
#[pyfunction]
#[pyo3(signature = (seed, count, side = "train"))]
fn generate_problems(seed: u64, count: usize, side: &str) -> PyResult<Vec<(PyProblem, PyPath)>> {
    let side = match side {
        "train" => countdown::Side::Train,
        "seen" => countdown::Side::TestSeen,
        "unseen" => countdown::Side::TestUnseen,
        other => return Err(PyValueError::new_err(format!("side must be train, seen or unseen, not {other}"))),
    };
    let cfg = PipelineConfig { seed, ..PipelineConfig::default() };
    let split = pipeline::make_split(&cfg);
    let set = pipeline::problem_set(&cfg, &split, side, count, &HashSet::new()).map_err(err)?;
    Ok(set.into_iter().map(|(p, path)| (PyProblem(p), PyPath(path))).collect())
}

/// Parses and re-renders a trajectory; raises on any malformed line.
#[pyfunction]
#[pyo3(signature = (text, problem, strict = true))]
fn normalize(text: &str, problem: &PyProblem, strict: bool) -> PyResult<String> {
    let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
    let t = trajectory::parse_trajectory(text, &problem.0, mode).map_err(err)?;
    Ok(trajectory::render(&t.events))
}

fn parse(text: &str, problem: &countdown::Problem) -> PyResult<Trajectory> {
    trajectory::parse_trajectory(text, problem, ParseMode::Lenient).map_err(err)
}

/// `{"correct", "diagnostic", "solution"}` for a trajectory.
#[pyfunction]
fn verify<'py>(py: Python<'py>, text: &str, problem: &PyProblem) -> PyResult<Bound<'py, PyAny>> {
    let t = parse(text, &problem.0)?;
    to_py(py, &trajectory::verify(&t, &problem.0))
}

#[pyfunction]
fn budget_used(text: &str, spec: &str) -> PyResult<usize> {
    gsos_core::budget::budget_used(text, spec.parse().map_err(err)?, None).map_err(err)
}

/// Symbolic search. `algorithm` is a label such as `dfs-sum` or
/// `bfs3-multiply`, or `stochastic` for the sampled searcher.
#[pyfunction]
#[pyo3(signature = (problem, algorithm = "dfs-sum", limit = None, spec = "chars", heuristic = "sum", temperature = 1.0, seed = 0))]
fn search(
    problem: &PyProblem,
    algorithm: &str,
    limit: Option<usize>,
    spec: &str,
    heuristic: &str,
    temperature: f64,
    seed: u64,
) -> PyResult<String> {
    let cfg = match algorithm {
        "stochastic" => SearchConfig::stochastic(self::heuristic(heuristic)?, temperature, seed),
        label => SearchConfig::from_label(label).map_err(err)?,
    };
    let t = run_symbolic(&problem.0, &cfg.with_budget(budget(spec, limit)?)).map_err(err)?;
    Ok(t.text)
}

/// The first `n` operations of the path written as a straight-line
/// trajectory.
#[pyfunction]
fn hint_prefix(problem: &PyProblem, path: &PyPath, n: usize) -> String {
    augment::make_hint_prefix(&problem.0, &path.0, n).text
}

#[pyfunction]
fn explored_subgoal(text: &str, problem: &PyProblem, path: &PyPath, n: usize) -> PyResult<bool> {
    Ok(augment::explored_subgoal(&parse(text, &problem.0)?, &path.0, n))
}

fn selection(name: &str, seed: u64) -> PyResult<NodeSelection> {
    Ok(NodeSelection::new(name.parse::<SelectionStrategy>().map_err(err)?, seed))
}

/// Rewrites a trajectory so it explores subgoal `n`, then regenerates
/// with the symbolic oracle. Returns `(text, provenance)`.
#[pyfunction]
#[pyo3(signature = (problem, text, path, n, selection = "first", limit = None, spec = "chars", temperature = 0.8, heuristic = "sum", seed = 0))]
#[allow(clippy::too_many_arguments)]
fn augment_subgoal<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    text: &str,
    path: &PyPath,
    n: usize,
    selection: &str,
    limit: Option<usize>,
    spec: &str,
    temperature: f64,
    heuristic: &str,
    seed: u64,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let gen = SymbolicOracle::new(self::heuristic(heuristic)?, temperature);
    let t = parse(text, &problem.0)?;
    let sel = self::selection(selection, seed)?;
    let (out, record) =
        augment::augment_subgoal(&gen, &problem.0, &t, &path.0, n, &sel, budget(spec, limit)?, seed).map_err(err)?;
    Ok((out.text, to_py(py, &record)?))
}

/// One generate-augment-filter pass with the symbolic oracle; returns the
/// dataset record as a dict.
#[pyfunction]
#[pyo3(signature = (problem, path, selection = "first", limit = None, spec = "chars", temperature = 0.8, heuristic = "sum", seed = 0, tau = 0.5, augment = true))]
#[allow(clippy::too_many_arguments)]
fn gsos_generate<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    path: &PyPath,
    selection: &str,
    limit: Option<usize>,
    spec: &str,
    temperature: f64,
    heuristic: &str,
    seed: u64,
    tau: f64,
    augment: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let gen = SymbolicOracle::new(self::heuristic(heuristic)?, temperature);
    let params = GsosParams {
        tau,
        selection: self::selection(selection, seed)?,
        budget: budget(spec, limit)?,
        seed,
        iteration: 0,
        augment,
    };
    let record = augment::gsos_generate(&gen, &problem.0, &path.0, &params, None).map_err(err)?;
    to_py(py, &record)
}

/// Generalised advantage estimates; returns `(advantages, returns)`.
#[pyfunction]
#[pyo3(signature = (rewards, values, gamma = 1.0, lam = 0.95))]
fn compute_gae(rewards: Vec<f64>, values: Vec<f64>, gamma: f64, lam: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = rl::compute_gae(&rewards, &values, gamma, lam).map_err(err)?;
    Ok((s.advantages, s.returns))
}

/// Operation segments of the generated part of `text` as dicts.
#[pyfunction]
#[pyo3(signature = (text, problem, spec = "chars"))]
fn segment_operations<'py>(
    py: Python<'py>,
    text: &str,
    problem: &PyProblem,
    spec: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let prompt = trajectory::prompt_text(&problem.0);
    let segs = rl::segment_operations(text, &prompt, spec.parse().map_err(err)?, None).map_err(err)?;
    to_py(py, &segs)
}

/// Per-operation rewards, values, advantages and returns, in the same
/// shape as one line of the advantage JSONL.
#[pyfunction]
#[pyo3(signature = (problem, text, path = None, values = None, limit = None, spec = "chars"))]
fn advantage_record<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    text: &str,
    path: Option<&PyPath>,
    values: Option<Vec<f64>>,
    limit: Option<usize>,
    spec: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let t = parse(text, &problem.0)?;
    let rec = rl::advantage_record(
        &problem.0,
        &t,
        path.map(|p| &p.0),
        values.as_deref(),
        &RewardSpec::default(),
        budget(spec, limit)?,
        None,
    )
    .map_err(err)?;
    to_py(py, &rec)
}

#[pymodule]
fn gsos(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyPath>()?;
    m.add_function(wrap_pyfunction!(generate_problems, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(budget_used, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(hint_prefix, m)?)?;
    m.add_function(wrap_pyfunction!(explored_subgoal, m)?)?;
    m.add_function(wrap_pyfunction!(augment_subgoal, m)?)?;
    m.add_function(wrap_pyfunction!(gsos_generate, m)?)?;
    m.add_function(wrap_pyfunction!(compute_gae, m)?)?;
    m.add_function(wrap_pyfunction!(segment_operations, m)?)?;
    m.add_function(wrap_pyfunction!(advantage_record, m)?)?;
    Ok(())
}
