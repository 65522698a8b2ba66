//! Python bindings: instance generation and I/O, relaxation solves,
//! features, labels, tree-ensemble models and whole experiments.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use relaxsel::config::Config;
use relaxsel::conic::{self, SolveStatus, SolverOptions};
use relaxsel::features::{self, Schema};
use relaxsel::generator::{self, GenConfig};
use relaxsel::instance::{load_instance, save_instance, validate_instance, QcqpInstance};
use relaxsel::labels;
use relaxsel::learn::{Algorithm, HyperParams, ModelKind, Table, Task, TreeEnsemble};
use relaxsel::pipeline::{self, ExperimentSpec};
use relaxsel::relax::{self, RelaxKind};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_schema(s: &str) -> PyResult<Schema> {
    s.parse().map_err(value_err)
}

fn parse_kind(s: &str) -> PyResult<RelaxKind> {
    match s {
        "LP" => Ok(RelaxKind::Lp),
        "SDP" => Ok(RelaxKind::Sdp),
        "SDP'" => Ok(RelaxKind::SdpPrime),
        _ => Err(value_err(format!("unknown relaxation {s:?} (LP, SDP or SDP')"))),
    }
}

fn parse_status(s: &str) -> PyResult<SolveStatus> {
    [SolveStatus::Optimal, SolveStatus::Unbounded, SolveStatus::Infeasible, SolveStatus::NumericalFailure, SolveStatus::IterationLimit]
        .into_iter()
        .find(|st| st.name() == s)
        .ok_or_else(|| value_err(format!("unknown status {s:?}")))
}

fn parse_task(s: &str) -> PyResult<Task> {
    match s {
        "classification" => Ok(Task::Classification),
        "regression" => Ok(Task::Regression),
        _ => Err(value_err(format!("unknown task {s:?} (classification or regression)"))),
    }
}

fn parse_algorithm(s: &str) -> PyResult<Algorithm> {
    match s {
        "RF" => Ok(Algorithm::RandomForest),
        "GB" => Ok(Algorithm::GradientBoosting),
        _ => Err(value_err(format!("unknown model {s:?} (RF or GB)"))),
    }
}

/// A QCQP instance.
#[pyclass(name = "Instance", module = "pyrelaxsel", frozen)]
struct PyInstance {
    inner: QcqpInstance,
}

#[pymethods]
impl PyInstance {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn instance_id(&self) -> String {
        self.inner.instance_id.clone()
    }

    #[getter]
    fn family_tags(&self) -> Vec<String> {
        self.inner.family_tags.clone()
    }

    #[getter]
    fn bounds_exist(&self) -> bool {
        self.inner.bounds_exist
    }

    #[getter]
    fn lower(&self) -> Vec<f64> {
        self.inner.lower.clone()
    }

    #[getter]
    fn upper(&self) -> Vec<f64> {
        self.inner.upper.clone()
    }

    /// `A₀..Aₘ` as nested lists.
    #[getter]
    fn a(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.a.iter().map(|m| m.to_rows()).collect()
    }

    #[getter]
    fn b(&self) -> Vec<Vec<f64>> {
        self.inner.b.clone()
    }

    #[getter]
    fn c(&self) -> Vec<f64> {
        self.inner.c.clone()
    }

    fn objective(&self, x: Vec<f64>) -> PyResult<f64> {
        self.check_len(&x)?;
        Ok(self.inner.objective(&x))
    }

    #[pyo3(signature = (x, tol = 1e-9))]
    fn is_feasible(&self, x: Vec<f64>, tol: f64) -> PyResult<bool> {
        self.check_len(&x)?;
        Ok(self.inner.is_feasible(&x, tol))
    }

    /// Violated invariants; empty when the instance is valid.
    fn validate(&self) -> Vec<String> {
        validate_instance(&self.inner).violations
    }

    /// `(names, values)` of one feature schema: "fDD", "sDD" or "DI".
    #[pyo3(signature = (schema = "DI"))]
    fn features(&self, schema: &str) -> PyResult<(Vec<String>, Vec<f64>)> {
        let fv = features::extract(&self.inner, parse_schema(schema)?).map_err(value_err)?;
        Ok((fv.names, fv.values))
    }

    fn to_json(&self) -> String {
        String::from_utf8(save_instance(&self.inner)).expect("instance JSON is UTF-8")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: load_instance(text.as_bytes()).map_err(value_err)? })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Instance(id={:?}, n={}, m={})", self.inner.instance_id, self.inner.n, self.inner.m)
    }
}

impl PyInstance {
    fn check_len(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.inner.n {
            return Err(value_err(format!("x has length {}, expected {}", x.len(), self.inner.n)));
        }
        Ok(())
    }
}

/// Outcome of one relaxation solve.
#[pyclass(name = "Solution", module = "pyrelaxsel", frozen, get_all)]
struct PySolution {
    status: String,
    /// `-inf` when unbounded, `+inf` when infeasible.
    objective: f64,
    iterations: usize,
    /// Relaxed `x`; empty unless Optimal.
    x: Vec<f64>,
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!("Solution(status={:?}, objective={}, iterations={})", self.status, self.objective, self.iterations)
    }
}

/// Instances `1..=count` of the batch `(n, m, count, seed)`.
#[pyfunction]
fn generate(py: Python<'_>, n: usize, m: usize, count: usize, seed: u64) -> PyResult<Vec<PyInstance>> {
    let cfg = GenConfig::new(n, m, count, seed);
    let batch = py.detach(|| generator::gen_instance_batch(&cfg)).map_err(value_err)?;
    Ok(batch.into_iter().map(|inner| PyInstance { inner }).collect())
}

/// Instance `iota` (1-based) of the batch alone; equal to `generate(...)[iota - 1]`.
#[pyfunction]
fn generate_one(n: usize, m: usize, count: usize, seed: u64, iota: usize) -> PyResult<PyInstance> {
    let cfg = GenConfig::new(n, m, count, seed);
    cfg.validate().map_err(value_err)?;
    if iota == 0 || iota > count {
        return Err(value_err(format!("iota must lie in 1..={count}")));
    }
    Ok(PyInstance { inner: generator::gen_instance(&cfg, iota).map_err(value_err)? })
}

/// Solves the "LP", "SDP" or "SDP'" relaxation of an instance.
#[pyfunction]
#[pyo3(signature = (instance, relaxation = "SDP", tol = None))]
fn solve(py: Python<'_>, instance: &PyInstance, relaxation: &str, tol: Option<f64>) -> PyResult<PySolution> {
    let kind = parse_kind(relaxation)?;
    let mut opts = SolverOptions::default();
    if let Some(t) = tol {
        opts.tol = t;
    }
    let prog = relax::build(&instance.inner, kind).map_err(value_err)?;
    let r = py.detach(|| conic::solve(&prog, &opts));
    Ok(PySolution { status: r.status.name().to_string(), objective: r.objective, iterations: r.iterations, x: r.x })
}

/// Feature names of a schema for dimensions `(n, m)`.
#[pyfunction]
fn feature_names(schema: &str, n: usize, m: usize) -> PyResult<Vec<String>> {
    Ok(features::feature_names(parse_schema(schema)?, n, m))
}

/// δ for two solve outcomes; raises when the pair cannot be labeled.
#[pyfunction]
fn delta(status1: &str, z1: f64, status2: &str, z2: f64) -> PyResult<f64> {
    labels::compute_delta(parse_status(status1)?, z1, parse_status(status2)?, z2)
        .map_err(|d| value_err(format!("pair ({}, {}) is dropped", d.first.name(), d.second.name())))
}

/// 1 when the first relaxation is preferred.
#[pyfunction]
#[pyo3(signature = (delta, slack = 0.0))]
fn label(delta: f64, slack: f64) -> u8 {
    labels::classify_label(delta, slack)
}

/// A fitted random forest or gradient-boosting model.
#[pyclass(name = "Model", module = "pyrelaxsel", frozen)]
struct PyModel {
    inner: TreeEnsemble,
}

#[pymethods]
impl PyModel {
    /// Fits on rows `x` with targets `y` (0/1 labels or δ values).
    /// `max_depth = None` grows trees without a depth limit.
    #[staticmethod]
    #[pyo3(signature = (x, y, task, model, n_trees = 100, max_depth = Some(4), learning_rate = 0.1, min_samples_leaf = 1, seed = 0, names = None))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        py: Python<'_>,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        task: &str,
        model: &str,
        n_trees: usize,
        max_depth: Option<usize>,
        learning_rate: f64,
        min_samples_leaf: usize,
        seed: u64,
        names: Option<Vec<String>>,
    ) -> PyResult<Self> {
        if x.len() != y.len() {
            return Err(value_err(format!("{} rows but {} targets", x.len(), y.len())));
        }
        let kind = ModelKind::new(parse_algorithm(model)?, parse_task(task)?);
        let width = x.first().map_or(0, Vec::len);
        let names = names.unwrap_or_else(|| (0..width).map(|k| format!("f{k}")).collect());
        let params = HyperParams { n_trees, max_depth, learning_rate, min_samples_leaf };
        let table = Table { names, x, y };
        let inner = py.detach(|| TreeEnsemble::fit(&table, kind, params, seed)).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Probabilities of label 1 (classifiers) or δ̂ (regressors).
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict_values(&x).map_err(value_err)
    }

    /// Hard 0/1 labels as a list of ints.
    fn predict_labels(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<u32>> {
        Ok(self.inner.predict_labels(&x).map_err(value_err)?.into_iter().map(u32::from).collect())
    }

    /// Short name such as "GBC" or "RFR".
    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.name()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    #[getter]
    fn importances(&self) -> Vec<f64> {
        self.inner.importances.clone()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: TreeEnsemble::from_json(text).map_err(value_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: TreeEnsemble::load(&path).map_err(value_err)? })
    }

    fn __repr__(&self) -> String {
        format!("Model(kind={:?}, trees={})", self.inner.kind.name(), self.inner.trees.len())
    }
}

/// Runs the experiment described by a TOML configuration into `out` and
/// returns the results file as JSON text.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_toml: &str, out: PathBuf) -> PyResult<String> {
    let cfg = Config::from_toml(config_toml).map_err(value_err)?;
    cfg.validate().map_err(value_err)?;
    let spec = ExperimentSpec::from_config(&cfg).map_err(value_err)?;
    let res = py.detach(|| pipeline::run_experiment(&spec, &cfg, &out, false)).map_err(value_err)?;
    std::fs::read_to_string(&res.results_path).map_err(value_err)
}

#[pymodule]
fn pyrelaxsel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_one, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(label, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
