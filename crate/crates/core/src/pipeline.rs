//! End-to-end experiment runner: generate batches, solve the three
//! relaxations, featurize, label, tune and fit models, evaluate, and write
//! datasets, models and results.
//!
//! Every output is a pure function of the configuration. Batches are
//! processed instance-parallel and collected in instance order, and solve
//! records are cached under the content hash of their inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Config, ConfigError, SetSpec};
use crate::conic::{self, SolverOptions};
use crate::dataset::{self, Comparison, Dataset, DatasetError, DropRecord, Outcome, SolveRecord};
use crate::features::{self, FeatureVector, MatrixSummary, Schema};
use crate::generator::{self, GenConfig};
use crate::instance::QcqpInstance;
use crate::labels::{metrics_classification, metrics_regression};
use crate::learn::grid::{grid_search, validation_score, GridReport, GridRow, ParamGrid};
use crate::learn::{Algorithm, LearnError, ModelKind, Table, Task, TreeEnsemble};
use crate::relax::{self, RelaxKind};
use crate::report::{Cell, ExperimentResults, RESULTS_SCHEMA_VERSION};
use crate::rng::RngStream;

/// Bumped whenever solver changes would alter cached solve records.
const SOLVE_CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage} failed on {instance}: {message}")]
    Stage { stage: &'static str, instance: String, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("unknown experiment id {0:?}; presets are 1 to 11, or give experiment.train and experiment.test")]
    UnknownExperiment(String),
}

fn stage(stage: &'static str, instance: impl Into<String>, message: impl ToString) -> PipelineError {
    PipelineError::Stage { stage, instance: instance.into(), message: message.to_string() }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Test,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
        }
    }
}

/// Training and test batches of the eleven reference experiments.
pub fn preset_sets(id: &str) -> Option<(Vec<SetSpec>, Vec<SetSpec>)> {
    let s = SetSpec::new;
    let k = 1000;
    let sets = match id.trim() {
        "1" => (vec![s(5, 1, 40 * k)], vec![s(5, 1, 10 * k)]),
        "2" => (vec![s(5, 2, 40 * k)], vec![s(5, 2, 10 * k)]),
        "3" => (vec![s(5, 100, 400)], vec![s(5, 100, 100)]),
        "4" => (vec![s(10, 1, 40 * k)], vec![s(10, 1, 10 * k)]),
        "5" => (vec![s(10, 2, 40 * k)], vec![s(10, 2, 10 * k)]),
        "6" => (vec![s(5, 2, 40 * k)], vec![s(5, 10, 10 * k)]),
        "7" => (vec![s(5, 2, 40 * k), s(10, 2, 40 * k)], vec![s(5, 2, 10 * k), s(10, 2, 10 * k)]),
        "8" => (vec![s(5, 2, 50 * k), s(10, 2, 50 * k)], vec![s(20, 2, 10 * k)]),
        "9" => (vec![s(10, 2, 50 * k)], vec![s(5, 10, 10 * k)]),
        "10" => (vec![s(5, 10, 10 * k)], vec![s(10, 2, 50 * k)]),
        "11" => (vec![s(10, 2, 50 * k)], vec![s(5, 100, 500)]),
        _ => return None,
    };
    Some(sets)
}

/// Whether a schema can describe every batch with one feature layout:
/// fDD needs a common `(n, m)`, sDD a common `m`, DI nothing.
pub fn applicable(schema: Schema, sets: &[SetSpec]) -> bool {
    let Some(first) = sets.first() else { return true };
    match schema {
        Schema::Fdd => sets.iter().all(|s| s.n == first.n && s.m == first.m),
        Schema::Sdd => sets.iter().all(|s| s.m == first.m),
        Schema::Di => true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub train: Vec<SetSpec>,
    pub test: Vec<SetSpec>,
    pub schemas: Vec<Schema>,
    pub comparison: Comparison,
    pub tasks: Vec<Task>,
    pub models: Vec<Algorithm>,
    /// Master seed of instance generation.
    pub seed: u64,
    /// Seed of model training and the validation split.
    pub learn_seed: u64,
}

impl ExperimentSpec {
    /// Batches from `experiment.train`/`experiment.test`, or from the preset
    /// named by `experiment.id` scaled by `generator.scale`.
    pub fn from_config(cfg: &Config) -> Result<Self, PipelineError> {
        let e = &cfg.experiment;
        let (train, test) = if e.train.is_empty() {
            let (tr, te) = preset_sets(&e.id).ok_or_else(|| PipelineError::UnknownExperiment(e.id.clone()))?;
            let scale = cfg.generator.scale;
            (tr.into_iter().map(|s| s.scaled(scale)).collect(), te.into_iter().map(|s| s.scaled(scale)).collect())
        } else {
            (e.train.clone(), e.test.clone())
        };
        Ok(Self {
            id: e.id.clone(),
            train,
            test,
            schemas: cfg.features.schemas.clone(),
            comparison: e.comparison,
            tasks: e.tasks.clone(),
            models: cfg.learn.models.clone(),
            seed: cfg.generator.seed,
            learn_seed: cfg.learn.seed,
        })
    }

    pub fn all_sets(&self) -> Vec<SetSpec> {
        self.train.iter().chain(&self.test).copied().collect()
    }

    pub fn applicable(&self, schema: Schema) -> bool {
        applicable(schema, &self.all_sets())
    }
}

/// Generation config of one batch. The seed depends on the master seed,
/// the role and `(n, m, N)` only, so the same batch is shared (and cached)
/// across experiments.
pub fn batch_config(master_seed: u64, role: Role, set: SetSpec) -> GenConfig {
    let family = RngStream::new(master_seed).child(match role {
        Role::Train => 1,
        Role::Test => 2,
    });
    let key = ((set.n as u64) << 42) ^ ((set.m as u64) << 24) ^ set.count as u64;
    GenConfig::new(set.n, set.m, set.count, family.sub_seed(key))
}

fn outcome(inst: &QcqpInstance, kind: RelaxKind, opts: &SolverOptions) -> Result<Outcome, PipelineError> {
    let prog = relax::build(inst, kind).map_err(|e| stage("solve", &inst.instance_id, e))?;
    let r = conic::solve(&prog, opts);
    Ok(Outcome { status: r.status, objective: r.objective, iterations: r.iterations })
}

/// Solves the LP, SDP and SDP′ relaxations of one instance.
pub fn solve_instance(inst: &QcqpInstance, iota: usize, opts: &SolverOptions) -> Result<SolveRecord, PipelineError> {
    Ok(SolveRecord {
        instance_id: inst.instance_id.clone(),
        iota,
        lp: outcome(inst, RelaxKind::Lp, opts)?,
        sdp: outcome(inst, RelaxKind::Sdp, opts)?,
        sdp_prime: outcome(inst, RelaxKind::SdpPrime, opts)?,
    })
}

/// Solves a list of instances in parallel; `iota` is the 1-based position.
pub fn solve_all(instances: &[QcqpInstance], opts: &SolverOptions) -> Result<Vec<SolveRecord>, PipelineError> {
    instances.par_iter().enumerate().map(|(i, inst)| solve_instance(inst, i + 1, opts)).collect()
}

/// Eigen-summaries of every instance, computed once and shared by schemas.
pub fn summarize_all(instances: &[QcqpInstance]) -> Result<Vec<Vec<MatrixSummary>>, PipelineError> {
    instances
        .par_iter()
        .map(|inst| features::summarize_instance(inst).map_err(|e| stage("featurize", &inst.instance_id, e)))
        .collect()
}

pub fn featurize_all(instances: &[QcqpInstance], summaries: &[Vec<MatrixSummary>], schema: Schema) -> Vec<FeatureVector> {
    instances.iter().zip(summaries).map(|(inst, s)| features::extract_from(inst, s, schema)).collect()
}

pub fn generate_all(cfg: &GenConfig) -> Result<Vec<QcqpInstance>, PipelineError> {
    cfg.validate().map_err(|e| stage("generate", format!("batch n={} m={} N={}", cfg.n, cfg.m, cfg.count), e))?;
    (1..=cfg.count)
        .into_par_iter()
        .map(|iota| {
            generator::gen_instance(cfg, iota)
                .map_err(|e| stage("generate", format!("instance {iota} of batch seed {}", cfg.seed), e))
        })
        .collect()
}

#[derive(Serialize)]
struct CacheKey<'a> {
    version: u32,
    crate_version: &'static str,
    batch: &'a GenConfig,
    tol: f64,
    max_iterations: Option<usize>,
    step_fraction: f64,
}

/// File name of the cached solve records of a batch.
pub fn solve_cache_name(cfg: &GenConfig, opts: &SolverOptions) -> String {
    let key = CacheKey {
        version: SOLVE_CACHE_VERSION,
        crate_version: env!("CARGO_PKG_VERSION"),
        batch: cfg,
        tol: opts.tol,
        max_iterations: opts.max_iterations,
        step_fraction: opts.step_fraction,
    };
    let bytes = serde_json::to_vec(&key).expect("cache key serializes");
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().take(12).map(|b| format!("{b:02x}")).collect();
    format!("solve-n{}-m{}-N{}-{hex}.jsonl", cfg.n, cfg.m, cfg.count)
}

/// One generated, solved and summarized batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub role: Role,
    pub set: SetSpec,
    pub config: GenConfig,
    pub instances: Vec<QcqpInstance>,
    pub summaries: Vec<Vec<MatrixSummary>>,
    pub records: Vec<SolveRecord>,
}

pub fn process_batch(
    role: Role,
    set: SetSpec,
    master_seed: u64,
    opts: &SolverOptions,
    cache_dir: Option<&Path>,
) -> Result<Batch, PipelineError> {
    let config = batch_config(master_seed, role, set);
    let instances = generate_all(&config)?;
    let summaries = summarize_all(&instances)?;
    let cache_file = cache_dir.map(|d| d.join(solve_cache_name(&config, opts)));
    let cached = match &cache_file {
        Some(p) if p.exists() => {
            let recs: Vec<SolveRecord> = dataset::read_ndjson(p)?;
            let matches = recs.len() == instances.len()
                && recs.iter().zip(&instances).all(|(r, i)| r.instance_id == i.instance_id);
            matches.then_some(recs)
        }
        _ => None,
    };
    let records = match cached {
        Some(r) => r,
        None => {
            let r = solve_all(&instances, opts)?;
            if let Some(p) = &cache_file {
                let tmp = p.with_extension("partial");
                dataset::write_ndjson(&tmp, &r)?;
                fs::rename(&tmp, p).map_err(io(p))?;
            }
            r
        }
    };
    Ok(Batch { role, set, config, instances, summaries, records })
}

/// Labeled dataset of one role under one schema, concatenating batches in
/// order, together with the dropped instances.
pub fn build_dataset(
    batches: &[&Batch],
    schema: Schema,
    comparison: Comparison,
    label_slack: f64,
) -> Result<(Dataset, Vec<DropRecord>), PipelineError> {
    let mut samples = Vec::new();
    let mut drops = Vec::new();
    let mut names: Option<Vec<String>> = None;
    for b in batches {
        let fv = featurize_all(&b.instances, &b.summaries, schema);
        let batch_names = features::feature_names(schema, b.set.n, b.set.m);
        match &names {
            None => names = Some(batch_names),
            Some(prev) if *prev != batch_names => {
                return Err(stage("featurize", format!("batch {}", b.set), format!("{schema} feature layout differs between batches")))
            }
            Some(_) => {}
        }
        let lab = dataset::label_records(&b.records, &fv, comparison, label_slack)?;
        samples.extend(lab.samples);
        drops.extend(lab.drops);
    }
    let sources = batches.iter().map(|b| b.config.clone()).collect();
    let ds = Dataset::new(schema, comparison, label_slack, names.unwrap_or_default(), sources, samples)?;
    Ok((ds, drops))
}

/// Deterministic split of `table` into (fit, validation) parts.
pub fn split_validation(table: &Table, fraction: f64, seed: u64) -> (Table, Table) {
    let mut idx: Vec<usize> = (0..table.len()).collect();
    idx.shuffle(&mut RngStream::new(seed).child(0x5A11).stream(0));
    let k = (table.len() as f64 * fraction).round() as usize;
    let pick = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        Table {
            names: table.names.clone(),
            x: ids.iter().map(|&i| table.x[i].clone()).collect(),
            y: ids.iter().map(|&i| table.y[i]).collect(),
        }
    };
    (pick(&idx[k..]), pick(&idx[..k]))
}

/// Grid search on a held-out share of `train`, then a refit of the best
/// point on all of `train`. With a zero fraction, or a one-point grid, the
/// points are scored on the training set itself.
pub fn tune_and_fit(
    train: &Table,
    kind: ModelKind,
    grid: &ParamGrid,
    validation_fraction: f64,
    seed: u64,
) -> Result<(TreeEnsemble, GridReport), LearnError> {
    let points = grid.points(kind);
    if points.len() == 1 {
        let model = TreeEnsemble::fit(train, kind, points[0], seed)?;
        let score = validation_score(&model, train)?;
        let report = GridReport { best: points[0], best_score: score, rows: vec![GridRow { params: points[0], score }] };
        return Ok((model, report));
    }
    let report = if validation_fraction > 0.0 {
        let (fit, valid) = split_validation(train, validation_fraction, seed);
        grid_search(&fit, &valid, kind, grid, seed)?
    } else {
        grid_search(train, train, kind, grid, seed)?
    };
    let model = TreeEnsemble::fit(train, kind, report.best, seed)?;
    Ok((model, report))
}

/// Test-set metrics of a model, keyed by name.
pub fn evaluate(model: &TreeEnsemble, test: &Table, r_eps: f64) -> Result<BTreeMap<String, f64>, PipelineError> {
    let err = |e: &dyn std::fmt::Display| stage("evaluate", model.kind.name(), e);
    let mut m = BTreeMap::new();
    match model.kind.task {
        Task::Classification => {
            let pred = model.predict_labels(&test.x).map_err(|e| err(&e))?;
            let y: Vec<u8> = test.y.iter().map(|&v| u8::from(v > 0.5)).collect();
            let c = metrics_classification(&y, &pred).map_err(|e| err(&e))?;
            m.insert("accuracy".into(), c.accuracy);
            m.insert("precision".into(), c.precision);
            m.insert("recall".into(), c.recall);
            m.insert("f1".into(), c.f1);
        }
        Task::Regression => {
            let pred = model.predict_values(&test.x).map_err(|e| err(&e))?;
            let r = metrics_regression(&test.y, &pred, r_eps).map_err(|e| err(&e))?;
            m.insert("r_accuracy".into(), r.r_accuracy);
            m.insert("mae".into(), r.mae);
            m.insert("mse".into(), r.mse);
            m.insert("rmse".into(), r.rmse);
            m.insert("r2".into(), r.r2);
        }
    }
    Ok(m)
}

/// Per-batch counts; `generated == labeled + dropped` always holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub role: Role,
    pub set: SetSpec,
    pub seed: u64,
    pub generated: usize,
    pub labeled: usize,
    pub dropped: usize,
    /// Status counts per relaxation.
    pub statuses: BTreeMap<String, BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDetail {
    pub schema: Schema,
    pub model: Algorithm,
    pub task: Task,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: BTreeMap<String, f64>,
    pub grid: GridReport,
    pub model_file: String,
}

/// Companion of the results file with everything behind each cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDetails {
    pub schema_version: u32,
    pub experiment_id: String,
    pub spec: ExperimentSpec,
    pub config: Config,
    pub batches: Vec<BatchSummary>,
    pub cells: Vec<CellDetail>,
}

pub struct ExperimentOutput {
    pub results: ExperimentResults,
    pub details: ExperimentDetails,
    pub results_path: PathBuf,
}

fn summarize_batch(b: &Batch, comparison: Comparison) -> BatchSummary {
    let mut statuses: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for kind in [RelaxKind::Lp, RelaxKind::Sdp, RelaxKind::SdpPrime] {
        let e = statuses.entry(kind.name().to_string()).or_default();
        for r in &b.records {
            *e.entry(r.outcome(kind).status.name().to_string()).or_default() += 1;
        }
    }
    let labeled = b
        .records
        .iter()
        .filter(|r| {
            let s = r.outcome(comparison.second());
            crate::labels::compute_delta(r.lp.status, r.lp.objective, s.status, s.objective).is_ok()
        })
        .count();
    BatchSummary {
        role: b.role,
        set: b.set,
        seed: b.config.seed,
        generated: b.instances.len(),
        labeled,
        dropped: b.records.len() - labeled,
        statuses,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("results serialize");
    fs::write(path, text + "\n").map_err(io(path))
}

#[derive(Serialize)]
struct RoleDrop<'a> {
    role: Role,
    #[serde(flatten)]
    drop: &'a DropRecord,
}

/// Runs one experiment and writes, under `out`:
/// `datasets/{train,test}-<schema>.jsonl` (+ headers), `drops.jsonl`,
/// `models/<schema>-<model>.json`, `results.json` and `details.json`.
/// Solve records are cached in `out/cache`.
pub fn run_experiment(spec: &ExperimentSpec, cfg: &Config, out: &Path, log: bool) -> Result<ExperimentOutput, PipelineError> {
    let say = |msg: String| {
        if log {
            eprintln!("[{}] {msg}", spec.id);
        }
    };
    for d in ["datasets", "models", "cache"] {
        let p = out.join(d);
        fs::create_dir_all(&p).map_err(io(&p))?;
    }
    let cache = out.join("cache");
    let mut batches = Vec::new();
    for (role, sets) in [(Role::Train, &spec.train), (Role::Test, &spec.test)] {
        for &set in sets.iter() {
            say(format!("{} batch {set}: generating and solving", role.name()));
            let b = process_batch(role, set, spec.seed, &cfg.solver, Some(&cache))?;
            batches.push(b);
        }
    }
    let summaries: Vec<BatchSummary> = batches.iter().map(|b| summarize_batch(b, spec.comparison)).collect();
    for s in &summaries {
        say(format!("{} batch {}: {} generated, {} labeled, {} dropped", s.role.name(), s.set, s.generated, s.labeled, s.dropped));
    }
    let train: Vec<&Batch> = batches.iter().filter(|b| b.role == Role::Train).collect();
    let test: Vec<&Batch> = batches.iter().filter(|b| b.role == Role::Test).collect();

    let grid = cfg.learn.grid.to_grid();
    let mut cells = Vec::new();
    let mut details = Vec::new();
    let mut drops_written = false;
    for &schema in &spec.schemas {
        if !spec.applicable(schema) {
            for &task in &spec.tasks {
                for &model in &spec.models {
                    cells.push(Cell::na(schema, model, task));
                }
            }
            continue;
        }
        let (train_ds, train_drops) = build_dataset(&train, schema, spec.comparison, cfg.experiment.label_slack)?;
        let (test_ds, test_drops) = build_dataset(&test, schema, spec.comparison, cfg.experiment.label_slack)?;
        train_ds.save(&out.join(format!("datasets/train-{schema}.jsonl")))?;
        test_ds.save(&out.join(format!("datasets/test-{schema}.jsonl")))?;
        if !drops_written {
            let rows: Vec<RoleDrop> = train_drops
                .iter()
                .map(|d| RoleDrop { role: Role::Train, drop: d })
                .chain(test_drops.iter().map(|d| RoleDrop { role: Role::Test, drop: d }))
                .collect();
            dataset::write_ndjson(&out.join("drops.jsonl"), &rows)?;
            drops_written = true;
        }
        for &task in &spec.tasks {
            let train_t = train_ds.to_table(task);
            let test_t = test_ds.to_table(task);
            for &algo in &spec.models {
                let kind = ModelKind::new(algo, task);
                say(format!("{schema} {}: tuning on {} samples", kind.name(), train_t.len()));
                let (model, report) =
                    tune_and_fit(&train_t, kind, &grid, cfg.learn.validation_fraction, spec.learn_seed)
                        .map_err(|e| stage("train", format!("{schema} {}", kind.name()), e))?;
                let model_file = format!("models/{schema}-{}.json", kind.name());
                model.save(&out.join(&model_file)).map_err(|e| stage("train", &model_file, e))?;
                let metrics = evaluate(&model, &test_t, cfg.experiment.r_accuracy_eps)?;
                say(format!("{schema} {}: {}", kind.name(), crate::report::format_metrics(&metrics)));
                cells.push(Cell { schema, model: algo, task, metrics: metrics.clone(), na: false });
                details.push(CellDetail {
                    schema,
                    model: algo,
                    task,
                    train_size: train_t.len(),
                    test_size: test_t.len(),
                    metrics,
                    grid: report,
                    model_file,
                });
            }
        }
    }
    if !drops_written {
        dataset::write_ndjson::<DropRecord>(&out.join("drops.jsonl"), &[])?;
    }
    let results = ExperimentResults {
        schema_version: RESULTS_SCHEMA_VERSION,
        experiment_id: spec.id.clone(),
        comparison: spec.comparison,
        train: spec.train.clone(),
        test: spec.test.clone(),
        cells,
    };
    let details = ExperimentDetails {
        schema_version: RESULTS_SCHEMA_VERSION,
        experiment_id: spec.id.clone(),
        spec: spec.clone(),
        config: cfg.clone(),
        batches: summaries,
        cells: details,
    };
    let results_path = out.join("results.json");
    write_json(&results_path, &results)?;
    write_json(&out.join("details.json"), &details)?;
    Ok(ExperimentOutput { results, details, results_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_cover_eleven_ids() {
        for id in 1..=11 {
            assert!(preset_sets(&id.to_string()).is_some(), "preset {id}");
        }
        assert!(preset_sets("12").is_none());
    }

    #[test]
    fn applicability_matches_reference_na_pattern() {
        // Rows with NA under fDD and sDD, NA under fDD only, and no NA.
        let na = |id: &str| {
            let (tr, te) = preset_sets(id).unwrap();
            let sets: Vec<SetSpec> = tr.into_iter().chain(te).collect();
            Schema::ALL.map(|s| !applicable(s, &sets))
        };
        for id in ["1", "2", "3", "4", "5"] {
            assert_eq!(na(id), [false, false, false], "ID {id}");
        }
        for id in ["6", "9", "10", "11"] {
            assert_eq!(na(id), [true, true, false], "ID {id}");
        }
        for id in ["7", "8"] {
            assert_eq!(na(id), [true, false, false], "ID {id}");
        }
    }

    #[test]
    fn batch_seeds_depend_on_role_and_set() {
        let s = SetSpec::new(5, 2, 100);
        let a = batch_config(1, Role::Train, s);
        assert_eq!(a, batch_config(1, Role::Train, s));
        assert_ne!(a.seed, batch_config(1, Role::Test, s).seed);
        assert_ne!(a.seed, batch_config(2, Role::Train, s).seed);
        assert_ne!(a.seed, batch_config(1, Role::Train, SetSpec::new(5, 2, 101)).seed);
    }

    #[test]
    fn validation_split_is_a_partition() {
        let t = Table { names: vec!["a".into()], x: (0..10).map(|i| vec![i as f64]).collect(), y: (0..10).map(f64::from).collect() };
        let (fit, valid) = split_validation(&t, 0.3, 5);
        assert_eq!((fit.len(), valid.len()), (7, 3));
        let mut all: Vec<f64> = fit.y.iter().chain(&valid.y).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, t.y);
        assert_eq!(split_validation(&t, 0.3, 5), (fit, valid));
    }

    #[test]
    fn cache_name_tracks_inputs() {
        let g = GenConfig::new(5, 1, 10, 3);
        let o = SolverOptions::default();
        assert_eq!(solve_cache_name(&g, &o), solve_cache_name(&g, &o));
        assert_ne!(solve_cache_name(&g, &o), solve_cache_name(&g, &SolverOptions::with_tol(1e-6)));
        let mut verbose = o.clone();
        verbose.verbose = true;
        assert_eq!(solve_cache_name(&g, &o), solve_cache_name(&g, &verbose));
    }
}
