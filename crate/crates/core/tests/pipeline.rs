//! End-to-end runs of the library pipeline and of the `relaxsel` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use relaxsel::config::{Config, SetSpec};
use relaxsel::conic::SolveStatus;
use relaxsel::dataset::{self, Comparison, Dataset, Outcome, SolveRecord};
use relaxsel::features::{self, Schema};
use relaxsel::pipeline::{self, ExperimentSpec};
use relaxsel::report::ExperimentResults;

const SMALL_CONFIG: &str = r#"
[generator]
seed = 99

[features]
schemas = ["sDD", "DI"]

[learn]
models = ["RF", "GB"]

[learn.grid]
n_trees = [10]
max_depth = [3]
learning_rate = [0.1]
min_samples_leaf = [1]

[experiment]
id = "small"
train = [[5, 1, 40]]
test = [[5, 1, 16]]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relaxsel"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn relaxsel");
    assert!(out.status.success(), "{:?} failed:\n{}", cmd, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).map(|s| s.lines().count()).unwrap_or(0)
}

#[test]
fn experiment_bookkeeping_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::from_toml(SMALL_CONFIG).unwrap();
    cfg.validate().unwrap();
    let spec = ExperimentSpec::from_config(&cfg).unwrap();
    let out = pipeline::run_experiment(&spec, &cfg, dir.path(), false).unwrap();

    let mut dropped = 0;
    for b in &out.details.batches {
        assert_eq!(b.generated, b.labeled + b.dropped, "{b:?}");
        assert_eq!(b.generated, b.set.count);
        for per_kind in b.statuses.values() {
            assert_eq!(per_kind.values().sum::<usize>(), b.generated);
        }
        dropped += b.dropped;
    }
    assert_eq!(line_count(&dir.path().join("drops.jsonl")), dropped);
    for (role, b) in ["train", "test"].iter().zip(&out.details.batches) {
        for schema in [Schema::Sdd, Schema::Di] {
            let ds = Dataset::load(&dir.path().join(format!("datasets/{role}-{schema}.jsonl"))).unwrap();
            assert_eq!(ds.len(), b.labeled);
            assert!(ds.samples.iter().all(|s| s.features.len() == ds.header.names.len()));
        }
    }
    // fDD was not requested, so no cell mentions it.
    assert_eq!(out.results.cells.len(), 2 * 2 * 2);
    assert!(out.results.cells.iter().all(|c| c.schema != Schema::Fdd && !c.na));
    let reloaded = ExperimentResults::load(&out.results_path).unwrap();
    assert_eq!(reloaded, out.results);
    for c in &out.details.cells {
        assert!(dir.path().join(&c.model_file).exists(), "{}", c.model_file);
    }
}

/// Records with a failed relaxation are dropped, never labeled.
#[test]
fn failed_solves_are_dropped() {
    let ok = |z: f64| Outcome { status: SolveStatus::Optimal, objective: z, iterations: 10 };
    let bad = Outcome { status: SolveStatus::NumericalFailure, objective: f64::NAN, iterations: 500 };
    let inf = Outcome { status: SolveStatus::Infeasible, objective: f64::INFINITY, iterations: 12 };
    let record = |id: usize, lp: Outcome, sdp: Outcome| SolveRecord {
        instance_id: format!("i{id}"),
        iota: id,
        lp,
        sdp,
        sdp_prime: ok(-1.0),
    };
    let records =
        vec![record(1, ok(-2.0), ok(-1.0)), record(2, ok(-2.0), bad), record(3, inf, ok(-1.0)), record(4, ok(-1.0), ok(-2.0))];
    let fv: Vec<_> = (0..4)
        .map(|k| features::FeatureVector { schema: Schema::Di, n: 1, m: 1, names: vec!["a".into()], values: vec![k as f64] })
        .collect();
    let lab = dataset::label_records(&records, &fv, Comparison::LpSdp, 0.0).unwrap();
    assert_eq!(lab.samples.len() + lab.drops.len(), records.len());
    assert_eq!(lab.drops.iter().map(|d| d.instance_id.as_str()).collect::<Vec<_>>(), ["i2", "i3"]);
    assert_eq!(lab.samples.iter().map(|s| s.label).collect::<Vec<_>>(), [0, 1]);
    // Against SDP' only the infeasible LP drops.
    let lab = dataset::label_records(&records, &fv, Comparison::LpSdpPrime, 0.0).unwrap();
    assert_eq!(lab.drops.len(), 1);
}

#[test]
fn cli_stages_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = d.join("small.toml");
    fs::write(&config, SMALL_CONFIG).unwrap();
    let cfg_arg = ["--config", config.to_str().unwrap(), "-q"];

    let printed = run_ok(bin().args(cfg_arg).arg("config"));
    assert_eq!(Config::from_toml(&printed).unwrap(), Config::from_toml(SMALL_CONFIG).unwrap());

    run_ok(bin().args(cfg_arg).args(["--out", d.join("inst").to_str().unwrap(), "generate", "--n", "5", "--m", "1", "--count", "40"]));
    let files = fs::read_dir(d.join("inst")).unwrap().filter(|e| e.as_ref().unwrap().path().to_string_lossy().ends_with(".qcqp.json")).count();
    assert_eq!(files, 40);

    let solves = d.join("solves.jsonl");
    run_ok(bin().args(cfg_arg).args(["--out", solves.to_str().unwrap(), "solve", d.join("inst").to_str().unwrap()]));
    assert_eq!(line_count(&solves), 40);

    let data = d.join("di.jsonl");
    run_ok(bin().args(cfg_arg).args([
        "--out",
        data.to_str().unwrap(),
        "featurize",
        "--instances",
        d.join("inst").to_str().unwrap(),
        "--solves",
        solves.to_str().unwrap(),
        "--schema",
        "DI",
    ]));
    let ds = Dataset::load(&data).unwrap();
    assert_eq!(ds.len() + line_count(&data.with_extension("drops.jsonl")), 40);
    assert_eq!(ds.header.sources.len(), 1);

    let model = d.join("gbr.json");
    run_ok(bin().args(cfg_arg).args([
        "--out",
        model.to_str().unwrap(),
        "train",
        "--data",
        data.to_str().unwrap(),
        "--task",
        "regression",
        "--model",
        "GB",
    ]));
    let metrics = run_ok(bin().args(cfg_arg).args(["evaluate", "--model", model.to_str().unwrap(), "--data", data.to_str().unwrap()]));
    let metrics: serde_json::Value = serde_json::from_str(&metrics).unwrap();
    for key in ["mae", "mse", "rmse", "r2", "r_accuracy"] {
        assert!(metrics[key].is_number(), "{key} missing from {metrics}");
    }

    let run = d.join("run");
    let table = run_ok(bin().args(cfg_arg).args(["--out", run.to_str().unwrap(), "experiment"]));
    assert!(table.contains("Training Set") && table.contains("5,1,40"), "{table}");
    let csv = d.join("r.csv");
    let again = run_ok(bin().args(cfg_arg).args(["report", run.join("results.json").to_str().unwrap(), "--csv", csv.to_str().unwrap()]));
    assert_eq!(again, table);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("experiment,schema,model,metric,value\n"));

    // A second run reuses the solve cache and reproduces the results.
    let first = fs::read(run.join("results.json")).unwrap();
    run_ok(bin().args(cfg_arg).args(["--out", run.to_str().unwrap(), "experiment"]));
    assert_eq!(fs::read(run.join("results.json")).unwrap(), first);
}

#[test]
fn cli_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[generator]\nsede = 1\n").unwrap();
    let out = bin().args(["--config", bad.to_str().unwrap(), "config"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    let out = bin().args(["--experiment", "12", "experiment"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn applicability_follows_shared_dimensions() {
    let s = |n, m| SetSpec::new(n, m, 100);
    assert!(pipeline::applicable(Schema::Fdd, &[s(5, 2), s(5, 2)]));
    assert!(!pipeline::applicable(Schema::Fdd, &[s(5, 2), s(10, 2)]));
    assert!(pipeline::applicable(Schema::Sdd, &[s(5, 2), s(10, 2)]));
    assert!(!pipeline::applicable(Schema::Sdd, &[s(5, 2), s(5, 3)]));
    assert!(pipeline::applicable(Schema::Di, &[s(5, 1), s(20, 10)]));
}
