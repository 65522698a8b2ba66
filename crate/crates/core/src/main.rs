//! `relaxsel` command-line interface. Each subcommand reads and writes
//! files, so stages can be rerun independently.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relaxsel::config::Config;
use relaxsel::dataset::{self, Comparison, Dataset, SolveRecord};
use relaxsel::features::{self, Schema};
use relaxsel::generator::GenConfig;
use relaxsel::instance::{load_instance, save_instance, QcqpInstance};
use relaxsel::learn::{Algorithm, ModelKind, Task, TreeEnsemble};
use relaxsel::pipeline::{self, ExperimentSpec};
use relaxsel::report::{self, ExperimentResults};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "relaxsel", version, about = "Learned LP/SDP relaxation selection for nonconvex QCQPs")]
struct Cli {
    /// TOML configuration file; defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding `generator.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for generation, solving, featurization and training.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file or directory of the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment preset id (1 to 11), overriding `experiment.id`.
    #[arg(long, global = true)]
    experiment: Option<String>,
    /// Suppress progress messages.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a batch of instances as `*.qcqp.json` files in --out.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        count: usize,
    },
    /// Solve the LP, SDP and SDP' relaxations of an instance file or
    /// directory; writes one solve record per line.
    Solve { input: PathBuf },
    /// Featurize and label solved instances into a dataset.
    Featurize {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        solves: PathBuf,
        #[arg(long)]
        schema: Schema,
        /// LP-SDP or LP-SDP'; defaults to `experiment.comparison`.
        #[arg(long)]
        comparison: Option<Comparison>,
    },
    /// Tune on the `[learn]` grid and fit a model on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_task)]
        task: Task,
        #[arg(long, value_parser = parse_algorithm)]
        model: Algorithm,
    },
    /// Evaluate a model on a dataset and print its metrics as JSON.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run a full experiment into --out.
    Experiment,
    /// Render results files as text tables; optionally write CSV.
    Report {
        results: Vec<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    match s.to_ascii_lowercase().as_str() {
        "classification" | "c" => Ok(Task::Classification),
        "regression" | "r" => Ok(Task::Regression),
        _ => Err(format!("unknown task {s:?} (classification or regression)")),
    }
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    match s.to_ascii_uppercase().as_str() {
        "RF" | "RANDOM-FOREST" => Ok(Algorithm::RandomForest),
        "GB" | "GRADIENT-BOOSTING" => Ok(Algorithm::GradientBoosting),
        _ => Err(format!("unknown model {s:?} (RF or GB)")),
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.generator.seed = seed;
    }
    if let Some(id) = &cli.experiment {
        cfg.experiment.id = id.clone();
        cfg.experiment.train.clear();
        cfg.experiment.test.clear();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Instance files of a directory in name order, or a single file.
fn read_instances(path: &Path) -> Result<Vec<QcqpInstance>> {
    let files = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".qcqp.json"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    files
        .iter()
        .map(|f| {
            let bytes = fs::read(f).map_err(|e| format!("{}: {e}", f.display()))?;
            load_instance(&bytes).map_err(|e| format!("{}: {e}", f.display()).into())
        })
        .collect()
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global()?;
    }
    let cfg = load_config(cli)?;
    let log = |msg: String| {
        if !cli.quiet {
            eprintln!("{msg}");
        }
    };
    match &cli.command {
        Command::Generate { n, m, count } => {
            let out = out_path(cli, "instances");
            fs::create_dir_all(&out)?;
            let gen = GenConfig::new(*n, *m, *count, cfg.generator.seed);
            let instances = pipeline::generate_all(&gen)?;
            for inst in &instances {
                fs::write(out.join(format!("{}.qcqp.json", inst.instance_id)), save_instance(inst))?;
            }
            fs::write(out.join("batch.json"), serde_json::to_string_pretty(&gen)? + "\n")?;
            log(format!("wrote {} instances to {}", instances.len(), out.display()));
        }
        Command::Solve { input } => {
            let out = out_path(cli, "solves.jsonl");
            let instances = read_instances(input)?;
            let records = pipeline::solve_all(&instances, &cfg.solver)?;
            dataset::write_ndjson(&out, &records)?;
            log(format!("wrote {} solve records to {}", records.len(), out.display()));
        }
        Command::Featurize { instances, solves, schema, comparison } => {
            let out = out_path(cli, &format!("dataset-{schema}.jsonl"));
            let comparison = comparison.unwrap_or(cfg.experiment.comparison);
            let insts = read_instances(instances)?;
            let records: Vec<SolveRecord> = dataset::read_ndjson(solves)?;
            for (inst, rec) in insts.iter().zip(&records) {
                if inst.instance_id != rec.instance_id {
                    return Err(format!("solve record {} does not match instance {}", rec.instance_id, inst.instance_id).into());
                }
            }
            let fv = insts.iter().map(|i| features::extract(i, *schema)).collect::<std::result::Result<Vec<_>, _>>()?;
            let (n, m) = insts.first().map_or((0, 0), |i| (i.n, i.m));
            if insts.iter().any(|i| features::feature_names(*schema, i.n, i.m) != features::feature_names(*schema, n, m)) {
                return Err(format!("{schema} cannot describe instances of differing dimensions").into());
            }
            let lab = dataset::label_records(&records, &fv, comparison, cfg.experiment.label_slack)?;
            let batch = if instances.is_dir() { instances.join("batch.json") } else { PathBuf::new() };
            let sources = match fs::read_to_string(&batch) {
                Ok(text) => vec![serde_json::from_str(&text)?],
                Err(_) => Vec::new(),
            };
            let names = features::feature_names(*schema, n, m);
            let (labeled, dropped) = (lab.samples.len(), lab.drops.len());
            let ds = Dataset::new(*schema, comparison, cfg.experiment.label_slack, names, sources, lab.samples)?;
            ds.save(&out)?;
            dataset::write_ndjson(&out.with_extension("drops.jsonl"), &lab.drops)?;
            log(format!("{} generated, {labeled} labeled, {dropped} dropped; wrote {}", records.len(), out.display()));
        }
        Command::Train { data, task, model } => {
            let ds = Dataset::load(data)?;
            let kind = ModelKind::new(*model, *task);
            let out = out_path(cli, &format!("model-{}-{}.json", ds.header.schema, kind.name()));
            let table = ds.to_table(*task);
            let (fitted, grid) = pipeline::tune_and_fit(
                &table,
                kind,
                &cfg.learn.grid.to_grid(),
                cfg.learn.validation_fraction,
                cfg.learn.seed,
            )?;
            fitted.save(&out)?;
            log(format!("best {:?} (validation score {:.4}); wrote {}", grid.best, grid.best_score, out.display()));
        }
        Command::Evaluate { model, data } => {
            let model = TreeEnsemble::load(model)?;
            let ds = Dataset::load(data)?;
            let metrics = pipeline::evaluate(&model, &ds.to_table(model.kind.task), cfg.experiment.r_accuracy_eps)?;
            let text = serde_json::to_string_pretty(&metrics)? + "\n";
            match &cli.out {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::Experiment => {
            let out = out_path(cli, &format!("runs/experiment-{}", cfg.experiment.id));
            let spec = ExperimentSpec::from_config(&cfg)?;
            let res = pipeline::run_experiment(&spec, &cfg, &out, !cli.quiet)?;
            print!("{}", report::render_tables(std::slice::from_ref(&res.results)));
            log(format!("wrote {}", res.results_path.display()));
        }
        Command::Report { results, csv } => {
            let all = results.iter().map(|p| ExperimentResults::load(p)).collect::<std::result::Result<Vec<_>, _>>()?;
            print!("{}", report::render_tables(&all));
            if let Some(p) = csv {
                fs::write(p, report::to_csv(&all))?;
            }
        }
        Command::Config => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
