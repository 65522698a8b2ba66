//! Results files and their rendering as text tables and CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SetSpec;
use crate::dataset::Comparison;
use crate::features::Schema;
use crate::learn::{Algorithm, ModelKind, Task};

pub const RESULTS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: malformed results: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{path}: unsupported results schema version {version}")]
    Version { path: String, version: u32 },
}

/// One (schema, model, task) entry of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub schema: Schema,
    pub model: Algorithm,
    pub task: Task,
    pub metrics: BTreeMap<String, f64>,
    /// The schema cannot describe every batch of the experiment.
    pub na: bool,
}

impl Cell {
    pub fn na(schema: Schema, model: Algorithm, task: Task) -> Self {
        Self { schema, model, task, metrics: BTreeMap::new(), na: true }
    }

    /// Accuracy for classification, r-accuracy for regression.
    pub fn headline(&self) -> Option<f64> {
        self.metrics.get(headline_metric(self.task)).copied()
    }
}

pub fn headline_metric(task: Task) -> &'static str {
    match task {
        Task::Classification => "accuracy",
        Task::Regression => "r_accuracy",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub schema_version: u32,
    pub experiment_id: String,
    pub comparison: Comparison,
    pub train: Vec<SetSpec>,
    pub test: Vec<SetSpec>,
    pub cells: Vec<Cell>,
}

impl ExperimentResults {
    pub fn from_json(text: &str, path: &str) -> Result<Self, ReportError> {
        let r: Self = serde_json::from_str(text).map_err(|source| ReportError::Parse { path: path.into(), source })?;
        if r.schema_version != RESULTS_SCHEMA_VERSION {
            return Err(ReportError::Version { path: path.into(), version: r.schema_version });
        }
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: p.clone(), source })?;
        Self::from_json(&text, &p)
    }

    pub fn cell(&self, schema: Schema, model: Algorithm, task: Task) -> Option<&Cell> {
        self.cells.iter().find(|c| c.schema == schema && c.model == model && c.task == task)
    }
}

/// `key=value` pairs with four decimals.
pub fn format_metrics(m: &BTreeMap<String, f64>) -> String {
    m.iter().map(|(k, v)| format!("{k}={v:.4}")).collect::<Vec<_>>().join(" ")
}

fn join_sets(sets: &[SetSpec]) -> String {
    sets.iter().map(ToString::to_string).collect::<Vec<_>>().join(" + ")
}

fn model_title(a: Algorithm, task: Task) -> String {
    let base = match a {
        Algorithm::RandomForest => "Random Forest",
        Algorithm::GradientBoosting => "Gradient Boosting",
    };
    let t = match task {
        Task::Classification => "Classifier",
        Task::Regression => "Regressor",
    };
    format!("{base} {t}")
}

fn pad_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (k, row) in rows.iter().enumerate() {
        // Text columns are left-aligned, metric columns right-aligned.
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c < 3 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
        if k == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

/// One aligned table per (comparison, task): a row per experiment with
/// columns ID, training set, test set, then the headline metric for every
/// model under fDD, sDD and DI. Inapplicable cells print as `NA`, cells
/// that were not run as `-`. Without any results a header-only
/// classification table is printed.
pub fn render_tables(results: &[ExperimentResults]) -> String {
    let mut groups: Vec<(Comparison, Task)> = Vec::new();
    for r in results {
        for c in &r.cells {
            if !groups.contains(&(r.comparison, c.task)) {
                groups.push((r.comparison, c.task));
            }
        }
    }
    groups.sort_by_key(|&(c, t)| (c == Comparison::LpSdpPrime, t == Task::Regression));
    if groups.is_empty() {
        groups.push((Comparison::LpSdp, Task::Classification));
    }
    let mut models: Vec<Algorithm> = Vec::new();
    for a in [Algorithm::RandomForest, Algorithm::GradientBoosting] {
        if results.iter().flat_map(|r| &r.cells).any(|c| c.model == a) || results.iter().all(|r| r.cells.is_empty()) {
            models.push(a);
        }
    }
    let mut out = String::new();
    for (k, &(comparison, task)) in groups.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{comparison} {} ({})", task_title(task), headline_metric(task));
        let mut group_row = vec![String::new(), String::new(), String::new()];
        let mut head = vec!["ID".to_string(), "Training Set".into(), "Test Set".into()];
        for &a in &models {
            for (i, s) in Schema::ALL.iter().enumerate() {
                group_row.push(if i == 0 { model_title(a, task) } else { String::new() });
                head.push(s.name().into());
            }
        }
        let mut rows = vec![group_row, head];
        for r in results.iter().filter(|r| r.comparison == comparison && r.cells.iter().any(|c| c.task == task)) {
            let mut row = vec![r.experiment_id.clone(), join_sets(&r.train), join_sets(&r.test)];
            for &a in &models {
                for s in Schema::ALL {
                    row.push(match r.cell(s, a, task) {
                        Some(c) if c.na => "NA".into(),
                        Some(c) => c.headline().map_or("-".into(), |v| format!("{v:.4}")),
                        None => "-".into(),
                    });
                }
            }
            rows.push(row);
        }
        // The model group line is left-aligned over its first column.
        let mut text = pad_table(&rows[1..]);
        let first = group_line(&rows, &models);
        text.insert_str(0, &first);
        out.push_str(&text);
    }
    out
}

fn task_title(task: Task) -> &'static str {
    match task {
        Task::Classification => "classification",
        Task::Regression => "regression",
    }
}

fn group_line(rows: &[Vec<String>], models: &[Algorithm]) -> String {
    let cols = rows[1].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows[1..].iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut line = String::new();
    let lead: usize = widths[..3].iter().sum::<usize>() + 3 * 3;
    line.push_str(&" ".repeat(lead));
    for (k, _) in models.iter().enumerate() {
        let span: usize = widths[3 + 3 * k..3 + 3 * k + 3].iter().sum::<usize>() + 2 * 3;
        let title = &rows[0][3 + 3 * k];
        let _ = write!(line, "{title:<span$}");
        if k + 1 < models.len() {
            line.push_str(" | ");
        }
    }
    line.trim_end().to_string() + "\n"
}

/// Long-format CSV with columns `experiment,schema,model,metric,value`;
/// `model` is the short name such as `GBC`. An inapplicable cell yields one
/// row for its headline metric with value `NA`.
pub fn to_csv(results: &[ExperimentResults]) -> String {
    let mut out = String::from("experiment,schema,model,metric,value\n");
    for r in results {
        for c in &r.cells {
            let model = ModelKind::new(c.model, c.task).name();
            if c.na {
                let _ = writeln!(out, "{},{},{model},{},NA", csv_field(&r.experiment_id), c.schema, headline_metric(c.task));
                continue;
            }
            for (k, v) in &c.metrics {
                let _ = writeln!(out, "{},{},{model},{k},{v}", csv_field(&r.experiment_id), c.schema);
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn results(cells: Vec<Cell>) -> ExperimentResults {
        ExperimentResults {
            schema_version: RESULTS_SCHEMA_VERSION,
            experiment_id: "8".into(),
            comparison: Comparison::LpSdp,
            train: vec![SetSpec::new(5, 2, 50_000), SetSpec::new(10, 2, 50_000)],
            test: vec![SetSpec::new(20, 2, 10_000)],
            cells,
        }
    }

    fn cell(schema: Schema, acc: f64) -> Cell {
        Cell {
            schema,
            model: Algorithm::GradientBoosting,
            task: Task::Classification,
            metrics: BTreeMap::from([("accuracy".into(), acc), ("f1".into(), 0.5)]),
            na: false,
        }
    }

    #[test]
    fn empty_results_give_header_only() {
        let t = render_tables(&[]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4, "{t}");
        assert!(lines[2].contains("Training Set") && lines[2].contains("DI"));
        assert_eq!(to_csv(&[]), "experiment,schema,model,metric,value\n");
    }

    #[test]
    fn na_renders_literally() {
        let r = results(vec![
            Cell::na(Schema::Fdd, Algorithm::GradientBoosting, Task::Classification),
            cell(Schema::Sdd, 0.9130),
            cell(Schema::Di, 0.9242),
        ]);
        let t = render_tables(&[r.clone()]);
        let row = t.lines().last().unwrap();
        assert!(row.starts_with('8'), "{t}");
        assert!(row.contains("5,2,50K + 10,2,50K") && row.contains("20,2,10K"));
        assert!(row.contains("NA") && row.contains("0.9130") && row.contains("0.9242"));
        let csv = to_csv(&[r]);
        assert!(csv.contains("8,fDD,GBC,accuracy,NA\n"));
        assert!(csv.contains("8,DI,GBC,accuracy,0.9242\n"));
    }

    #[test]
    fn one_cell_one_row() {
        let t = render_tables(&[results(vec![cell(Schema::Di, 0.5)])]);
        assert_eq!(t.lines().count(), 5, "{t}");
    }

    #[test]
    fn results_json_round_trip_and_version() {
        let r = results(vec![cell(Schema::Di, 0.75)]);
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(ExperimentResults::from_json(&text, "x").unwrap(), r);
        let bad = text.replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(matches!(ExperimentResults::from_json(&bad, "x"), Err(ReportError::Version { .. })));
        assert!(ExperimentResults::from_json("{", "x").is_err());
    }
}
