//! Solve records, labeled samples and the on-disk dataset format.
//!
//! A dataset is a newline-delimited JSON file with one [`LabeledSample`] per
//! line plus a sidecar header (`<stem>.header.json`) holding the schema,
//! feature names and the generation configs the samples came from.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::SolveStatus;
use crate::features::{FeatureVector, Schema};
use crate::generator::GenConfig;
use crate::instance::ext_real;
use crate::labels::{classify_label, compute_delta, DropReason};
use crate::learn::{Table, Task};
use crate::relax::RelaxKind;

pub const DATASET_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}, line {line}: {source}")]
    Parse { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("unsupported dataset schema version {0}")]
    Version(u32),
    #[error("{0}")]
    Inconsistent(String),
}

/// Which pair of relaxations δ compares; the first is always the LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "LP-SDP")]
    LpSdp,
    #[serde(rename = "LP-SDP'")]
    LpSdpPrime,
}

impl Comparison {
    pub fn name(self) -> &'static str {
        match self {
            Comparison::LpSdp => "LP-SDP",
            Comparison::LpSdpPrime => "LP-SDP'",
        }
    }

    pub fn second(self) -> RelaxKind {
        match self {
            Comparison::LpSdp => RelaxKind::Sdp,
            Comparison::LpSdpPrime => RelaxKind::SdpPrime,
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Comparison {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().replace(['_', ' '], "-").as_str() {
            "LP-SDP" | "LP-VS-SDP" => Ok(Comparison::LpSdp),
            "LP-SDP'" | "LP-VS-SDP'" | "LP-SDPP" | "LP-SDP-PRIME" => Ok(Comparison::LpSdpPrime),
            _ => Err(format!("unknown comparison {s:?} (expected LP-SDP or LP-SDP')")),
        }
    }
}

/// Result of one relaxation solve, reduced to what labeling needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: SolveStatus,
    #[serde(with = "ext_real")]
    pub objective: f64,
    pub iterations: usize,
}

/// All three relaxation outcomes of instance `iota` of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub instance_id: String,
    pub iota: usize,
    pub lp: Outcome,
    pub sdp: Outcome,
    pub sdp_prime: Outcome,
}

impl SolveRecord {
    pub fn outcome(&self, kind: RelaxKind) -> &Outcome {
        match kind {
            RelaxKind::Lp => &self.lp,
            RelaxKind::Sdp => &self.sdp,
            RelaxKind::SdpPrime => &self.sdp_prime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub instance_id: String,
    pub features: Vec<f64>,
    #[serde(with = "ext_real")]
    pub z1: f64,
    #[serde(with = "ext_real")]
    pub z2: f64,
    pub status1: SolveStatus,
    pub status2: SolveStatus,
    pub delta: f64,
    pub label: u8,
}

/// An instance excluded from a dataset and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub instance_id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub schema: Schema,
    pub comparison: Comparison,
    pub label_slack: f64,
    pub names: Vec<String>,
    /// Generation configs of the batches the samples came from, in order.
    pub sources: Vec<GenConfig>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<LabeledSample>,
}

/// Samples and drops produced by [`label_records`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Labeling {
    pub samples: Vec<LabeledSample>,
    pub drops: Vec<DropRecord>,
}

/// Pairs each solve record with its feature vector and computes δ and the
/// label. Records whose pair of statuses yields no δ are dropped, so
/// `records.len() == samples.len() + drops.len()` always holds.
pub fn label_records(
    records: &[SolveRecord],
    features: &[FeatureVector],
    comparison: Comparison,
    slack: f64,
) -> Result<Labeling, DatasetError> {
    if records.len() != features.len() {
        return Err(DatasetError::Inconsistent(format!(
            "{} solve records but {} feature vectors",
            records.len(),
            features.len()
        )));
    }
    let mut out = Labeling::default();
    for (rec, fv) in records.iter().zip(features) {
        let first = rec.lp;
        let second = *rec.outcome(comparison.second());
        match compute_delta(first.status, first.objective, second.status, second.objective) {
            Ok(delta) => out.samples.push(LabeledSample {
                instance_id: rec.instance_id.clone(),
                features: fv.values.clone(),
                z1: first.objective,
                z2: second.objective,
                status1: first.status,
                status2: second.status,
                delta,
                label: classify_label(delta, slack),
            }),
            Err(reason) => out.drops.push(DropRecord { instance_id: rec.instance_id.clone(), reason }),
        }
    }
    Ok(out)
}

/// `data/train-fDD.jsonl` → `data/train-fDD.header.json`.
pub fn header_path(path: &Path) -> PathBuf {
    path.with_extension("header.json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Writes one JSON value per line.
pub fn write_ndjson<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DatasetError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| DatasetError::Parse { path: path.into(), line: 0, source: e })?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a file written by [`write_ndjson`]; blank lines are skipped.
pub fn read_ndjson<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatasetError::Parse { path: path.into(), line: k + 1, source: e })?);
    }
    Ok(out)
}

impl Dataset {
    pub fn new(
        schema: Schema,
        comparison: Comparison,
        label_slack: f64,
        names: Vec<String>,
        sources: Vec<GenConfig>,
        samples: Vec<LabeledSample>,
    ) -> Result<Self, DatasetError> {
        let header = DatasetHeader {
            schema_version: DATASET_SCHEMA_VERSION,
            schema,
            comparison,
            label_slack,
            names,
            sources,
            count: samples.len(),
        };
        let ds = Self { header, samples };
        ds.check()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn check(&self) -> Result<(), DatasetError> {
        let width = self.header.names.len();
        if let Some(s) = self.samples.iter().find(|s| s.features.len() != width) {
            return Err(DatasetError::Inconsistent(format!(
                "sample {} has {} features, header names {width}",
                s.instance_id,
                s.features.len()
            )));
        }
        if self.header.count != self.samples.len() {
            return Err(DatasetError::Inconsistent(format!(
                "header declares {} samples, found {}",
                self.header.count,
                self.samples.len()
            )));
        }
        Ok(())
    }

    /// Writes the samples to `path` and the header next to it.
    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let hp = header_path(path);
        let header = serde_json::to_string_pretty(&self.header).map_err(|e| DatasetError::Parse { path: hp.clone(), line: 0, source: e })?;
        fs::write(&hp, header + "\n").map_err(io_err(&hp))?;
        write_ndjson(path, &self.samples)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let hp = header_path(path);
        let text = fs::read_to_string(&hp).map_err(io_err(&hp))?;
        let header: DatasetHeader =
            serde_json::from_str(&text).map_err(|e| DatasetError::Parse { path: hp.clone(), line: e.line(), source: e })?;
        if header.schema_version != DATASET_SCHEMA_VERSION {
            return Err(DatasetError::Version(header.schema_version));
        }
        let ds = Self { header, samples: read_ndjson(path)? };
        ds.check()?;
        Ok(ds)
    }

    /// Design matrix with the label (classification) or δ (regression) as
    /// the target.
    pub fn to_table(&self, task: Task) -> Table {
        let x = self.samples.iter().map(|s| s.features.clone()).collect();
        let y = self
            .samples
            .iter()
            .map(|s| match task {
                Task::Classification => f64::from(s.label),
                Task::Regression => s.delta,
            })
            .collect();
        Table { names: self.header.names.clone(), x, y }
    }
}
