//! Run configuration, read from a TOML file with `[generator]`, `[solver]`,
//! `[features]`, `[learn]` and `[experiment]` sections. Every field has a
//! default, so an empty file is a valid configuration.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::SolverOptions;
use crate::dataset::Comparison;
use crate::features::Schema;
use crate::labels::{DEFAULT_LABEL_SLACK, R_ACCURACY_EPS};
use crate::learn::grid::ParamGrid;
use crate::learn::{Algorithm, Task};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// `(n, m, N)`: variables, constraints and instance count of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize, usize)", into = "(usize, usize, usize)")]
pub struct SetSpec {
    pub n: usize,
    pub m: usize,
    pub count: usize,
}

impl SetSpec {
    pub fn new(n: usize, m: usize, count: usize) -> Self {
        Self { n, m, count }
    }

    /// Count multiplied by `scale`, rounded, and kept at least 4 so every
    /// generation regime is non-empty.
    pub fn scaled(self, scale: f64) -> Self {
        let count = ((self.count as f64 * scale).round() as usize).max(4);
        Self { count, ..self }
    }
}

impl From<(usize, usize, usize)> for SetSpec {
    fn from((n, m, count): (usize, usize, usize)) -> Self {
        Self { n, m, count }
    }
}

impl From<SetSpec> for (usize, usize, usize) {
    fn from(s: SetSpec) -> Self {
        (s.n, s.m, s.count)
    }
}

impl fmt::Display for SetSpec {
    /// `5,1,40K` style.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count >= 1000 && self.count % 1000 == 0 {
            write!(f, "{},{},{}K", self.n, self.m, self.count / 1000)
        } else {
            write!(f, "{},{},{}", self.n, self.m, self.count)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    /// Master seed; each batch derives its own seed from it.
    pub seed: u64,
    /// Multiplier on preset batch sizes.
    pub scale: f64,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self { seed: 2024, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub schemas: Vec<Schema>,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        Self { schemas: Schema::ALL.to_vec() }
    }
}

/// Hyper-parameter grid as written in TOML, where a depth of 0 means
/// unlimited (TOML has no null).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self::from(&ParamGrid::default())
    }
}

impl From<&ParamGrid> for GridSection {
    fn from(g: &ParamGrid) -> Self {
        Self {
            n_trees: g.n_trees.clone(),
            max_depth: g.max_depth.iter().map(|d| d.unwrap_or(0)).collect(),
            learning_rate: g.learning_rate.clone(),
            min_samples_leaf: g.min_samples_leaf.clone(),
        }
    }
}

impl GridSection {
    pub fn to_grid(&self) -> ParamGrid {
        ParamGrid {
            n_trees: self.n_trees.clone(),
            max_depth: self.max_depth.iter().map(|&d| (d > 0).then_some(d)).collect(),
            learning_rate: self.learning_rate.clone(),
            min_samples_leaf: self.min_samples_leaf.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnSection {
    /// Seed of forest bootstraps, feature sampling and the validation split.
    pub seed: u64,
    pub models: Vec<Algorithm>,
    /// Share of the training set held out to score grid points; the best
    /// point is then refit on the whole training set.
    pub validation_fraction: f64,
    pub grid: GridSection,
}

impl Default for LearnSection {
    fn default() -> Self {
        Self {
            seed: 7,
            models: vec![Algorithm::RandomForest, Algorithm::GradientBoosting],
            validation_fraction: 0.2,
            grid: GridSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// A preset id `1`..`11`, or a free name when `train`/`test` are given.
    pub id: String,
    pub comparison: Comparison,
    pub tasks: Vec<Task>,
    /// ε′ of the class label `1{δ > −ε′}`.
    pub label_slack: f64,
    /// ε of the r-accuracy metric.
    pub r_accuracy_eps: f64,
    /// Explicit batches; when empty the preset of `id` is used, scaled by
    /// `generator.scale`.
    pub train: Vec<SetSpec>,
    pub test: Vec<SetSpec>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            id: "1".into(),
            comparison: Comparison::LpSdp,
            tasks: vec![Task::Classification, Task::Regression],
            label_slack: DEFAULT_LABEL_SLACK,
            r_accuracy_eps: R_ACCURACY_EPS,
            train: Vec::new(),
            test: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub generator: GeneratorSection,
    pub solver: SolverOptions,
    pub features: FeaturesSection,
    pub learn: LearnSection,
    pub experiment: ExperimentSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
        let cfg = Self::from_toml(&text).map_err(|source| ConfigError::Parse { path: p, source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if !(self.generator.scale > 0.0 && self.generator.scale.is_finite()) {
            return bad("generator.scale must be positive");
        }
        if !(self.solver.tol > 0.0) {
            return bad("solver.tol must be positive");
        }
        if !(self.solver.step_fraction > 0.0 && self.solver.step_fraction < 1.0) {
            return bad("solver.step_fraction must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.learn.validation_fraction) {
            return bad("learn.validation_fraction must lie in [0, 1)");
        }
        let g = &self.learn.grid;
        if g.n_trees.is_empty() || g.max_depth.is_empty() || g.learning_rate.is_empty() || g.min_samples_leaf.is_empty() {
            return bad("every learn.grid list needs at least one value");
        }
        if g.n_trees.contains(&0) || g.learning_rate.iter().any(|&r| !(r > 0.0)) {
            return bad("learn.grid needs positive tree counts and learning rates");
        }
        if !(self.experiment.label_slack >= 0.0) || !(self.experiment.r_accuracy_eps >= 0.0) {
            return bad("experiment slacks must be non-negative");
        }
        if self.experiment.train.is_empty() != self.experiment.test.is_empty() {
            return bad("experiment.train and experiment.test must be given together");
        }
        Ok(())
    }
}
