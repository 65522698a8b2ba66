//! Tree-ensemble learners: random forests and gradient boosting for
//! classification and regression, plus grid search.

pub mod grid;
pub mod tree;

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{InstanceRng, RngStream};
use tree::{fit_tree, Node, Presorted, TreeData, TreeParams};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("empty training set")]
    Empty,
    #[error("ragged feature rows: expected {expected} columns, row {row} has {found}")]
    Ragged { expected: usize, row: usize, found: usize },
    #[error("classification data contains a single class")]
    SingleClass,
    #[error("classification targets must be 0 or 1, found {0}")]
    BadLabel(f64),
    #[error("feature length {found} does not match the model manifest ({expected})")]
    Manifest { expected: usize, found: usize },
    #[error("unsupported model file version {0}")]
    Version(u32),
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "classification")]
    Classification,
    #[serde(rename = "regression")]
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "RF")]
    RandomForest,
    #[serde(rename = "GB")]
    GradientBoosting,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RandomForest => "RF",
            Algorithm::GradientBoosting => "GB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelKind {
    pub algorithm: Algorithm,
    pub task: Task,
}

impl ModelKind {
    pub fn new(algorithm: Algorithm, task: Task) -> Self {
        Self { algorithm, task }
    }

    /// Short name such as `GBC` or `RFR`.
    pub fn name(self) -> String {
        let t = match self.task {
            Task::Classification => 'C',
            Task::Regression => 'R',
        };
        format!("{}{t}", self.algorithm.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    /// Shrinkage of boosting stages; ignored by forests.
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: Some(4), learning_rate: 0.1, min_samples_leaf: 1 }
    }
}

/// Feature rows with targets (0/1 for classification).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    fn validate(&self, task: Task) -> Result<(), LearnError> {
        if self.is_empty() {
            return Err(LearnError::Empty);
        }
        let p = self.x[0].len();
        for (row, xi) in self.x.iter().enumerate() {
            if xi.len() != p {
                return Err(LearnError::Ragged { expected: p, row, found: xi.len() });
            }
        }
        if task == Task::Classification {
            if let Some(&bad) = self.y.iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(LearnError::BadLabel(bad));
            }
            if self.y.iter().all(|&v| v == self.y[0]) {
                return Err(LearnError::SingleClass);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Probability of label 1 (classifiers) or δ̂ in `[−1, 1]` (regressors).
    pub value: f64,
    /// Hard label at 0.5 for classifiers.
    pub label: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub version: u32,
    pub kind: ModelKind,
    pub params: HyperParams,
    pub seed: u64,
    pub feature_names: Vec<String>,
    /// Starting score of boosting (log-odds or mean); 0 for forests.
    pub base_score: f64,
    pub learning_rate: f64,
    /// Total impurity decrease per feature, averaged over trees.
    pub importances: Vec<f64>,
    pub trees: Vec<Node>,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl TreeEnsemble {
    pub fn fit(train: &Table, kind: ModelKind, params: HyperParams, seed: u64) -> Result<Self, LearnError> {
        train.validate(kind.task)?;
        let presorted = Presorted::new(&train.x);
        let p = train.x[0].len();
        let (trees, importances, base_score) = match kind.algorithm {
            Algorithm::RandomForest => fit_forest(train, &presorted, kind.task, params, seed),
            Algorithm::GradientBoosting => fit_boosting(train, &presorted, kind.task, params, seed),
        };
        let n_trees = trees.len().max(1) as f64;
        let mut names = train.names.clone();
        names.resize(p, String::new());
        Ok(Self {
            version: MODEL_SCHEMA_VERSION,
            kind,
            params,
            seed,
            feature_names: names,
            base_score,
            learning_rate: match kind.algorithm {
                Algorithm::RandomForest => 1.0,
                Algorithm::GradientBoosting => params.learning_rate,
            },
            importances: importances.into_iter().map(|v| v / n_trees).collect(),
            trees,
        })
    }

    /// Untransformed ensemble output: mean leaf value for forests, additive
    /// score for boosting.
    pub fn raw(&self, x: &[f64]) -> f64 {
        match self.kind.algorithm {
            Algorithm::RandomForest => {
                if self.trees.is_empty() {
                    return 0.0;
                }
                // Summed in sorted order so the mean ignores tree order.
                let mut votes: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
                votes.sort_by(f64::total_cmp);
                votes.iter().sum::<f64>() / self.trees.len() as f64
            }
            Algorithm::GradientBoosting => {
                self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, LearnError> {
        if x.len() != self.feature_names.len() {
            return Err(LearnError::Manifest { expected: self.feature_names.len(), found: x.len() });
        }
        let raw = self.raw(x);
        Ok(match (self.kind.task, self.kind.algorithm) {
            (Task::Classification, alg) => {
                let prob = if alg == Algorithm::GradientBoosting { sigmoid(raw) } else { raw };
                Prediction { value: prob, label: Some(u8::from(prob >= 0.5)) }
            }
            (Task::Regression, _) => Prediction { value: raw.clamp(-1.0, 1.0), label: None },
        })
    }

    /// Predicted values for many rows (probabilities or δ̂).
    pub fn predict_values(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, LearnError> {
        x.iter().map(|r| self.predict(r).map(|p| p.value)).collect()
    }

    pub fn predict_labels(&self, x: &[Vec<f64>]) -> Result<Vec<u8>, LearnError> {
        x.iter().map(|r| self.predict(r).map(|p| p.label.unwrap_or(u8::from(p.value > 0.0)))).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let model = Self::deserialize(&mut de)?;
        de.end()?;
        if model.version != MODEL_SCHEMA_VERSION {
            return Err(LearnError::Version(model.version));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), LearnError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LearnError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn tree_rng(seed: u64, index: usize) -> InstanceRng {
    RngStream::new(seed).child(0x7EE5).stream(index as u64)
}

fn fit_forest(
    train: &Table,
    presorted: &Presorted,
    task: Task,
    params: HyperParams,
    seed: u64,
) -> (Vec<Node>, Vec<f64>, f64) {
    let (n, p) = (train.len(), train.x[0].len());
    let max_features = match task {
        Task::Classification => ((p as f64).sqrt().floor() as usize).max(1),
        Task::Regression => (p / 3).max(1),
    };
    let tp = TreeParams { max_depth: params.max_depth, min_samples_leaf: params.min_samples_leaf, max_features: Some(max_features) };
    let ones = vec![1.0; n];
    let fitted: Vec<(Node, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let mut weight = vec![0.0; n];
            for _ in 0..n {
                weight[rng.random_range(0..n)] += 1.0;
            }
            let data = TreeData { x: &train.x, target: &train.y, leaf_num: &train.y, leaf_den: &ones, weight: &weight };
            fit_tree(&data, presorted, tp, &mut rng)
        })
        .collect();
    let mut importance = vec![0.0; p];
    let trees = fitted
        .into_iter()
        .map(|(tree, imp)| {
            importance.iter_mut().zip(&imp).for_each(|(a, b)| *a += b.max(0.0));
            tree
        })
        .collect();
    (trees, importance, 0.0)
}

fn fit_boosting(
    train: &Table,
    presorted: &Presorted,
    task: Task,
    params: HyperParams,
    seed: u64,
) -> (Vec<Node>, Vec<f64>, f64) {
    let (n, p) = (train.len(), train.x[0].len());
    let mean = train.y.iter().sum::<f64>() / n as f64;
    let base = match task {
        Task::Classification => (mean / (1.0 - mean)).ln(),
        Task::Regression => mean,
    };
    let tp = TreeParams { max_depth: params.max_depth, min_samples_leaf: params.min_samples_leaf, max_features: None };
    let ones = vec![1.0; n];
    let mut score = vec![base; n];
    let mut residual = vec![0.0; n];
    let mut hessian = vec![1.0; n];
    let mut importance = vec![0.0; p];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut rng = tree_rng(seed, 0);
    for _ in 0..params.n_trees {
        for i in 0..n {
            match task {
                Task::Classification => {
                    let prob = sigmoid(score[i]);
                    residual[i] = train.y[i] - prob;
                    hessian[i] = prob * (1.0 - prob);
                }
                Task::Regression => residual[i] = train.y[i] - score[i],
            }
        }
        let data = TreeData { x: &train.x, target: &residual, leaf_num: &residual, leaf_den: &hessian, weight: &ones };
        let (tree, imp) = fit_tree(&data, presorted, tp, &mut rng);
        importance.iter_mut().zip(&imp).for_each(|(a, b)| *a += b.max(0.0));
        for i in 0..n {
            score[i] += params.learning_rate * tree.predict(&train.x[i]);
        }
        trees.push(tree);
    }
    (trees, importance, base)
}
