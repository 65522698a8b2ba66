//! Exhaustive hyper-parameter search on a validation split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HyperParams, LearnError, ModelKind, Table, Task, TreeEnsemble};
use crate::labels::{r_accuracy, R_ACCURACY_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamGrid {
    pub n_trees: Vec<usize>,
    /// `None` entries mean unlimited depth.
    pub max_depth: Vec<Option<usize>>,
    pub learning_rate: Vec<f64>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![100, 300],
            max_depth: vec![Some(4), Some(8), None],
            learning_rate: vec![0.05, 0.1, 0.3],
            min_samples_leaf: vec![1, 5],
        }
    }
}

impl ParamGrid {
    pub fn single(p: HyperParams) -> Self {
        Self { n_trees: vec![p.n_trees], max_depth: vec![p.max_depth], learning_rate: vec![p.learning_rate], min_samples_leaf: vec![p.min_samples_leaf] }
    }

    /// Grid points in lexicographic order (trees, depth, rate, leaf). Forests
    /// ignore the learning rate, so only its first value is used for them.
    pub fn points(&self, kind: ModelKind) -> Vec<HyperParams> {
        let rates: &[f64] = match kind.algorithm {
            super::Algorithm::RandomForest => &self.learning_rate[..self.learning_rate.len().min(1)],
            super::Algorithm::GradientBoosting => &self.learning_rate,
        };
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &learning_rate in rates {
                    for &min_samples_leaf in &self.min_samples_leaf {
                        out.push(HyperParams { n_trees, max_depth, learning_rate, min_samples_leaf });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: HyperParams,
    /// Validation accuracy or r-accuracy.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub best: HyperParams,
    pub best_score: f64,
    pub rows: Vec<GridRow>,
}

/// Validation score of a fitted model.
pub fn validation_score(model: &TreeEnsemble, valid: &Table) -> Result<f64, LearnError> {
    match model.kind.task {
        Task::Classification => {
            let labels = model.predict_labels(&valid.x)?;
            let hits = labels.iter().zip(&valid.y).filter(|(a, b)| f64::from(**a) == **b).count();
            Ok(hits as f64 / valid.len().max(1) as f64)
        }
        Task::Regression => {
            let pred = model.predict_values(&valid.x)?;
            Ok(r_accuracy(&valid.y, &pred, R_ACCURACY_EPS).unwrap_or(0.0))
        }
    }
}

/// Evaluates every grid point; the first point with the highest score wins.
pub fn grid_search(
    train: &Table,
    valid: &Table,
    kind: ModelKind,
    grid: &ParamGrid,
    seed: u64,
) -> Result<GridReport, LearnError> {
    let points = grid.points(kind);
    if points.is_empty() {
        return Err(LearnError::Empty);
    }
    let rows = points
        .par_iter()
        .map(|&params| {
            let model = TreeEnsemble::fit(train, kind, params, seed)?;
            Ok(GridRow { params, score: validation_score(&model, valid)? })
        })
        .collect::<Result<Vec<GridRow>, LearnError>>()?;
    let mut best = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.score > rows[best].score {
            best = i;
        }
    }
    Ok(GridReport { best: rows[best].params, best_score: rows[best].score, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::Algorithm;

    fn step_data(n: usize) -> Table {
        // Label flips at x = 0.5 only when y > 0.5: a depth-1 tree cannot
        // represent it, a depth-2 tree can.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                x.push(vec![a, b]);
                y.push(f64::from(a > 0.5 && b > 0.5));
            }
        }
        Table { names: vec!["a".into(), "b".into()], x, y }
    }

    #[test]
    fn singleton_grid() {
        let t = step_data(6);
        let p = HyperParams { n_trees: 3, max_depth: Some(2), learning_rate: 0.1, min_samples_leaf: 1 };
        let kind = ModelKind::new(Algorithm::GradientBoosting, Task::Classification);
        let r = grid_search(&t, &t, kind, &ParamGrid::single(p), 0).unwrap();
        assert_eq!(r.best, p);
        assert_eq!(r.rows.len(), 1);
    }

    #[test]
    fn planted_optimum_is_selected() {
        let t = step_data(8);
        let grid = ParamGrid {
            n_trees: vec![1],
            max_depth: vec![Some(1), Some(2)],
            learning_rate: vec![1.0],
            min_samples_leaf: vec![1],
        };
        let kind = ModelKind::new(Algorithm::GradientBoosting, Task::Classification);
        let r = grid_search(&t, &t, kind, &grid, 0).unwrap();
        assert_eq!(r.rows.len(), grid.points(kind).len());
        assert_eq!(r.best.max_depth, Some(2));
        assert_eq!(r.best_score, 1.0);
    }

    #[test]
    fn default_grid_sizes() {
        let g = ParamGrid::default();
        assert_eq!(g.points(ModelKind::new(Algorithm::GradientBoosting, Task::Regression)).len(), 36);
        assert_eq!(g.points(ModelKind::new(Algorithm::RandomForest, Task::Regression)).len(), 12);
    }
}
