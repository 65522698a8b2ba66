//! Relative bound difference, class labels and evaluation metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::SolveStatus;

/// Default slack of the class label.
pub const DEFAULT_LABEL_SLACK: f64 = 0.0;
/// Slack of the r-accuracy metric.
pub const R_ACCURACY_EPS: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {0} targets vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    Empty,
}

/// Why a pair of solves does not yield a δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReason {
    pub first: SolveStatus,
    pub second: SolveStatus,
}

/// `(z₁ − z₂)/(|z₁| + |z₂|)`, 0 when the denominator is at most 1e-12.
pub fn relative_difference(z1: f64, z2: f64) -> f64 {
    let denom = z1.abs() + z2.abs();
    if denom <= 1e-12 {
        0.0
    } else {
        (z1 - z2) / denom
    }
}

/// δ for a pair of relaxation outcomes; the objectives are only read when
/// both are Optimal.
pub fn compute_delta(s1: SolveStatus, z1: f64, s2: SolveStatus, z2: f64) -> Result<f64, DropReason> {
    use SolveStatus::{Optimal, Unbounded};
    match (s1, s2) {
        (Optimal, Optimal) => Ok(relative_difference(z1, z2)),
        (Optimal, Unbounded) => Ok(1.0),
        (Unbounded, Optimal) => Ok(-1.0),
        (Unbounded, Unbounded) => Ok(0.0),
        _ => Err(DropReason { first: s1, second: s2 }),
    }
}

/// `1{δ > −ε′}`: 1 means the first (cheaper) relaxation is preferred.
pub fn classify_label(delta: f64, slack: f64) -> u8 {
    u8::from(delta > -slack)
}

fn check(y: usize, p: usize) -> Result<(), MetricError> {
    if y != p {
        return Err(MetricError::LengthMismatch(y, p));
    }
    if y == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Accuracy plus support-weighted precision, recall and F1 over the
/// classes present in `y`. A class with no predictions gets precision 0.
pub fn metrics_classification(y: &[u8], pred: &[u8]) -> Result<ClassificationMetrics, MetricError> {
    check(y.len(), pred.len())?;
    let total = y.len() as f64;
    let correct = y.iter().zip(pred).filter(|(a, b)| a == b).count() as f64;
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for class in [0u8, 1u8] {
        let support = y.iter().filter(|&&v| v == class).count();
        if support == 0 {
            continue;
        }
        let tp = y.iter().zip(pred).filter(|&(&a, &b)| a == class && b == class).count() as f64;
        let predicted = pred.iter().filter(|&&v| v == class).count() as f64;
        let p = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let r = tp / support as f64;
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let w = support as f64 / total;
        precision += w * p;
        recall += w * r;
        f1 += w * f;
    }
    Ok(ClassificationMetrics { accuracy: correct / total, precision, recall, f1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    pub r_accuracy: f64,
}

/// Sign with `sign(0) = +1`.
fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Fraction of predictions with the right sign, also accepting a positive
/// prediction when the target lies in `(−ε, 0)`.
pub fn r_accuracy(y: &[f64], pred: &[f64], eps: f64) -> Result<f64, MetricError> {
    check(y.len(), pred.len())?;
    let hits = y
        .iter()
        .zip(pred)
        .filter(|&(&t, &p)| sign(t) == sign(p) || (-eps < t && t < 0.0 && p > 0.0))
        .count();
    Ok(hits as f64 / y.len() as f64)
}

/// MAE, MSE, RMSE, R² and r-accuracy. With constant targets R² is 1 for
/// an exact fit and 0 otherwise.
pub fn metrics_regression(y: &[f64], pred: &[f64], eps: f64) -> Result<RegressionMetrics, MetricError> {
    check(y.len(), pred.len())?;
    let len = y.len() as f64;
    let mae = y.iter().zip(pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / len;
    let sse = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mse = sse / len;
    let mean = y.iter().sum::<f64>() / len;
    let sst = y.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>();
    let r2 = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(RegressionMetrics { mae, mse, rmse: mse.sqrt(), r2, r_accuracy: r_accuracy(y, pred, eps)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use SolveStatus::*;

    #[test]
    fn delta_rules() {
        assert_eq!(compute_delta(Optimal, -5.0, Optimal, -5.0), Ok(0.0));
        assert!((compute_delta(Optimal, -1.0, Optimal, -2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(compute_delta(Optimal, -1.0, Unbounded, f64::NEG_INFINITY), Ok(1.0));
        assert_eq!(compute_delta(Unbounded, f64::NEG_INFINITY, Optimal, 3.0), Ok(-1.0));
        assert_eq!(compute_delta(Unbounded, 0.0, Unbounded, 0.0), Ok(0.0));
        assert_eq!(compute_delta(Optimal, 0.0, Optimal, 0.0), Ok(0.0));
        assert!(compute_delta(Infeasible, 0.0, Optimal, 1.0).is_err());
        assert!(compute_delta(Optimal, 0.0, NumericalFailure, 1.0).is_err());
        assert!(compute_delta(IterationLimit, 0.0, Unbounded, 1.0).is_err());
    }

    #[test]
    fn label_rule() {
        assert_eq!(classify_label(0.2, 0.0), 1);
        assert_eq!(classify_label(-0.05, 0.1), 1);
        assert_eq!(classify_label(-0.5, 0.1), 0);
        assert_eq!(classify_label(0.0, 0.0), 0);
    }

    #[test]
    fn classification_examples() {
        let m = metrics_classification(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(metrics_classification(&[1, 0], &[0, 1]).unwrap().accuracy, 0.0);
        assert_eq!(metrics_classification(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap().accuracy, 0.75);
        assert_eq!(metrics_classification(&[1], &[1, 0]), Err(MetricError::LengthMismatch(1, 2)));
    }

    #[test]
    fn regression_examples() {
        let y = [0.5, -0.2, 0.1];
        let m = metrics_regression(&y, &y, 0.1).unwrap();
        assert_eq!((m.mae, m.mse, m.r2, m.r_accuracy), (0.0, 0.0, 1.0, 1.0));
        assert_eq!(r_accuracy(&[-0.05], &[0.3], 0.1).unwrap(), 1.0);
        assert_eq!(r_accuracy(&[-0.5], &[0.3], 0.1).unwrap(), 0.0);
        assert_eq!(r_accuracy(&[0.0], &[0.0], 0.1).unwrap(), 1.0);
    }
}
