//! Instance features under three schemas.
//!
//! * fDD: every eigenvalue of every matrix, so the length depends on `n` and `m`.
//! * sDD: per-matrix spectral summaries, length depends on `m` only.
//! * DI: statistics over the constraint matrices, always 55 values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::{pattern_flags, PatternFlags, PATTERN_NAMES};
use crate::instance::QcqpInstance;
use crate::linalg::{eig_sym, negative_threshold, rank_from_eigenvalues, LinalgError, Matrix, RANK_REL_TOL};

/// Number of sparsity patterns tested per matrix.
pub const PATTERN_COUNT: usize = 6;
/// Length of every DI vector.
pub const DI_LEN: usize = 55;
/// Names of the seven statistics, in output order.
pub const STAT_NAMES: [&str; 7] = ["min", "max", "avg", "third_moment", "iqr", "outliers", "cv"];
/// Tolerance of the equality test in [`proportion_eq`].
pub const EQ_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("negative-mass ratio of a zero vector")]
    ZeroVector,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Schema {
    #[serde(rename = "fDD")]
    Fdd,
    #[serde(rename = "sDD")]
    Sdd,
    #[serde(rename = "DI")]
    Di,
}

impl Schema {
    pub const ALL: [Schema; 3] = [Schema::Fdd, Schema::Sdd, Schema::Di];

    pub fn name(self) -> &'static str {
        match self {
            Schema::Fdd => "fDD",
            Schema::Sdd => "sDD",
            Schema::Di => "DI",
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Schema {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fdd" => Ok(Schema::Fdd),
            "sdd" => Ok(Schema::Sdd),
            "di" => Ok(Schema::Di),
            _ => Err(format!("unknown schema '{s}' (expected fDD, sDD or DI)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema: Schema,
    pub n: usize,
    pub m: usize,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Closed-form feature count.
pub fn feature_count(schema: Schema, n: usize, m: usize) -> usize {
    match schema {
        Schema::Fdd => (n + PATTERN_COUNT + 2) * (m + 1) + 1,
        Schema::Sdd => (PATTERN_COUNT + 5) * (m + 1) + 1,
        Schema::Di => DI_LEN,
    }
}

/// `Σ|xᵢ|·1{xᵢ<0} / ‖x‖₁`; entries count as negative below the linalg
/// negativity threshold.
pub fn neg_ratio(x: &[f64]) -> Result<f64, FeatureError> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 == 0.0 {
        return Err(FeatureError::ZeroVector);
    }
    let thr = negative_threshold(x);
    let neg: f64 = x.iter().filter(|&&v| v < thr).map(|v| v.abs()).sum();
    Ok(neg / l1)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    pub third_moment: f64,
    pub iqr: f64,
    pub outliers: f64,
    pub cv: f64,
}

impl Stats {
    pub fn as_array(&self) -> [f64; 7] {
        [self.min, self.max, self.avg, self.third_moment, self.iqr, self.outliers, self.cv]
    }
}

/// The statistic set over a non-empty sample.
pub fn stats_q(x: &[f64]) -> Stats {
    assert!(!x.is_empty(), "statistics of an empty sample");
    let len = x.len() as f64;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Sums run over the sorted sample so the result does not depend on the
    // order of the input.
    let avg = sorted.iter().sum::<f64>() / len;
    let third_moment = sorted.iter().map(|v| (v - avg).powi(3)).sum::<f64>() / len;
    let sigma = (sorted.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / len).sqrt();
    let (q1, q3) = (quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let outliers = x.iter().filter(|&&v| v < lo || v > hi).count() as f64 / len;
    let cv = if avg.abs() <= 1e-12 { 0.0 } else { sigma / avg };
    Stats { min: sorted[0], max: sorted[sorted.len() - 1], avg, third_moment, iqr, outliers, cv }
}

/// Fraction of entries within [`EQ_TOL`] of `alpha`.
pub fn proportion_eq(x: &[f64], alpha: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().filter(|&&v| (v - alpha).abs() <= EQ_TOL).count() as f64 / x.len() as f64
}

/// Spectral and structural summary of one data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSummary {
    /// Non-increasing.
    pub eigenvalues: Vec<f64>,
    pub neg_count: usize,
    /// 0 for the zero matrix.
    pub neg_ratio: f64,
    pub rank: usize,
    pub flags: PatternFlags,
}

impl MatrixSummary {
    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    fn flag_values(&self) -> [f64; PATTERN_COUNT] {
        self.flags.as_array().map(|b| if b { 1.0 } else { 0.0 })
    }
}

pub fn summarize(a: &Matrix) -> Result<MatrixSummary, LinalgError> {
    let eigenvalues = eig_sym(a)?.eigenvalues;
    let thr = negative_threshold(&eigenvalues);
    let neg_count = eigenvalues.iter().filter(|&&v| v < thr).count();
    let neg_ratio = neg_ratio(&eigenvalues).unwrap_or(0.0);
    let rank = rank_from_eigenvalues(&eigenvalues, RANK_REL_TOL);
    Ok(MatrixSummary { eigenvalues, neg_count, neg_ratio, rank, flags: pattern_flags(a) })
}

/// Summaries of `A_0 … A_m`, shared by all schemas.
pub fn summarize_instance(inst: &QcqpInstance) -> Result<Vec<MatrixSummary>, LinalgError> {
    inst.a.iter().map(summarize).collect()
}

pub fn feature_names(schema: Schema, n: usize, m: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(feature_count(schema, n, m));
    let flags = |names: &mut Vec<String>, k: usize| {
        for p in PATTERN_NAMES {
            names.push(format!("A{k}.P_{p}"));
        }
    };
    match schema {
        Schema::Fdd => {
            for k in 0..=m {
                for j in 1..=n {
                    names.push(format!("A{k}.lambda_{j}"));
                }
                names.push(format!("A{k}.neg_count"));
                names.push(format!("A{k}.rank"));
                flags(&mut names, k);
            }
        }
        Schema::Sdd => {
            for k in 0..=m {
                for f in ["neg_count/n", "neg_ratio", "lambda_min", "lambda_max", "rank/n"] {
                    names.push(format!("A{k}.{f}"));
                }
                flags(&mut names, k);
            }
        }
        Schema::Di => {
            for f in ["neg_count/n", "neg_ratio", "lambda_min", "lambda_max", "rank/n"] {
                names.push(format!("A0.{f}"));
            }
            names.push("g_0(Theta)".into());
            names.push("g_1(Theta)".into());
            names.push("bounds_exist".into());
            for v in ["Xi", "Theta", "Lambda_min", "Lambda_max", "varrho"] {
                for q in STAT_NAMES {
                    names.push(format!("{q}({v})"));
                }
            }
            flags(&mut names, 0);
            for p in PATTERN_NAMES {
                names.push(format!("g_{p}(Phi_{p})"));
            }
            return names;
        }
    }
    names.push("bounds_exist".into());
    names
}

/// Feature vector of an instance from precomputed summaries.
pub fn extract_from(inst: &QcqpInstance, summaries: &[MatrixSummary], schema: Schema) -> FeatureVector {
    let (n, m) = (inst.n, inst.m);
    let nf = n as f64;
    let bounds = if inst.bounds_exist { 1.0 } else { 0.0 };
    let mut values = Vec::with_capacity(feature_count(schema, n, m));
    match schema {
        Schema::Fdd => {
            for s in summaries {
                values.extend(&s.eigenvalues);
                values.push(s.neg_count as f64);
                values.push(s.rank as f64);
                values.extend(s.flag_values());
            }
            values.push(bounds);
        }
        Schema::Sdd => {
            for s in summaries {
                values.extend([
                    s.neg_count as f64 / nf,
                    s.neg_ratio,
                    s.lambda_min(),
                    s.lambda_max(),
                    s.rank as f64 / nf,
                ]);
                values.extend(s.flag_values());
            }
            values.push(bounds);
        }
        Schema::Di => {
            let a0 = &summaries[0];
            let cons = &summaries[1..];
            let xi: Vec<f64> = cons.iter().map(|s| s.neg_count as f64 / nf).collect();
            let theta: Vec<f64> = cons.iter().map(|s| s.neg_ratio).collect();
            let lmin: Vec<f64> = cons.iter().map(MatrixSummary::lambda_min).collect();
            let lmax: Vec<f64> = cons.iter().map(MatrixSummary::lambda_max).collect();
            let rho: Vec<f64> = cons.iter().map(|s| s.rank as f64).collect();
            values.extend([
                a0.neg_count as f64 / nf,
                a0.neg_ratio,
                a0.lambda_min(),
                a0.lambda_max(),
                a0.rank as f64 / nf,
                proportion_eq(&theta, 0.0),
                proportion_eq(&theta, 1.0),
                bounds,
            ]);
            for v in [&xi, &theta, &lmin, &lmax, &rho] {
                values.extend(stats_q(v).as_array());
            }
            values.extend(a0.flag_values());
            for p in 0..PATTERN_COUNT {
                let phi: Vec<f64> = cons.iter().map(|s| s.flag_values()[p]).collect();
                values.extend([proportion_eq(&phi, 1.0)]);
            }
        }
    }
    FeatureVector { schema, n, m, names: feature_names(schema, n, m), values }
}

pub fn extract(inst: &QcqpInstance, schema: Schema) -> Result<FeatureVector, FeatureError> {
    Ok(extract_from(inst, &summarize_instance(inst)?, schema))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_instance(diags: &[&[f64]], bounds_exist: bool) -> QcqpInstance {
        let n = diags[0].len();
        let m1 = diags.len();
        QcqpInstance::new(
            diags.iter().map(|d| Matrix::from_diag(d)).collect(),
            vec![vec![0.0; n]; m1],
            vec![-1.0; m1],
            vec![0.0; n],
            vec![1.0; n],
            bounds_exist,
            "t",
            0,
            Vec::new(),
        )
    }

    #[test]
    fn neg_ratio_examples() {
        assert_eq!(neg_ratio(&[-2.0, 1.0, 1.0]).unwrap(), 0.5);
        assert_eq!(neg_ratio(&[1.0, 3.0]).unwrap(), 0.0);
        assert_eq!(neg_ratio(&[-1.0, -3.0]).unwrap(), 1.0);
        assert!(matches!(neg_ratio(&[0.0, 0.0]), Err(FeatureError::ZeroVector)));
    }

    #[test]
    fn stats_examples() {
        let s = stats_q(&[2.5, 2.5, 2.5]);
        assert_eq!(s.as_array(), [2.5, 2.5, 2.5, 0.0, 0.0, 0.0, 0.0]);
        let s = stats_q(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((s.min, s.max, s.avg, s.third_moment), (1.0, 4.0, 2.5, 0.0));
        assert_eq!(s.iqr, 1.5);
        let s = stats_q(&[0.0, 0.0, 0.0, 100.0]);
        assert_eq!(s.iqr, 25.0);
        assert_eq!(s.outliers, 0.25);
        assert_eq!(stats_q(&[-1.0, 1.0]).cv, 0.0);
        // population σ = 1, μ = 2
        assert_eq!(stats_q(&[1.0, 3.0]).cv, 0.5);
    }

    #[test]
    fn proportion_examples() {
        assert!((proportion_eq(&[0.0, 0.5, 0.0], 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(proportion_eq(&[1.0, 1.0], 1.0), 1.0);
        assert_eq!(proportion_eq(&[0.3], 0.0), 0.0);
    }

    #[test]
    fn lengths_and_names_match_counts() {
        for (n, m) in [(3, 1), (5, 1), (3, 2), (7, 4)] {
            let d: Vec<f64> = (0..n).map(|i| i as f64 - 1.0).collect();
            let diags: Vec<&[f64]> = (0..=m).map(|_| d.as_slice()).collect();
            let inst = diag_instance(&diags, true);
            for schema in Schema::ALL {
                let fv = extract(&inst, schema).unwrap();
                assert_eq!(fv.len(), feature_count(schema, n, m));
                assert_eq!(fv.names.len(), fv.len());
            }
        }
        assert_eq!(feature_count(Schema::Fdd, 5, 1), 27);
    }

    #[test]
    fn convex_instance_di() {
        let inst = diag_instance(&[&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], &[4.0, 0.0, 1.0]], false);
        let fv = extract(&inst, Schema::Di).unwrap();
        assert_eq!(fv.get("g_0(Theta)"), Some(1.0));
        assert_eq!(fv.get("g_1(Theta)"), Some(0.0));
        assert_eq!(fv.get("A0.neg_count/n"), Some(0.0));
        assert_eq!(fv.get("max(Xi)"), Some(0.0));
        assert_eq!(fv.get("bounds_exist"), Some(0.0));
        assert_eq!(fv.get("g_D(Phi_D)"), Some(1.0));
        assert_eq!(fv.get("min(varrho)"), Some(2.0));
    }

    #[test]
    fn fdd_layout() {
        let inst = diag_instance(&[&[-1.0, 2.0], &[0.0, -3.0]], true);
        let fv = extract(&inst, Schema::Fdd).unwrap();
        assert_eq!(fv.values[..4], [2.0, -1.0, 1.0, 2.0]);
        assert_eq!(fv.get("A1.lambda_2"), Some(-3.0));
        assert_eq!(fv.get("A1.rank"), Some(1.0));
        assert_eq!(fv.get("A1.P_D"), Some(1.0));
        assert_eq!(*fv.values.last().unwrap(), 1.0);
        let sdd = extract(&inst, Schema::Sdd).unwrap();
        assert_eq!(sdd.get("A1.neg_ratio"), Some(1.0));
        assert_eq!(sdd.get("A0.rank/n"), Some(1.0));
    }
}
