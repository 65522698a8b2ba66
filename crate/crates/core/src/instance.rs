//! QCQP instance data and its `*.qcqp.json` file format.
//!
//! An instance is
//!
//! ```text
//! min  xᵀA₀x + 2b₀ᵀx + c₀
//! s.t. xᵀAₖx + 2bₖᵀx + cₖ ≤ 0,   k = 1..m
//!      l ≤ x ≤ u
//! ```
//!
//! with dense symmetric `Aₖ`. Bounds may be infinite; on disk they are
//! written as the strings `"+inf"` / `"-inf"`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct QcqpInstance {
    pub n: usize,
    pub m: usize,
    /// A₀..Aₘ
    pub a: Vec<Matrix>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// True when the bounds came with the instance, false when they were
    /// derived from a strictly convex constraint.
    pub bounds_exist: bool,
    pub instance_id: String,
    pub seed: u64,
    pub family_tags: Vec<String>,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unsupported schema_version {found} (expected {INSTANCE_SCHEMA_VERSION})")]
    Version { found: u64 },
    #[error("invalid instance: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl QcqpInstance {
    /// Builds an instance, symmetrizing every `Aₖ` as `(A + Aᵀ)/2`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Vec<Matrix>,
        b: Vec<Vec<f64>>,
        c: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        bounds_exist: bool,
        instance_id: impl Into<String>,
        seed: u64,
        family_tags: Vec<String>,
    ) -> Self {
        let n = lower.len();
        let m = a.len().saturating_sub(1);
        let a = a.into_iter().map(|ak| if ak.is_square() { ak.symmetrized() } else { ak }).collect();
        Self { n, m, a, b, c, lower, upper, bounds_exist, instance_id: instance_id.into(), seed, family_tags }
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// `xᵀAₖx + 2bₖᵀx + cₖ`
    pub fn quadratic(&self, k: usize, x: &[f64]) -> f64 {
        self.a[k].quad_form(x) + 2.0 * crate::linalg::dot(&self.b[k], x) + self.c[k]
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.quadratic(0, x)
    }

    /// Whether `x` satisfies every constraint and bound up to `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&xi, (&l, &u))| xi >= l - tol && xi <= u + tol)
            && (1..=self.m).all(|k| self.quadratic(k, x) <= tol)
    }
}

/// Outcome of [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the structural invariants of an instance. Never fails; every
/// problem found is listed in the report.
pub fn validate_instance(inst: &QcqpInstance) -> ValidationReport {
    let mut v = Vec::new();
    let n = inst.n;
    if n == 0 {
        v.push("dimension mismatch: n must be positive".to_string());
    }
    if inst.m == 0 {
        v.push("dimension mismatch: m must be positive".to_string());
    }
    let k_expected = inst.m + 1;
    if inst.a.len() != k_expected || inst.b.len() != k_expected || inst.c.len() != k_expected {
        v.push(format!(
            "dimension mismatch: expected {k_expected} entries for A, b, c; got {}, {}, {}",
            inst.a.len(),
            inst.b.len(),
            inst.c.len()
        ));
    }
    if inst.lower.len() != n || inst.upper.len() != n {
        v.push(format!("dimension mismatch: bounds must have length {n}"));
    }
    let mut non_finite = false;
    for (k, ak) in inst.a.iter().enumerate() {
        if ak.rows() != n || ak.cols() != n {
            v.push(format!("dimension mismatch: A_{k} is {}x{}", ak.rows(), ak.cols()));
            continue;
        }
        if !ak.all_finite() {
            non_finite = true;
        } else if !ak.is_exactly_symmetric() {
            v.push(format!("asymmetry: A_{k} is not exactly symmetric"));
        }
    }
    for (k, bk) in inst.b.iter().enumerate() {
        if bk.len() != n {
            v.push(format!("dimension mismatch: b_{k} has length {}", bk.len()));
        }
        if bk.iter().any(|x| !x.is_finite()) {
            non_finite = true;
        }
    }
    if inst.c.iter().any(|x| !x.is_finite()) {
        non_finite = true;
    }
    if inst.lower.iter().chain(&inst.upper).any(|x| x.is_nan()) {
        non_finite = true;
    }
    if non_finite {
        v.push("non-finite entry".to_string());
    }
    for (i, (&l, &u)) in inst.lower.iter().zip(&inst.upper).enumerate() {
        if l.is_finite() && u.is_finite() && l > u {
            v.push(format!("bound order: l[{i}] = {l} > u[{i}] = {u}"));
        }
        if l == f64::INFINITY || u == f64::NEG_INFINITY {
            v.push(format!("bound order: empty range at index {i}"));
        }
    }
    if !inst.family_tags.is_empty() && inst.family_tags.len() != k_expected {
        v.push(format!("dimension mismatch: {} family tags for {k_expected} matrices", inst.family_tags.len()));
    }
    ValidationReport { violations: v }
}

/// A real that may be ±∞ or NaN, written as a JSON number or one of the
/// strings `"+inf"`, `"-inf"`, `"nan"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum ExtReal {
    Num(f64),
    Text(String),
}

impl ExtReal {
    pub(crate) fn encode(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::Text("+inf".into())
        } else if v == f64::NEG_INFINITY {
            ExtReal::Text("-inf".into())
        } else if v.is_nan() {
            ExtReal::Text("nan".into())
        } else {
            ExtReal::Num(v)
        }
    }

    pub(crate) fn decode(&self) -> Result<f64, String> {
        match self {
            ExtReal::Num(v) => Ok(*v),
            ExtReal::Text(s) => match s.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(format!("expected a number, \"+inf\", \"-inf\" or \"nan\", found {other:?}")),
            },
        }
    }
}

pub mod ext_real {
    use super::ExtReal;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        ExtReal::encode(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        ExtReal::deserialize(d)?.decode().map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    schema_version: u64,
    instance_id: String,
    seed: u64,
    n: usize,
    m: usize,
    bounds_exist: bool,
    family_tags: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<f64>>>,
    b: Vec<Vec<f64>>,
    c: Vec<f64>,
    l: Vec<ExtReal>,
    u: Vec<ExtReal>,
}

/// Serializes an instance to pretty-printed JSON bytes.
pub fn save_instance(inst: &QcqpInstance) -> Vec<u8> {
    let file = InstanceFile {
        schema_version: INSTANCE_SCHEMA_VERSION as u64,
        instance_id: inst.instance_id.clone(),
        seed: inst.seed,
        n: inst.n,
        m: inst.m,
        bounds_exist: inst.bounds_exist,
        family_tags: inst.family_tags.clone(),
        a: inst.a.iter().map(Matrix::to_rows).collect(),
        b: inst.b.clone(),
        c: inst.c.clone(),
        l: inst.lower.iter().map(|&v| ExtReal::encode(v)).collect(),
        u: inst.upper.iter().map(|&v| ExtReal::encode(v)).collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("instance serialization cannot fail");
    out.push(b'\n');
    out
}

pub(crate) fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    for (i, &b) in bytes.iter().enumerate() {
        if current == line {
            return (i + column.saturating_sub(1)).min(bytes.len());
        }
        if b == b'\n' {
            current += 1;
        }
    }
    bytes.len()
}

fn parse_error(bytes: &[u8], e: serde_json::Error) -> InstanceError {
    InstanceError::Parse { offset: byte_offset(bytes, e.line(), e.column()), message: e.to_string() }
}

/// Parses an instance. The result is validated; asymmetric matrices are
/// symmetrized on construction.
pub fn load_instance(bytes: &[u8]) -> Result<QcqpInstance, InstanceError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| parse_error(bytes, e))?;
    let version = value.get("schema_version").and_then(serde_json::Value::as_u64);
    match version {
        Some(v) if v == INSTANCE_SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(InstanceError::Version { found: v }),
        None => {
            return Err(InstanceError::Parse { offset: 0, message: "missing or invalid schema_version".into() })
        }
    }
    let file: InstanceFile = serde_json::from_value(value)
        .map_err(|e| InstanceError::Parse { offset: 0, message: e.to_string() })?;
    let decode_all = |vals: &[ExtReal]| -> Result<Vec<f64>, InstanceError> {
        vals.iter().map(|v| v.decode().map_err(|m| InstanceError::Parse { offset: 0, message: m })).collect()
    };
    let lower = decode_all(&file.l)?;
    let upper = decode_all(&file.u)?;
    let mut a = Vec::with_capacity(file.a.len());
    for (k, rows) in file.a.iter().enumerate() {
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(InstanceError::Invalid(vec![format!("dimension mismatch: A_{k} is not square")]));
        }
        a.push(Matrix::from_rows(rows));
    }
    let mut inst = QcqpInstance::new(
        a,
        file.b,
        file.c,
        lower,
        upper,
        file.bounds_exist,
        file.instance_id,
        file.seed,
        file.family_tags,
    );
    if inst.n != file.n || inst.m != file.m {
        return Err(InstanceError::Invalid(vec![format!(
            "dimension mismatch: header says n={}, m={} but data has n={}, m={}",
            file.n, file.m, inst.n, inst.m
        )]));
    }
    inst.n = file.n;
    let report = validate_instance(&inst);
    if !report.is_pass() {
        return Err(InstanceError::Invalid(report.violations));
    }
    Ok(inst)
}
