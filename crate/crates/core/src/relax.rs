//! LP (McCormick), SDP and SDP′ relaxations of the lifted QCQP.
//!
//! Variables are laid out as `y = (x₁..xₙ, X₁₁, X₁₂, …, X₁ₙ, X₂₂, …, Xₙₙ)`,
//! i.e. `x` followed by the upper triangle of `X` in row-major order. In the
//! lifted space every quadratic `xᵀAx + 2bᵀx + c` becomes the linear form
//! `A•X + 2bᵀx + c`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::QcqpInstance;
use crate::linalg::{dot, eig_sym, Cholesky, LinalgError, Matrix};

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("relaxation needs finite bounds on every variable")]
    InfiniteBounds,
    #[error("empty ellipsoid: bᵀA⁻¹b − c = {0}")]
    EmptyEllipsoid(f64),
    #[error("no strictly convex constraint to derive bounds from")]
    NoStrictlyConvexConstraint,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RelaxKind {
    #[serde(rename = "LP")]
    Lp,
    #[serde(rename = "SDP")]
    Sdp,
    #[serde(rename = "SDP'")]
    SdpPrime,
}

impl RelaxKind {
    pub fn name(self) -> &'static str {
        match self {
            RelaxKind::Lp => "LP",
            RelaxKind::Sdp => "SDP",
            RelaxKind::SdpPrime => "SDP'",
        }
    }
}

/// Variable layout: `n` entries of `x`, plus the upper triangle of `X` when
/// `lifted`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    pub n: usize,
    pub lifted: bool,
}

impl VariableLayout {
    pub fn lifted(n: usize) -> Self {
        Self { n, lifted: true }
    }

    /// Plain `x` variables only; used for generic LPs.
    pub fn plain(n: usize) -> Self {
        Self { n, lifted: false }
    }

    pub fn len(&self) -> usize {
        if self.lifted {
            self.n + self.n * (self.n + 1) / 2
        } else {
            self.n
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> usize {
        i
    }

    /// Index of `X_ij` (order of `i`, `j` irrelevant).
    pub fn xx(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.lifted);
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // row i of the upper triangle starts at i·n − i(i−1)/2
        self.n + i * self.n - i * i.saturating_sub(1) / 2 + (j - i)
    }

    pub fn name(&self, k: usize) -> String {
        if k < self.n {
            return format!("x[{k}]");
        }
        let mut idx = k - self.n;
        for i in 0..self.n {
            let len = self.n - i;
            if idx < len {
                return format!("X[{},{}]", i, i + idx);
            }
            idx -= len;
        }
        format!("?[{k}]")
    }

    /// Linear coefficients of `A•X + 2bᵀx` in this layout.
    pub fn lift(&self, a: &Matrix, b: &[f64]) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.len()];
        for i in 0..self.n {
            coeffs[self.x(i)] = 2.0 * b[i];
            coeffs[self.xx(i, i)] = a[(i, i)];
            for j in (i + 1)..self.n {
                coeffs[self.xx(i, j)] = a[(i, j)] + a[(j, i)];
            }
        }
        coeffs
    }

    /// Packs `(x, X)` into a variable vector.
    pub fn pack(&self, x: &[f64], xx: &Matrix) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        y[..self.n].copy_from_slice(x);
        for i in 0..self.n {
            for j in i..self.n {
                y[self.xx(i, j)] = xx[(i, j)];
            }
        }
        y
    }

    /// Splits a variable vector into `x` and the symmetric `X`.
    pub fn unpack(&self, y: &[f64]) -> (Vec<f64>, Matrix) {
        let x = y[..self.n].to_vec();
        let mut xx = Matrix::zeros(self.n, self.n);
        if self.lifted {
            for i in 0..self.n {
                for j in i..self.n {
                    xx[(i, j)] = y[self.xx(i, j)];
                    xx[(j, i)] = y[self.xx(i, j)];
                }
            }
        }
        (x, xx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub label: String,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub sense: Sense,
}

/// A linear program over the variable layout, optionally with the PSD
/// constraint `[X x; xᵀ 1] ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub kind: Option<RelaxKind>,
    pub layout: VariableLayout,
    pub objective: Vec<f64>,
    pub constant: f64,
    pub rows: Vec<LinearRow>,
    /// Whether `[X x; xᵀ 1]` (order n+1) must be PSD.
    pub psd_block: bool,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ConicProgram {
    /// Empty program with free variables and zero objective.
    pub fn new(layout: VariableLayout) -> Self {
        let nv = layout.len();
        Self {
            kind: None,
            layout,
            objective: vec![0.0; nv],
            constant: 0.0,
            rows: Vec::new(),
            psd_block: false,
            lower: vec![f64::NEG_INFINITY; nv],
            upper: vec![f64::INFINITY; nv],
        }
    }

    pub fn var_count(&self) -> usize {
        self.layout.len()
    }

    pub fn psd_order(&self) -> Option<usize> {
        self.psd_block.then_some(self.layout.n + 1)
    }

    pub fn add_row(&mut self, label: impl Into<String>, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        assert_eq!(coeffs.len(), self.var_count(), "row length must match the layout");
        self.rows.push(LinearRow { label: label.into(), coeffs, rhs, sense });
    }

    /// Objective value at a variable vector, including the constant.
    pub fn evaluate(&self, y: &[f64]) -> f64 {
        dot(&self.objective, y) + self.constant
    }

    /// Largest violation of rows and bounds at `y` (PSD block not included).
    pub fn max_row_violation(&self, y: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let lhs = dot(&row.coeffs, y);
            let v = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
            };
            worst = worst.max(v);
        }
        for (k, &yk) in y.iter().enumerate() {
            worst = worst.max(self.lower[k] - yk).max(yk - self.upper[k]);
        }
        worst
    }

    /// `[X x; xᵀ 1]` at a variable vector.
    pub fn moment_matrix(&self, y: &[f64]) -> Matrix {
        let n = self.layout.n;
        let (x, xx) = self.layout.unpack(y);
        let mut m = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = xx[(i, j)];
            }
            m[(i, n)] = x[i];
            m[(n, i)] = x[i];
        }
        m[(n, n)] = 1.0;
        m
    }

    /// Human-readable listing of the objective, rows, bounds and PSD block.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        let kind = self.kind.map_or("custom", |k| k.name());
        let _ = writeln!(out, "program {kind} n={} vars={} rows={}", self.layout.n, self.var_count(), self.rows.len());
        let _ = writeln!(out, "minimize {} + {:?}", linear_text(&self.layout, &self.objective), self.constant);
        for row in &self.rows {
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, "  {}: {} {op} {:?}", row.label, linear_text(&self.layout, &row.coeffs), row.rhs);
        }
        for k in 0..self.var_count() {
            if self.lower[k].is_finite() || self.upper[k].is_finite() {
                let _ = writeln!(out, "  bound {:?} <= {} <= {:?}", self.lower[k], self.layout.name(k), self.upper[k]);
            }
        }
        if let Some(p) = self.psd_order() {
            let _ = writeln!(out, "  psd [X x; x' 1] order {p}");
        }
        out
    }
}

fn linear_text(layout: &VariableLayout, coeffs: &[f64]) -> String {
    let terms: Vec<String> =
        coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| format!("{c:?}*{}", layout.name(k))).collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

/// Box containing the ellipsoid `xᵀAx + 2bᵀx + c ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub center: Vec<f64>,
    /// Half-widths; `upper[i] − lower[i] == 2·radii[i]` holds exactly.
    pub radii: Vec<f64>,
}

/// `lᵢ, uᵢ = −eᵢᵀA⁻¹b ∓ Δᵢ` with `Δᵢ = sqrt(bᵀA⁻¹b − c)·sqrt(eᵢᵀA⁻¹eᵢ)`.
pub fn derive_artificial_bounds(a: &Matrix, b: &[f64], c: f64) -> Result<DerivedBounds, RelaxError> {
    let chol = Cholesky::factor(a)?;
    let ainv_b = chol.solve(b);
    let level = dot(b, &ainv_b) - c;
    if level < -1e-10 {
        return Err(RelaxError::EmptyEllipsoid(level));
    }
    let level = level.max(0.0).sqrt();
    let inv = chol.inverse();
    let n = b.len();
    let mut out = DerivedBounds {
        lower: vec![0.0; n],
        upper: vec![0.0; n],
        center: ainv_b.iter().map(|v| -v).collect(),
        radii: vec![0.0; n],
    };
    for i in 0..n {
        let delta = level * inv[(i, i)].max(0.0).sqrt();
        out.lower[i] = out.center[i] - delta;
        out.upper[i] = out.center[i] + delta;
        out.radii[i] = (out.upper[i] - out.lower[i]) / 2.0;
    }
    Ok(out)
}

/// Numerically strictly convex: `λmin > 1e-8·max(1, |λmax|)`.
pub fn is_strictly_convex(a: &Matrix) -> Result<bool, LinalgError> {
    let e = eig_sym(a)?;
    Ok(e.min() > 1e-8 * e.max().abs().max(1.0))
}

/// Index of the last strictly convex constraint `k ∈ 1..=m`, if any.
pub fn last_strictly_convex(inst: &QcqpInstance) -> Result<Option<usize>, LinalgError> {
    for k in (1..=inst.m).rev() {
        if is_strictly_convex(&inst.a[k])? {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Returns the instance unchanged when its bounds are finite; otherwise
/// replaces them with bounds derived from the last strictly convex
/// constraint (intersected with any finite original bound).
pub fn with_finite_bounds(inst: &QcqpInstance) -> Result<QcqpInstance, RelaxError> {
    if inst.has_finite_bounds() {
        return Ok(inst.clone());
    }
    let k = last_strictly_convex(inst)?.ok_or(RelaxError::NoStrictlyConvexConstraint)?;
    let d = derive_artificial_bounds(&inst.a[k], &inst.b[k], inst.c[k])?;
    let mut out = inst.clone();
    for i in 0..inst.n {
        out.lower[i] = inst.lower[i].max(d.lower[i]);
        out.upper[i] = inst.upper[i].min(d.upper[i]);
    }
    Ok(out)
}

fn base_program(inst: &QcqpInstance, kind: RelaxKind) -> ConicProgram {
    let layout = VariableLayout::lifted(inst.n);
    let mut p = ConicProgram::new(layout);
    p.kind = Some(kind);
    p.objective = layout.lift(&inst.a[0], &inst.b[0]);
    p.constant = inst.c[0];
    for k in 1..=inst.m {
        p.add_row(format!("quad[{k}]"), layout.lift(&inst.a[k], &inst.b[k]), Sense::Le, -inst.c[k]);
    }
    for i in 0..inst.n {
        p.lower[layout.x(i)] = inst.lower[i];
        p.upper[layout.x(i)] = inst.upper[i];
    }
    p
}

/// McCormick LP relaxation: `m` linearized rows plus four envelope rows per
/// pair `i ≤ j`.
pub fn build_lp(inst: &QcqpInstance) -> Result<ConicProgram, RelaxError> {
    if !inst.has_finite_bounds() {
        return Err(RelaxError::InfiniteBounds);
    }
    let mut p = base_program(inst, RelaxKind::Lp);
    let layout = p.layout;
    let (l, u) = (&inst.lower, &inst.upper);
    let nv = layout.len();
    for i in 0..inst.n {
        for j in i..inst.n {
            // Each row is written as X_ij + α x_i + β x_j (sense) rhs.
            let envelopes = [
                ("mc_ll", -l[j], -l[i], Sense::Ge, -l[i] * l[j]),
                ("mc_lu", -u[j], -l[i], Sense::Le, -l[i] * u[j]),
                ("mc_ul", -l[j], -u[i], Sense::Le, -u[i] * l[j]),
                ("mc_uu", -u[j], -u[i], Sense::Ge, -u[i] * u[j]),
            ];
            for (name, alpha, beta, sense, rhs) in envelopes {
                let mut coeffs = vec![0.0; nv];
                coeffs[layout.xx(i, j)] = 1.0;
                coeffs[layout.x(i)] += alpha;
                coeffs[layout.x(j)] += beta;
                p.add_row(format!("{name}[{i},{j}]"), coeffs, sense, rhs);
            }
        }
    }
    Ok(p)
}

/// SDP relaxation: linearized rows, box on `x`, `[X x; xᵀ 1] ⪰ 0`.
pub fn build_sdp(inst: &QcqpInstance) -> ConicProgram {
    let mut p = base_program(inst, RelaxKind::Sdp);
    p.psd_block = true;
    p
}

/// SDP plus the chord rows `X_ii ≤ (uᵢ + lᵢ)xᵢ − uᵢlᵢ`.
pub fn build_sdp_prime(inst: &QcqpInstance) -> Result<ConicProgram, RelaxError> {
    if !inst.has_finite_bounds() {
        return Err(RelaxError::InfiniteBounds);
    }
    let mut p = base_program(inst, RelaxKind::SdpPrime);
    p.psd_block = true;
    let layout = p.layout;
    for i in 0..inst.n {
        let (l, u) = (inst.lower[i], inst.upper[i]);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[layout.xx(i, i)] = 1.0;
        coeffs[layout.x(i)] = -(u + l);
        p.add_row(format!("chord[{i}]"), coeffs, Sense::Le, -u * l);
    }
    Ok(p)
}

pub fn build(inst: &QcqpInstance, kind: RelaxKind) -> Result<ConicProgram, RelaxError> {
    match kind {
        RelaxKind::Lp => build_lp(inst),
        RelaxKind::Sdp => Ok(build_sdp(inst)),
        RelaxKind::SdpPrime => build_sdp_prime(inst),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_instance(n: usize, a0: Matrix) -> QcqpInstance {
        QcqpInstance::new(
            vec![a0, Matrix::identity(n)],
            vec![vec![0.0; n]; 2],
            vec![0.0, -100.0],
            vec![0.0; n],
            vec![1.0; n],
            true,
            "t",
            0,
            vec!["custom".into(); 2],
        )
    }

    #[test]
    fn layout_indices_are_dense() {
        let l = VariableLayout::lifted(3);
        let mut seen: Vec<usize> = (0..3).map(|i| l.x(i)).collect();
        for i in 0..3 {
            for j in i..3 {
                seen.push(l.xx(i, j));
                assert_eq!(l.xx(i, j), l.xx(j, i));
            }
        }
        assert_eq!(seen, (0..9).collect::<Vec<_>>());
        assert_eq!(l.name(l.xx(1, 2)), "X[1,2]");
    }

    #[test]
    fn lift_matches_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 4;
        let a = Matrix::from_vec(n, n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).symmetrized();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut xx = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                xx[(i, j)] = x[i] * x[j];
            }
        }
        let layout = VariableLayout::lifted(n);
        let lhs = dot(&layout.lift(&a, &b), &layout.pack(&x, &xx));
        let rhs = a.quad_form(&x) + 2.0 * dot(&b, &x);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn row_counts() {
        let inst = unit_instance(2, Matrix::identity(2));
        assert_eq!(build_lp(&inst).unwrap().rows.len(), 1 + 12);
        let sdp = build_sdp(&inst);
        let sdpp = build_sdp_prime(&inst).unwrap();
        assert_eq!(sdpp.rows.len(), sdp.rows.len() + 2);
        assert_eq!(sdp.psd_order(), Some(3));
        assert_eq!(build_lp(&inst).unwrap().psd_order(), None);
    }

    #[test]
    fn diagonal_envelopes_are_secant_and_tangents() {
        let mut inst = unit_instance(1, Matrix::identity(1));
        inst.lower = vec![-1.0];
        inst.upper = vec![2.0];
        let lp = build_lp(&inst).unwrap();
        // X ≥ 2l x − l², X ≤ (l+u)x − lu, X ≥ 2u x − u²
        let rows: Vec<_> = lp.rows.iter().skip(1).collect();
        assert_eq!(rows[0].coeffs, vec![2.0, 1.0]);
        assert_eq!(rows[0].rhs, -1.0);
        assert_eq!(rows[1].coeffs, vec![-1.0, 1.0]);
        assert_eq!(rows[1].rhs, 2.0);
        assert_eq!(*rows[1], LinearRow { label: "mc_lu[0,0]".into(), ..rows[2].clone() });
        assert_eq!(rows[3].coeffs, vec![-4.0, 1.0]);
        assert_eq!(rows[3].rhs, -4.0);
    }

    #[test]
    fn rank_one_points_satisfy_envelopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.random_range(1..5);
            let mut inst = unit_instance(n, Matrix::identity(n));
            for i in 0..n {
                let a: f64 = rng.random_range(-3.0..3.0);
                let b: f64 = rng.random_range(-3.0..3.0);
                inst.lower[i] = a.min(b);
                inst.upper[i] = a.max(b);
            }
            let lp = build_lp(&inst).unwrap();
            let x: Vec<f64> = (0..n).map(|i| rng.random_range(inst.lower[i]..=inst.upper[i])).collect();
            let mut xx = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    xx[(i, j)] = x[i] * x[j];
                }
            }
            let y = lp.layout.pack(&x, &xx);
            for row in lp.rows.iter().skip(1) {
                let lhs = dot(&row.coeffs, &y);
                match row.sense {
                    Sense::Le => assert!(lhs <= row.rhs + 1e-9, "{}", row.label),
                    Sense::Ge => assert!(lhs >= row.rhs - 1e-9, "{}", row.label),
                }
            }
        }
    }

    #[test]
    fn unit_ball_and_axis_scaling() {
        let d = derive_artificial_bounds(&Matrix::identity(3), &[0.0; 3], -1.0).unwrap();
        assert_eq!(d.lower, vec![-1.0; 3]);
        assert_eq!(d.upper, vec![1.0; 3]);
        let d = derive_artificial_bounds(&Matrix::from_diag(&[4.0]), &[0.0], -1.0).unwrap();
        assert_eq!((d.lower[0], d.upper[0]), (-0.5, 0.5));
        assert!(matches!(
            derive_artificial_bounds(&Matrix::identity(1), &[0.0], 1.0),
            Err(RelaxError::EmptyEllipsoid(_))
        ));
        assert!(derive_artificial_bounds(&Matrix::from_diag(&[1.0, -1.0]), &[0.0; 2], -1.0).is_err());
    }

    #[test]
    fn sdp_prime_needs_finite_bounds() {
        let mut inst = unit_instance(1, Matrix::from_diag(&[-1.0]));
        inst.upper = vec![f64::INFINITY];
        assert!(matches!(build_sdp_prime(&inst), Err(RelaxError::InfiniteBounds)));
        assert!(matches!(build_lp(&inst), Err(RelaxError::InfiniteBounds)));
        assert_eq!(build_sdp(&inst).rows.len(), 1);
    }

    #[test]
    fn dump_lists_everything() {
        let inst = unit_instance(1, Matrix::from_diag(&[-1.0]));
        let dump = build_sdp_prime(&inst).unwrap().debug_dump();
        assert!(dump.starts_with("program SDP' n=1 vars=2 rows=2"));
        assert!(dump.contains("minimize -1.0*X[0,0] + 0.0"));
        assert!(dump.contains("chord[0]: -1.0*x[0] + 1.0*X[0,0] <= -0.0"));
        assert!(dump.contains("psd [X x; x' 1] order 2"));
    }
}
