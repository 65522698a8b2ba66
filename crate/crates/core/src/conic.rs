//! Interior-point solver for LPs and single-block SDPs.
//!
//! Problems are brought to the standard form
//!
//! ```text
//! min cᵀy   s.t.  G y + s = h,   s ∈ K = R₊ˡ × S₊ᵖ
//! ```
//!
//! with the PSD part vectorized by `svec` (off-diagonals scaled by √2, so
//! inner products are preserved). The solver works on the homogeneous
//! self-dual embedding, which adds `τ, κ ≥ 0` and
//!
//! ```text
//! Gᵀz + cτ = 0,   Gy + s − hτ = 0,   cᵀy + hᵀz + κ = 0.
//! ```
//!
//! A solution with `τ > 0` is optimal after dividing by `τ`; one with
//! `κ > 0` certifies infeasibility (`hᵀz < 0`) or unboundedness (`cᵀy < 0`).
//! Each iteration uses Nesterov–Todd scaling and a Mehrotra
//! predictor-corrector step. The reduced KKT system is solved through a
//! dense QR factorization of the scaled constraint matrix `W⁻ᵀG`, with
//! iterative refinement against the unscaled equations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, eig_sym, norm2, svd_jacobi, Cholesky, LinalgError, Matrix, Qr};
use crate::relax::{ConicProgram, Sense};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("solve_lp called on a program with a PSD block")]
    ExpectedLp,
    #[error("solve_sdp called on a program without a PSD block")]
    ExpectedSdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Unbounded,
    Infeasible,
    NumericalFailure,
    IterationLimit,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::NumericalFailure => "NumericalFailure",
            SolveStatus::IterationLimit => "IterationLimit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Feasibility, gap and certificate tolerance.
    pub tol: f64,
    /// Iteration cap; `None` means `200 · rows`.
    pub max_iterations: Option<usize>,
    /// Fraction-to-boundary factor.
    pub step_fraction: f64,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
    /// Keep per-iteration records in the solution.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iterations: None, step_fraction: 0.99, verbose: false, record_trace: false }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Scaled residuals at the returned iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub tau: f64,
    pub kappa: f64,
    pub mu: f64,
    pub step: f64,
    /// `(|yᵀr_y| + |zᵀr_z|)/τ²`; weak duality guarantees
    /// `dual_objective ≤ primal_objective + duality_slack`.
    pub duality_slack: f64,
}

// ---------------------------------------------------------------------------
// svec

pub fn svec_len(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Position of entry `(i, j)` in `svec`, upper triangle row by row.
pub fn svec_index(p: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * p - i * i.saturating_sub(1) / 2 + (j - i)
}

pub fn svec(m: &Matrix) -> Vec<f64> {
    let p = m.rows();
    let mut v = Vec::with_capacity(svec_len(p));
    for i in 0..p {
        v.push(m[(i, i)]);
        for j in (i + 1)..p {
            v.push(SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    v
}

pub fn smat(v: &[f64], p: usize) -> Matrix {
    let mut m = Matrix::zeros(p, p);
    let mut k = 0;
    for i in 0..p {
        m[(i, i)] = v[k];
        k += 1;
        for j in (i + 1)..p {
            m[(i, j)] = v[k] / SQRT2;
            m[(j, i)] = m[(i, j)];
            k += 1;
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Standard form

/// `min cᵀy s.t. Gy + s = h, s ∈ R₊^lp_dim × S₊^psd_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeProblem {
    pub c: Vec<f64>,
    pub g: Matrix,
    pub h: Vec<f64>,
    pub lp_dim: usize,
    /// 0 when there is no PSD block.
    pub psd_order: usize,
}

impl ConeProblem {
    /// Standard form of a relaxation program. Linear rows (including finite
    /// variable bounds) are scaled to unit norm; the PSD block is
    /// `s = svec([X x; xᵀ 1])`.
    pub fn from_program(prog: &ConicProgram) -> Self {
        let nv = prog.var_count();
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for row in &prog.rows {
            match row.sense {
                Sense::Le => rows.push((row.coeffs.clone(), row.rhs)),
                Sense::Ge => rows.push((row.coeffs.iter().map(|v| -v).collect(), -row.rhs)),
            }
        }
        for k in 0..nv {
            if prog.upper[k].is_finite() {
                let mut e = vec![0.0; nv];
                e[k] = 1.0;
                rows.push((e, prog.upper[k]));
            }
            if prog.lower[k].is_finite() {
                let mut e = vec![0.0; nv];
                e[k] = -1.0;
                rows.push((e, -prog.lower[k]));
            }
        }
        for (coeffs, rhs) in &mut rows {
            let nrm = norm2(coeffs);
            if nrm > 0.0 {
                coeffs.iter_mut().for_each(|v| *v /= nrm);
                *rhs /= nrm;
            }
        }
        let lp_dim = rows.len();
        let p = prog.psd_order().unwrap_or(0);
        let dim = lp_dim + svec_len(p);
        let mut g = Matrix::zeros(dim, nv);
        let mut h = vec![0.0; dim];
        for (i, (coeffs, rhs)) in rows.iter().enumerate() {
            for k in 0..nv {
                g[(i, k)] = coeffs[k];
            }
            h[i] = *rhs;
        }
        if p > 0 {
            let n = prog.layout.n;
            let layout = prog.layout;
            for i in 0..n {
                g[(lp_dim + svec_index(p, i, n), layout.x(i))] = -SQRT2;
                for j in i..n {
                    let w = if i == j { -1.0 } else { -SQRT2 };
                    g[(lp_dim + svec_index(p, i, j), layout.xx(i, j))] = w;
                }
            }
            h[lp_dim + svec_index(p, n, n)] = 1.0;
        }
        Self { c: prog.objective.clone(), g, h, lp_dim, psd_order: p }
    }

    pub fn cone_dim(&self) -> usize {
        self.lp_dim + svec_len(self.psd_order)
    }
}

#[derive(Debug, Clone)]
pub struct ConeSolution {
    pub status: SolveStatus,
    /// `y/τ` when optimal, the raw iterate otherwise.
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub iterations: usize,
    pub residuals: Residuals,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Unbounded: direction `d` with `cᵀd = −1` and `−Gd ∈ K` (approximately).
    pub ray: Option<Vec<f64>>,
    /// Infeasible: `w ∈ K` with `hᵀw = −1` and `Gᵀw ≈ 0`.
    pub dual_ray: Option<Vec<f64>>,
    pub trace: Vec<IterationRecord>,
}

// ---------------------------------------------------------------------------
// Cone algebra

#[derive(Debug, Clone, Copy)]
struct Cone {
    lp: usize,
    p: usize,
}

impl Cone {
    fn dim(&self) -> usize {
        self.lp + svec_len(self.p)
    }

    fn degree(&self) -> usize {
        self.lp + self.p
    }

    fn identity(&self) -> Vec<f64> {
        let mut e = vec![1.0; self.lp];
        e.extend(svec(&Matrix::identity(self.p)));
        e
    }

    /// Smallest "eigenvalue" of a cone vector; `+∞` for the trivial cone.
    fn min_eig(&self, v: &[f64]) -> Result<f64, LinalgError> {
        let mut m = v[..self.lp].iter().copied().fold(f64::INFINITY, f64::min);
        if self.p > 0 {
            m = m.min(eig_sym(&smat(&v[self.lp..], self.p))?.min());
        }
        Ok(m)
    }

    /// Jordan product `a ∘ b`.
    fn jordan(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = a[..self.lp].iter().zip(&b[..self.lp]).map(|(x, y)| x * y).collect();
        if self.p > 0 {
            let am = smat(&a[self.lp..], self.p);
            let bm = smat(&b[self.lp..], self.p);
            let ab = am.matmul(&bm);
            out.extend(svec(&ab.add(&ab.transpose()).scale(0.5)));
        }
        out
    }
}

/// Nesterov–Todd scaling `W` with `W z = W⁻ᵀ s = λ`.
struct Scaling {
    cone: Cone,
    w: Vec<f64>,
    lam_lp: Vec<f64>,
    // PSD part: W u = svec(Rᵀ U R), with Rᵀ Z R = R⁻¹ S R⁻ᵀ = diag(λ).
    r: Matrix,
    rt: Matrix,
    rinv: Matrix,
    rinvt: Matrix,
    lam_psd: Vec<f64>,
}

/// `svec(tᵀ smat(v) t)`
fn congruence(t: &Matrix, v: &[f64], p: usize) -> Vec<f64> {
    let m = smat(v, p);
    svec(&t.transpose().matmul(&m).matmul(t))
}

impl Scaling {
    fn new(cone: Cone, s: &[f64], z: &[f64]) -> Result<Self, LinalgError> {
        let mut w = Vec::with_capacity(cone.lp);
        let mut lam_lp = Vec::with_capacity(cone.lp);
        for i in 0..cone.lp {
            if !(s[i] > 0.0 && z[i] > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { index: i, pivot: s[i].min(z[i]) });
            }
            w.push((s[i] / z[i]).sqrt());
            lam_lp.push((s[i] * z[i]).sqrt());
        }
        let p = cone.p;
        let (mut r, mut rinv, mut lam_psd) = (Matrix::zeros(0, 0), Matrix::zeros(0, 0), Vec::new());
        if p > 0 {
            let ls = Cholesky::factor_with_floor(&smat(&s[cone.lp..], p), 0.0)?;
            let lz = Cholesky::factor_with_floor(&smat(&z[cone.lp..], p), 0.0)?;
            let svd = svd_jacobi(&lz.lower().transpose().matmul(ls.lower()))?;
            let inv_sqrt: Vec<f64> = svd.sigma.iter().map(|s| 1.0 / s.sqrt()).collect();
            // R = Ls V Σ^{-1/2},  R⁻¹ = Σ^{-1/2} Uᵀ Lzᵀ
            let lsv = ls.lower().matmul(&svd.v);
            r = Matrix::from_vec(p, p, (0..p * p).map(|k| lsv.as_slice()[k] * inv_sqrt[k % p]).collect());
            let ut_lzt = svd.u.transpose().matmul(&lz.lower().transpose());
            rinv = Matrix::from_vec(p, p, (0..p * p).map(|k| ut_lzt.as_slice()[k] * inv_sqrt[k / p]).collect());
            lam_psd = svd.sigma;
        }
        Ok(Self { cone, w, lam_lp, rt: r.transpose(), r, rinvt: rinv.transpose(), rinv, lam_psd })
    }

    fn apply(&self, v: &[f64], lp: impl Fn(f64, f64) -> f64, t: &Matrix) -> Vec<f64> {
        let mut out: Vec<f64> = v[..self.cone.lp].iter().zip(&self.w).map(|(&x, &w)| lp(x, w)).collect();
        if self.cone.p > 0 {
            out.extend(congruence(t, &v[self.cone.lp..], self.cone.p));
        }
        out
    }

    /// `W v`
    fn w(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, |x, w| x * w, &self.r)
    }

    /// `Wᵀ v`
    fn wt(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, |x, w| x * w, &self.rt)
    }

    /// `W⁻¹ v`
    fn w_inv(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, |x, w| x / w, &self.rinv)
    }

    /// `W⁻ᵀ v`
    fn w_inv_t(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, |x, w| x / w, &self.rinvt)
    }

    /// `λ ∘ λ`
    fn lambda_sq(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.lam_lp.iter().map(|l| l * l).collect();
        if self.cone.p > 0 {
            out.extend(svec(&Matrix::from_diag(&self.lam_psd.iter().map(|l| l * l).collect::<Vec<_>>())));
        }
        out
    }

    /// `λ \ v`, the solution `u` of `λ ∘ u = v`.
    fn lambda_div(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = v[..self.cone.lp].iter().zip(&self.lam_lp).map(|(x, l)| x / l).collect();
        let p = self.cone.p;
        if p > 0 {
            let mut k = self.cone.lp;
            for i in 0..p {
                for j in i..p {
                    out.push(2.0 * v[k] / (self.lam_psd[i] + self.lam_psd[j]));
                    k += 1;
                }
            }
        }
        out
    }

    /// Largest `α` keeping `λ + α d` in the cone (`+∞` if unlimited).
    fn max_step(&self, d: &[f64]) -> Result<f64, LinalgError> {
        let mut alpha = f64::INFINITY;
        for (x, l) in d[..self.cone.lp].iter().zip(&self.lam_lp) {
            if *x < 0.0 {
                alpha = alpha.min(l / -x);
            }
        }
        let p = self.cone.p;
        if p > 0 {
            let mut m = smat(&d[self.cone.lp..], p);
            for i in 0..p {
                for j in 0..p {
                    m[(i, j)] /= (self.lam_psd[i] * self.lam_psd[j]).sqrt();
                }
            }
            let emin = eig_sym(&m)?.min();
            if emin < 0.0 {
                alpha = alpha.min(-1.0 / emin);
            }
        }
        Ok(alpha)
    }
}

/// Reduced KKT system `Gᵀz = rx`, `Gy − WᵀWz = rz`, solved through a QR
/// factorization of `Ĝ = W⁻ᵀG` (the normal equations of `Ĝ`, without ever
/// forming `ĜᵀĜ`).
struct ReducedKkt<'a> {
    g: &'a Matrix,
    qr: Qr,
}

impl<'a> ReducedKkt<'a> {
    fn new(g: &'a Matrix, scaling: &Scaling) -> Result<Self, LinalgError> {
        let (dim, nv) = (g.rows(), g.cols());
        let mut g_hat = Matrix::zeros(dim, nv);
        let mut col = vec![0.0; dim];
        for k in 0..nv {
            for i in 0..dim {
                col[i] = g[(i, k)];
            }
            let scaled = scaling.w_inv_t(&col);
            for i in 0..dim {
                g_hat[(i, k)] = scaled[i];
            }
        }
        Ok(Self { g, qr: Qr::factor(&g_hat)? })
    }

    /// One unrefined solve; returns `(y, Wz)`.
    fn solve_once(&self, scaling: &Scaling, rx: &[f64], rz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        // With Ĝ = QR and r̂ = W⁻ᵀrz:  R y = R⁻ᵀrx + (Qᵀr̂)₁,  Wz = Q [R y; 0] − r̂.
        let r_hat = scaling.w_inv_t(rz);
        let mut u = self.qr.rt_solve(rx);
        let qtr = self.qr.qt_mul(&r_hat);
        axpy(1.0, &qtr[..u.len()], &mut u);
        let y = self.qr.r_solve(&u);
        u.resize(r_hat.len(), 0.0);
        let mut wz = self.qr.q_mul(&u);
        axpy(-1.0, &r_hat, &mut wz);
        (y, wz)
    }

    /// Refined solve against the unreduced equations. Returns `(y, z, Wz)`.
    fn solve(&self, scaling: &Scaling, rx: &[f64], rz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (mut y, mut wz) = self.solve_once(scaling, rx, rz);
        let mut z = scaling.w_inv(&wz);
        for _ in 0..KKT_REFINEMENT {
            let mut ex = rx.to_vec();
            axpy(-1.0, &self.g.tmatvec(&z), &mut ex);
            let mut ez = rz.to_vec();
            axpy(-1.0, &self.g.matvec(&y), &mut ez);
            axpy(1.0, &scaling.wt(&wz), &mut ez);
            let (dy, dwz) = self.solve_once(scaling, &ex, &ez);
            axpy(1.0, &dy, &mut y);
            axpy(1.0, &dwz, &mut wz);
            z = scaling.w_inv(&wz);
        }
        (y, z, wz)
    }
}

const KKT_REFINEMENT: usize = 2;

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Shifts a vector into the cone interior if it is not comfortably inside.
fn shift_interior(cone: Cone, v: &mut [f64], e: &[f64]) -> Result<(), LinalgError> {
    let min = cone.min_eig(v)?;
    let nrm = norm2(v).max(1.0);
    if min <= 1e-8 * nrm {
        axpy(1.0 - min.min(0.0), e, v);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Solver

/// Solves a standard-form conic problem.
pub fn solve_cone(prob: &ConeProblem, opts: &SolverOptions) -> ConeSolution {
    assert_eq!(prob.g.rows(), prob.cone_dim(), "G rows must match the cone dimension");
    assert_eq!(prob.g.cols(), prob.c.len(), "G columns must match c");
    if has_full_column_rank(&prob.g) {
        solve_full_rank(prob, opts)
    } else {
        solve_rank_deficient(prob, opts)
    }
}

fn has_full_column_rank(g: &Matrix) -> bool {
    if g.rows() < g.cols() {
        return false;
    }
    match Qr::factor(g) {
        Ok(qr) => {
            let d = qr.r_diag();
            let max = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            d.iter().all(|v| v.abs() > 1e-10 * max)
        }
        Err(_) => false,
    }
}

fn empty_solution(status: SolveStatus, nv: usize, dim: usize) -> ConeSolution {
    ConeSolution {
        status,
        y: vec![0.0; nv],
        s: vec![0.0; dim],
        z: vec![0.0; dim],
        iterations: 0,
        residuals: Residuals::default(),
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        ray: None,
        dual_ray: None,
        trace: Vec::new(),
    }
}

/// Restricts `y` to the row space of `G`. The null-space part of `c`, if
/// any, is a recession direction of every feasible problem.
fn solve_rank_deficient(prob: &ConeProblem, opts: &SolverOptions) -> ConeSolution {
    let cone = Cone { lp: prob.lp_dim, p: prob.psd_order };
    let (nv, dim) = (prob.c.len(), cone.dim());
    let Ok(eig) = eig_sym(&prob.g.transpose().matmul(&prob.g)) else {
        return empty_solution(SolveStatus::NumericalFailure, nv, dim);
    };
    let cut = 1e-12 * eig.max().max(f64::MIN_POSITIVE);
    let rank = eig.eigenvalues.iter().filter(|&&l| l > cut).count();
    let basis = Matrix::from_vec(
        nv,
        rank,
        (0..nv).flat_map(|i| (0..rank).map(move |k| (i, k))).map(|(i, k)| eig.eigenvectors[(i, k)]).collect(),
    );
    let c_red = basis.tmatvec(&prob.c);
    let mut c_null = prob.c.clone();
    axpy(-1.0, &basis.matvec(&c_red), &mut c_null);
    let null2 = dot(&c_null, &c_null);
    let escapes = null2.sqrt() > 1e-9 * norm2(&prob.c).max(1.0);

    let mut sol = if rank == 0 {
        // Gy = 0 for all y: feasible iff h ∈ K.
        let inside = cone.min_eig(&prob.h).map(|v| v >= -opts.tol).unwrap_or(false);
        let mut s = empty_solution(if inside { SolveStatus::Optimal } else { SolveStatus::Infeasible }, 0, dim);
        if inside {
            s.s = prob.h.clone();
            s.primal_objective = 0.0;
            s.dual_objective = 0.0;
        }
        s
    } else {
        let reduced = ConeProblem {
            c: c_red,
            g: prob.g.matmul(&basis),
            h: prob.h.clone(),
            lp_dim: prob.lp_dim,
            psd_order: prob.psd_order,
        };
        solve_full_rank(&reduced, opts)
    };
    sol.y = basis.matvec(&sol.y);
    sol.ray = sol.ray.map(|r| basis.matvec(&r));
    if escapes && matches!(sol.status, SolveStatus::Optimal | SolveStatus::Unbounded) {
        sol.status = SolveStatus::Unbounded;
        sol.primal_objective = f64::NEG_INFINITY;
        sol.ray = Some(c_null.iter().map(|v| -v / null2).collect());
    }
    if sol.status == SolveStatus::Infeasible {
        sol.primal_objective = f64::INFINITY;
    }
    sol
}

fn solve_full_rank(prob: &ConeProblem, opts: &SolverOptions) -> ConeSolution {
    let cone = Cone { lp: prob.lp_dim, p: prob.psd_order };
    let nv = prob.c.len();
    let dim = cone.dim();
    let (c, g, h) = (&prob.c, &prob.g, &prob.h);
    let max_iter = opts.max_iterations.unwrap_or(200 * dim.max(1));
    let tol = opts.tol;
    let (cnorm, hnorm) = (norm2(c).max(1.0), norm2(h).max(1.0));

    let mut out = empty_solution(SolveStatus::NumericalFailure, nv, dim);

    // Starting point: least-squares primal and dual, shifted into the cone.
    let e = cone.identity();
    let Ok(qr0) = Qr::factor(g) else { return out };
    let mut y = qr0.least_squares(h);
    let mut s: Vec<f64> = h.iter().zip(g.matvec(&y)).map(|(a, b)| a - b).collect();
    // z = −G(GᵀG)⁻¹c, the minimum-norm solution of Gᵀz = −c.
    let mut u = qr0.rt_solve(c);
    u.resize(dim, 0.0);
    let mut z: Vec<f64> = qr0.q_mul(&u).iter().map(|v| -v).collect();
    if shift_interior(cone, &mut s, &e).is_err() || shift_interior(cone, &mut z, &e).is_err() {
        return out;
    }
    let (mut tau, mut kappa) = (1.0f64, 1.0f64);
    let mut stalls = 0;

    for iter in 0..=max_iter {
        out.iterations = iter;
        // Residuals of the embedding.
        let mut rx = g.tmatvec(&z);
        axpy(tau, c, &mut rx);
        let mut rz = g.matvec(&y);
        axpy(1.0, &s, &mut rz);
        axpy(-tau, h, &mut rz);
        let cy = dot(c, &y);
        let hz = dot(h, &z);
        let rt = kappa + cy + hz;
        let sz = dot(&s, &z);

        let pcost = cy / tau;
        let dcost = -hz / tau;
        let res = Residuals {
            primal: norm2(&rz) / tau / hnorm,
            dual: norm2(&rx) / tau / cnorm,
            gap: (sz / (tau * tau)).max((pcost - dcost).abs()) / (1.0 + pcost.abs().min(dcost.abs())),
        };
        let mu = (sz + tau * kappa) / (cone.degree() + 1) as f64;
        if opts.record_trace || opts.verbose {
            let rec = IterationRecord {
                iteration: iter,
                primal_objective: pcost,
                dual_objective: dcost,
                residuals: res,
                tau,
                kappa,
                mu,
                step: f64::NAN,
                duality_slack: (dot(&y, &rx).abs() + dot(&z, &rz).abs()) / (tau * tau),
            };
            if opts.verbose {
                eprintln!(
                    "{iter:3} pcost {pcost:+.8e} dcost {dcost:+.8e} pres {:.1e} dres {:.1e} gap {:.1e} tau {tau:.1e} kappa {kappa:.1e}",
                    res.primal, res.dual, res.gap
                );
            }
            if opts.record_trace {
                out.trace.push(rec);
            }
        }
        out.residuals = res;
        out.primal_objective = pcost;
        out.dual_objective = dcost;

        if !(all_finite(&y) && all_finite(&s) && all_finite(&z) && tau.is_finite() && kappa.is_finite()) {
            out.status = SolveStatus::NumericalFailure;
            break;
        }
        if res.primal <= tol && res.dual <= tol && res.gap <= tol {
            out.status = SolveStatus::Optimal;
            out.y = y.iter().map(|v| v / tau).collect();
            out.s = s.iter().map(|v| v / tau).collect();
            out.z = z.iter().map(|v| v / tau).collect();
            return out;
        }
        if hz < 0.0 && norm2(&g.tmatvec(&z)) <= tol * -hz {
            out.status = SolveStatus::Infeasible;
            out.dual_ray = Some(z.iter().map(|v| v / -hz).collect());
            out.primal_objective = f64::INFINITY;
            break;
        }
        if cy < 0.0 {
            let mut gs = g.matvec(&y);
            axpy(1.0, &s, &mut gs);
            if norm2(&gs) <= tol * -cy {
                out.status = SolveStatus::Unbounded;
                out.ray = Some(y.iter().map(|v| v / -cy).collect());
                out.primal_objective = f64::NEG_INFINITY;
                break;
            }
        }
        if iter == max_iter {
            out.status = SolveStatus::IterationLimit;
            break;
        }

        let Ok(scaling) = Scaling::new(cone, &s, &z) else {
            out.status = SolveStatus::NumericalFailure;
            break;
        };
        let Ok(kkt) = ReducedKkt::new(g, &scaling) else {
            out.status = SolveStatus::NumericalFailure;
            break;
        };
        let lambda_sq = scaling.lambda_sq();

        // Direction for the τ column: K [y₁; z₁] = [−c; h].
        let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
        let (y1, z1, wz1) = kkt.solve(&scaling, &neg_c, h);
        let denom = -dot(&wz1, &wz1) - kappa / tau;

        // Solves the linearized system for complementarity targets
        // (d_s, d_κ) and residual weight `eta`.
        let direction = |ds: &[f64], dk: f64, eta: f64| {
            let xi_x: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let lam_ds = scaling.lambda_div(ds);
            let wt_lam_ds = scaling.wt(&lam_ds);
            let xi_z: Vec<f64> = rz.iter().zip(&wt_lam_ds).map(|(r, w)| -eta * r - w).collect();
            let xi_t = -eta * rt - dk / tau;
            let (y2, z2, _) = kkt.solve(&scaling, &xi_x, &xi_z);
            let dtau = (xi_t - dot(c, &y2) - dot(h, &z2)) / denom;
            let mut dy = y2;
            axpy(dtau, &y1, &mut dy);
            let mut dz = z2;
            axpy(dtau, &z1, &mut dz);
            let wdz = scaling.w(&dz);
            // Δs from the linearized primal equation GΔy + Δs − hΔτ = −η rz;
            // forming it as Wᵀ(λ\d_s − WΔz) cancels badly near the boundary.
            let mut ds_vec: Vec<f64> = rz.iter().map(|v| -eta * v).collect();
            axpy(-1.0, &g.matvec(&dy), &mut ds_vec);
            axpy(dtau, h, &mut ds_vec);
            let ds_scaled = scaling.w_inv_t(&ds_vec);
            let dkappa = (dk - kappa * dtau) / tau;
            (dy, dz, ds_vec, dtau, dkappa, ds_scaled, wdz)
        };

        let step_limit = |ds_scaled: &[f64], wdz: &[f64], dtau: f64, dkappa: f64| -> Result<f64, LinalgError> {
            let mut a = scaling.max_step(ds_scaled)?.min(scaling.max_step(wdz)?);
            if dtau < 0.0 {
                a = a.min(tau / -dtau);
            }
            if dkappa < 0.0 {
                a = a.min(kappa / -dkappa);
            }
            Ok(a)
        };

        // Predictor.
        let ds_aff: Vec<f64> = lambda_sq.iter().map(|v| -v).collect();
        let (_, _, _, dtau_a, dkappa_a, ds_a_scaled, wdz_a) = direction(&ds_aff, -tau * kappa, 1.0);
        let Ok(alpha_a) = step_limit(&ds_a_scaled, &wdz_a, dtau_a, dkappa_a) else {
            out.status = SolveStatus::NumericalFailure;
            break;
        };
        let sigma = (1.0 - alpha_a.min(1.0)).powi(3);

        // Corrector.
        let corr = cone.jordan(&ds_a_scaled, &wdz_a);
        let ds_cc: Vec<f64> =
            lambda_sq.iter().zip(&e).zip(&corr).map(|((l2, ei), cr)| -l2 + sigma * mu * ei - cr).collect();
        let dk_cc = -tau * kappa + sigma * mu - dtau_a * dkappa_a;
        let (dy, dz, ds, dtau, dkappa, ds_scaled, wdz) = direction(&ds_cc, dk_cc, 1.0 - sigma);
        let Ok(alpha_max) = step_limit(&ds_scaled, &wdz, dtau, dkappa) else {
            out.status = SolveStatus::NumericalFailure;
            break;
        };
        let alpha = (opts.step_fraction * alpha_max).min(1.0);

        axpy(alpha, &dy, &mut y);
        axpy(alpha, &ds, &mut s);
        axpy(alpha, &dz, &mut z);
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if let Some(last) = out.trace.last_mut() {
            last.step = alpha;
        }

        if alpha < 1e-9 {
            stalls += 1;
            if stalls >= 3 {
                out.status = SolveStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    out.y = y;
    out.s = s;
    out.z = z;
    out
}

/// Outcome of solving one relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationResult {
    pub status: SolveStatus,
    /// Optimal value including the objective constant; `−∞` when
    /// unbounded, `+∞` when infeasible, NaN otherwise.
    pub objective: f64,
    pub x: Vec<f64>,
    pub xx: Matrix,
    /// Full variable vector (`x` then the upper triangle of `X`).
    pub variables: Vec<f64>,
    pub iterations: usize,
    pub residuals: Residuals,
    /// Unbounded: recession direction in program variables with
    /// objective derivative −1.
    pub ray: Option<Vec<f64>>,
}

fn to_result(prog: &ConicProgram, sol: ConeSolution) -> RelaxationResult {
    let objective = match sol.status {
        SolveStatus::Optimal => prog.evaluate(&sol.y),
        SolveStatus::Unbounded => f64::NEG_INFINITY,
        SolveStatus::Infeasible => f64::INFINITY,
        _ => f64::NAN,
    };
    let (x, xx) = if sol.status == SolveStatus::Optimal {
        prog.layout.unpack(&sol.y)
    } else {
        (Vec::new(), Matrix::zeros(0, 0))
    };
    RelaxationResult {
        status: sol.status,
        objective,
        x,
        xx,
        variables: if sol.status == SolveStatus::Optimal { sol.y } else { Vec::new() },
        iterations: sol.iterations,
        residuals: sol.residuals,
        ray: sol.ray,
    }
}

/// Solves a program without PSD block.
pub fn solve_lp(prog: &ConicProgram, opts: &SolverOptions) -> Result<RelaxationResult, ConicError> {
    if prog.psd_block {
        return Err(ConicError::ExpectedLp);
    }
    Ok(to_result(prog, solve_cone(&ConeProblem::from_program(prog), opts)))
}

/// Solves a program with the PSD block `[X x; xᵀ 1] ⪰ 0`.
pub fn solve_sdp(prog: &ConicProgram, opts: &SolverOptions) -> Result<RelaxationResult, ConicError> {
    if !prog.psd_block {
        return Err(ConicError::ExpectedSdp);
    }
    Ok(to_result(prog, solve_cone(&ConeProblem::from_program(prog), opts)))
}

/// Dispatches on the presence of a PSD block.
pub fn solve(prog: &ConicProgram, opts: &SolverOptions) -> RelaxationResult {
    to_result(prog, solve_cone(&ConeProblem::from_program(prog), opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relax::VariableLayout;

    fn one_var_lp(lower: f64, upper: f64, cost: f64) -> ConicProgram {
        let mut p = ConicProgram::new(VariableLayout::plain(1));
        p.objective = vec![cost];
        p.lower[0] = lower;
        p.upper[0] = upper;
        p
    }

    #[test]
    fn svec_round_trip_and_isometry() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]]);
        let v = svec(&m);
        assert_eq!(v.len(), 6);
        assert_eq!(smat(&v, 3).sub(&m).max_abs(), 0.0);
        let n = Matrix::from_rows(&[[0.5, -1.0, 0.0], [-1.0, 2.0, 1.5], [0.0, 1.5, -3.0]]);
        assert!((dot(&v, &svec(&n)) - m.inner(&n)).abs() < 1e-12);
        assert_eq!(svec_index(3, 1, 2), 4);
        assert_eq!(svec_index(3, 2, 1), 4);
    }

    #[test]
    fn box_lp() {
        let r = solve_lp(&one_var_lp(0.0, 1.0, -1.0), &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-7, "{}", r.objective);
    }

    #[test]
    fn unbounded_lp() {
        let r = solve_lp(&one_var_lp(0.0, f64::INFINITY, -1.0), &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
        assert_eq!(r.objective, f64::NEG_INFINITY);
        let ray = r.ray.unwrap();
        assert!((ray[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_lp() {
        let mut p = one_var_lp(0.0, 1.0, 1.0);
        p.add_row("r", vec![1.0], Sense::Ge, 2.0);
        let r = solve_lp(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn rank_deficient_problems() {
        // Two variables, one row x₀ + x₁ ≤ 1: min x₀ + x₁ is −∞ only through
        // the row, min x₀ − x₁ escapes along the null space.
        let g = Matrix::from_rows(&[[1.0, 1.0]]);
        let prob = |c: Vec<f64>| ConeProblem { c, g: g.clone(), h: vec![1.0], lp_dim: 1, psd_order: 0 };
        let along = solve_cone(&prob(vec![-1.0, -1.0]), &SolverOptions::default());
        assert_eq!(along.status, SolveStatus::Optimal);
        assert!((dot(&[-1.0, -1.0], &along.y) + 1.0).abs() < 1e-7);
        let escape = solve_cone(&prob(vec![1.0, -1.0]), &SolverOptions::default());
        assert_eq!(escape.status, SolveStatus::Unbounded);
        let ray = escape.ray.unwrap();
        assert!((ray[0] - ray[1] + 1.0).abs() < 1e-12 && (ray[0] + ray[1]).abs() < 1e-12);
        let empty = ConeProblem { c: vec![1.0], g: Matrix::zeros(1, 1), h: vec![-1.0], lp_dim: 1, psd_order: 0 };
        assert_eq!(solve_cone(&empty, &SolverOptions::default()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let p = one_var_lp(0.0, 1.0, 1.0);
        assert!(matches!(solve_sdp(&p, &SolverOptions::default()), Err(ConicError::ExpectedSdp)));
    }

    #[test]
    fn analytic_two_by_two_sdp() {
        // min x s.t. [[1, x], [x, 1]] ⪰ 0 with X₁₁ pinned to 1.
        let mut p = ConicProgram::new(VariableLayout::lifted(1));
        p.psd_block = true;
        p.objective = vec![1.0, 0.0];
        p.add_row("pin_hi", vec![0.0, 1.0], Sense::Le, 1.0);
        p.add_row("pin_lo", vec![0.0, 1.0], Sense::Ge, 1.0);
        let r = solve_sdp(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-6, "{}", r.objective);
    }

    #[test]
    fn deterministic() {
        let mut p = ConicProgram::new(VariableLayout::lifted(2));
        p.psd_block = true;
        p.objective = vec![1.0, -1.0, -1.0, 0.5, -2.0];
        for k in 0..2 {
            p.lower[k] = -1.0;
            p.upper[k] = 1.0;
        }
        p.add_row("trace", vec![0.0, 0.0, 1.0, 0.0, 1.0], Sense::Le, 1.5);
        let a = solve_sdp(&p, &SolverOptions::default()).unwrap();
        let b = solve_sdp(&p, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.status, SolveStatus::Optimal);
    }

    fn concave_square() -> crate::instance::QcqpInstance {
        crate::instance::QcqpInstance::new(
            vec![Matrix::from_rows(&[[-1.0]]), Matrix::zeros(1, 1)],
            vec![vec![0.0], vec![0.0]],
            vec![0.0, -1.0],
            vec![0.0],
            vec![1.0],
            true,
            "concave-square",
            0,
            Vec::new(),
        )
    }

    #[test]
    fn chord_rows_close_the_unbounded_sdp() {
        let inst = concave_square();
        let opts = SolverOptions::default();
        let sdp = solve_sdp(&crate::relax::build_sdp(&inst), &opts).unwrap();
        assert_eq!(sdp.status, SolveStatus::Unbounded);
        let prime = solve_sdp(&crate::relax::build_sdp_prime(&inst).unwrap(), &opts).unwrap();
        assert_eq!(prime.status, SolveStatus::Optimal);
        assert!((prime.objective + 1.0).abs() < 1e-6, "{}", prime.objective);
        assert!((prime.x[0] - 1.0).abs() < 1e-5);
        let lp = solve_lp(&crate::relax::build_lp(&inst).unwrap(), &opts).unwrap();
        assert!((lp.objective + 1.0).abs() < 1e-6);
    }

    #[test]
    fn unbounded_ray_is_a_recession_direction() {
        let prog = crate::relax::build_sdp(&concave_square());
        let r = solve_sdp(&prog, &SolverOptions::default()).unwrap();
        let ray = r.ray.unwrap();
        assert!((dot(&prog.objective, &ray) + 1.0).abs() < 1e-6);
        // Homogeneous part of every row and of the PSD block must hold along the ray.
        for row in &prog.rows {
            let v = dot(&row.coeffs, &ray);
            match row.sense {
                Sense::Le => assert!(v <= 1e-6),
                Sense::Ge => assert!(v >= -1e-6),
            }
        }
        let (x, xx) = prog.layout.unpack(&ray);
        let mut m = Matrix::zeros(2, 2);
        m[(0, 0)] = xx[(0, 0)];
        m[(0, 1)] = x[0];
        m[(1, 0)] = x[0];
        assert!(eig_sym(&m).unwrap().min() >= -1e-6);
    }

    #[test]
    fn trace_respects_weak_duality() {
        let cfg = crate::generator::GenConfig { n: 4, m: 2, count: 8, seed: 3 };
        let opts = SolverOptions { record_trace: true, ..SolverOptions::default() };
        for iota in 1..=8 {
            let inst = crate::generator::gen_instance(&cfg, iota).unwrap();
            let prog = crate::relax::build_sdp_prime(&inst).unwrap();
            let sol = solve_cone(&ConeProblem::from_program(&prog), &opts);
            assert!(!sol.trace.is_empty());
            for rec in &sol.trace {
                let scale = 1.0 + rec.primal_objective.abs();
                assert!(
                    rec.dual_objective <= rec.primal_objective + rec.duality_slack + 1e-9 * scale,
                    "{rec:?}"
                );
            }
        }
    }

    #[test]
    fn optimal_residuals_within_tolerance() {
        let cfg = crate::generator::GenConfig { n: 5, m: 3, count: 12, seed: 11 };
        let opts = SolverOptions::default();
        for iota in 1..=12 {
            let inst = crate::generator::gen_instance(&cfg, iota).unwrap();
            for kind in [crate::relax::RelaxKind::Lp, crate::relax::RelaxKind::SdpPrime] {
                let r = solve(&crate::relax::build(&inst, kind).unwrap(), &opts);
                assert_eq!(r.status, SolveStatus::Optimal);
                assert!(r.residuals.primal <= opts.tol && r.residuals.dual <= opts.tol && r.residuals.gap <= opts.tol);
            }
        }
    }
}
