//! Independent oracles and fixtures shared by the integration tests. None of
//! them reuse the library code they check.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use relaxsel::instance::QcqpInstance;
use relaxsel::linalg::Matrix;

// ---------------------------------------------------------------------------
// LP by vertex enumeration

/// `a·x ≤ b` rows (a `≥` row is passed negated).
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpOracle {
    Optimal(f64),
    Infeasible,
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[p][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, p);
        r.swap(col, p);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            for j in col..n {
                m[i][j] -= f * m[col][j];
            }
            r[i] -= f * r[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

fn subsets(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, k, n, cur, out);
            cur.pop();
        }
    }
    rec(0, k, n, &mut cur, &mut out);
    out
}

/// Minimum of `cᵀx` over a bounded polyhedron: the best feasible basic
/// solution among all `n`-row subsets.
pub fn lp_vertex_oracle(lp: &DenseLp) -> LpOracle {
    let n = lp.c.len();
    let mut best: Option<f64> = None;
    for rows in subsets(n, lp.a.len()) {
        let m: Vec<Vec<f64>> = rows.iter().map(|&i| lp.a[i].clone()).collect();
        let r: Vec<f64> = rows.iter().map(|&i| lp.b[i]).collect();
        let Some(x) = solve_square(m, r) else { continue };
        let feasible = lp.a.iter().zip(&lp.b).all(|(a, &b)| {
            let v: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum();
            v <= b + 1e-9 * (1.0 + b.abs())
        });
        if feasible {
            let z: f64 = lp.c.iter().zip(&x).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(z, |b: f64| b.min(z)));
        }
    }
    best.map_or(LpOracle::Infeasible, LpOracle::Optimal)
}

// ---------------------------------------------------------------------------
// Convex QCQP with one constraint by dual ascent over a projected-gradient
// inner solver

fn quad(a: &Matrix, b: &[f64], c: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let mut v = c;
    for i in 0..n {
        v += 2.0 * b[i] * x[i];
        for j in 0..n {
            v += x[i] * a[(i, j)] * x[j];
        }
    }
    v
}

fn power_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut v = vec![1.0; n];
    let mut lam = 0.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] * v[j]).sum()).collect();
        let norm = w.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lam = norm;
        v = w.iter().map(|t| t / norm).collect();
    }
    lam
}

/// `min f₀ + μ f₁` over the box by accelerated projected gradient with
/// adaptive restarts. Returns the minimizer and the value.
pub fn box_qp(a: &Matrix, b: &[f64], c: f64, lower: &[f64], upper: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let n = b.len();
    let lip = 2.0 * power_norm(a) + 1e-12;
    let proj = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let grad = |x: &[f64]| -> Vec<f64> { (0..n).map(|i| 2.0 * ((0..n).map(|j| a[(i, j)] * x[j]).sum::<f64>() + b[i])).collect() };
    let mut x: Vec<f64> = (0..n).map(|i| 0.5 * (lower[i] + upper[i])).collect();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = quad(a, b, c, &x);
    for _ in 0..iters {
        let g = grad(&y);
        let mut xn: Vec<f64> = (0..n).map(|i| y[i] - g[i] / lip).collect();
        proj(&mut xn);
        let fxn = quad(a, b, c, &xn);
        if fxn > fx {
            // restart momentum
            y = x.clone();
            t = 1.0;
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = (0..n).map(|i| xn[i] + (t - 1.0) / tn * (xn[i] - x[i])).collect();
        x = xn;
        fx = fxn;
        t = tn;
    }
    (x, fx)
}

/// Optimal value of `min f₀(x)` s.t. `f₁(x) ≤ 0`, `l ≤ x ≤ u` for convex
/// `f₀, f₁` with a Slater point, as `max_μ≥0 min_box f₀ + μ f₁`. The outer
/// maximization is a golden-section search of the concave dual function.
pub fn convex_qcqp_oracle(inst: &QcqpInstance) -> f64 {
    assert_eq!(inst.m, 1, "oracle handles one quadratic constraint");
    let n = inst.n;
    let lagr = |mu: f64| -> f64 {
        let a = inst.a[0].add(&inst.a[1].scale(mu));
        let b: Vec<f64> = (0..n).map(|i| inst.b[0][i] + mu * inst.b[1][i]).collect();
        box_qp(&a, &b, inst.c[0] + mu * inst.c[1], &inst.lower, &inst.upper, 20_000).1
    };
    // Bracket: grow the upper end until the dual starts to decrease.
    let mut hi = 1.0;
    while lagr(2.0 * hi) > lagr(hi) && hi < 1e6 {
        hi *= 2.0;
    }
    let hi = 2.0 * hi;
    let (mut lo, mut up) = (0.0, hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (up - g * (up - lo), lo + g * (up - lo));
    let (mut f1, mut f2) = (lagr(x1), lagr(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (up - lo);
            f2 = lagr(x2);
        } else {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - g * (up - lo);
            f1 = lagr(x1);
        }
    }
    f1.max(f2).max(lagr(0.0))
}

/// Random convex instance with one constraint: `A_k = GGᵀ/n`, box
/// `[−1, 1]`, and `c₁ < 0` so `x = 0` is strictly feasible.
pub fn random_convex_instance<R: Rng>(n: usize, rng: &mut R, id: usize) -> QcqpInstance {
    let psd = |rng: &mut R| {
        let g: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>() / n as f64;
            }
        }
        a
    };
    let a = vec![psd(rng), psd(rng)];
    let b: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let c = vec![0.0, -rng.random_range(0.1..1.0)];
    QcqpInstance::new(a, b, c, vec![-1.0; n], vec![1.0; n], true, format!("convex-{id}"), id as u64, vec![])
}

// ---------------------------------------------------------------------------
// Graphs on at most six nodes, as edge bitmasks over the pairs (i < j)

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            v.push((i, j));
        }
    }
    v
}

pub fn edges_of(n: usize, mask: u32) -> Vec<(usize, usize)> {
    pairs(n).into_iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, e)| e).collect()
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in edges {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    adj
}

/// Smallest relabeled edge mask over all vertex permutations.
pub fn canonical_mask(n: usize, mask: u32) -> u32 {
    let idx = pairs(n);
    let pos = |a: usize, b: usize| {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        idx.iter().position(|&e| e == (a, b)).unwrap()
    };
    let edges = edges_of(n, mask);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = u32::MAX;
    permute(&mut perm, 0, &mut |p| {
        let m = edges.iter().fold(0u32, |acc, &(u, v)| acc | 1 << pos(p[u], p[v]));
        best = best.min(m);
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// Two-coloring by breadth-first search.
pub fn oracle_bipartite(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let mut color = vec![-1i8; n];
    for s in 0..n {
        if color[s] >= 0 {
            continue;
        }
        color[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for w in 0..n {
                if !adj[u][w] {
                    continue;
                }
                if color[w] < 0 {
                    color[w] = 1 - color[u];
                    queue.push_back(w);
                } else if color[w] == color[u] {
                    return false;
                }
            }
        }
    }
    true
}

pub fn oracle_connected(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for w in 0..n {
            if adj[u][w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// `n − 1` edges and connected; edgeless graphs are not trees.
pub fn oracle_tree(adj: &[Vec<bool>], edge_count: usize) -> bool {
    let n = adj.len();
    n >= 2 && edge_count == n - 1 && oracle_connected(adj)
}

/// Exhaustive search for a perfect elimination ordering: `remaining` admits
/// one iff some vertex is simplicial in the induced subgraph and the rest
/// admits one. Memoized over vertex subsets.
pub fn oracle_chordal(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let mut memo = vec![None; 1 << n];
    fn peo(set: usize, adj: &[Vec<bool>], memo: &mut Vec<Option<bool>>) -> bool {
        if set.count_ones() <= 1 {
            return true;
        }
        if let Some(v) = memo[set] {
            return v;
        }
        let n = adj.len();
        let mut ok = false;
        for v in (0..n).filter(|&v| set >> v & 1 == 1) {
            let nb: Vec<usize> = (0..n).filter(|&w| set >> w & 1 == 1 && adj[v][w]).collect();
            let simplicial = nb.iter().all(|&a| nb.iter().all(|&b| a == b || adj[a][b]));
            if simplicial && peo(set & !(1 << v), adj, memo) {
                ok = true;
                break;
            }
        }
        memo[set] = Some(ok);
        ok
    }
    peo((1 << n) - 1, adj, &mut memo)
}

/// Non-planar iff the graph contains a subdivision of K5 or K3,3. On at most
/// six vertices the only such subdivisions are K5, K5 with one subdivided
/// edge, and K3,3. Graphs beyond the Euler bound `e ≤ 3v − 6` are rejected
/// up front.
pub fn oracle_planar(adj: &[Vec<bool>], edge_count: usize) -> bool {
    let n = adj.len();
    if n >= 3 && edge_count > 3 * n - 6 {
        return false;
    }
    if n < 5 {
        return true;
    }
    let all: Vec<usize> = (0..n).collect();
    for five in subsets(5, n) {
        let five: Vec<usize> = five.iter().map(|&i| all[i]).collect();
        let missing: Vec<(usize, usize)> = subsets(2, 5)
            .into_iter()
            .map(|p| (five[p[0]], five[p[1]]))
            .filter(|&(a, b)| !adj[a][b])
            .collect();
        if missing.is_empty() {
            return false;
        }
        if missing.len() == 1 {
            let (a, b) = missing[0];
            if (0..n).any(|w| !five.contains(&w) && adj[w][a] && adj[w][b]) {
                return false;
            }
        }
    }
    if n == 6 {
        for side in subsets(3, 6) {
            if !side.contains(&0) {
                continue;
            }
            let other: Vec<usize> = (0..6).filter(|v| !side.contains(v)).collect();
            if side.iter().all(|&a| other.iter().all(|&b| adj[a][b])) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Feasible points of an instance

/// Up to `want` feasible points of the instance, drawn uniformly in the box
/// and, when `x = 0` is feasible, pulled toward it by halving until
/// feasible. Gives up after `budget` box draws.
pub fn feasible_points<R: Rng>(inst: &QcqpInstance, want: usize, budget: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = inst.n;
    let origin = vec![0.0; n];
    let origin_ok = inst.is_feasible(&origin, 0.0);
    let mut out = Vec::new();
    for _ in 0..budget {
        if out.len() == want {
            break;
        }
        let mut x: Vec<f64> = (0..n).map(|i| rng.random_range(inst.lower[i]..=inst.upper[i])).collect();
        if inst.is_feasible(&x, 0.0) {
            out.push(x);
            continue;
        }
        if origin_ok {
            for _ in 0..60 {
                x.iter_mut().for_each(|v| *v *= 0.5);
                if inst.is_feasible(&x, 0.0) {
                    out.push(x);
                    break;
                }
            }
        }
    }
    out
}
