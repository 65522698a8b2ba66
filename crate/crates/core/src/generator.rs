//! Random matrix families and batch instance generation.
//!
//! Instance ι (1-based) of a batch of `N` falls into one of three regimes:
//!
//! * `ι ≤ N/4`: every `Aₖ` from one randomly chosen family, box `[0, 1]`;
//! * `N/4 < ι ≤ N/2`: `A₀..A_{m−1}` from random families, `Aₘ` SPD, box
//!   derived from the ellipsoid `k = m`;
//! * otherwise: every `Aₖ` from an independently chosen family, box `[0, 1]`.
//!
//! All `bₖ ~ U(−5, 5)ⁿ` and `cₖ` uniform on `{−10, …, −1}`, so `x = 0` is
//! strictly feasible for the quadratic constraints.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::{adjacency_to_distance, is_planar, SupportGraph};
use crate::instance::QcqpInstance;
use crate::linalg::{orthonormal_factor, Matrix};
use crate::relax::{derive_artificial_bounds, RelaxError};
use crate::rng::{InstanceRng, RngStream};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid family spec: {0}")]
    InvalidSpec(String),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("instance {index}: artificial bounds failed after {attempts} SPD draws: {source}")]
    Bounds {
        index: usize,
        attempts: usize,
        #[source]
        source: RelaxError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    DiagOrderedOnes,
    DiagRandomOnes,
    DiagRandomRandnums,
    RandomSymmetric,
    Spd,
    EigOnes,
    EigRandom,
    RankOneConvex,
    RankOneConcave,
    Hollow,
    Bipartite,
    Tree,
    Planar,
    Chordal,
}

impl Family {
    pub const ALL: [Family; 14] = [
        Family::DiagOrderedOnes,
        Family::DiagRandomOnes,
        Family::DiagRandomRandnums,
        Family::RandomSymmetric,
        Family::Spd,
        Family::EigOnes,
        Family::EigRandom,
        Family::RankOneConvex,
        Family::RankOneConcave,
        Family::Hollow,
        Family::Bipartite,
        Family::Tree,
        Family::Planar,
        Family::Chordal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::DiagOrderedOnes => "diag_ordered_ones",
            Family::DiagRandomOnes => "diag_random_ones",
            Family::DiagRandomRandnums => "diag_random_randnums",
            Family::RandomSymmetric => "random_symmetric",
            Family::Spd => "spd",
            Family::EigOnes => "eig_ones",
            Family::EigRandom => "eig_random",
            Family::RankOneConvex => "rank_one_convex",
            Family::RankOneConcave => "rank_one_concave",
            Family::Hollow => "hollow",
            Family::Bipartite => "bipartite",
            Family::Tree => "tree",
            Family::Planar => "planar",
            Family::Chordal => "chordal",
        }
    }

    /// Families built from a random graph.
    pub fn is_graph(self) -> bool {
        matches!(self, Family::Bipartite | Family::Tree | Family::Planar | Family::Chordal)
    }

    /// Families that accept a negative-eigenvalue count `n′`.
    pub fn takes_neg_count(self) -> bool {
        matches!(self, Family::DiagOrderedOnes | Family::DiagRandomOnes | Family::DiagRandomRandnums | Family::EigOnes | Family::EigRandom)
    }

    /// Families usable at dimension `n`.
    pub fn available(n: usize) -> Vec<Family> {
        Family::ALL.iter().copied().filter(|f| !f.is_graph() || n >= 4).collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.iter().copied().find(|f| f.name() == s).ok_or_else(|| GenError::InvalidSpec(format!("unknown family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySpec {
    pub family: Family,
    /// Number of negative eigenvalues; drawn uniformly from `0..=n` if absent.
    pub neg_count: Option<usize>,
}

impl FamilySpec {
    pub fn new(family: Family) -> Self {
        Self { family, neg_count: None }
    }

    pub fn with_neg_count(family: Family, neg_count: usize) -> Self {
        Self { family, neg_count: Some(neg_count) }
    }
}

/// Draws one symmetric `n × n` matrix from a family.
pub fn gen_matrix<R: Rng + ?Sized>(spec: FamilySpec, n: usize, rng: &mut R) -> Result<Matrix, GenError> {
    if n == 0 {
        return Err(GenError::InvalidSpec("n must be positive".into()));
    }
    if let Some(k) = spec.neg_count {
        if k > n {
            return Err(GenError::InvalidSpec(format!("n′ = {k} exceeds n = {n}")));
        }
    }
    if spec.family.is_graph() && n < 4 {
        return Err(GenError::InvalidSpec(format!("{} needs n ≥ 4, got {n}", spec.family)));
    }
    let neg = |rng: &mut R| spec.neg_count.unwrap_or_else(|| rng.random_range(0..=n));
    let m = match spec.family {
        Family::DiagOrderedOnes => {
            let k = neg(rng);
            Matrix::from_diag(&(0..n).map(|i| if i < k { -1.0 } else { 1.0 }).collect::<Vec<_>>())
        }
        Family::DiagRandomOnes => {
            let k = neg(rng);
            let mut v = vec![1.0; n];
            for idx in rand::seq::index::sample(rng, n, k) {
                v[idx] = -1.0;
            }
            Matrix::from_diag(&v)
        }
        Family::DiagRandomRandnums => {
            let k = neg(rng);
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(1..=10) as f64).collect();
            for idx in rand::seq::index::sample(rng, n, k) {
                v[idx] = -v[idx];
            }
            Matrix::from_diag(&v)
        }
        Family::RandomSymmetric => symmetric_uniform(n, -5.0, 5.0, rng),
        Family::Spd => {
            let g = Matrix::from_vec(n, n, (0..n * n).map(|_| StandardNormal.sample(rng)).collect());
            let mut a = g.matmul(&g.transpose());
            for i in 0..n {
                a[(i, i)] += n as f64 * 1e-3;
            }
            a.symmetrized()
        }
        Family::EigOnes | Family::EigRandom => {
            let k = neg(rng);
            let raw = Matrix::from_vec(n, n, (0..n * n).map(|_| rng.random_range(0.0..9.0)).collect());
            let q = orthonormal_factor(&raw).map_err(|e| GenError::InvalidSpec(format!("orthogonalization failed: {e}")))?;
            let mut v: Vec<f64> = if spec.family == Family::EigOnes {
                vec![1.0; n]
            } else {
                (0..n).map(|_| rng.random_range(1..=10) as f64).collect()
            };
            for idx in rand::seq::index::sample(rng, n, k) {
                v[idx] = -1.0;
            }
            q.matmul(&Matrix::from_diag(&v)).matmul(&q.transpose()).symmetrized()
        }
        Family::RankOneConvex | Family::RankOneConcave => {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let sign = if spec.family == Family::RankOneConvex { 1.0 } else { -1.0 };
            Matrix::from_vec(n, n, (0..n * n).map(|k| sign * v[k / n] * v[k % n]).collect())
        }
        Family::Hollow => {
            let mut a = symmetric_uniform(n, -2.0, 2.0, rng);
            for i in 0..n {
                a[(i, i)] = 0.0;
            }
            a
        }
        Family::Bipartite => {
            let g = random_bipartite(n, rng);
            adjacency_to_distance(&g.adjacency_matrix(), rng)
        }
        Family::Tree => {
            let g = random_tree(n, rng);
            adjacency_to_distance(&g.adjacency_matrix(), rng)
        }
        Family::Planar => {
            let g = random_planar(n, rng);
            adjacency_to_distance(&g.adjacency_matrix(), rng)
        }
        Family::Chordal => {
            let g = random_chordal(n, rng);
            adjacency_to_distance(&g.adjacency_matrix(), rng)
        }
    };
    Ok(m)
}

/// Symmetric matrix with every entry of the upper triangle `U(lo, hi)`.
fn symmetric_uniform<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(lo..hi);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Bipartite graph with parts `{0..k−1}` and `{k..n−1}`, `2 ≤ k ≤ n−2`, and
/// `e` distinct edges with `2 ≤ e ≤ k(n−k)`.
pub fn random_bipartite<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SupportGraph {
    let k = rng.random_range(2..=n - 2);
    let e = rng.random_range(2..=k * (n - k));
    let mut candidates: Vec<(usize, usize)> = (0..k).flat_map(|i| (k..n).map(move |j| (i, j))).collect();
    candidates.shuffle(rng);
    candidates.truncate(e);
    SupportGraph::from_edges(n, &candidates)
}

/// Uniform labelled tree via a random Prüfer sequence.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SupportGraph {
    if n < 2 {
        return SupportGraph::from_edges(n, &[]);
    }
    if n == 2 {
        return SupportGraph::from_edges(2, &[(0, 1)]);
    }
    let prufer: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &p in &prufer {
        degree[p] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &p in &prufer {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf, p));
        degree[leaf] -= 1;
        degree[p] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    SupportGraph::from_edges(n, &edges)
}

/// Complete graph, edges shuffled, removed one at a time until planar (at
/// least one removal). A disconnected result gets one extra edge between two
/// random nodes of different components.
pub fn random_planar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SupportGraph {
    let mut edges: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    edges.shuffle(rng);
    let mut g;
    loop {
        edges.pop();
        g = SupportGraph::from_edges(n, &edges);
        if is_planar(&g) {
            break;
        }
    }
    if !g.is_connected() {
        let comp = components(&g);
        let u = rng.random_range(0..n);
        let others: Vec<usize> = (0..n).filter(|&v| comp[v] != comp[u]).collect();
        let v = *others.choose(rng).expect("disconnected graph has another component");
        edges.push((u, v));
        g = SupportGraph::from_edges(n, &edges);
    }
    g
}

fn components(g: &SupportGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Random tree `T`; then, visiting nodes in order, joins two random
/// neighbours in `T` of every node that has at least two. Each chord closes
/// a triangle with a tree edge pair, so the result stays chordal.
pub fn random_chordal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SupportGraph {
    let tree = random_tree(n, rng);
    let mut edges = tree.edges();
    for v in 0..n {
        let nbrs = tree.neighbors(v);
        if nbrs.len() >= 2 {
            let pick = rand::seq::index::sample(rng, nbrs.len(), 2);
            edges.push((nbrs[pick.index(0)], nbrs[pick.index(1)]));
        }
    }
    SupportGraph::from_edges(n, &edges)
}

/// Batch parameters. The regime boundaries are fixed at `N/4` and `N/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    pub count: usize,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(n: usize, m: usize, count: usize, seed: u64) -> Self {
        Self { n, m, count, seed }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.n == 0 || self.m == 0 {
            return Err(GenError::InvalidConfig("n and m must be positive".into()));
        }
        if self.count < 4 {
            return Err(GenError::InvalidConfig(format!("N = {} < 4 leaves a regime empty", self.count)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SingleFamily,
    ArtificialBounds,
    Mixed,
}

/// Regime of 1-based instance `iota` in a batch of `count`.
pub fn regime(iota: usize, count: usize) -> Regime {
    if 4 * iota <= count {
        Regime::SingleFamily
    } else if 2 * iota <= count {
        Regime::ArtificialBounds
    } else {
        Regime::Mixed
    }
}

const MAX_SPD_ATTEMPTS: usize = 10;

/// Generates instance `iota` (1-based) of the batch; a pure function of
/// `(cfg, iota)`.
pub fn gen_instance(cfg: &GenConfig, iota: usize) -> Result<QcqpInstance, GenError> {
    let (n, m) = (cfg.n, cfg.m);
    let mut rng: InstanceRng = RngStream::new(cfg.seed).stream(iota as u64);
    let pool = Family::available(n);
    let regime = regime(iota, cfg.count);
    let mut families = Vec::with_capacity(m + 1);
    match regime {
        Regime::SingleFamily => {
            let f = *pool.choose(&mut rng).expect("family pool is never empty");
            families.resize(m + 1, f);
        }
        Regime::ArtificialBounds => {
            families.extend((0..m).map(|_| *pool.choose(&mut rng).expect("non-empty pool")));
            families.push(Family::Spd);
        }
        Regime::Mixed => families.extend((0..=m).map(|_| *pool.choose(&mut rng).expect("non-empty pool"))),
    }
    let mut a = Vec::with_capacity(m + 1);
    for &f in &families {
        a.push(gen_matrix(FamilySpec::new(f), n, &mut rng)?);
    }
    let b: Vec<Vec<f64>> = (0..=m).map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    let c: Vec<f64> = (0..=m).map(|_| rng.random_range(-10..=-1) as f64).collect();
    let (lower, upper, bounds_exist) = if regime == Regime::ArtificialBounds {
        let mut attempt = 1;
        loop {
            match derive_artificial_bounds(&a[m], &b[m], c[m]) {
                Ok(d) => break (d.lower, d.upper, false),
                Err(e) if attempt >= MAX_SPD_ATTEMPTS => {
                    return Err(GenError::Bounds { index: iota, attempts: attempt, source: e })
                }
                Err(_) => {
                    attempt += 1;
                    a[m] = gen_matrix(FamilySpec::new(Family::Spd), n, &mut rng)?;
                }
            }
        }
    } else {
        (vec![0.0; n], vec![1.0; n], true)
    };
    let id = format!("n{n}-m{m}-s{}-{iota:06}", cfg.seed);
    let tags = families.iter().map(|f| f.name().to_string()).collect();
    Ok(QcqpInstance::new(a, b, c, lower, upper, bounds_exist, id, cfg.seed, tags))
}

/// Generates the whole batch in parallel, ordered by instance index.
pub fn gen_instance_batch(cfg: &GenConfig) -> Result<Vec<QcqpInstance>, GenError> {
    cfg.validate()?;
    (1..=cfg.count).into_par_iter().map(|iota| gen_instance(cfg, iota)).collect()
}
