//! Sparsity-pattern recognition on the support graph of a symmetric matrix.
//!
//! The support graph has an edge `{i, j}` for every exactly-nonzero
//! off-diagonal entry. Six indicator flags are reported, in the order
//! Diagonal, Hollow, Bipartite, Tree, Chordal, Planar. Flags are independent;
//! a diagonal matrix is also bipartite, chordal and planar.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

pub const PATTERN_NAMES: [&str; 6] = ["D", "H", "B", "T", "C", "P"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl SupportGraph {
    pub fn from_matrix(a: &Matrix) -> Self {
        let n = a.rows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if a[(i, j)] != 0.0 || a[(j, i)] != 0.0 {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Self-loops are ignored and duplicate edges collapsed.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut present = vec![false; n * n];
        let mut adj = vec![Vec::new(); n];
        let mut edge_count = 0;
        for &(u, v) in edges {
            assert!(u < n && v < n, "edge ({u},{v}) out of range for n={n}");
            if u == v || present[u * n + v] {
                continue;
            }
            present[u * n + v] = true;
            present[v * n + u] = true;
            adj[u].push(v);
            adj[v].push(u);
            edge_count += 1;
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { n, adj, edge_count }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for (u, v) in self.edges() {
            m[(u, v)] = 1.0;
            m[(v, u)] = 1.0;
        }
        m
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }
}

/// The six pattern indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFlags {
    pub diagonal: bool,
    pub hollow: bool,
    pub bipartite: bool,
    pub tree: bool,
    pub chordal: bool,
    pub planar: bool,
}

impl PatternFlags {
    /// Flags in (D, H, B, T, C, P) order.
    pub fn as_array(&self) -> [bool; 6] {
        [self.diagonal, self.hollow, self.bipartite, self.tree, self.chordal, self.planar]
    }
}

pub fn pattern_flags(a: &Matrix) -> PatternFlags {
    let n = a.rows();
    let g = SupportGraph::from_matrix(a);
    PatternFlags {
        diagonal: g.edge_count() == 0,
        hollow: (0..n).all(|i| a[(i, i)] == 0.0),
        bipartite: is_bipartite(&g),
        tree: is_spanning_tree(&g),
        chordal: is_chordal(&g),
        planar: is_planar(&g),
    }
}

/// BFS two-coloring.
pub fn is_bipartite(g: &SupportGraph) -> bool {
    let mut color = vec![u8::MAX; g.n];
    let mut queue = std::collections::VecDeque::new();
    for s in 0..g.n {
        if color[s] != u8::MAX {
            continue;
        }
        color[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &w in &g.adj[u] {
                if color[w] == u8::MAX {
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

/// Connected, acyclic, exactly `n − 1` edges. Edgeless graphs are not trees.
pub fn is_spanning_tree(g: &SupportGraph) -> bool {
    g.n >= 2 && g.edge_count + 1 == g.n && g.is_connected()
}

/// Maximum cardinality search order (the order in which vertices are
/// visited). Its reverse is a perfect elimination ordering iff the graph is
/// chordal.
pub fn maximum_cardinality_search(g: &SupportGraph) -> Vec<usize> {
    let mut weight = vec![0usize; g.n];
    let mut visited = vec![false; g.n];
    let mut order = Vec::with_capacity(g.n);
    for _ in 0..g.n {
        let v = (0..g.n)
            .filter(|&v| !visited[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited vertex remains");
        visited[v] = true;
        order.push(v);
        for &w in &g.adj[v] {
            if !visited[w] {
                weight[w] += 1;
            }
        }
    }
    order
}

/// Whether `elimination` is a perfect elimination ordering: for every vertex,
/// the neighbours eliminated after it form a clique.
pub fn is_perfect_elimination_ordering(g: &SupportGraph, elimination: &[usize]) -> bool {
    let mut pos = vec![0; g.n];
    for (i, &v) in elimination.iter().enumerate() {
        pos[v] = i;
    }
    for &v in elimination {
        let later: Vec<usize> = g.adj[v].iter().copied().filter(|&w| pos[w] > pos[v]).collect();
        let Some(&parent) = later.iter().min_by_key(|&&w| pos[w]) else { continue };
        if later.iter().any(|&w| w != parent && !g.has_edge(parent, w)) {
            return false;
        }
    }
    true
}

pub fn is_chordal(g: &SupportGraph) -> bool {
    let mut order = maximum_cardinality_search(g);
    order.reverse();
    is_perfect_elimination_ordering(g, &order)
}

/// Left-right planarity test.
pub fn is_planar(g: &SupportGraph) -> bool {
    if g.n >= 3 && g.edge_count > 3 * g.n - 6 {
        return false;
    }
    LrPlanarity::new(g).run()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Interval {
    low: Option<usize>,
    high: Option<usize>,
}

impl Interval {
    fn is_empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Debug, Clone, Copy)]
struct ConflictPair {
    id: usize,
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct LrPlanarity<'g> {
    g: &'g SupportGraph,
    height: Vec<i64>,
    parent_edge: Vec<Option<usize>>,
    roots: Vec<usize>,
    // oriented edges (tail, head)
    edges: Vec<(usize, usize)>,
    oriented: Vec<bool>,
    out_edges: Vec<Vec<usize>>,
    lowpt: Vec<i64>,
    lowpt2: Vec<i64>,
    nesting: Vec<i64>,
    stack: Vec<ConflictPair>,
    stack_bottom: Vec<Option<usize>>,
    lowpt_edge: Vec<usize>,
    reference: Vec<Option<usize>>,
    next_pair_id: usize,
}

impl<'g> LrPlanarity<'g> {
    fn new(g: &'g SupportGraph) -> Self {
        let m = g.edge_count;
        Self {
            g,
            height: vec![-1; g.n],
            parent_edge: vec![None; g.n],
            roots: Vec::new(),
            edges: Vec::with_capacity(m),
            oriented: vec![false; g.n * g.n],
            out_edges: vec![Vec::new(); g.n],
            lowpt: Vec::with_capacity(m),
            lowpt2: Vec::with_capacity(m),
            nesting: Vec::with_capacity(m),
            stack: Vec::new(),
            stack_bottom: vec![None; m],
            lowpt_edge: vec![usize::MAX; m],
            reference: vec![None; m],
            next_pair_id: 0,
        }
    }

    fn run(mut self) -> bool {
        for v in 0..self.g.n {
            if self.height[v] == -1 {
                self.height[v] = 0;
                self.roots.push(v);
                self.orient(v);
            }
        }
        for v in 0..self.g.n {
            let nesting = &self.nesting;
            self.out_edges[v].sort_by_key(|&e| nesting[e]);
        }
        let roots = self.roots.clone();
        roots.into_iter().all(|r| self.test(r))
    }

    fn orient(&mut self, v: usize) {
        let n = self.g.n;
        let e = self.parent_edge[v];
        for idx in 0..self.g.adj[v].len() {
            let w = self.g.adj[v][idx];
            if self.oriented[v * n + w] {
                continue;
            }
            self.oriented[v * n + w] = true;
            self.oriented[w * n + v] = true;
            let ei = self.edges.len();
            self.edges.push((v, w));
            self.out_edges[v].push(ei);
            self.lowpt.push(self.height[v]);
            self.lowpt2.push(self.height[v]);
            self.nesting.push(0);
            if self.height[w] == -1 {
                self.parent_edge[w] = Some(ei);
                self.height[w] = self.height[v] + 1;
                self.orient(w);
            } else {
                self.lowpt[ei] = self.height[w];
            }
            self.nesting[ei] = 2 * self.lowpt[ei];
            if self.lowpt2[ei] < self.height[v] {
                self.nesting[ei] += 1;
            }
            if let Some(e) = e {
                if self.lowpt[ei] < self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt[e].min(self.lowpt2[ei]);
                    self.lowpt[e] = self.lowpt[ei];
                } else if self.lowpt[ei] > self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt[ei]);
                } else {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt2[ei]);
                }
            }
        }
    }

    fn top_id(&self) -> Option<usize> {
        self.stack.last().map(|p| p.id)
    }

    fn push_pair(&mut self, left: Interval, right: Interval) {
        let id = self.next_pair_id;
        self.next_pair_id += 1;
        self.stack.push(ConflictPair { id, left, right });
    }

    fn conflicting(&self, i: &Interval, b: usize) -> bool {
        match i.high {
            Some(h) if !i.is_empty() => self.lowpt[h] > self.lowpt[b],
            _ => false,
        }
    }

    fn lowest(&self, p: &ConflictPair) -> i64 {
        if p.left.is_empty() {
            return self.lowpt[p.right.low.expect("non-empty pair")];
        }
        if p.right.is_empty() {
            return self.lowpt[p.left.low.expect("non-empty pair")];
        }
        self.lowpt[p.left.low.unwrap()].min(self.lowpt[p.right.low.unwrap()])
    }

    fn test(&mut self, v: usize) -> bool {
        let e = self.parent_edge[v];
        let outs = self.out_edges[v].clone();
        for (idx, &ei) in outs.iter().enumerate() {
            self.stack_bottom[ei] = self.top_id();
            let w = self.edges[ei].1;
            if self.parent_edge[w] == Some(ei) {
                if !self.test(w) {
                    return false;
                }
            } else {
                self.lowpt_edge[ei] = ei;
                self.push_pair(Interval::default(), Interval { low: Some(ei), high: Some(ei) });
            }
            if self.lowpt[ei] < self.height[v] {
                let e = e.expect("return edge below a root");
                if idx == 0 {
                    self.lowpt_edge[e] = self.lowpt_edge[ei];
                } else if !self.add_constraints(ei, e) {
                    return false;
                }
            }
        }
        if let Some(e) = e {
            self.remove_back_edges(e);
        }
        true
    }

    fn add_constraints(&mut self, ei: usize, e: usize) -> bool {
        let mut p_left = Interval::default();
        let mut p_right = Interval::default();
        loop {
            let Some(mut q) = self.stack.pop() else { break };
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            let qr_low = q.right.low.expect("non-empty interval");
            if self.lowpt[qr_low] > self.lowpt[e] {
                if p_right.is_empty() {
                    p_right = q.right;
                } else if let Some(pl) = p_right.low {
                    self.reference[pl] = q.right.high;
                }
                p_right.low = q.right.low;
            } else {
                self.reference[qr_low] = Some(self.lowpt_edge[e]);
            }
            if self.top_id() == self.stack_bottom[ei] {
                break;
            }
        }
        while let Some(top) = self.stack.last().copied() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().unwrap();
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            if let Some(pl) = p_right.low {
                self.reference[pl] = q.right.high;
            }
            if q.right.low.is_some() {
                p_right.low = q.right.low;
            }
            if p_left.is_empty() {
                p_left = q.left;
            } else if let Some(pl) = p_left.low {
                self.reference[pl] = q.left.high;
            }
            p_left.low = q.left.low;
        }
        if !(p_left.is_empty() && p_right.is_empty()) {
            self.push_pair(p_left, p_right);
        }
        true
    }

    fn remove_back_edges(&mut self, e: usize) {
        let u = self.edges[e].0;
        while let Some(top) = self.stack.last() {
            if self.lowest(top) != self.height[u] {
                break;
            }
            self.stack.pop();
        }
        if let Some(mut p) = self.stack.pop() {
            while let Some(h) = p.left.high {
                if self.edges[h].1 != u {
                    break;
                }
                p.left.high = self.reference[h];
            }
            if p.left.high.is_none() && p.left.low.is_some() {
                self.reference[p.left.low.unwrap()] = p.right.low;
                p.left.low = None;
            }
            while let Some(h) = p.right.high {
                if self.edges[h].1 != u {
                    break;
                }
                p.right.high = self.reference[h];
            }
            if p.right.high.is_none() && p.right.low.is_some() {
                self.reference[p.right.low.unwrap()] = p.left.low;
                p.right.low = None;
            }
            self.stack.push(p);
        }
    }
}

/// Replaces every edge of a 0/1 adjacency matrix by an integer weight drawn
/// uniformly from {−10, …, 10}. One draw per unordered pair, in row-major
/// upper-triangle order. A drawn 0 removes the edge from the support.
pub fn adjacency_to_distance<R: Rng + ?Sized>(adjacency: &Matrix, rng: &mut R) -> Matrix {
    let n = adjacency.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if adjacency[(i, j)] == 1.0 {
                let w = rng.random_range(-10i32..=10) as f64;
                d[(i, j)] = w;
                d[(j, i)] = w;
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn complete(n: usize) -> SupportGraph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                e.push((i, j));
            }
        }
        SupportGraph::from_edges(n, &e)
    }

    fn cycle(n: usize) -> SupportGraph {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        SupportGraph::from_edges(n, &e)
    }

    #[test]
    fn diagonal_flags() {
        let f = pattern_flags(&Matrix::from_diag(&[1.0, 2.0, 3.0]));
        assert_eq!(f.as_array(), [true, false, true, false, true, true]);
    }

    #[test]
    fn c4_flags() {
        let f = pattern_flags(&cycle(4).adjacency_matrix());
        assert_eq!(f.as_array(), [false, true, true, false, false, true]);
    }

    #[test]
    fn kuratowski_graphs() {
        assert!(!is_planar(&complete(5)));
        let k33: Vec<_> = (0..3).flat_map(|i| (3..6).map(move |j| (i, j))).collect();
        assert!(!is_planar(&SupportGraph::from_edges(6, &k33)));
        assert!(is_planar(&complete(4)));
        let mut k5_minus = complete(5).edges();
        k5_minus.pop();
        assert!(is_planar(&SupportGraph::from_edges(5, &k5_minus)));
    }

    #[test]
    fn petersen_is_not_planar() {
        let mut e = Vec::new();
        for i in 0..5 {
            e.push((i, (i + 1) % 5));
            e.push((i, i + 5));
            e.push((i + 5, (i + 2) % 5 + 5));
        }
        let g = SupportGraph::from_edges(10, &e);
        assert_eq!(g.edge_count(), 15);
        assert!(!is_planar(&g));
    }

    #[test]
    fn grids_and_wheels_are_planar() {
        let (r, c) = (5, 6);
        let mut e = Vec::new();
        for i in 0..r {
            for j in 0..c {
                let v = i * c + j;
                if j + 1 < c {
                    e.push((v, v + 1));
                }
                if i + 1 < r {
                    e.push((v, v + c));
                }
                if i + 1 < r && j + 1 < c {
                    e.push((v, v + c + 1));
                }
            }
        }
        assert!(is_planar(&SupportGraph::from_edges(r * c, &e)));
        let mut wheel: Vec<_> = (1..12).map(|i| (0, i)).collect();
        wheel.extend((1..12).map(|i| (i, i % 11 + 1)));
        assert!(is_planar(&SupportGraph::from_edges(12, &wheel)));
    }

    #[test]
    fn chordality() {
        assert!(!is_chordal(&cycle(4)));
        assert!(!is_chordal(&cycle(6)));
        assert!(is_chordal(&cycle(3)));
        let mut e = cycle(5).edges();
        e.push((0, 2));
        e.push((0, 3));
        assert!(is_chordal(&SupportGraph::from_edges(5, &e)));
        assert!(is_chordal(&complete(6)));
    }

    #[test]
    fn trees() {
        let path = SupportGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        assert!(is_spanning_tree(&path));
        let forest = SupportGraph::from_edges(4, &[(0, 1), (2, 3)]);
        assert!(!is_spanning_tree(&forest));
        assert!(!is_spanning_tree(&SupportGraph::from_edges(1, &[])));
    }

    #[test]
    fn distance_conversion_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(adjacency_to_distance(&Matrix::zeros(3, 3), &mut rng), Matrix::zeros(3, 3));

        let mut single = Matrix::zeros(3, 3);
        single[(0, 1)] = 1.0;
        single[(1, 0)] = 1.0;
        let d = adjacency_to_distance(&single, &mut rng);
        assert_eq!(d[(0, 1)], d[(1, 0)]);
        for (i, j) in [(0, 0), (0, 2), (1, 1), (1, 2), (2, 2)] {
            assert_eq!(d[(i, j)], 0.0);
        }

        // Seed chosen so that no drawn weight is zero.
        let c4 = cycle(4).adjacency_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let d = adjacency_to_distance(&c4, &mut rng);
        let nonzero_pairs = (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).filter(|&(i, j)| d[(i, j)] != 0.0).count();
        assert_eq!(nonzero_pairs, 4);
        assert!(d.is_exactly_symmetric());
        for i in 0..4 {
            for j in 0..4 {
                assert!(d[(i, j)] == 0.0 || c4[(i, j)] == 1.0);
                assert_eq!(d[(i, j)].fract(), 0.0);
                assert!(d[(i, j)].abs() <= 10.0);
            }
        }
    }
}
