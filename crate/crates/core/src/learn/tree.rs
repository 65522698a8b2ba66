//! CART regression trees on presorted features.
//!
//! Splits minimize the weighted squared error of a split target. For 0/1
//! targets that criterion is exactly twice the weighted Gini impurity, so
//! the same search serves classification and regression. Leaf values are
//! `Σw·num / Σw·den`, which covers plain means (`den = 1`) as well as Newton
//! steps for boosting.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Minimum number of distinct training rows per leaf.
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

/// Training data for one tree. Rows with zero weight are ignored.
pub struct TreeData<'a> {
    pub x: &'a [Vec<f64>],
    /// Split target.
    pub target: &'a [f64],
    pub leaf_num: &'a [f64],
    pub leaf_den: &'a [f64],
    pub weight: &'a [f64],
}

/// Row order of every feature, computed once per dataset.
pub struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let order = (0..p)
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.len() as u32).collect();
                idx.sort_by(|&a, &b| x[a as usize][f].total_cmp(&x[b as usize][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { order }
    }
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Builder<'a, R: Rng> {
    data: &'a TreeData<'a>,
    params: TreeParams,
    rng: &'a mut R,
    importance: Vec<f64>,
    in_left: Vec<bool>,
}

/// Fits one tree; returns it with the per-feature impurity decrease.
pub fn fit_tree<R: Rng>(data: &TreeData<'_>, presorted: &Presorted, params: TreeParams, rng: &mut R) -> (Node, Vec<f64>) {
    let p = presorted.order.len();
    let lists: Vec<Vec<u32>> = presorted
        .order
        .iter()
        .map(|o| o.iter().copied().filter(|&i| data.weight[i as usize] > 0.0).collect())
        .collect();
    let mut b = Builder { data, params, rng, importance: vec![0.0; p], in_left: vec![false; data.x.len()] };
    let rows: Vec<u32> = (0..data.x.len() as u32).filter(|&i| data.weight[i as usize] > 0.0).collect();
    let root = b.grow(rows, lists, 0);
    (root, b.importance)
}

impl<R: Rng> Builder<'_, R> {
    fn leaf(&self, rows: &[u32]) -> Node {
        let (mut num, mut den) = (0.0, 0.0);
        for &i in rows {
            let w = self.data.weight[i as usize];
            num += w * self.data.leaf_num[i as usize];
            den += w * self.data.leaf_den[i as usize];
        }
        Node::Leaf { value: if den.abs() > 1e-12 { num / den } else { 0.0 } }
    }

    fn grow(&mut self, rows: Vec<u32>, lists: Vec<Vec<u32>>, depth: usize) -> Node {
        let (w_tot, s_tot, q_tot) = self.moments(&rows);
        let sse = q_tot - s_tot * s_tot / w_tot;
        let min_leaf = self.params.min_samples_leaf.max(1);
        let at_depth = self.params.max_depth.is_some_and(|d| depth >= d);
        if at_depth || rows.len() < 2 * min_leaf || sse <= 1e-12 * q_tot.abs().max(1e-300) {
            return self.leaf(&rows);
        }
        let Some(best) = self.best_split(&lists, min_leaf, w_tot, s_tot) else {
            return self.leaf(&rows);
        };
        self.importance[best.feature] += best.gain;
        for &i in &rows {
            self.in_left[i as usize] = self.data.x[i as usize][best.feature] <= best.threshold;
        }
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows.iter().partition(|&&i| self.in_left[i as usize]);
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in lists {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&i| self.in_left[i as usize]);
            left_lists.push(l);
            right_lists.push(r);
        }
        let left = self.grow(left_rows, left_lists, depth + 1);
        let right = self.grow(right_rows, right_lists, depth + 1);
        Node::Split { feature: best.feature, threshold: best.threshold, left: Box::new(left), right: Box::new(right) }
    }

    fn moments(&self, rows: &[u32]) -> (f64, f64, f64) {
        let (mut w, mut s, mut q) = (0.0, 0.0, 0.0);
        for &i in rows {
            let (wi, yi) = (self.data.weight[i as usize], self.data.target[i as usize]);
            w += wi;
            s += wi * yi;
            q += wi * yi * yi;
        }
        (w, s, q)
    }

    fn candidate_features(&mut self, p: usize) -> Vec<usize> {
        match self.params.max_features {
            Some(k) if k < p => {
                let mut f = sample(self.rng, p, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, lists: &[Vec<u32>], min_leaf: usize, w_tot: f64, s_tot: f64) -> Option<Best> {
        let mut best: Option<Best> = None;
        let n = lists[0].len();
        for f in self.candidate_features(lists.len()) {
            let list = &lists[f];
            let (mut wl, mut sl) = (0.0, 0.0);
            for k in 0..n - 1 {
                let i = list[k] as usize;
                let (wi, yi) = (self.data.weight[i], self.data.target[i]);
                wl += wi;
                sl += wi * yi;
                let count_left = k + 1;
                if count_left < min_leaf || n - count_left < min_leaf {
                    continue;
                }
                let (xa, xb) = (self.data.x[i][f], self.data.x[list[k + 1] as usize][f]);
                if xa >= xb {
                    continue;
                }
                let wr = w_tot - wl;
                let sr = s_tot - sl;
                // SSE reduction = sl²/wl + sr²/wr − s²/w
                let gain = sl * sl / wl + sr * sr / wr - s_tot * s_tot / w_tot;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = 0.5 * (xa + xb);
                    if threshold >= xb {
                        threshold = xa;
                    }
                    best = Some(Best { gain, feature: f, threshold });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fit(x: &[Vec<f64>], y: &[f64], depth: Option<usize>) -> Node {
        let ones = vec![1.0; y.len()];
        let data = TreeData { x, target: y, leaf_num: y, leaf_den: &ones, weight: &ones };
        let params = TreeParams { max_depth: depth, min_samples_leaf: 1, max_features: None };
        fit_tree(&data, &Presorted::new(x), params, &mut ChaCha8Rng::seed_from_u64(0)).0
    }

    fn accuracy(tree: &Node, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let hits = x.iter().zip(y).filter(|(xi, &yi)| (tree.predict(xi) >= 0.5) == (yi == 1.0)).count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = [0.0, 1.0, 1.0, 0.0];
        let stump = fit(&x, &y, Some(1));
        assert!(accuracy(&stump, &x, &y) <= 0.75);
        let deep = fit(&x, &y, Some(2));
        assert_eq!(accuracy(&deep, &x, &y), 1.0);
        assert_eq!(deep.depth(), 2);
    }

    #[test]
    fn midpoint_thresholds_and_tie_break() {
        // Both features separate the classes equally well; feature 0 wins.
        let x = vec![vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0], vec![4.0, 40.0]];
        let y = [0.0, 0.0, 1.0, 1.0];
        match fit(&x, &y, Some(1)) {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 2.5);
            }
            leaf => panic!("expected a split, got {leaf:?}"),
        }
    }

    #[test]
    fn constant_target_is_a_leaf() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let tree = fit(&x, &[0.4, 0.4, 0.4], None);
        match tree {
            Node::Leaf { value } => assert!((value - 0.4).abs() < 1e-15),
            split => panic!("expected a leaf, got {split:?}"),
        }
    }
}
