//! Binary decision trees built by exact greedy search over presorted
//! feature columns. The split criterion is pluggable so the same builder
//! serves Gini classification trees and second-order boosting trees.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(L),
}

/// Nodes stored flat with the root at index 0. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    pub fn leaf(&self, x: &[f64]) -> &L {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf(v) => return v,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<L>(t: &Tree<L>, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
                Node::Leaf(_) => 0,
            }
        }
        go(self, 0)
    }
}

/// A row-major feature matrix view.
#[derive(Debug, Clone, Copy)]
pub struct Matrix<'a> {
    pub rows: &'a [Vec<f64>],
    pub cols: usize,
}

impl<'a> Matrix<'a> {
    pub fn new(rows: &'a [Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Matrix { rows, cols }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }
}

/// Per-feature sample order, ascending by value (ties by index).
pub fn presort(x: Matrix<'_>) -> Vec<Vec<u32>> {
    (0..x.cols)
        .map(|f| {
            let mut idx: Vec<u32> = (0..x.rows.len() as u32).collect();
            idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)).then(a.cmp(&b)));
            idx
        })
        .collect()
}

/// Sufficient statistics and scoring for one split criterion.
pub trait Criterion {
    type Stats: Clone;

    fn empty(&self) -> Self::Stats;
    fn add(&self, stats: &mut Self::Stats, sample: usize);
    fn sub(&self, stats: &mut Self::Stats, sample: usize);
    /// Node score; a split is worth taking when the children's summed score
    /// exceeds the parent's.
    fn score(&self, stats: &Self::Stats) -> f64;
    fn admissible(&self, left: &Self::Stats, right: &Self::Stats) -> bool;
    fn leaf(&self, stats: &Self::Stats) -> Self::Leaf;
    type Leaf;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Minimum improvement for a split to count.
const MIN_GAIN: f64 = 1e-12;

/// Exact greedy search over the presorted columns restricted to one node.
/// Ties keep the first candidate in (feature, threshold) order.
pub fn best_split<C: Criterion>(
    criterion: &C,
    x: Matrix<'_>,
    sorted: &[Vec<u32>],
    total: &C::Stats,
) -> Option<SplitChoice> {
    let parent = criterion.score(total);
    let mut best: Option<SplitChoice> = None;
    for (f, order) in sorted.iter().enumerate() {
        let mut left = criterion.empty();
        let mut right = total.clone();
        for p in 0..order.len().saturating_sub(1) {
            let i = order[p] as usize;
            criterion.add(&mut left, i);
            criterion.sub(&mut right, i);
            let lo = x.get(i, f);
            let hi = x.get(order[p + 1] as usize, f);
            if lo >= hi || !criterion.admissible(&left, &right) {
                continue;
            }
            let gain = criterion.score(&left) + criterion.score(&right) - parent;
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

pub struct TreeParams {
    pub max_depth: usize,
}

/// Grows a tree depth-first. `sorted` holds the node's samples per feature.
pub fn grow<C: Criterion>(criterion: &C, x: Matrix<'_>, sorted: Vec<Vec<u32>>, params: &TreeParams) -> Tree<C::Leaf> {
    let mut tree = Tree { nodes: Vec::new() };
    let mut goes_left = vec![false; x.rows.len()];
    grow_node(criterion, x, sorted, 0, params, &mut tree, &mut goes_left);
    tree
}

fn grow_node<C: Criterion>(
    criterion: &C,
    x: Matrix<'_>,
    sorted: Vec<Vec<u32>>,
    depth: usize,
    params: &TreeParams,
    tree: &mut Tree<C::Leaf>,
    goes_left: &mut [bool],
) -> usize {
    let mut total = criterion.empty();
    if let Some(first) = sorted.first() {
        for &i in first {
            criterion.add(&mut total, i as usize);
        }
    }
    let at = tree.nodes.len();
    let split = if depth < params.max_depth && sorted.first().is_some_and(|s| s.len() >= 2) {
        best_split(criterion, x, &sorted, &total)
    } else {
        None
    };
    let Some(split) = split else {
        tree.nodes.push(Node::Leaf(criterion.leaf(&total)));
        return at;
    };
    // placeholder, patched once children exist
    tree.nodes.push(Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: 0,
        right: 0,
    });
    for &i in &sorted[split.feature] {
        goes_left[i as usize] = x.get(i as usize, split.feature) <= split.threshold;
    }
    let (mut left_sorted, mut right_sorted) = (Vec::new(), Vec::new());
    for order in &sorted {
        let (l, r): (Vec<u32>, Vec<u32>) = order.iter().partition(|&&i| goes_left[i as usize]);
        left_sorted.push(l);
        right_sorted.push(r);
    }
    drop(sorted);
    let left = grow_node(criterion, x, left_sorted, depth + 1, params, tree, goes_left);
    let right = grow_node(criterion, x, right_sorted, depth + 1, params, tree, goes_left);
    if let Node::Split { left: l, right: r, .. } = &mut tree.nodes[at] {
        *l = left;
        *r = right;
    }
    at
}

/// Gini criterion over class indices. Leaves hold class frequencies.
pub struct Gini<'a> {
    pub classes: &'a [usize],
    pub n_classes: usize,
}

impl Criterion for Gini<'_> {
    type Stats = (Vec<f64>, f64);
    type Leaf = Vec<f64>;

    fn empty(&self) -> Self::Stats {
        (vec![0.0; self.n_classes], 0.0)
    }

    fn add(&self, s: &mut Self::Stats, i: usize) {
        s.0[self.classes[i]] += 1.0;
        s.1 += 1.0;
    }

    fn sub(&self, s: &mut Self::Stats, i: usize) {
        s.0[self.classes[i]] -= 1.0;
        s.1 -= 1.0;
    }

    /// `n − n·gini = Σc²/n`, so maximizing the children's sum minimizes
    /// the size-weighted Gini impurity.
    fn score(&self, s: &Self::Stats) -> f64 {
        if s.1 == 0.0 {
            return 0.0;
        }
        s.0.iter().map(|c| c * c).sum::<f64>() / s.1
    }

    fn admissible(&self, l: &Self::Stats, r: &Self::Stats) -> bool {
        l.1 >= 1.0 && r.1 >= 1.0
    }

    fn leaf(&self, s: &Self::Stats) -> Vec<f64> {
        if s.1 == 0.0 {
            return vec![1.0 / self.n_classes as f64; self.n_classes];
        }
        s.0.iter().map(|c| c / s.1).collect()
    }
}

/// Second-order boosting criterion: gain `G²/(H+λ)`, leaf `−G/(H+λ)·η`.
pub struct Newton<'a> {
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub lambda: f64,
    pub min_child_weight: f64,
    pub learning_rate: f64,
}

impl Criterion for Newton<'_> {
    type Stats = (f64, f64);
    type Leaf = f64;

    fn empty(&self) -> Self::Stats {
        (0.0, 0.0)
    }

    fn add(&self, s: &mut Self::Stats, i: usize) {
        s.0 += self.grad[i];
        s.1 += self.hess[i];
    }

    fn sub(&self, s: &mut Self::Stats, i: usize) {
        s.0 -= self.grad[i];
        s.1 -= self.hess[i];
    }

    fn score(&self, s: &Self::Stats) -> f64 {
        s.0 * s.0 / (s.1 + self.lambda)
    }

    fn admissible(&self, l: &Self::Stats, r: &Self::Stats) -> bool {
        l.1 >= self.min_child_weight && r.1 >= self.min_child_weight
    }

    fn leaf(&self, s: &Self::Stats) -> f64 {
        -s.0 / (s.1 + self.lambda) * self.learning_rate
    }
}
