//! CART regression trees grown by exhaustive greedy search.
//!
//! Each feature's rows are sorted once at the root and stably partitioned on
//! every split, so a node costs `O(n·p)` rather than a fresh sort.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: Some(3),
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

/// Flattened binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// Summed split gain per feature.
    pub feature_gain: Vec<f64>,
}

impl Tree {
    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }
}

/// How leaves are valued and splits scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SplitRule {
    /// Leaf = mean, gain = reduction in squared error.
    Variance,
    /// Second-order squared-loss form with unit hessians: leaf = G/(H + λ),
    /// gain = ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ.
    Regularized { lambda: f64, gamma: f64 },
}

impl SplitRule {
    fn leaf(self, sum: f64, count: usize) -> f64 {
        match self {
            SplitRule::Variance => sum / count as f64,
            SplitRule::Regularized { lambda, .. } => sum / (count as f64 + lambda),
        }
    }

    fn score(self, sum: f64, count: usize) -> f64 {
        match self {
            SplitRule::Variance => sum * sum / count as f64,
            SplitRule::Regularized { lambda, .. } => sum * sum / (count as f64 + lambda),
        }
    }

    fn gain(self, left: (f64, usize), right: (f64, usize), parent: (f64, usize)) -> f64 {
        let raw = self.score(left.0, left.1) + self.score(right.0, right.1) - self.score(parent.0, parent.1);
        match self {
            SplitRule::Variance => raw,
            SplitRule::Regularized { gamma, .. } => 0.5 * raw - gamma,
        }
    }
}

/// Per-split random feature subset (random forest).
pub(crate) struct FeatureSampler<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub mtry: usize,
}

struct Builder<'a, 'r> {
    x: ArrayView2<'a, f64>,
    target: &'a [f64],
    params: TreeParams,
    rule: SplitRule,
    sampler: Option<FeatureSampler<'r>>,
    nodes: Vec<Node>,
    feature_gain: Vec<f64>,
    go_left: Vec<bool>,
}

struct Best {
    feature: usize,
    position: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_, '_> {
    fn build(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let rows = &sorted[0];
        let count = rows.len();
        let sum: f64 = rows.iter().map(|&r| self.target[r]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.rule.leaf(sum, count),
        });

        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || count < 2 * self.params.min_samples_leaf || count < 2 {
            return id;
        }
        let mean = sum / count as f64;
        let sse: f64 = rows.iter().map(|&r| (self.target[r] - mean).powi(2)).sum();
        let sum_sq: f64 = rows.iter().map(|&r| self.target[r].powi(2)).sum();
        if sse <= 1e-20 * sum_sq {
            return id;
        }

        let Some(best) = self.best_split(&sorted, sum) else {
            return id;
        };
        for (i, &r) in sorted[best.feature].iter().enumerate() {
            self.go_left[r] = i <= best.position;
        }
        let (left_sorted, right_sorted): (Vec<Vec<usize>>, Vec<Vec<usize>>) = sorted
            .iter()
            .map(|list| list.iter().partition::<Vec<usize>, _>(|&&r| self.go_left[r]))
            .unzip();
        drop(sorted);
        self.feature_gain[best.feature] += best.gain;
        let left = self.build(left_sorted, depth + 1);
        let right = self.build(right_sorted, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            gain: best.gain,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, sorted: &[Vec<usize>], sum: f64) -> Option<Best> {
        let p = self.x.ncols();
        let candidates: Vec<usize> = match self.sampler.as_mut() {
            Some(s) if s.mtry < p => {
                let mut f = index::sample(s.rng, p, s.mtry).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        };
        let count = sorted[0].len();
        let msl = self.params.min_samples_leaf;
        let mut best: Option<Best> = None;
        for f in candidates {
            let order = &sorted[f];
            let mut left_sum = 0.0;
            for i in 0..count - 1 {
                left_sum += self.target[order[i]];
                let n_left = i + 1;
                if n_left < msl || count - n_left < msl {
                    continue;
                }
                let (lo, hi) = (self.x[[order[i], f]], self.x[[order[i + 1], f]]);
                if lo >= hi {
                    continue;
                }
                let gain = self
                    .rule
                    .gain((left_sum, n_left), (sum - left_sum, count - n_left), (sum, count));
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = 0.5 * (lo + hi);
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Best {
                        feature: f,
                        position: i,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Grows a tree on `rows` (duplicates allowed) of `x` against `target`.
pub(crate) fn grow(
    x: ArrayView2<f64>,
    target: &[f64],
    rows: &[usize],
    params: TreeParams,
    rule: SplitRule,
    sampler: Option<FeatureSampler<'_>>,
) -> Tree {
    let p = x.ncols();
    let sorted: Vec<Vec<usize>> = (0..p)
        .map(|f| {
            let mut order = rows.to_vec();
            order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]));
            order
        })
        .collect();
    let mut b = Builder {
        x,
        target,
        params,
        rule,
        sampler,
        nodes: Vec::new(),
        feature_gain: vec![0.0; p],
        go_left: vec![false; x.nrows()],
    };
    if p == 0 {
        let sum: f64 = rows.iter().map(|&r| target[r]).sum();
        b.nodes.push(Node::Leaf {
            value: rule.leaf(sum, rows.len()),
        });
    } else {
        b.build(sorted, 0);
    }
    Tree {
        nodes: b.nodes,
        feature_gain: b.feature_gain,
    }
}

pub(crate) fn check_xy(x: ArrayView2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(MlError::InvalidArgument("empty training data".into()));
    }
    if x.nrows() != y.len() {
        return Err(MlError::InvalidArgument(format!(
            "{} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(MlError::InvalidArgument("non-finite training data".into()));
    }
    Ok(())
}

/// CART regression tree with squared-error splits.
pub fn fit_regression_tree(x: ArrayView2<f64>, y: &[f64], params: TreeParams) -> Result<Tree> {
    check_xy(x, y)?;
    if params.min_samples_leaf == 0 {
        return Err(MlError::InvalidArgument("min_samples_leaf must be at least 1".into()));
    }
    let rows: Vec<usize> = (0..y.len()).collect();
    Ok(grow(x, y, &rows, params, SplitRule::Variance, None))
}
