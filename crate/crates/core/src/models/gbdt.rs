//! Second-order gradient boosting for the binomial log-loss.
//!
//! Every tree is fit to the gradients `g = p − y` and hessians
//! `h = p(1 − p)` of the current scores. Split gain and leaf values use
//! the L2-regularized Newton objective; the two growth policies differ
//! only in the order nodes are expanded: level-wise expands every node of
//! a depth before descending, leaf-wise always splits the frontier leaf
//! with the largest gain.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::encode::Matrix;
use super::split::{scan_exact, total, Best, Columns, Stat};
use super::tree::{Node, Tree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    Level,
    Leaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub growth: Growth,
    /// Depth limit; level growth uses 6 when unset, leaf growth is then
    /// bounded by `max_leaves` alone.
    pub max_depth: Option<usize>,
    /// Leaf budget for leaf-wise growth.
    pub max_leaves: usize,
    pub l2_lambda: f64,
    pub min_child_hessian: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_rounds: 100,
            learning_rate: 0.1,
            growth: Growth::Leaf,
            max_depth: None,
            max_leaves: 31,
            l2_lambda: 1.0,
            min_child_hessian: 1e-3,
            min_samples_leaf: 5,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::config("n_rounds", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::config("learning_rate", "must lie in (0, 1]"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::config("max_depth", "must be at least 1"));
        }
        if self.max_leaves < 2 && self.growth == Growth::Leaf {
            return Err(Error::config("max_leaves", "must be at least 2"));
        }
        if !(self.l2_lambda >= 0.0) || !(self.min_child_hessian >= 0.0) {
            return Err(Error::config("l2_lambda", "regularization terms must be non-negative"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf", "must be at least 1"));
        }
        Ok(())
    }

    fn depth_limit(&self) -> Option<usize> {
        match self.growth {
            Growth::Level => Some(self.max_depth.unwrap_or(6)),
            Growth::Leaf => self.max_depth,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct GradStat {
    g: f64,
    h: f64,
    n: usize,
}

impl Stat for GradStat {
    fn add(&mut self, o: Self) {
        self.g += o.g;
        self.h += o.h;
        self.n += o.n;
    }
    fn sub(self, o: Self) -> Self {
        GradStat { g: self.g - o.g, h: self.h - o.h, n: self.n - o.n }
    }
    fn count(&self) -> usize {
        self.n
    }
}

/// Newton leaf value `−G/(H + λ)`.
pub fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

/// Reduction of the regularized second-order objective from splitting a
/// node with sums `(G, H)` into `(G_L, H_L)` and `(G_R, H_R)`.
pub fn split_gain(g_left: f64, h_left: f64, g_right: f64, h_right: f64, lambda: f64) -> f64 {
    let term = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (term(g_left, h_left) + term(g_right, h_right) - term(g_left + g_right, h_left + h_right))
}

/// Gain of splitting rows into `left` and `right`, summing per-row
/// gradients and hessians.
pub fn candidate_gain(grad: &[f64], hess: &[f64], left: &[usize], right: &[usize], lambda: f64) -> f64 {
    let sum = |rows: &[usize], v: &[f64]| rows.iter().map(|&r| v[r]).sum::<f64>();
    split_gain(sum(left, grad), sum(left, hess), sum(right, grad), sum(right, hess), lambda)
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + libm::exp(-s))
    } else {
        let e = libm::exp(s);
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Prior log-odds.
    pub base_score: f64,
    pub learning_rate: f64,
    /// Leaf values are raw Newton steps; the learning rate is applied at
    /// prediction.
    pub trees: Vec<Tree>,
}

impl GbdtModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.score_after(row, self.trees.len())
    }

    /// Raw score using only the first `rounds` trees.
    pub fn score_after(&self, row: &[f64], rounds: usize) -> f64 {
        let sum: f64 = self.trees[..rounds.min(self.trees.len())].iter().map(|t| t.evaluate(row)).sum();
        self.base_score + self.learning_rate * sum
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.score(row))
    }
}

struct Frontier {
    id: usize,
    rows: Vec<usize>,
    depth: usize,
    best: Option<Best>,
}

struct Grower<'a> {
    cols: &'a Columns,
    grad: &'a [f64],
    hess: &'a [f64],
    config: &'a GbdtConfig,
    nodes: Vec<Node>,
    buf: Vec<(f64, usize)>,
}

impl Grower<'_> {
    fn stat_of(&self, rows: &[usize]) -> GradStat {
        let (g, h) = (self.grad, self.hess);
        total(rows, &|r| GradStat { g: g[r], h: h[r], n: 1 })
    }

    fn leaf(&mut self, rows: &[usize]) -> usize {
        let s = self.stat_of(rows);
        self.nodes.push(Node::Leaf { value: leaf_value(s.g, s.h, self.config.l2_lambda), count: s.n });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, rows: &[usize], depth: usize) -> Option<Best> {
        if self.config.depth_limit().is_some_and(|d| depth >= d) {
            return None;
        }
        let node = self.stat_of(rows);
        let (g, h) = (self.grad, self.hess);
        let stat = |r: usize| GradStat { g: g[r], h: h[r], n: 1 };
        let (lambda, mch, min_leaf) = (self.config.l2_lambda, self.config.min_child_hessian, self.config.min_samples_leaf);
        let mut best = None;
        let mut buf = core::mem::take(&mut self.buf);
        for f in 0..self.cols.len() {
            scan_exact(self.cols, f, rows, &stat, node, &mut buf, |t, left| {
                let right = node.sub(left);
                if left.h < mch || right.h < mch || left.n < min_leaf || right.n < min_leaf {
                    return;
                }
                let gain = split_gain(left.g, left.h, right.g, right.h, lambda);
                if gain > 0.0 {
                    Best::offer(&mut best, Best { score: gain, feature: f, threshold: t });
                }
            });
        }
        self.buf = buf;
        best
    }

    /// Turn leaf `c.id` into a split and return its two children.
    fn split(&mut self, c: Frontier) -> [Frontier; 2] {
        let best = c.best.expect("split without a candidate");
        let (l, r) = self.cols.partition(best.feature, best.threshold, &c.rows);
        let left = self.leaf(&l);
        let right = self.leaf(&r);
        self.nodes[c.id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        let depth = c.depth + 1;
        let lb = self.best_split(&l, depth);
        let rb = self.best_split(&r, depth);
        [Frontier { id: left, rows: l, depth, best: lb }, Frontier { id: right, rows: r, depth, best: rb }]
    }

    fn grow(mut self, n: usize) -> Tree {
        let rows: Vec<usize> = (0..n).collect();
        let id = self.leaf(&rows);
        let best = self.best_split(&rows, 0);
        let root = Frontier { id, rows, depth: 0, best };
        match self.config.growth {
            Growth::Level => {
                let mut level = alloc::vec![root];
                while !level.is_empty() {
                    let mut next = Vec::new();
                    for c in level {
                        if c.best.is_some() {
                            next.extend(self.split(c));
                        }
                    }
                    level = next;
                }
            }
            Growth::Leaf => {
                let mut frontier = alloc::vec![root];
                let mut leaves = 1;
                while leaves < self.config.max_leaves {
                    // largest gain; ties go to the earliest-created leaf
                    let pick = frontier
                        .iter()
                        .enumerate()
                        .filter_map(|(i, c)| c.best.map(|b| (i, b.score, c.id)))
                        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
                    let Some((i, _, _)) = pick else { break };
                    let c = frontier.swap_remove(i);
                    frontier.extend(self.split(c));
                    leaves += 1;
                }
            }
        }
        Tree { nodes: self.nodes }
    }
}

/// Fit one tree to the given gradients and hessians.
pub fn fit_gradient_tree(x: &Matrix, grad: &[f64], hess: &[f64], config: &GbdtConfig) -> Result<Tree> {
    config.validate()?;
    if grad.len() != x.rows || hess.len() != x.rows {
        return Err(Error::DimensionMismatch { expected: x.rows, found: grad.len().min(hess.len()) });
    }
    let cols = Columns::new(x);
    Ok(grow_tree(&cols, grad, hess, config, x.rows))
}

fn grow_tree(cols: &Columns, grad: &[f64], hess: &[f64], config: &GbdtConfig, n: usize) -> Tree {
    Grower { cols, grad, hess, config, nodes: Vec::new(), buf: Vec::new() }.grow(n)
}

pub fn fit_gbdt(x: &Matrix, y: &[u8], config: &GbdtConfig) -> Result<GbdtModel> {
    config.validate()?;
    if x.rows == 0 {
        return Err(Error::NoRows);
    }
    if y.len() != x.rows {
        return Err(Error::DimensionMismatch { expected: x.rows, found: y.len() });
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Degenerate(alloc::string::String::from("degenerate prior: single-class labels")));
    }
    let prior = pos as f64 / y.len() as f64;
    let base_score = libm::log(prior / (1.0 - prior));
    let cols = Columns::new(x);
    let n = x.rows;
    let mut scores = alloc::vec![base_score; n];
    let mut grad = alloc::vec![0.0; n];
    let mut hess = alloc::vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_rounds);
    for _ in 0..config.n_rounds {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = p - y[i] as f64;
            hess[i] = p * (1.0 - p);
        }
        let tree = grow_tree(&cols, &grad, &hess, config, n);
        for (i, s) in scores.iter_mut().enumerate() {
            *s += config.learning_rate * tree.evaluate(x.row(i));
        }
        trees.push(tree);
    }
    Ok(GbdtModel { base_score, learning_rate: config.learning_rate, trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn balanced_prior_is_zero() {
        let x = Matrix::new(4, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let m = fit_gbdt(&x, &[0, 1, 1, 0], &GbdtConfig { n_rounds: 1, ..Default::default() }).unwrap();
        assert_eq!(m.base_score, 0.0);
    }

    #[test]
    fn symmetric_gradients_cancel() {
        let x = Matrix::new(2, 1, vec![0.0, 0.0]).unwrap();
        let m = fit_gbdt(&x, &[1, 0], &GbdtConfig { n_rounds: 1, min_samples_leaf: 1, ..Default::default() }).unwrap();
        assert_eq!(m.trees[0].nodes.len(), 1);
        assert_eq!(m.trees[0].evaluate(&[0.0]), 0.0);
        assert_eq!(m.predict_proba_row(&[0.0]), 0.5);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(fit_gbdt(&x, &[1, 1], &GbdtConfig::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_leaves_equal_depth_one() {
        let data: Vec<f64> = (0..90).map(|i| ((i * 13) % 7) as f64).collect();
        let x = Matrix::new(30, 3, data).unwrap();
        let y: Vec<u8> = (0..30).map(|i| (x.row(i)[1] > 3.0) as u8 ^ (i % 5 == 0) as u8).collect();
        let leaf = GbdtConfig { n_rounds: 3, growth: Growth::Leaf, max_leaves: 2, min_samples_leaf: 1, ..Default::default() };
        let level = GbdtConfig { n_rounds: 3, growth: Growth::Level, max_depth: Some(1), min_samples_leaf: 1, ..Default::default() };
        let a = fit_gbdt(&x, &y, &leaf).unwrap();
        let b = fit_gbdt(&x, &y, &level).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trees[0].n_leaves(), 2);
    }

    #[test]
    fn gain_matches_closed_form() {
        // G_L = -1, H_L = 1, G_R = 1, H_R = 1, λ = 1: ½(½ + ½ − 0) = ½
        assert!((split_gain(-1.0, 1.0, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(leaf_value(2.0, 3.0, 1.0), -0.5);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
