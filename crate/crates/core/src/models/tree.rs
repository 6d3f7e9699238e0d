//! CART classification trees and the bagged / randomized forests built
//! from them.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::encode::Matrix;
use super::split::{scan_exact, scan_random, total, Best, Columns, Stat};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "node")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// `value` is a positive-class probability (CART, forests) or an
    /// additive raw score (boosting).
    Leaf { value: f64, count: usize },
}

/// Flat binary tree; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64, count: usize) -> Self {
        Tree { nodes: alloc::vec![Node::Leaf { value, count }] }
    }

    pub fn evaluate(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
                Node::Leaf { value, .. } => return value,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }

    /// Largest feature index referenced by a split.
    pub(crate) fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { max_depth: Some(12), min_samples_leaf: 1 }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf", "must be at least 1"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::config("max_depth", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestMode {
    RandomForest,
    ExtraTrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of features examined per split; defaults to `sqrt(p)/p`
    /// for random forests and 1 for extra trees.
    pub feature_subsample: Option<f64>,
    /// Defaults to true for random forests, false for extra trees.
    pub bootstrap: Option<bool>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, max_depth: Some(12), min_samples_leaf: 5, feature_subsample: None, bootstrap: None }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("n_trees", "must be at least 1"));
        }
        TreeConfig { max_depth: self.max_depth, min_samples_leaf: self.min_samples_leaf }.validate()?;
        if let Some(f) = self.feature_subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config("feature_subsample", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassStat {
    n: usize,
    pos: usize,
}

impl Stat for ClassStat {
    fn add(&mut self, o: Self) {
        self.n += o.n;
        self.pos += o.pos;
    }
    fn sub(self, o: Self) -> Self {
        ClassStat { n: self.n - o.n, pos: self.pos - o.pos }
    }
    fn count(&self) -> usize {
        self.n
    }
}

impl ClassStat {
    /// `n · (1 − Gini)`; the weighted Gini impurity of a split is
    /// minimized by maximizing the sum of this over both children.
    fn purity(&self) -> f64 {
        let (p, q) = (self.pos as f64, (self.n - self.pos) as f64);
        (p * p + q * q) / self.n as f64
    }
}

/// Impurity decrease `n·Gini(parent) − nL·Gini(left) − nR·Gini(right)`
/// for class counts `(n, positives)`.
pub fn gini_gain(left: (usize, usize), right: (usize, usize)) -> f64 {
    let l = ClassStat { n: left.0, pos: left.1 };
    let r = ClassStat { n: right.0, pos: right.1 };
    let mut parent = l;
    parent.add(r);
    l.purity() + r.purity() - parent.purity()
}

#[derive(Debug, Clone, Copy)]
enum FeaturePolicy {
    /// Every feature, exact thresholds.
    All,
    /// A random subset of `m` non-constant features, exact thresholds.
    Subsample(usize),
    /// `m` non-constant features, one random threshold each.
    RandomThreshold(usize),
}

struct Builder<'a> {
    cols: &'a Columns,
    y: &'a [u8],
    max_depth: Option<usize>,
    min_leaf: usize,
    policy: FeaturePolicy,
    rng: Option<&'a mut StreamRng>,
    nodes: Vec<Node>,
    buf: Vec<(f64, usize)>,
    order: Vec<usize>,
}

impl Builder<'_> {
    fn stat(&self) -> impl Fn(usize) -> ClassStat + '_ {
        move |r| ClassStat { n: 1, pos: self.y[r] as usize }
    }

    fn best_split(&mut self, rows: &[usize], node: ClassStat) -> Option<Best> {
        let p = self.cols.len();
        let (limit, random_threshold) = match self.policy {
            FeaturePolicy::All => (p, false),
            FeaturePolicy::Subsample(m) => (m, false),
            FeaturePolicy::RandomThreshold(m) => (m, true),
        };
        self.order.clear();
        self.order.extend(0..p);
        if limit < p || random_threshold {
            if let Some(rng) = self.rng.as_deref_mut() {
                rng::shuffle(rng, &mut self.order);
            }
        }
        let min_leaf = self.min_leaf;
        let y = self.y;
        let stat = move |r: usize| ClassStat { n: 1, pos: y[r] as usize };
        let mut best: Option<Best> = None;
        let mut visited = 0;
        let mut buf = core::mem::take(&mut self.buf);
        for oi in 0..p {
            if visited == limit {
                break;
            }
            let f = self.order[oi];
            let mut any = false;
            let mut offer = |t: f64, left: ClassStat| {
                any = true;
                let right = node.sub(left);
                if left.n >= min_leaf && right.n >= min_leaf {
                    let score = left.purity() + right.purity();
                    Best::offer(&mut best, Best { score, feature: f, threshold: t });
                }
            };
            if random_threshold {
                let u = rng::uniform(self.rng.as_deref_mut().expect("randomized split needs an rng"));
                if let Some((t, left)) = scan_random(self.cols, f, rows, &stat, u) {
                    offer(t, left);
                }
            } else {
                scan_exact(self.cols, f, rows, &stat, node, &mut buf, &mut offer);
            }
            if any {
                visited += 1;
            }
        }
        self.buf = buf;
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let node = total(&rows, &self.stat());
        let id = self.nodes.len();
        let value = node.pos as f64 / node.n as f64;
        self.nodes.push(Node::Leaf { value, count: node.n });
        let pure = node.pos == 0 || node.pos == node.n;
        if pure || self.max_depth.is_some_and(|d| depth >= d) || node.n < 2 * self.min_leaf {
            return id;
        }
        // Zero-gain splits are accepted: an impure node is split whenever a
        // valid partition exists (XOR-like interactions have zero root gain).
        let Some(best) = self.best_split(&rows, node) else {
            return id;
        };
        let (l, r) = self.cols.partition(best.feature, best.threshold, &rows);
        drop(rows);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        id
    }
}

fn check_xy(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.rows == 0 {
        return Err(Error::NoRows);
    }
    if x.cols == 0 {
        return Err(Error::input("no feature columns"));
    }
    if y.len() != x.rows {
        return Err(Error::DimensionMismatch { expected: x.rows, found: y.len() });
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::input("labels must be 0 or 1"));
    }
    Ok(())
}

fn grow(
    cols: &Columns,
    y: &[u8],
    rows: Vec<usize>,
    max_depth: Option<usize>,
    min_leaf: usize,
    policy: FeaturePolicy,
    rng: Option<&mut StreamRng>,
) -> Tree {
    let mut b = Builder { cols, y, max_depth, min_leaf, policy, rng, nodes: Vec::new(), buf: Vec::new(), order: Vec::new() };
    b.build(rows, 0);
    Tree { nodes: b.nodes }
}

/// Greedy Gini CART. Candidate thresholds are midpoints between distinct
/// sorted values; ties in score go to the lower feature index, then the
/// lower threshold.
pub fn fit_cart(x: &Matrix, y: &[u8], config: &TreeConfig) -> Result<Tree> {
    check_xy(x, y)?;
    config.validate()?;
    let cols = Columns::new(x);
    Ok(grow(&cols, y, (0..x.rows).collect(), config.max_depth, config.min_samples_leaf, FeaturePolicy::All, None))
}

/// Fit `n_trees` trees; tree `t` draws from the stream derived from
/// `(seed, t)`, so the ensemble does not depend on the executor.
pub fn fit_forest<E: Executor>(
    x: &Matrix,
    y: &[u8],
    mode: ForestMode,
    config: &ForestConfig,
    seed: u64,
    exec: &E,
) -> Result<Vec<Tree>> {
    check_xy(x, y)?;
    config.validate()?;
    let p = x.cols;
    let frac = config.feature_subsample.unwrap_or(match mode {
        ForestMode::RandomForest => libm::sqrt(p as f64) / p as f64,
        ForestMode::ExtraTrees => 1.0,
    });
    let m = (libm::ceil(frac * p as f64 - 1e-9) as usize).clamp(1, p);
    let bootstrap = config.bootstrap.unwrap_or(mode == ForestMode::RandomForest);
    let policy = match mode {
        ForestMode::RandomForest if m == p => FeaturePolicy::All,
        ForestMode::RandomForest => FeaturePolicy::Subsample(m),
        ForestMode::ExtraTrees => FeaturePolicy::RandomThreshold(m),
    };
    let cols = Columns::new(x);
    let n = x.rows;
    Ok(exec.map_indexed(config.n_trees, |t| {
        let mut rng = rng::stream(seed, &[t as u64]);
        let rows: Vec<usize> = if bootstrap { (0..n).map(|_| rng::index(&mut rng, n)).collect() } else { (0..n).collect() };
        grow(&cols, y, rows, config.max_depth, config.min_samples_leaf, policy, Some(&mut rng))
    }))
}
