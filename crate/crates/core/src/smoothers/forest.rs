//! CART trees and random forests as smoothers.
//!
//! The tree structure is grown on a build response (for y-free use a random
//! one). A query's smoother row then puts weight `1/|R|` on every bootstrap
//! draw in its leaf `R`, so a row drawn twice counts twice.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{rng, split_seed};
use crate::error::{invalid, shape, Result};
use crate::linalg::{Mat, Vector};

use super::SmootherSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForestTask {
    Regression,
    Classification { classes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt() as usize,
            MaxFeatures::Log2 => (d as f64).log2() as usize,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, d)
    }
}

/// Defaults follow scikit-learn's forests: unlimited depth, two samples to
/// split, one per leaf, bootstrap on, all features for regression and
/// `sqrt(d)` for classification.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// `None` picks the task default.
    pub max_features: Option<MaxFeatures>,
    pub bootstrap: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
            bootstrap: true,
        }
    }
}

pub const DEFAULT_TREES: usize = 100;

#[derive(Debug, Clone, Copy)]
pub enum BuildTarget<'a> {
    Response(&'a Vector),
    Labels { labels: &'a [usize], classes: usize },
}

impl BuildTarget<'_> {
    fn len(&self) -> usize {
        match self {
            BuildTarget::Response(y) => y.len(),
            BuildTarget::Labels { labels, .. } => labels.len(),
        }
    }

    fn task(&self) -> ForestTask {
        match self {
            BuildTarget::Response(_) => ForestTask::Regression,
            BuildTarget::Labels { classes, .. } => ForestTask::Classification { classes: *classes },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    /// Bootstrap draws (training row indices, with repeats) per leaf.
    leaf_rows: Vec<Vec<usize>>,
}

impl Tree {
    pub fn n_leaves(&self) -> usize {
        self.leaf_rows.len()
    }

    pub fn leaf_rows(&self, leaf: usize) -> &[usize] {
        &self.leaf_rows[leaf]
    }

    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(id) => return *id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Smoother rows of this tree for the rows of `x_q`.
    pub fn smoother_rows(&self, x_q: &Mat, n_train: usize) -> Mat {
        let mut m = Mat::zeros(x_q.nrows(), n_train);
        let mut buf = vec![0.0; x_q.ncols()];
        for i in 0..x_q.nrows() {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = x_q[(i, j)];
            }
            let rows = &self.leaf_rows[self.leaf_of(&buf)];
            let w = 1.0 / rows.len() as f64;
            for &r in rows {
                m[(i, r)] += w;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    bootstrap: Vec<Vec<usize>>,
    n_train: usize,
    d: usize,
    task: ForestTask,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn bootstrap_rows(&self, tree: usize) -> &[usize] {
        &self.bootstrap[tree]
    }

    pub fn task(&self) -> ForestTask {
        self.task
    }

    fn check(&self, x: &Mat) -> Result<()> {
        if x.ncols() != self.d {
            return Err(shape(format!(
                "forest fitted on {} features, got {}",
                self.d,
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Averaged smoother rows for the rows of `x_q`.
    pub fn smoother_rows(&self, x_q: &Mat) -> Result<Mat> {
        self.check(x_q)?;
        let mut acc = Mat::zeros(x_q.nrows(), self.n_train);
        for t in &self.trees {
            acc += t.smoother_rows(x_q, self.n_train);
        }
        Ok(acc / self.trees.len() as f64)
    }
}

struct Grower<'a> {
    x: &'a Mat,
    target: BuildTarget<'a>,
    params: &'a TreeParams,
    max_features: usize,
    nodes: Vec<Node>,
    leaf_rows: Vec<Vec<usize>>,
}

struct Best {
    feature: usize,
    threshold: f64,
    /// Position in the sorted sample list: left gets `..=pos`.
    pos: usize,
    score: f64,
    order: Vec<usize>,
}

impl Grower<'_> {
    fn is_pure(&self, rows: &[usize]) -> bool {
        match self.target {
            BuildTarget::Response(y) => {
                let first = y[rows[0]];
                rows.iter().all(|&r| y[r] == first)
            }
            BuildTarget::Labels { labels, .. } => {
                let first = labels[rows[0]];
                rows.iter().all(|&r| labels[r] == first)
            }
        }
    }

    fn make_leaf(&mut self, rows: Vec<usize>) -> usize {
        let id = self.leaf_rows.len();
        self.leaf_rows.push(rows);
        self.nodes.push(Node::Leaf(id));
        self.nodes.len() - 1
    }

    /// Best split of `feature` by the impurity proxy: sum of squared totals
    /// over counts (variance) or sum of squared class counts over counts
    /// (Gini). Returns `None` when the feature is constant on `rows`.
    fn scan_feature(&self, rows: &[usize], feature: usize) -> Option<Option<Best>> {
        let mut order = rows.to_vec();
        order.sort_by(|&a, &b| self.x[(a, feature)].total_cmp(&self.x[(b, feature)]));
        let first = self.x[(order[0], feature)];
        let last = self.x[(order[order.len() - 1], feature)];
        if first == last {
            return None;
        }
        let n = order.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<(usize, f64)> = None;
        match self.target {
            BuildTarget::Response(y) => {
                let total: f64 = order.iter().map(|&r| y[r]).sum();
                let mut left = 0.0;
                for pos in 0..n - 1 {
                    left += y[order[pos]];
                    let nl = pos + 1;
                    let nr = n - nl;
                    if nl < min_leaf || nr < min_leaf {
                        continue;
                    }
                    if self.x[(order[pos], feature)] == self.x[(order[pos + 1], feature)] {
                        continue;
                    }
                    let right = total - left;
                    let score = left * left / nl as f64 + right * right / nr as f64;
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((pos, score));
                    }
                }
            }
            BuildTarget::Labels { labels, classes } => {
                let mut total = vec![0.0; classes];
                for &r in &order {
                    total[labels[r] - 1] += 1.0;
                }
                let mut left = vec![0.0; classes];
                for pos in 0..n - 1 {
                    left[labels[order[pos]] - 1] += 1.0;
                    let nl = pos + 1;
                    let nr = n - nl;
                    if nl < min_leaf || nr < min_leaf {
                        continue;
                    }
                    if self.x[(order[pos], feature)] == self.x[(order[pos + 1], feature)] {
                        continue;
                    }
                    let mut sl = 0.0;
                    let mut sr = 0.0;
                    for c in 0..classes {
                        sl += left[c] * left[c];
                        let r = total[c] - left[c];
                        sr += r * r;
                    }
                    let score = sl / nl as f64 + sr / nr as f64;
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((pos, score));
                    }
                }
            }
        }
        Some(best.map(|(pos, score)| {
            let a = self.x[(order[pos], feature)];
            let b = self.x[(order[pos + 1], feature)];
            let mut threshold = 0.5 * (a + b);
            if threshold >= b {
                threshold = a;
            }
            Best {
                feature,
                threshold,
                pos,
                score,
                order,
            }
        }))
    }

    fn grow<R: Rng>(&mut self, rows: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        if rows.len() < self.params.min_samples_split.max(2) || !depth_ok || self.is_pure(&rows) {
            return self.make_leaf(rows);
        }
        let d = self.x.ncols();
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(rng);
        let mut best: Option<Best> = None;
        let mut visited = 0;
        for f in features {
            if visited >= self.max_features {
                break;
            }
            let Some(candidate) = self.scan_feature(&rows, f) else {
                continue;
            };
            visited += 1;
            if let Some(c) = candidate {
                if best.as_ref().is_none_or(|b| c.score > b.score) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best else {
            return self.make_leaf(rows);
        };
        let left_rows = best.order[..=best.pos].to_vec();
        let right_rows = best.order[best.pos + 1..].to_vec();
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(usize::MAX));
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }
}

/// Grows `n_trees` CART trees on bootstrap samples of `(x, y_build)`.
/// Tree `t` draws from its own stream derived from `seed`.
pub fn fit_forest(
    x: &Mat,
    y_build: BuildTarget<'_>,
    n_trees: usize,
    seed: u64,
    params: &TreeParams,
) -> Result<Forest> {
    if n_trees < 1 {
        return Err(invalid("a forest needs at least one tree"));
    }
    let n = x.nrows();
    if n == 0 || x.ncols() == 0 {
        return Err(invalid("empty design matrix"));
    }
    if y_build.len() != n {
        return Err(shape(format!(
            "{} build responses for {n} rows",
            y_build.len()
        )));
    }
    if let BuildTarget::Labels { labels, classes } = y_build {
        if let Some(l) = labels.iter().find(|&&l| l == 0 || l > classes) {
            return Err(invalid(format!("label {l} outside 1..={classes}")));
        }
    }
    let task = y_build.task();
    let default_features = match task {
        ForestTask::Regression => MaxFeatures::All,
        ForestTask::Classification { .. } => MaxFeatures::Sqrt,
    };
    let max_features = params
        .max_features
        .unwrap_or(default_features)
        .resolve(x.ncols());
    let mut trees = Vec::with_capacity(n_trees);
    let mut bootstrap = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let mut r = rng(split_seed(seed, t as u64));
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| r.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut grower = Grower {
            x,
            target: y_build,
            params,
            max_features,
            nodes: Vec::new(),
            leaf_rows: Vec::new(),
        };
        grower.grow(rows.clone(), 0, &mut r);
        trees.push(Tree {
            nodes: grower.nodes,
            leaf_rows: grower.leaf_rows,
        });
        bootstrap.push(rows);
    }
    Ok(Forest {
        trees,
        bootstrap,
        n_train: n,
        d: x.ncols(),
        task,
    })
}

/// `S` on the training rows and `S_v` on `x_q`, averaged over trees.
pub fn rf_smoother(forest: &Forest, x: &Mat, x_q: &Mat) -> Result<SmootherSet> {
    if x.nrows() != forest.n_train {
        return Err(shape(format!(
            "forest fitted on {} rows, got {}",
            forest.n_train,
            x.nrows()
        )));
    }
    let s = forest.smoother_rows(x)?;
    let s_v = (x_q.nrows() > 0)
        .then(|| forest.smoother_rows(x_q))
        .transpose()?;
    SmootherSet::new(s, s_v, None)
}

fn argmax_lowest(counts: &[f64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Classification by per-tree vote. Each tree predicts the most common true
/// label among the bootstrap draws in the leaf; the forest takes the most
/// common tree prediction. All ties go to the lowest class.
pub fn rf_classify(
    forest: &Forest,
    x_q: &Mat,
    labels: &[usize],
    classes: usize,
) -> Result<Vec<usize>> {
    forest.check(x_q)?;
    if labels.len() != forest.n_train {
        return Err(shape(format!(
            "{} labels for {} training rows",
            labels.len(),
            forest.n_train
        )));
    }
    if classes < 2 || labels.iter().any(|&l| l == 0 || l > classes) {
        return Err(invalid(format!("labels must lie in 1..={classes}")));
    }
    let mut out = Vec::with_capacity(x_q.nrows());
    let mut buf = vec![0.0; x_q.ncols()];
    for i in 0..x_q.nrows() {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = x_q[(i, j)];
        }
        let mut votes = vec![0.0; classes];
        for tree in &forest.trees {
            let mut counts = vec![0.0; classes];
            for &r in tree.leaf_rows(tree.leaf_of(&buf)) {
                counts[labels[r] - 1] += 1.0;
            }
            votes[argmax_lowest(&counts)] += 1.0;
        }
        out.push(argmax_lowest(&votes) + 1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Mat, Vector) {
        let x = Mat::from_row_slice(
            6,
            2,
            &[0.0, 1.0, 1.0, 0.5, 2.0, 0.1, 3.0, 0.9, 4.0, 0.3, 5.0, 0.7],
        );
        let y = Vector::from_vec(vec![1.0, 1.2, 0.9, 3.0, 3.1, 2.8]);
        (x, y)
    }

    #[test]
    fn constant_response_gives_single_leaf() {
        let (x, _) = toy();
        let y = Vector::from_element(6, 0.0);
        let f = fit_forest(&x, BuildTarget::Response(&y), 5, 1, &TreeParams::default()).unwrap();
        assert!(f.trees().iter().all(|t| t.n_leaves() == 1));
        let set = rf_smoother(&f, &x, &x).unwrap();
        // every row equals the average bootstrap-frequency vector
        for i in 1..6 {
            assert_eq!(set.s.row(i), set.s.row(0));
        }
    }

    #[test]
    fn two_distinct_points_two_leaves() {
        let x = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        let y = Vector::from_vec(vec![0.0, 1.0]);
        let params = TreeParams {
            bootstrap: false,
            ..TreeParams::default()
        };
        let f = fit_forest(&x, BuildTarget::Response(&y), 3, 0, &params).unwrap();
        assert!(f.trees().iter().all(|t| t.n_leaves() == 2));
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = toy();
        let a = fit_forest(&x, BuildTarget::Response(&y), 4, 9, &TreeParams::default()).unwrap();
        let b = fit_forest(&x, BuildTarget::Response(&y), 4, 9, &TreeParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rows_sum_to_one() {
        let (x, y) = toy();
        let f = fit_forest(&x, BuildTarget::Response(&y), 7, 3, &TreeParams::default()).unwrap();
        let set = rf_smoother(&f, &x, &x).unwrap();
        for row in set.s.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn rejects_zero_trees() {
        let (x, y) = toy();
        assert!(fit_forest(&x, BuildTarget::Response(&y), 0, 0, &TreeParams::default()).is_err());
    }

    #[test]
    fn max_depth_limits_leaves() {
        let (x, y) = toy();
        let params = TreeParams {
            max_depth: Some(1),
            bootstrap: false,
            ..TreeParams::default()
        };
        let f = fit_forest(&x, BuildTarget::Response(&y), 1, 0, &params).unwrap();
        assert_eq!(f.trees()[0].n_leaves(), 2);
    }
}
