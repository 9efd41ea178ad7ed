//! Greedy binary regression trees over a single real feature.
//!
//! Each leaf predicts the mean of the training targets that reach it, so a
//! fitted tree is a step function `sum_m c_m * 1{x in R_m}` whose regions are
//! contiguous intervals. Splits minimize the summed squared error of the two
//! children. Candidate thresholds are midpoints between consecutive distinct
//! sorted x values; `x <= threshold` goes left.

use std::fmt;

use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// `None` grows until another stopping rule fires.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.min_samples_split < 2 {
            return Err(TreeError::InvalidParams(
                "min_samples_split must be at least 2".into(),
            ));
        }
        if self.min_samples_leaf < 1 {
            return Err(TreeError::InvalidParams(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

impl TreeNode {
    fn predict(&self, x: f64) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Internal {
                    threshold,
                    left,
                    right,
                } => node = if x <= *threshold { left } else { right },
            }
        }
    }

    fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeNode::Leaf { value, count } => write!(f, "leaf({value},{count})"),
            TreeNode::Internal {
                threshold,
                left,
                right,
            } => write!(f, "({threshold} {left} {right})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub root: TreeNode,
    pub params: TreeParams,
    pub leaf_count: usize,
}

impl TreeModel {
    pub fn predict(&self, x: f64) -> f64 {
        self.root.predict(x)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Leaves in left-to-right order as `(value, count)`.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        fn walk(node: &TreeNode, out: &mut Vec<(f64, usize)>) {
            match node {
                TreeNode::Leaf { value, count } => out.push((*value, *count)),
                TreeNode::Internal { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        let mut out = Vec::with_capacity(self.leaf_count);
        walk(&self.root, &mut out);
        out
    }
}

impl fmt::Display for TreeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// A candidate split of a node, as found by [`best_split`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub threshold: f64,
    /// Number of samples routed left.
    pub left_count: usize,
    /// `SSE(left) + SSE(right)`.
    pub sse: f64,
}

fn mean(ys: &[f64]) -> f64 {
    ys.iter().sum::<f64>() / ys.len() as f64
}

fn sse(ys: &[f64]) -> f64 {
    let m = mean(ys);
    ys.iter().map(|y| (y - m) * (y - m)).sum()
}

/// Best SSE split of samples already sorted by x.
///
/// Ties keep the smallest threshold. Returns `None` when no threshold leaves
/// `min_leaf` samples on both sides (including when all x are equal).
pub fn best_split(xs: &[f64], ys: &[f64], min_leaf: usize) -> Option<SplitChoice> {
    let n = xs.len();
    let mut best: Option<SplitChoice> = None;
    for k in 1..n {
        if xs[k - 1] == xs[k] || k < min_leaf || n - k < min_leaf {
            continue;
        }
        let total = sse(&ys[..k]) + sse(&ys[k..]);
        if best.is_none_or(|b| total < b.sse) {
            best = Some(SplitChoice {
                threshold: (xs[k - 1] + xs[k]) / 2.0,
                left_count: k,
                sse: total,
            });
        }
    }
    best
}

/// Grow a regression tree on `train`.
pub fn fit_tree(train: &Dataset, params: TreeParams) -> Result<TreeModel, TreeError> {
    params.validate()?;
    if train.is_empty() {
        return Err(TreeError::EmptyTrainingSet);
    }
    let mut pairs: Vec<(f64, f64)> = train.iter().collect();
    // stable, so equal x keep their input order and the fit is deterministic
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    let root = grow(&xs, &ys, 0, &params);
    let leaf_count = root.leaf_count();
    Ok(TreeModel {
        root,
        params,
        leaf_count,
    })
}

fn grow(xs: &[f64], ys: &[f64], depth: usize, params: &TreeParams) -> TreeNode {
    let leaf = || TreeNode::Leaf {
        value: mean(ys),
        count: ys.len(),
    };
    let n = xs.len();
    if n < params.min_samples_split
        || params.max_depth.is_some_and(|d| depth >= d)
        || xs[0] == xs[n - 1]
        || sse(ys) == 0.0
    {
        return leaf();
    }
    match best_split(xs, ys, params.min_samples_leaf) {
        None => leaf(),
        Some(split) => {
            let k = split.left_count;
            TreeNode::Internal {
                threshold: split.threshold,
                left: Box::new(grow(&xs[..k], &ys[..k], depth + 1, params)),
                right: Box::new(grow(&xs[k..], &ys[k..], depth + 1, params)),
            }
        }
    }
}

pub fn predict_tree(model: &TreeModel, x: f64) -> f64 {
    model.predict(x)
}
