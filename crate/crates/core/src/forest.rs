//! Bagged ensembles of regression trees.
//!
//! Every tree gets its own generator, seeded from the master seed's stream
//! before any tree is built. Trees are fitted in parallel and collected by
//! index, so the result does not depend on scheduling.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::cart::{fit_tree, TreeError, TreeModel, TreeParams};
use crate::dataset::Dataset;
use crate::rng::{rng_stream, Rng};

pub const DEFAULT_N_TREES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ForestError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("forest needs at least one tree")]
    NoTrees,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: DEFAULT_N_TREES,
            bootstrap: true,
            seed: 42,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub params: ForestParams,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Per-tree predictions at `x`, in tree order.
    pub fn tree_predictions(&self, x: f64) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    pub fn predict(&self, x: f64) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }
}

impl fmt::Display for ForestModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "model=forest;n_trees={};seed={};bootstrap={};trees=[",
            self.params.n_trees, self.params.seed, self.params.bootstrap
        )?;
        for (i, t) in self.trees.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]")
    }
}

/// Indices of the bootstrap sample for a tree seeded with `tree_seed`.
pub fn bootstrap_indices(tree_seed: u64, n: usize) -> Vec<usize> {
    let mut rng = Rng::new(tree_seed);
    (0..n).map(|_| rng.below(n)).collect()
}

pub fn fit_forest(train: &Dataset, params: ForestParams) -> Result<ForestModel, ForestError> {
    if train.is_empty() {
        return Err(ForestError::EmptyTrainingSet);
    }
    if params.n_trees == 0 {
        return Err(ForestError::NoTrees);
    }
    params.tree.validate()?;

    let seeds = rng_stream(params.seed, params.n_trees);
    let trees = seeds
        .par_iter()
        .map(|&seed| {
            if params.bootstrap {
                fit_tree(
                    &train.select(&bootstrap_indices(seed, train.len())),
                    params.tree,
                )
            } else {
                fit_tree(train, params.tree)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ForestModel { trees, params })
}

pub fn predict_forest(model: &ForestModel, x: f64) -> f64 {
    model.predict(x)
}
