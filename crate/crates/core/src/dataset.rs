//! Paired (year, value) samples and train/test partitioning.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rng::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("xs has {xs} values but ys has {ys}")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("split ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),
    #[error("degenerate split: {train} train / {test} test samples")]
    DegenerateSplit { train: usize, test: usize },
}

/// Samples of one feature (the year) and one target (the emission value).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, DataError> {
        if xs.len() != ys.len() {
            return Err(DataError::LengthMismatch {
                xs: xs.len(),
                ys: ys.len(),
            });
        }
        if xs.is_empty() {
            return Err(DataError::Empty);
        }
        if let Some(i) = xs
            .iter()
            .zip(&ys)
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(DataError::NonFinite(i));
        }
        Ok(Self { xs, ys })
    }

    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Result<Self, DataError> {
        let (xs, ys) = pairs.into_iter().unzip();
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// New dataset holding the samples at `indices`, in that order.
    ///
    /// Indices may repeat (bootstrap resampling).
    ///
    /// # Panics
    ///
    /// Panics if `indices` is empty or any index is out of bounds.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        assert!(!indices.is_empty(), "cannot select an empty subset");
        Dataset {
            xs: indices.iter().map(|&i| self.xs[i]).collect(),
            ys: indices.iter().map(|&i| self.ys[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitStrategy {
    /// Fisher-Yates shuffle driven by the seeded generator.
    #[default]
    SeededRandom,
    /// The latest years form the test set.
    ChronologicalTail,
}

impl SplitStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitStrategy::SeededRandom => "seeded-random",
            SplitStrategy::ChronologicalTail => "chronological-tail",
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seeded-random" | "random" => Ok(SplitStrategy::SeededRandom),
            "chronological-tail" | "chronological" => Ok(SplitStrategy::ChronologicalTail),
            other => Err(format!("unknown split strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Original indices of the training samples, ascending.
    pub train_indices: Vec<usize>,
    /// Original indices of the test samples, ascending.
    pub test_indices: Vec<usize>,
    pub ratio: f64,
    pub strategy: SplitStrategy,
    pub seed: u64,
}

/// Number of training samples for `ratio` of `n`, rounding half away from zero.
pub fn train_size(ratio: f64, n: usize) -> usize {
    (ratio * n as f64).round() as usize
}

/// Partition `data` into train and test parts.
///
/// `seed` only matters for [`SplitStrategy::SeededRandom`]. Both parts keep
/// the original sample order.
pub fn split_dataset(
    data: &Dataset,
    ratio: f64,
    strategy: SplitStrategy,
    seed: u64,
) -> Result<Split, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::InvalidRatio(ratio));
    }
    let n = data.len();
    let n_train = train_size(ratio, n);
    if n_train == 0 || n_train >= n {
        return Err(DataError::DegenerateSplit {
            train: n_train.min(n),
            test: n - n_train.min(n),
        });
    }

    let order: Vec<usize> = match strategy {
        SplitStrategy::SeededRandom => {
            let mut idx: Vec<usize> = (0..n).collect();
            let mut rng = Rng::new(seed);
            for i in (1..n).rev() {
                let j = rng.below(i + 1);
                idx.swap(i, j);
            }
            idx
        }
        SplitStrategy::ChronologicalTail => {
            let mut idx: Vec<usize> = (0..n).collect();
            // stable: equal years keep their input order
            idx.sort_by(|&a, &b| data.xs[a].total_cmp(&data.xs[b]));
            idx
        }
    };

    let mut train_indices = order[..n_train].to_vec();
    let mut test_indices = order[n_train..].to_vec();
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    Ok(Split {
        train: data.select(&train_indices),
        test: data.select(&test_indices),
        train_indices,
        test_indices,
        ratio,
        strategy,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_data(n: usize) -> Dataset {
        Dataset::from_pairs((0..n).map(|i| (1960.0 + i as f64, i as f64 * 0.5))).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert_eq!(
            Dataset::new(vec![1.0], vec![]),
            Err(DataError::LengthMismatch { xs: 1, ys: 0 })
        );
        assert_eq!(Dataset::new(vec![], vec![]), Err(DataError::Empty));
        assert_eq!(
            Dataset::new(vec![1.0, f64::NAN], vec![1.0, 2.0]),
            Err(DataError::NonFinite(1))
        );
    }

    #[test]
    fn ninety_ten_of_59() {
        let s = split_dataset(&linear_data(59), 0.9, SplitStrategy::SeededRandom, 42).unwrap();
        assert_eq!(s.train.len(), 53);
        assert_eq!(s.test.len(), 6);
    }

    #[test]
    fn chronological_tail_takes_latest() {
        let data = linear_data(10);
        let s = split_dataset(&data, 0.9, SplitStrategy::ChronologicalTail, 0).unwrap();
        assert_eq!(s.test.xs(), &[1969.0]);
        assert_eq!(s.train.len(), 9);
    }

    #[test]
    fn chronological_sorts_unordered_input() {
        let data = Dataset::new(vec![3.0, 1.0, 2.0, 0.0], vec![30.0, 10.0, 20.0, 0.0]).unwrap();
        let s = split_dataset(&data, 0.75, SplitStrategy::ChronologicalTail, 0).unwrap();
        assert_eq!(s.test.xs(), &[3.0]);
        assert_eq!(s.test_indices, vec![0]);
    }

    #[test]
    fn seeded_split_is_deterministic() {
        let data = linear_data(59);
        let a = split_dataset(&data, 0.9, SplitStrategy::SeededRandom, 42).unwrap();
        let b = split_dataset(&data, 0.9, SplitStrategy::SeededRandom, 42).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        assert_eq!(a.test_indices, b.test_indices);
        let c = split_dataset(&data, 0.9, SplitStrategy::SeededRandom, 43).unwrap();
        assert_ne!(a.test_indices, c.test_indices);
    }

    #[test]
    fn shuffle_matches_hand_trace() {
        // Independent re-trace of the documented Fisher-Yates rule.
        let n = 12;
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        };
        let mut idx: Vec<usize> = (0..n).collect();
        let mut i = n - 1;
        while i >= 1 {
            let j = (next() % (i as u64 + 1)) as usize;
            idx.swap(i, j);
            i -= 1;
        }
        let mut expected_test = idx[train_size(0.75, n)..].to_vec();
        expected_test.sort_unstable();

        let s = split_dataset(&linear_data(n), 0.75, SplitStrategy::SeededRandom, 7).unwrap();
        assert_eq!(s.test_indices, expected_test);
    }

    #[test]
    fn degenerate_splits() {
        let data = linear_data(59);
        assert!(matches!(
            split_dataset(&data, 0.999, SplitStrategy::SeededRandom, 1),
            Err(DataError::DegenerateSplit { train: 59, test: 0 })
        ));
        assert!(matches!(
            split_dataset(&linear_data(1), 0.5, SplitStrategy::SeededRandom, 1),
            Err(DataError::DegenerateSplit { .. })
        ));
        assert_eq!(
            split_dataset(&data, 1.0, SplitStrategy::SeededRandom, 1),
            Err(DataError::InvalidRatio(1.0))
        );
        assert!(split_dataset(&data, f64::NAN, SplitStrategy::SeededRandom, 1).is_err());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(train_size(0.5, 5), 3);
        assert_eq!(train_size(0.9, 59), 53);
        assert_eq!(train_size(0.25, 10), 3);
    }
}
