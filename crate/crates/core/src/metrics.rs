//! Regression scores: R², MAE, MSE and RMSE.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("y_true has {truth} values but y_pred has {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("cannot score an empty sample")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub r2: f64,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub n: usize,
}

/// Score `y_pred` against `y_true`.
///
/// When the targets are constant (zero total sum of squares) R² is 1 for a
/// perfect fit and 0 otherwise.
pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<MetricsReport, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut abs_sum = 0.0;
    for (&y, &p) in y_true.iter().zip(y_pred) {
        let e = p - y;
        ss_res += e * e;
        abs_sum += e.abs();
        ss_tot += (y - mean) * (y - mean);
    }

    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    let mse = ss_res / n;

    Ok(MetricsReport {
        r2,
        mae: abs_sum / n,
        mse,
        rmse: mse.sqrt(),
        n: y_true.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn perfect_fit() {
        let m = evaluate(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.r2, 1.0);
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.rmse, 0.0);
    }

    #[test]
    fn mean_predictor_scores_zero() {
        let m = evaluate(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(m.r2, 0.0);
    }

    #[test]
    fn hand_arithmetic() {
        // SS_res = 1, SS_tot = 2
        let m = evaluate(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(m.r2, 0.5, max_relative = 1e-15);
        assert_relative_eq!(m.mse, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(m.mae, 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn constant_targets() {
        assert_eq!(evaluate(&[4.0, 4.0], &[4.0, 4.0]).unwrap().r2, 1.0);
        assert_eq!(evaluate(&[4.0, 4.0], &[4.0, 5.0]).unwrap().r2, 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(
            evaluate(&[1.0], &[1.0, 2.0]),
            Err(MetricsError::LengthMismatch { truth: 1, pred: 2 })
        );
        assert_eq!(evaluate(&[], &[]), Err(MetricsError::EmptyInput));
    }

    fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec(-50.0f64..50.0, n),
                prop::collection::vec(-50.0f64..50.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn rmse_squared_is_mse((y, p) in pairs()) {
            let m = evaluate(&y, &p).unwrap();
            prop_assert!((m.rmse * m.rmse - m.mse).abs() <= 1e-12 * m.mse.max(1e-300));
            prop_assert!(m.r2 <= 1.0);
            prop_assert!(m.mae >= 0.0);
        }

        #[test]
        fn translation_invariant((y, p) in pairs(), c in -1000.0f64..1000.0) {
            let a = evaluate(&y, &p).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| v + c).collect();
            let ps: Vec<f64> = p.iter().map(|v| v + c).collect();
            let b = evaluate(&ys, &ps).unwrap();
            let tol = 1e-9;
            prop_assert!((a.mae - b.mae).abs() <= tol * (1.0 + a.mae));
            prop_assert!((a.mse - b.mse).abs() <= tol * (1.0 + a.mse));
            let constant = y.iter().all(|&v| v == y[0]);
            if !constant {
                let spread = y.iter().map(|v| (v - y[0]).abs()).fold(0.0, f64::max);
                // shifting by c costs ~|c|·ulp per term in the sums of squares
                if spread > 1e-3 {
                    prop_assert!((a.r2 - b.r2).abs() <= 1e-6 * (1.0 + a.r2.abs()));
                }
            }
        }
    }
}
