//! Ordinary least squares for `y = intercept + slope * x`.

use std::fmt;

use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinregError {
    #[error("need at least two distinct x values")]
    DegenerateDesign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    /// Value at x = 0, in raw-year coordinates.
    pub intercept: f64,
    pub slope: f64,
    /// Mean training x used to center the fit.
    pub x_center: f64,
}

impl LinearModel {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

impl fmt::Display for LinearModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "model=linear;intercept={};slope={}",
            self.intercept, self.slope
        )
    }
}

/// Closed-form least squares on centered x.
///
/// Centering at the mean year keeps the sums well conditioned when x is a
/// calendar year; the returned intercept is shifted back to raw coordinates.
pub fn fit_linear(train: &Dataset) -> Result<LinearModel, LinregError> {
    let n = train.len() as f64;
    let x_mean = train.xs().iter().sum::<f64>() / n;
    let y_mean = train.ys().iter().sum::<f64>() / n;

    let (sxy, sxx) = train.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        let dx = x - x_mean;
        (sxy + dx * (y - y_mean), sxx + dx * dx)
    });
    if sxx == 0.0 {
        return Err(LinregError::DegenerateDesign);
    }
    let slope = sxy / sxx;
    Ok(LinearModel {
        intercept: y_mean - slope * x_mean,
        slope,
        x_center: x_mean,
    })
}

pub fn predict_linear(model: &LinearModel, x: f64) -> f64 {
    model.predict(x)
}
