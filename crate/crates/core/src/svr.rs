//! Epsilon-insensitive support vector regression.
//!
//! The primal problem is
//!
//! ```text
//! minimize   1/2 |beta|^2 + C * sum_n (xi_n + xi*_n)
//! subject to y_n - f(x_n) <= eps + xi_n,  f(x_n) - y_n <= eps + xi*_n,  xi, xi* >= 0
//! ```
//!
//! with `f(x) = <beta, phi(x)> + b`. We solve its dual in the single-vector
//! parameterization `delta_n = alpha_n - alpha*_n`:
//!
//! ```text
//! maximize   -1/2 delta' K delta - eps * sum |delta_n| + y' delta
//! subject to sum delta_n = 0,  -C <= delta_n <= C
//! ```
//!
//! by sequential minimal optimization: each step picks the maximal violating
//! pair `(i, j)`, moves `delta_i += t, delta_j -= t` and maximizes the
//! resulting one-dimensional concave piecewise quadratic exactly. The
//! equality constraint is preserved by construction and the dual objective
//! never decreases.
//!
//! The year feature is standardized to zero mean and unit variance before
//! fitting; the constants are stored in the model.

use std::fmt;

use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvrError {
    #[error("need at least two training samples")]
    TooFewSamples,
    #[error("all training inputs are equal")]
    DegenerateInput,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("coefficients are infeasible: {0}")]
    InfeasiblePoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Rbf => "rbf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    /// RBF width; ignored by the linear kernel.
    pub gamma: f64,
}

impl Kernel {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            gamma: 0.0,
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma,
        }
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            KernelKind::Linear => u * v,
            KernelKind::Rbf => (-self.gamma * (u - v) * (u - v)).exp(),
        }
    }

    fn validate(&self) -> Result<(), SvrError> {
        if self.kind == KernelKind::Rbf && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SvrError::InvalidParams(format!(
                "rbf gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

impl Default for Kernel {
    /// RBF with unit width on the standardized feature.
    fn default() -> Self {
        Kernel::rbf(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// KKT tolerance on the maximal violating pair.
    pub tol: f64,
    /// Cap on SMO updates; `None` means `1000 * n`.
    pub max_passes: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_passes: None,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<(), SvrError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvrError::InvalidParams(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SvrError::InvalidParams(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SvrError::InvalidParams(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_passes.unwrap_or(1000 * n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    /// Standardized training inputs, in training order.
    pub support_x: Vec<f64>,
    /// `delta_n = alpha_n - alpha*_n` for each entry of `support_x`.
    pub coeffs: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub x_mean: f64,
    pub x_std: f64,
}

impl SvrModel {
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.x_mean) / self.x_std
    }

    pub fn predict(&self, x: f64) -> f64 {
        let z = self.standardize(x);
        let sum: f64 = self
            .support_x
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &d)| d != 0.0)
            .map(|(&s, &d)| d * self.kernel.eval(s, z))
            .sum();
        sum + self.bias
    }

    /// Training samples with a nonzero coefficient.
    pub fn support_vectors(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support_x
            .iter()
            .copied()
            .zip(self.coeffs.iter().copied())
            .filter(|&(_, d)| d != 0.0)
    }
}

impl fmt::Display for SvrModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "model=svr;kernel={};gamma={};x_mean={};x_std={};bias={};sv=[",
            self.kernel.kind.as_str(),
            self.kernel.gamma,
            self.x_mean,
            self.x_std,
            self.bias
        )?;
        for (i, (x, d)) in self.support_vectors().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "({x},{d})")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverStatus {
    /// The maximal KKT violation dropped to `tol` or below.
    Converged,
    /// Update cap reached with the violation still above `tol` but within
    /// `10 * tol`.
    IterationLimit { violation: f64 },
    /// Update cap reached with the violation above `10 * tol`.
    NonConvergence { violation: f64 },
    /// The best pair update could not improve the objective in floating point.
    Stalled { violation: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrFit {
    pub model: SvrModel,
    pub status: SolverStatus,
    pub iterations: usize,
    pub objective: f64,
}

impl SvrFit {
    /// True unless the solver ended far from optimal.
    pub fn acceptable(&self) -> bool {
        !matches!(self.status, SolverStatus::NonConvergence { .. })
    }
}

fn standardization(xs: &[f64]) -> Result<(f64, f64), SvrError> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std.is_nan() || std <= 0.0 {
        return Err(SvrError::DegenerateInput);
    }
    Ok((mean, std))
}

/// Working state of the SMO solver.
///
/// Exposed so callers can watch the dual objective step by step; use
/// [`fit_svr`] for ordinary fitting.
#[derive(Debug, Clone)]
pub struct SmoSolver {
    z: Vec<f64>,
    y: Vec<f64>,
    gram: Vec<f64>,
    delta: Vec<f64>,
    /// `K * delta`, maintained incrementally.
    kd: Vec<f64>,
    params: SvrParams,
    kernel: Kernel,
    x_mean: f64,
    x_std: f64,
    iterations: usize,
    stalled: bool,
}

/// Maximal violating pair and the size of its violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub up: Option<(usize, f64)>,
    pub down: Option<(usize, f64)>,
}

impl Violation {
    /// `max_up - min_down`; nonpositive at an exact optimum.
    pub fn gap(&self) -> f64 {
        match (self.up, self.down) {
            (Some((_, u)), Some((_, d))) => u - d,
            _ => f64::NEG_INFINITY,
        }
    }
}

impl SmoSolver {
    pub fn new(train: &Dataset, params: SvrParams, kernel: Kernel) -> Result<Self, SvrError> {
        params.validate()?;
        kernel.validate()?;
        if train.len() < 2 {
            return Err(SvrError::TooFewSamples);
        }
        let (x_mean, x_std) = standardization(train.xs())?;
        let z: Vec<f64> = train.xs().iter().map(|x| (x - x_mean) / x_std).collect();
        let n = z.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = kernel.eval(z[i], z[j]);
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        Ok(Self {
            z,
            y: train.ys().to_vec(),
            gram,
            delta: vec![0.0; n],
            kd: vec![0.0; n],
            params,
            kernel,
            x_mean,
            x_std,
            iterations: 0,
            stalled: false,
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.delta
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.z.len() + j]
    }

    /// Dual objective at the current coefficients.
    pub fn objective(&self) -> f64 {
        let eps = self.params.epsilon;
        self.delta
            .iter()
            .zip(&self.kd)
            .zip(&self.y)
            .map(|((&d, &kd), &y)| -0.5 * d * kd + y * d - eps * d.abs())
            .sum()
    }

    /// Gradient of the smooth part, `y - K delta`.
    #[inline]
    fn grad(&self, i: usize) -> f64 {
        self.y[i] - self.kd[i]
    }

    pub fn violation(&self) -> Violation {
        let c = self.params.c;
        let eps = self.params.epsilon;
        let mut up: Option<(usize, f64)> = None;
        let mut down: Option<(usize, f64)> = None;
        for (i, &d) in self.delta.iter().enumerate() {
            let g = self.grad(i);
            if d < c {
                // right derivative for increasing delta_i
                let v = if d >= 0.0 { g - eps } else { g + eps };
                if up.is_none_or(|(_, best)| v > best) {
                    up = Some((i, v));
                }
            }
            if d > -c {
                // left derivative for decreasing delta_i
                let v = if d <= 0.0 { g + eps } else { g - eps };
                if down.is_none_or(|(_, best)| v < best) {
                    down = Some((i, v));
                }
            }
        }
        Violation { up, down }
    }

    /// Perform one pair update. Returns `false` when the KKT conditions hold
    /// within `tol` or no further progress is possible.
    pub fn step(&mut self) -> bool {
        let viol = self.violation();
        if viol.gap() <= self.params.tol {
            return false;
        }
        let (Some((i, _)), Some((j, _))) = (viol.up, viol.down) else {
            return false;
        };
        let t = self.solve_pair(i, j);
        if t <= 0.0 {
            self.stalled = true;
            return false;
        }
        self.apply(i, j, t);
        self.iterations += 1;
        true
    }

    /// Exact maximizer over `t >= 0` of the dual along `e_i - e_j`.
    fn solve_pair(&self, i: usize, j: usize) -> f64 {
        let c = self.params.c;
        let eps = self.params.epsilon;
        let (di, dj) = (self.delta[i], self.delta[j]);
        let hi = (c - di).min(dj + c);
        if hi <= 0.0 {
            return 0.0;
        }
        let slope0 = self.grad(i) - self.grad(j);
        let eta = (self.k(i, i) + self.k(j, j) - 2.0 * self.k(i, j)).max(0.0);

        // objective change relative to t = 0
        let gain = |t: f64| {
            slope0 * t
                - 0.5 * eta * t * t
                - eps * ((di + t).abs() - di.abs() + (dj - t).abs() - dj.abs())
        };

        let mut knots = vec![0.0, hi];
        for b in [-di, dj] {
            if b > 0.0 && b < hi {
                knots.push(b);
            }
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let mut candidates = knots.clone();
        if eta > 1e-12 {
            for w in knots.windows(2) {
                let (a, b) = (w[0], w[1]);
                let mid = 0.5 * (a + b);
                let si = (di + mid).signum();
                let sj = (dj - mid).signum();
                let t = (slope0 - eps * (si - sj)) / eta;
                candidates.push(t.clamp(a, b));
            }
        }

        let mut best_t = 0.0;
        let mut best_gain = 0.0;
        for t in candidates {
            let g = gain(t);
            if g > best_gain {
                best_gain = g;
                best_t = t;
            }
        }
        best_t
    }

    fn apply(&mut self, i: usize, j: usize, t: f64) {
        let c = self.params.c;
        let snap = |v: f64| {
            let scale = 1e-12 * c;
            if (v - c).abs() <= scale {
                c
            } else if (v + c).abs() <= scale {
                -c
            } else if v.abs() <= scale {
                0.0
            } else {
                v.clamp(-c, c)
            }
        };
        let new_i = snap(self.delta[i] + t);
        let new_j = snap(self.delta[j] - t);
        let change_i = new_i - self.delta[i];
        let change_j = new_j - self.delta[j];
        self.delta[i] = new_i;
        self.delta[j] = new_j;
        let n = self.z.len();
        for k in 0..n {
            self.kd[k] += change_i * self.gram[k * n + i] + change_j * self.gram[k * n + j];
        }
    }

    fn bias(&self) -> f64 {
        let c = self.params.c;
        let eps = self.params.epsilon;
        let free: Vec<f64> = self
            .delta
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 0.0 && d.abs() < c)
            .map(|(i, &d)| self.grad(i) - eps * d.signum())
            .collect();
        if !free.is_empty() {
            return free.iter().sum::<f64>() / free.len() as f64;
        }
        let viol = self.violation();
        match (viol.up, viol.down) {
            (Some((_, u)), Some((_, d))) => 0.5 * (u + d),
            (Some((_, u)), None) => u,
            (None, Some((_, d))) => d,
            (None, None) => 0.0,
        }
    }

    pub fn finish(self) -> SvrFit {
        let gap = self.violation().gap();
        let status = if gap <= self.params.tol {
            SolverStatus::Converged
        } else if self.stalled {
            SolverStatus::Stalled { violation: gap }
        } else if gap > 10.0 * self.params.tol {
            SolverStatus::NonConvergence { violation: gap }
        } else {
            SolverStatus::IterationLimit { violation: gap }
        };
        let objective = self.objective();
        let bias = self.bias();
        SvrFit {
            model: SvrModel {
                support_x: self.z,
                coeffs: self.delta,
                bias,
                kernel: self.kernel,
                x_mean: self.x_mean,
                x_std: self.x_std,
            },
            status,
            iterations: self.iterations,
            objective,
        }
    }
}

/// Fit an epsilon-SVR on `train`.
///
/// Hitting the update cap does not fail the fit; inspect
/// [`SvrFit::status`].
pub fn fit_svr(train: &Dataset, params: SvrParams, kernel: Kernel) -> Result<SvrFit, SvrError> {
    let mut solver = SmoSolver::new(train, params, kernel)?;
    let cap = params.iteration_cap(train.len());
    while solver.iterations() < cap && solver.step() {}
    Ok(solver.finish())
}

pub fn predict_svr(model: &SvrModel, x: f64) -> f64 {
    model.predict(x)
}

/// Dual objective of `coeffs` on `train`, using the same standardization as
/// [`fit_svr`].
pub fn dual_objective(
    coeffs: &[f64],
    train: &Dataset,
    params: SvrParams,
    kernel: Kernel,
) -> Result<f64, SvrError> {
    if coeffs.len() != train.len() {
        return Err(SvrError::InfeasiblePoint(format!(
            "{} coefficients for {} samples",
            coeffs.len(),
            train.len()
        )));
    }
    if let Some(d) = coeffs.iter().find(|d| d.abs() > params.c + params.tol) {
        return Err(SvrError::InfeasiblePoint(format!(
            "|{d}| exceeds C = {}",
            params.c
        )));
    }
    let sum: f64 = coeffs.iter().sum();
    if sum.abs() > params.tol {
        return Err(SvrError::InfeasiblePoint(format!(
            "coefficients sum to {sum}"
        )));
    }
    let (mean, std) = standardization(train.xs())?;
    let z: Vec<f64> = train.xs().iter().map(|x| (x - mean) / std).collect();
    let mut quad = 0.0;
    for (i, &di) in coeffs.iter().enumerate() {
        for (j, &dj) in coeffs.iter().enumerate() {
            quad += di * dj * kernel.eval(z[i], z[j]);
        }
    }
    let linear: f64 = coeffs
        .iter()
        .zip(train.ys())
        .map(|(&d, &y)| y * d - params.epsilon * d.abs())
        .sum();
    Ok(linear - 0.5 * quad)
}
