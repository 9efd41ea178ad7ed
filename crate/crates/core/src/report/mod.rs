//! Train, evaluate and forecast with all four regressors.

mod chart;
mod manifest;

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::cart::{fit_tree, TreeError, TreeModel, TreeParams};
use crate::dataset::{split_dataset, DataError, Dataset, Split, SplitStrategy};
use crate::forest::{fit_forest, ForestError, ForestModel, ForestParams};
use crate::ingest::EmissionSeries;
use crate::linreg::{fit_linear, LinearModel, LinregError};
use crate::metrics::{evaluate, MetricsError, MetricsReport};
use crate::svr::{fit_svr, Kernel, SolverStatus, SvrError, SvrFit, SvrModel, SvrParams};

pub use chart::{emit_chart_svg, ChartOptions};
pub use manifest::{dataset_fingerprint, ManifestError, RunManifest};

pub const TOOLKIT_VERSION: &str = concat!("co2cast ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("linear regression: {0}")]
    Linear(#[from] LinregError),
    #[error("decision tree: {0}")]
    Tree(#[from] TreeError),
    #[error("random forest: {0}")]
    Forest(#[from] ForestError),
    #[error("svm: {0}")]
    Svr(#[from] SvrError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("horizon starts at {start} but the data runs to {last_year}; pass allow_overlap to forecast inside the data range")]
    HorizonBeforeData { start: i32, last_year: i32 },
    #[error("horizon {start}:{end} is empty")]
    InvalidHorizon { start: i32, end: i32 },
    #[error("no models selected")]
    NoModels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Linear,
    DecisionTree,
    RandomForest,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Linear,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::Svm,
    ];

    /// Column name used in tables and manifests.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "LinearRegression",
            ModelKind::DecisionTree => "DecisionTree",
            ModelKind::RandomForest => "RandomForest",
            ModelKind::Svm => "SVM",
        }
    }

    /// Short name accepted on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::DecisionTree => "tree",
            ModelKind::RandomForest => "forest",
            ModelKind::Svm => "svm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.short_name().eq_ignore_ascii_case(s) || k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model `{s}` (expected linear, tree, forest or svm)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Linear(LinearModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Svm(SvrModel),
}

impl FittedModel {
    pub fn predict(&self, x: f64) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict(x),
            FittedModel::Tree(m) => m.predict(x),
            FittedModel::Forest(m) => m.predict(x),
            FittedModel::Svm(m) => m.predict(x),
        }
    }
}

impl fmt::Display for FittedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FittedModel::Linear(m) => m.fmt(f),
            FittedModel::Tree(m) => write!(f, "model=tree;root={m}"),
            FittedModel::Forest(m) => m.fmt(f),
            FittedModel::Svm(m) => m.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub country_code: String,
    /// Inclusive forecast years.
    pub horizon: (i32, i32),
    pub split_ratio: f64,
    pub split_strategy: SplitStrategy,
    pub seed: u64,
    /// Models to run; kept in canonical order.
    pub models: Vec<ModelKind>,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub svr: SvrParams,
    pub kernel: Kernel,
    /// Refit every model on the full series before forecasting.
    pub refit_full: bool,
    pub allow_overlap: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            country_code: "CAN".into(),
            horizon: (2019, 2030),
            split_ratio: 0.9,
            split_strategy: SplitStrategy::SeededRandom,
            seed: 42,
            models: ModelKind::ALL.to_vec(),
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            svr: SvrParams::default(),
            kernel: Kernel::default(),
            refit_full: true,
            allow_overlap: false,
        }
    }
}

impl PipelineConfig {
    /// Set the split seed and the forest seed together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.forest.seed = seed;
        self
    }
}

/// Per-year, per-model predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTable {
    pub years: Vec<i32>,
    pub columns: Vec<(ModelKind, Vec<f64>)>,
}

impl ForecastTable {
    pub fn column(&self, kind: ModelKind) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, v)| v.as_slice())
    }
}

/// Forecast table as CSV: `Year` then one column per model, six decimals.
pub fn emit_table_csv(table: &ForecastTable) -> String {
    let mut out = String::from("Year");
    for (kind, _) in &table.columns {
        out.push(',');
        out.push_str(kind.name());
    }
    out.push('\n');
    for (row, year) in table.years.iter().enumerate() {
        let _ = write!(out, "{year}");
        for (_, values) in &table.columns {
            let _ = write!(out, ",{:.6}", values[row]);
        }
        out.push('\n');
    }
    out
}

/// Test-set scores as CSV: `model,r2,mae,rmse`.
pub fn emit_metrics_csv(metrics: &[(ModelKind, MetricsReport)]) -> String {
    let mut out = String::from("model,r2,mae,rmse\n");
    for (kind, m) in metrics {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            kind.name(),
            m.r2,
            m.mae,
            m.rmse
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub split: Split,
    /// Test-set scores of the models fitted on the training part.
    pub metrics: Vec<(ModelKind, MetricsReport)>,
    /// Models used for the forecast.
    pub models: Vec<(ModelKind, FittedModel)>,
    pub table: ForecastTable,
    pub manifest: RunManifest,
    /// Solver state of the forecasting SVR, when it ran.
    pub svr_status: Option<SolverStatus>,
    pub warnings: Vec<String>,
}

struct Fitted {
    model: FittedModel,
    svr: Option<SvrFit>,
}

fn fit_model(
    kind: ModelKind,
    data: &Dataset,
    config: &PipelineConfig,
) -> Result<Fitted, PipelineError> {
    Ok(match kind {
        ModelKind::Linear => Fitted {
            model: FittedModel::Linear(fit_linear(data)?),
            svr: None,
        },
        ModelKind::DecisionTree => Fitted {
            model: FittedModel::Tree(fit_tree(data, config.tree)?),
            svr: None,
        },
        ModelKind::RandomForest => Fitted {
            model: FittedModel::Forest(fit_forest(data, config.forest)?),
            svr: None,
        },
        ModelKind::Svm => {
            let fit = fit_svr(data, config.svr, config.kernel)?;
            Fitted {
                model: FittedModel::Svm(fit.model.clone()),
                svr: Some(fit),
            }
        }
    })
}

fn svr_warning(stage: &str, fit: &SvrFit) -> Option<String> {
    match fit.status {
        SolverStatus::Converged => None,
        SolverStatus::IterationLimit { violation } => Some(format!(
            "svm ({stage}): update cap reached, KKT violation {violation:.3e}"
        )),
        SolverStatus::NonConvergence { violation } => Some(format!(
            "svm ({stage}): solver did not converge, KKT violation {violation:.3e}"
        )),
        SolverStatus::Stalled { violation } => Some(format!(
            "svm ({stage}): solver stalled, KKT violation {violation:.3e}"
        )),
    }
}

/// Split, fit, score and forecast.
///
/// Scores always come from models fitted on the training part. With
/// `refit_full` the forecast uses models refitted on the whole series;
/// otherwise it reuses the training-part models.
pub fn run_pipeline(
    series: &EmissionSeries,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let mut models_to_run = config.models.clone();
    models_to_run.sort();
    models_to_run.dedup();
    if models_to_run.is_empty() {
        return Err(PipelineError::NoModels);
    }
    let (start, end) = config.horizon;
    if start > end {
        return Err(PipelineError::InvalidHorizon { start, end });
    }
    let data = series.to_dataset()?;
    let last_year = series.last_year().unwrap_or(i32::MIN);
    if start <= last_year && !config.allow_overlap {
        return Err(PipelineError::HorizonBeforeData { start, last_year });
    }

    let split = split_dataset(
        &data,
        config.split_ratio,
        config.split_strategy,
        config.seed,
    )?;

    let mut warnings = Vec::new();
    let mut metrics = Vec::new();
    let mut models = Vec::new();
    let mut svr_status = None;
    for &kind in &models_to_run {
        let on_train = fit_model(kind, &split.train, config)?;
        if let Some(w) = on_train
            .svr
            .as_ref()
            .and_then(|f| svr_warning("train split", f))
        {
            warnings.push(w);
        }
        let predictions: Vec<f64> = split
            .test
            .xs()
            .iter()
            .map(|&x| on_train.model.predict(x))
            .collect();
        metrics.push((kind, evaluate(split.test.ys(), &predictions)?));

        let final_fit = if config.refit_full {
            let refit = fit_model(kind, &data, config)?;
            if let Some(w) = refit
                .svr
                .as_ref()
                .and_then(|f| svr_warning("full series", f))
            {
                warnings.push(w);
            }
            refit
        } else {
            on_train
        };
        if let Some(fit) = &final_fit.svr {
            svr_status = Some(fit.status);
        }
        models.push((kind, final_fit.model));
    }

    let years: Vec<i32> = (start..=end).collect();
    let columns = models
        .iter()
        .map(|(kind, model)| {
            (
                *kind,
                years.iter().map(|&y| model.predict(f64::from(y))).collect(),
            )
        })
        .collect();
    let table = ForecastTable { years, columns };

    let manifest = RunManifest::record(
        series,
        config,
        &models_to_run,
        &split,
        &metrics,
        &models,
        svr_status,
    );

    Ok(PipelineOutput {
        split,
        metrics,
        models,
        table,
        manifest,
        svr_status,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ForecastTable {
        ForecastTable {
            years: vec![2019, 2020],
            columns: vec![
                (ModelKind::Linear, vec![17.210947, 17.263663]),
                (ModelKind::DecisionTree, vec![15.385291, 15.385291]),
                (ModelKind::RandomForest, vec![15.518, 15.518]),
                (ModelKind::Svm, vec![15.073555, 14.963301]),
            ],
        }
    }

    #[test]
    fn csv_layout() {
        let csv = emit_table_csv(&table());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("Year,LinearRegression,DecisionTree,RandomForest,SVM")
        );
        assert_eq!(
            lines.next(),
            Some("2019,17.210947,15.385291,15.518000,15.073555")
        );
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn empty_horizon_is_header_only() {
        let t = ForecastTable {
            years: vec![],
            columns: vec![(ModelKind::Linear, vec![])],
        };
        assert_eq!(emit_table_csv(&t), "Year,LinearRegression\n");
    }

    #[test]
    fn model_names_parse() {
        assert_eq!("linear".parse::<ModelKind>(), Ok(ModelKind::Linear));
        assert_eq!("SVM".parse::<ModelKind>(), Ok(ModelKind::Svm));
        assert_eq!(
            "RandomForest".parse::<ModelKind>(),
            Ok(ModelKind::RandomForest)
        );
        assert!("knn".parse::<ModelKind>().is_err());
    }

    #[test]
    fn metrics_csv_layout() {
        let m = MetricsReport {
            r2: 0.5,
            mae: 0.25,
            mse: 0.0625,
            rmse: 0.25,
            n: 4,
        };
        assert_eq!(
            emit_metrics_csv(&[(ModelKind::Svm, m)]),
            "model,r2,mae,rmse\nSVM,0.500000,0.250000,0.250000\n"
        );
    }
}
