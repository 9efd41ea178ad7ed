//! Per-capita CO2 forecasting from World Bank indicator files.
//!
//! Four single-feature regressors (least squares, a regression tree, a bagged
//! forest and an epsilon-SVR) are trained on one country's yearly series,
//! scored on a held-out split and used to forecast a horizon of years.

pub mod cart;
pub mod dataset;
pub mod forest;
pub mod ingest;
pub mod linreg;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod svr;

pub use cart::{fit_tree, predict_tree, TreeModel, TreeParams};
pub use dataset::{split_dataset, Dataset, Split, SplitStrategy};
pub use forest::{fit_forest, predict_forest, ForestModel, ForestParams};
pub use ingest::{extract_series, parse_worldbank_csv, EmissionSeries};
pub use linreg::{fit_linear, predict_linear, LinearModel};
pub use metrics::{evaluate, MetricsReport};
pub use report::{run_pipeline, ForecastTable, ModelKind, PipelineConfig, RunManifest};
pub use svr::{fit_svr, predict_svr, Kernel, SvrFit, SvrModel, SvrParams};
