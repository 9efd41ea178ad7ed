//! Flat `key=value` record of a pipeline run.
//!
//! The manifest embeds the series points and every setting that feeds the
//! fits, so a replay needs nothing else. Floats are written in shortest
//! round-trip form and parse back to the same bits.

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{FittedModel, ModelKind, PipelineConfig, TOOLKIT_VERSION};
use crate::cart::TreeParams;
use crate::dataset::{Split, SplitStrategy};
use crate::ingest::{write_series_csv, EmissionSeries};
use crate::metrics::MetricsReport;
use crate::svr::{Kernel, KernelKind, SolverStatus};

const HEADER: &str = "# co2cast run manifest";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ManifestError {
    #[error("manifest line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("manifest is missing `{0}`")]
    MissingKey(String),
    #[error("manifest key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("dataset fingerprint mismatch: manifest has {expected}, data gives {actual}")]
    FingerprintMismatch { expected: String, actual: String },
}

/// `sha256:<hex>` of the series in its `year,value` serialization.
pub fn dataset_fingerprint(series: &EmissionSeries) -> String {
    let digest = Sha256::digest(write_series_csv(series).as_bytes());
    let mut out = String::from("sha256:");
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

fn opt_usize(v: Option<usize>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |d| d.to_string())
}

fn status_str(s: SolverStatus) -> String {
    match s {
        SolverStatus::Converged => "converged".into(),
        SolverStatus::IterationLimit { violation } => format!("iteration-limit({violation})"),
        SolverStatus::NonConvergence { violation } => format!("non-convergence({violation})"),
        SolverStatus::Stalled { violation } => format!("stalled({violation})"),
    }
}

impl RunManifest {
    pub(super) fn record(
        series: &EmissionSeries,
        config: &PipelineConfig,
        models_run: &[ModelKind],
        split: &Split,
        metrics: &[(ModelKind, MetricsReport)],
        models: &[(ModelKind, FittedModel)],
        svr_status: Option<SolverStatus>,
    ) -> Self {
        let mut m = RunManifest::default();
        m.push("toolkit", TOOLKIT_VERSION);
        m.push("dataset.fingerprint", dataset_fingerprint(series));
        m.push("dataset.country_code", &series.country_code);
        m.push("dataset.country_name", &series.country_name);
        m.push("dataset.indicator_code", &series.indicator_code);
        m.push("dataset.n_points", series.points.len());
        let points: Vec<String> = series
            .points
            .iter()
            .map(|(y, v)| format!("{y}:{v}"))
            .collect();
        m.push("dataset.points", points.join(","));
        let dropped: Vec<String> = series.dropped_years.iter().map(i32::to_string).collect();
        m.push("dataset.dropped_years", dropped.join(","));

        m.push("split.ratio", config.split_ratio);
        m.push("split.strategy", config.split_strategy.as_str());
        m.push("split.seed", config.seed);
        m.push("split.train", split.train.len());
        m.push("split.test", split.test.len());
        m.push(
            "horizon",
            format!("{}:{}", config.horizon.0, config.horizon.1),
        );
        m.push("refit_full", config.refit_full);
        m.push("allow_overlap", config.allow_overlap);
        let names: Vec<&str> = models_run.iter().map(|k| k.short_name()).collect();
        m.push("models", names.join(","));

        m.push_tree("tree", &config.tree);
        m.push("forest.n_trees", config.forest.n_trees);
        m.push("forest.bootstrap", config.forest.bootstrap);
        m.push("forest.seed", config.forest.seed);
        m.push_tree("forest.tree", &config.forest.tree);
        m.push("svm.kernel", config.kernel.kind.as_str());
        m.push("svm.gamma", config.kernel.gamma);
        m.push("svm.c", config.svr.c);
        m.push("svm.epsilon", config.svr.epsilon);
        m.push("svm.tol", config.svr.tol);
        m.push("svm.max_passes", opt_usize(config.svr.max_passes, "auto"));
        if let Some(s) = svr_status {
            m.push("svm.status", status_str(s));
        }

        for (kind, r) in metrics {
            let k = kind.name();
            m.push(format!("metrics.{k}.r2"), r.r2);
            m.push(format!("metrics.{k}.mae"), r.mae);
            m.push(format!("metrics.{k}.mse"), r.mse);
            m.push(format!("metrics.{k}.rmse"), r.rmse);
            m.push(format!("metrics.{k}.n"), r.n);
        }
        for (kind, model) in models {
            m.push(format!("model.{}", kind.name()), model);
        }
        m
    }

    fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn push_tree(&mut self, prefix: &str, p: &TreeParams) {
        self.push(
            format!("{prefix}.max_depth"),
            opt_usize(p.max_depth, "none"),
        );
        self.push(format!("{prefix}.min_samples_split"), p.min_samples_split);
        self.push(format!("{prefix}.min_samples_leaf"), p.min_samples_leaf);
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Parse text written by [`RunManifest::to_text`]. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ManifestError::Syntax { line: i + 1 })?;
            entries.push((k.trim().to_string(), v.to_string()));
        }
        Ok(RunManifest { entries })
    }

    fn require(&self, key: &str) -> Result<&str, ManifestError> {
        self.get(key)
            .ok_or_else(|| ManifestError::MissingKey(key.to_string()))
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<T, ManifestError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| ManifestError::BadValue {
            key: key.to_string(),
            value: raw.to_string(),
        })
    }

    fn bad(&self, key: &str) -> ManifestError {
        ManifestError::BadValue {
            key: key.to_string(),
            value: self.get(key).unwrap_or_default().to_string(),
        }
    }

    fn optional(&self, key: &str, none: &str) -> Result<Option<usize>, ManifestError> {
        if self.require(key)? == none {
            Ok(None)
        } else {
            self.value(key).map(Some)
        }
    }

    fn tree_params(&self, prefix: &str) -> Result<TreeParams, ManifestError> {
        Ok(TreeParams {
            max_depth: self.optional(&format!("{prefix}.max_depth"), "none")?,
            min_samples_split: self.value(&format!("{prefix}.min_samples_split"))?,
            min_samples_leaf: self.value(&format!("{prefix}.min_samples_leaf"))?,
        })
    }

    /// The series embedded in the manifest, checked against its fingerprint.
    pub fn series(&self) -> Result<EmissionSeries, ManifestError> {
        let mut points = Vec::new();
        let raw = self.require("dataset.points")?;
        for item in raw.split(',').filter(|s| !s.is_empty()) {
            let (y, v) = item
                .split_once(':')
                .ok_or_else(|| self.bad("dataset.points"))?;
            let y: i32 = y.parse().map_err(|_| self.bad("dataset.points"))?;
            let v: f64 = v.parse().map_err(|_| self.bad("dataset.points"))?;
            points.push((y, v));
        }
        let mut dropped_years = Vec::new();
        for item in self
            .require("dataset.dropped_years")?
            .split(',')
            .filter(|s| !s.is_empty())
        {
            dropped_years.push(
                item.parse()
                    .map_err(|_| self.bad("dataset.dropped_years"))?,
            );
        }
        let series = EmissionSeries {
            country_name: self.require("dataset.country_name")?.to_string(),
            country_code: self.require("dataset.country_code")?.to_string(),
            indicator_code: self.require("dataset.indicator_code")?.to_string(),
            points,
            dropped_years,
        };
        self.check_fingerprint(&series)?;
        Ok(series)
    }

    pub fn check_fingerprint(&self, series: &EmissionSeries) -> Result<(), ManifestError> {
        let expected = self.require("dataset.fingerprint")?;
        let actual = dataset_fingerprint(series);
        if expected != actual {
            return Err(ManifestError::FingerprintMismatch {
                expected: expected.to_string(),
                actual,
            });
        }
        Ok(())
    }

    /// Rebuild the configuration that produced this manifest.
    pub fn config(&self) -> Result<PipelineConfig, ManifestError> {
        let (start, end) = self
            .require("horizon")?
            .split_once(':')
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            .ok_or_else(|| self.bad("horizon"))?;
        let split_strategy: SplitStrategy = self.value("split.strategy")?;
        let mut models = Vec::new();
        for name in self.require("models")?.split(',') {
            models.push(name.parse::<ModelKind>().map_err(|_| self.bad("models"))?);
        }
        let kernel = match self.require("svm.kernel")? {
            "rbf" => Kernel::rbf(self.value("svm.gamma")?),
            "linear" => Kernel {
                kind: KernelKind::Linear,
                gamma: self.value("svm.gamma")?,
            },
            _ => return Err(self.bad("svm.kernel")),
        };
        Ok(PipelineConfig {
            country_code: self.require("dataset.country_code")?.to_string(),
            horizon: (start, end),
            split_ratio: self.value("split.ratio")?,
            split_strategy,
            seed: self.value("split.seed")?,
            models,
            tree: self.tree_params("tree")?,
            forest: crate::forest::ForestParams {
                n_trees: self.value("forest.n_trees")?,
                bootstrap: self.value("forest.bootstrap")?,
                seed: self.value("forest.seed")?,
                tree: self.tree_params("forest.tree")?,
            },
            svr: crate::svr::SvrParams {
                c: self.value("svm.c")?,
                epsilon: self.value("svm.epsilon")?,
                tol: self.value("svm.tol")?,
                max_passes: self.optional("svm.max_passes", "auto")?,
            },
            kernel,
            refit_full: self.value("refit_full")?,
            allow_overlap: self.value("allow_overlap")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> EmissionSeries {
        EmissionSeries {
            country_name: "Testland".into(),
            country_code: "TST".into(),
            indicator_code: "EN.ATM.CO2E.PC".into(),
            points: vec![(2000, 1.5), (2001, 0.1 + 0.2), (2003, 2.0)],
            dropped_years: vec![2002],
        }
    }

    #[test]
    fn fingerprint_is_sha256_of_series_csv() {
        let s = EmissionSeries {
            points: vec![],
            dropped_years: vec![],
            ..series()
        };
        let fp = dataset_fingerprint(&s);
        assert_eq!(fp.len(), "sha256:".len() + 64);
        assert_ne!(fp, dataset_fingerprint(&series()));
    }

    #[test]
    fn parse_ignores_comments_and_keeps_equals_in_values() {
        let m = RunManifest::parse("# hi\n\na=1\nmodel.X=model=linear;slope=2\n").unwrap();
        assert_eq!(m.get("a"), Some("1"));
        assert_eq!(m.get("model.X"), Some("model=linear;slope=2"));
        assert_eq!(
            RunManifest::parse("novalue\n"),
            Err(ManifestError::Syntax { line: 1 })
        );
    }

    #[test]
    fn series_round_trips_bit_exactly() {
        let mut m = RunManifest::default();
        let s = series();
        m.push("dataset.fingerprint", dataset_fingerprint(&s));
        m.push("dataset.country_code", "TST");
        m.push("dataset.country_name", "Testland");
        m.push("dataset.indicator_code", "EN.ATM.CO2E.PC");
        m.push("dataset.points", "2000:1.5,2001:0.30000000000000004,2003:2");
        m.push("dataset.dropped_years", "2002");
        let back = RunManifest::parse(&m.to_text()).unwrap().series().unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn tampered_points_are_rejected() {
        let s = series();
        let mut m = RunManifest::default();
        m.push("dataset.fingerprint", dataset_fingerprint(&s));
        m.push("dataset.country_code", "TST");
        m.push("dataset.country_name", "Testland");
        m.push("dataset.indicator_code", "EN.ATM.CO2E.PC");
        m.push("dataset.points", "2000:1.5,2001:0.3,2003:2");
        m.push("dataset.dropped_years", "2002");
        assert!(matches!(
            m.series(),
            Err(ManifestError::FingerprintMismatch { .. })
        ));
    }
}
