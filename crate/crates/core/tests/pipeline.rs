use co2cast::ingest::{extract_series, parse_worldbank_csv, EmissionSeries};
use co2cast::report::{
    emit_chart_svg, emit_metrics_csv, emit_table_csv, run_pipeline, ChartOptions, ModelKind,
    PipelineConfig, PipelineError, RunManifest,
};
use co2cast::SplitStrategy;

const WIDE: &[u8] = include_bytes!("data/fertility_wide.csv");

fn canada() -> EmissionSeries {
    let file = parse_worldbank_csv(WIDE).unwrap();
    extract_series(&file, "CAN", 1960, 2013).unwrap()
}

fn config() -> PipelineConfig {
    PipelineConfig {
        horizon: (2014, 2025),
        ..PipelineConfig::default()
    }
}

fn synthetic(value: impl Fn(f64) -> f64) -> EmissionSeries {
    EmissionSeries {
        country_name: "Synthetic".into(),
        country_code: "SYN".into(),
        indicator_code: "EN.ATM.CO2E.PC".into(),
        points: (1960..=2018)
            .map(|y| (y, value(f64::from(y - 1960))))
            .collect(),
        dropped_years: vec![],
    }
}

#[test]
fn real_wide_file_parses() {
    let file = parse_worldbank_csv(WIDE).unwrap();
    assert_eq!(file.rows.len(), 219);
    assert_eq!(file.years.first(), Some(&1960));
    assert_eq!(file.years.last(), Some(&2013));
    let s = canada();
    assert_eq!(s.country_name, "Canada");
    assert_eq!(s.points.len() + s.dropped_years.len(), 54);
    assert_eq!(s.points[0], (1960, 3.811));
}

#[test]
fn table_cells_are_model_predictions() {
    let s = canada();
    let out = run_pipeline(&s, &config()).unwrap();
    assert_eq!(out.table.years, (2014..=2025).collect::<Vec<_>>());
    assert_eq!(out.table.columns.len(), 4);
    for ((kind, column), (mkind, model)) in out.table.columns.iter().zip(&out.models) {
        assert_eq!(kind, mkind);
        assert_eq!(column.len(), 12);
        for (year, v) in out.table.years.iter().zip(column) {
            assert_eq!(*v, model.predict(f64::from(*year)));
        }
    }
    let tree = out.table.column(ModelKind::DecisionTree).unwrap();
    assert!(tree.iter().all(|&v| v == tree[0]));
    let forest = out.table.column(ModelKind::RandomForest).unwrap();
    assert!(forest.iter().all(|&v| v == forest[0]));
    let linear = out.table.column(ModelKind::Linear).unwrap();
    let step = linear[1] - linear[0];
    for w in linear.windows(2) {
        assert!((w[1] - w[0] - step).abs() <= 1e-12 * linear[0].abs().max(1.0));
    }
    assert_eq!(out.metrics.len(), 4);
    assert_eq!(out.split.train.len() + out.split.test.len(), s.points.len());
}

#[test]
fn constant_series_forecasts_the_constant() {
    let s = synthetic(|_| 5.0);
    let out = run_pipeline(&s, &PipelineConfig::default()).unwrap();
    for (_, column) in &out.table.columns {
        assert!(column.iter().all(|&v| v == 5.0), "{column:?}");
    }
}

#[test]
fn manifest_replay_is_byte_identical() {
    let s = synthetic(|t| 10.0 + 0.3 * t - 0.004 * t * t + (t * 0.9).sin() * 0.3);
    let cfg = PipelineConfig {
        country_code: "SYN".into(),
        ..PipelineConfig::default()
    }
    .with_seed(7);
    let first = run_pipeline(&s, &cfg).unwrap();
    let again = run_pipeline(&s, &cfg).unwrap();
    assert_eq!(first.manifest, again.manifest);

    let text = first.manifest.to_text();
    let parsed = RunManifest::parse(&text).unwrap();
    assert_eq!(parsed.config().unwrap(), cfg);
    let series = parsed.series().unwrap();
    assert_eq!(series, s);
    let replay = run_pipeline(&series, &parsed.config().unwrap()).unwrap();

    assert_eq!(emit_table_csv(&first.table), emit_table_csv(&replay.table));
    assert_eq!(
        emit_metrics_csv(&first.metrics),
        emit_metrics_csv(&replay.metrics)
    );
    assert_eq!(replay.manifest.to_text(), text);
    let opts = ChartOptions::default();
    assert_eq!(
        emit_chart_svg(&s, Some(&first.table), &opts),
        emit_chart_svg(&series, Some(&replay.table), &opts)
    );
}

#[test]
fn manifest_records_models_and_metrics() {
    let out = run_pipeline(&canada(), &config()).unwrap();
    let m = &out.manifest;
    assert!(m.get("dataset.fingerprint").unwrap().starts_with("sha256:"));
    assert_eq!(m.get("dataset.country_code"), Some("CAN"));
    assert_eq!(m.get("split.seed"), Some("42"));
    assert!(m.get("toolkit").unwrap().starts_with("co2cast "));
    assert!(m
        .get("model.LinearRegression")
        .unwrap()
        .starts_with("model=linear;"));
    assert!(m
        .get("model.DecisionTree")
        .unwrap()
        .starts_with("model=tree;root=("));
    assert!(m.get("model.RandomForest").unwrap().contains("n_trees=100"));
    assert!(m
        .get("model.SVM")
        .unwrap()
        .starts_with("model=svr;kernel=rbf"));
    for k in ModelKind::ALL {
        assert!(m.get(&format!("metrics.{}.r2", k.name())).is_some());
    }
}

#[test]
fn model_subset_keeps_canonical_order() {
    let cfg = PipelineConfig {
        models: vec![ModelKind::Svm, ModelKind::Linear],
        ..config()
    };
    let out = run_pipeline(&canada(), &cfg).unwrap();
    let kinds: Vec<ModelKind> = out.table.columns.iter().map(|c| c.0).collect();
    assert_eq!(kinds, vec![ModelKind::Linear, ModelKind::Svm]);
    assert!(emit_table_csv(&out.table).starts_with("Year,LinearRegression,SVM\n"));
}

#[test]
fn horizon_inside_data_needs_overlap_flag() {
    let s = canada();
    let cfg = PipelineConfig {
        horizon: (2005, 2015),
        ..PipelineConfig::default()
    };
    assert!(matches!(
        run_pipeline(&s, &cfg),
        Err(PipelineError::HorizonBeforeData { start: 2005, .. })
    ));
    let cfg = PipelineConfig {
        allow_overlap: true,
        ..cfg
    };
    assert_eq!(run_pipeline(&s, &cfg).unwrap().table.years.len(), 11);
}

#[test]
fn chronological_split_holds_out_the_tail() {
    let s = canada();
    let cfg = PipelineConfig {
        split_strategy: SplitStrategy::ChronologicalTail,
        ..config()
    };
    let out = run_pipeline(&s, &cfg).unwrap();
    let last_train = out
        .split
        .train
        .xs()
        .iter()
        .copied()
        .fold(f64::MIN, f64::max);
    assert!(out.split.test.xs().iter().all(|&x| x > last_train));
    let random = run_pipeline(&s, &config()).unwrap();
    assert_ne!(
        emit_metrics_csv(&out.metrics),
        emit_metrics_csv(&random.metrics)
    );
}

#[test]
fn training_split_models_when_refit_is_off() {
    let s = canada();
    let cfg = PipelineConfig {
        refit_full: false,
        models: vec![ModelKind::Linear],
        ..config()
    };
    let out = run_pipeline(&s, &cfg).unwrap();
    let full = run_pipeline(
        &s,
        &PipelineConfig {
            refit_full: true,
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_ne!(out.models, full.models);
}

#[test]
fn chart_has_a_curve_per_model() {
    let s = canada();
    let out = run_pipeline(&s, &config()).unwrap();
    let svg = emit_chart_svg(&s, Some(&out.table), &ChartOptions::default());
    assert_eq!(svg.matches("<polyline").count(), 5);
    for k in ModelKind::ALL {
        assert!(svg.contains(&format!(">{}</text>", k.name())));
    }
    let history = emit_chart_svg(&s, None, &ChartOptions::default());
    assert_eq!(history.matches("<polyline").count(), 1);
}
