use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use co2cast::cart::TreeParams;
use co2cast::dataset::SplitStrategy;
use co2cast::forest::{ForestParams, DEFAULT_N_TREES};
use co2cast::ingest::{
    extract_series, looks_like_worldbank, parse_worldbank_csv, read_series_csv, write_series_csv,
    EmissionSeries, IngestError,
};
use co2cast::report::{
    emit_chart_svg, emit_metrics_csv, emit_table_csv, run_pipeline, ChartOptions, ManifestError,
    ModelKind, PipelineConfig, PipelineError, PipelineOutput, RunManifest,
};
use co2cast::svr::{Kernel, SvrError, SvrParams};

#[derive(Parser)]
#[command(
    name = "co2cast",
    version,
    about = "Forecast per-capita CO2 emissions from World Bank data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract one country's series from a World Bank indicator file.
    Ingest(IngestArgs),
    /// Score every model on the held-out split and print the comparison.
    Evaluate(RunArgs),
    /// Evaluate, then forecast the horizon and write all artifacts.
    Forecast(ForecastArgs),
}

#[derive(Args)]
struct DataArgs {
    /// World Bank indicator CSV or a `year,value` series file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "CAN")]
    country: String,
    /// Inclusive year window, `A:B`.
    #[arg(long, value_parser = parse_range, default_value = "1960:2018")]
    years: (i32, i32),
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output series file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_range, default_value = "2019:2030")]
    horizon: (i32, i32),
    /// Fraction of samples used for training.
    #[arg(long, default_value_t = 0.9)]
    ratio: f64,
    /// `random` or `chronological`.
    #[arg(long, default_value = "random")]
    split: SplitStrategy,
    /// Seeds the split and the forest.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated subset of linear,tree,forest,svm.
    #[arg(long, value_delimiter = ',', default_value = "linear,tree,forest,svm")]
    models: Vec<ModelKind>,
    #[arg(long, overrides_with = "no_refit_full")]
    refit_full: bool,
    /// Forecast with the models fitted on the training split only.
    #[arg(long)]
    no_refit_full: bool,
    /// Allow a horizon that overlaps the data years.
    #[arg(long)]
    allow_overlap: bool,

    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    #[arg(long, default_value_t = DEFAULT_N_TREES)]
    n_trees: usize,
    #[arg(long)]
    no_bootstrap: bool,
    /// Forest seed; defaults to --seed.
    #[arg(long)]
    forest_seed: Option<u64>,
    /// `rbf` or `linear`.
    #[arg(long, default_value = "rbf")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// SMO update cap; defaults to 1000 per training sample.
    #[arg(long)]
    max_passes: Option<usize>,

    /// Artifact directory (forecast defaults to the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Replay the run recorded in a manifest; other run flags are ignored.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl ToString) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::input(e)
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        CliError::input(e)
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Metrics(_) | PipelineError::Svr(SvrError::InfeasiblePoint(_)) => {
                CliError::internal(e)
            }
            _ => CliError::input(e),
        }
    }
}

fn parse_range(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected A:B, got `{s}`"))?;
    let a: i32 = a.trim().parse().map_err(|_| format!("bad year `{a}`"))?;
    let b: i32 = b.trim().parse().map_err(|_| format!("bad year `{b}`"))?;
    if a > b {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok((a, b))
}

fn load_series(data: &DataArgs) -> Result<EmissionSeries, CliError> {
    let path = data
        .input
        .as_ref()
        .ok_or_else(|| CliError::input("--input is required"))?;
    let bytes = fs::read(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let (lo, hi) = data.years;
    let series = if looks_like_worldbank(&bytes) {
        let file = parse_worldbank_csv(&bytes)?;
        extract_series(&file, &data.country, lo, hi)?
    } else if bytes.starts_with(b"year,") || bytes.starts_with("\u{feff}year,".as_bytes()) {
        let text =
            String::from_utf8(bytes).map_err(|_| CliError::input("series file is not UTF-8"))?;
        let mut s = read_series_csv(&text, &data.country)?;
        s.points.retain(|p| (lo..=hi).contains(&p.0));
        s.dropped_years.retain(|y| (lo..=hi).contains(y));
        s
    } else {
        // neither format: report what the World Bank parser expected
        parse_worldbank_csv(&bytes)?;
        unreachable!("parser accepted a file without a header line")
    };
    for year in &series.dropped_years {
        eprintln!(
            "warning: {}: no usable value for {year}",
            series.country_code
        );
    }
    if series.points.is_empty() {
        return Err(CliError::input(format!(
            "{}: no data in {lo}:{hi}",
            series.country_code
        )));
    }
    Ok(series)
}

fn build_config(args: &RunArgs) -> Result<PipelineConfig, CliError> {
    if !(args.ratio > 0.0 && args.ratio < 1.0) {
        return Err(CliError::input(format!(
            "--ratio must be inside (0, 1), got {}",
            args.ratio
        )));
    }
    let tree = TreeParams {
        max_depth: args.max_depth,
        min_samples_split: args.min_samples_split,
        min_samples_leaf: args.min_samples_leaf,
    };
    let kernel = match args.kernel.as_str() {
        "rbf" => Kernel::rbf(args.gamma),
        "linear" => Kernel::linear(),
        other => return Err(CliError::input(format!("unknown kernel `{other}`"))),
    };
    Ok(PipelineConfig {
        country_code: args.data.country.clone(),
        horizon: args.horizon,
        split_ratio: args.ratio,
        split_strategy: args.split,
        seed: args.seed,
        models: args.models.clone(),
        tree,
        forest: ForestParams {
            n_trees: args.n_trees,
            bootstrap: !args.no_bootstrap,
            seed: args.forest_seed.unwrap_or(args.seed),
            tree,
        },
        svr: SvrParams {
            c: args.c,
            epsilon: args.epsilon,
            tol: args.tol,
            max_passes: args.max_passes,
        },
        kernel,
        refit_full: !args.no_refit_full,
        allow_overlap: args.allow_overlap,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

fn run(series: &EmissionSeries, config: &PipelineConfig) -> Result<PipelineOutput, CliError> {
    let out = run_pipeline(series, config)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    Ok(out)
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let series = load_series(&args.data)?;
    let csv = write_series_csv(&series);
    match args.out {
        Some(path) => fs::write(&path, csv)
            .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_evaluate(args: RunArgs) -> Result<(), CliError> {
    let series = load_series(&args.data)?;
    let mut config = build_config(&args)?;
    // no forecast is produced, so the horizon only has to be well formed
    config.allow_overlap = true;
    let out = run(&series, &config)?;
    let csv = emit_metrics_csv(&out.metrics);
    print!("{csv}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))?;
        write_file(dir, "metrics.csv", &csv)?;
    }
    Ok(())
}

fn cmd_forecast(args: ForecastArgs) -> Result<(), CliError> {
    let (series, config) = match &args.from_manifest {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            let manifest = RunManifest::parse(&text)?;
            let series = manifest.series()?;
            if args.run.data.input.is_some() {
                manifest.check_fingerprint(&load_series(&args.run.data)?)?;
            }
            (series, manifest.config()?)
        }
        None => (load_series(&args.run.data)?, build_config(&args.run)?),
    };
    let out = run(&series, &config)?;

    let dir = args.run.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))?;
    write_file(&dir, "forecast.csv", &emit_table_csv(&out.table))?;
    write_file(&dir, "metrics.csv", &emit_metrics_csv(&out.metrics))?;
    write_file(
        &dir,
        "chart.svg",
        &emit_chart_svg(&series, Some(&out.table), &ChartOptions::default()),
    )?;
    write_file(&dir, "manifest.txt", &out.manifest.to_text())?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Forecast(a) => cmd_forecast(a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
