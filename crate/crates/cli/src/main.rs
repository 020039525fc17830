//! `heli-ident`: synthesise flight records, identify models, compare methods
//! and export plot data.
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 when
//! the data (or a file) cannot be read, parsed or written.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use heli_ident_core::fitness::{FitnessConfig, InitialState};
use heli_ident_core::harness::{
    compare_methods, export_timeseries, prepare_data, run_prepared, select_segment, synthesize, DataSource,
    ExperimentConfig, ExportSegment, FilterSpec, Method, SeedPolicy, SyntheticSpec, TrialReport,
};
use heli_ident_core::model::{ModelOptions, ParameterSet, State};
use heli_ident_core::optimizers::{ExclusionRule, SpaceOptions};
use heli_ident_core::signals::{butterworth_filter, load_log_path, save_log_path, DEFAULT_ORDER};

#[derive(Debug, Parser)]
#[command(name = "heli-ident", version, about = "Helicopter hover-model identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a 3-2-1-1 synthetic flight record.
    Synth(SynthArgs),
    /// Identify model parameters from a record over several trials.
    Identify(IdentifyArgs),
    /// Tabulate validation correlation of several methods on one record.
    Compare(CompareArgs),
    /// Write measured and simulated series per state for plotting.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlapSign {
    /// Flap damping signs as published (+1 on `a`, -1 on `b`).
    Printed,
    /// -1 on both flap rows.
    Symmetric,
}

impl FlapSign {
    fn options(self) -> ModelOptions {
        ModelOptions {
            flap_sign_symmetric: matches!(self, Self::Symmetric),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StartArg {
    Trim,
    Measured,
}

impl From<StartArg> for InitialState {
    fn from(s: StartArg) -> Self {
        match s {
            StartArg::Trim => InitialState::Trim,
            StartArg::Measured => InitialState::Measured,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SegmentArg {
    All,
    Train,
    Validate,
}

impl From<SegmentArg> for ExportSegment {
    fn from(s: SegmentArg) -> Self {
        match s {
            SegmentArg::All => ExportSegment::All,
            SegmentArg::Train => ExportSegment::Train,
            SegmentArg::Validate => ExportSegment::Validate,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExclusionArg {
    Truncation,
    ParentRescue,
}

#[derive(Debug, clap::Args)]
struct SynthArgs {
    /// `builtin:table2` or a JSON file mapping all 40 parameter names to values.
    #[arg(long, default_value = "builtin:table2")]
    truth: String,
    /// Noise standard deviation as a fraction of each channel's RMS.
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Record length in seconds.
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    /// Multistep stick amplitude.
    #[arg(long, default_value_t = 0.1)]
    amplitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FlapSign::Printed)]
    flap_sign: FlapSign,
    /// Leave out r_fb, c and d, as on a real vehicle.
    #[arg(long)]
    measured_only: bool,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

/// Options shared by `identify` and `compare`.
#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Input CSV record.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Iterations (IWO) or generations (GA); the local search ignores it.
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Give every trial the same random stream instead of one per trial.
    #[arg(long)]
    identical_seeds: bool,
    /// Fraction of the record used for training.
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    #[arg(long, value_enum, default_value_t = FlapSign::Printed)]
    flap_sign: FlapSign,
    /// Initial state of the training simulations.
    #[arg(long, value_enum, default_value_t = StartArg::Trim)]
    x0: StartArg,
    /// Low-pass cutoff in Hz applied before identification.
    #[arg(long, default_value_t = 5.0)]
    cutoff: f64,
    #[arg(long, conflicts_with = "cutoff")]
    no_filter: bool,
    /// Also search the derivatives that are zero in hover.
    #[arg(long)]
    free_zeros: bool,
    #[arg(long, value_enum, default_value_t = ExclusionArg::Truncation)]
    exclusion: ExclusionArg,
}

#[derive(Debug, clap::Args)]
struct IdentifyArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "iwo")]
    method: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated list drawn from iwo, ga, pem.
    #[arg(long, default_value = "iwo,ga,pem")]
    methods: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct ExportArgs {
    /// Parameter JSON, or a report written by `identify`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output directory; one `<state>.csv` per measured state.
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the report's setting, or `printed` for a bare parameter file.
    #[arg(long, value_enum)]
    flap_sign: Option<FlapSign>,
    #[arg(long, value_enum, default_value_t = StartArg::Measured)]
    x0: StartArg,
    #[arg(long, value_enum, default_value_t = SegmentArg::All)]
    segment: SegmentArg,
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    /// Low-pass the record at this cutoff (Hz) before exporting.
    #[arg(long)]
    cutoff: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(heli_ident_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Data(e) => write!(f, "data error: {e}"),
        }
    }
}

impl From<heli_ident_core::Error> for CliError {
    fn from(e: heli_ident_core::Error) -> Self {
        match e {
            heli_ident_core::Error::Config(m) => Self::Usage(m),
            other => Self::Data(other),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(io_error(dir, e)))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Data(io_error(path, e)))
}

fn io_error(path: &Path, source: std::io::Error) -> heli_ident_core::Error {
    heli_ident_core::Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(io_error(path, e)))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(e.into()))
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.into()))?;
    s.push('\n');
    Ok(s)
}

fn synth(args: &SynthArgs) -> CliResult<()> {
    let truth = match args.truth.as_str() {
        "builtin:table2" => ParameterSet::reference(),
        t if t.starts_with("builtin:") => {
            return Err(CliError::Usage(format!(
                "unknown builtin truth `{t}` (expected builtin:table2)"
            )))
        }
        path => read_json(Path::new(path))?,
    };
    let spec = SyntheticSpec {
        truth,
        model: args.flap_sign.options(),
        duration_s: args.duration,
        sample_rate_hz: args.rate,
        amplitude: args.amplitude,
        noise: args.noise,
        noise_seed: args.seed,
        all_states: !args.measured_only,
    };
    if !(args.duration > 0.0 && args.rate > 0.0 && args.noise >= 0.0 && args.amplitude >= 0.0) {
        return Err(CliError::Usage(
            "duration and rate must be positive, noise and amplitude non-negative".into(),
        ));
    }
    let log = synthesize(&spec)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(io_error(dir, e)))?;
    }
    save_log_path(&log, &args.out)?;
    println!(
        "wrote {} samples ({} states) to {}",
        log.len(),
        log.measured_states().len(),
        args.out.display()
    );
    Ok(())
}

fn parse_method(name: &str, iters: usize, exclusion: ExclusionArg) -> CliResult<Method> {
    let mut m = Method::from_name(name.trim())
        .ok_or_else(|| CliError::Usage(format!("unknown method `{name}` (expected iwo, ga or pem)")))?;
    m.set_iterations(iters);
    if let Method::Iwo(c) = &mut m {
        c.exclusion = match exclusion {
            ExclusionArg::Truncation => ExclusionRule::Truncation,
            ExclusionArg::ParentRescue => ExclusionRule::ParentRescue,
        };
    }
    Ok(m)
}

fn experiment(run: &RunArgs, method: Method) -> CliResult<ExperimentConfig> {
    if !(run.no_filter || run.cutoff > 0.0) {
        return Err(CliError::Usage(format!("cutoff must be positive, got {}", run.cutoff)));
    }
    let cfg = ExperimentConfig {
        data: DataSource::File(run.data.clone()),
        split: run.split,
        method,
        trials: run.trials,
        seed: run.seed,
        seed_policy: if run.identical_seeds {
            SeedPolicy::Identical
        } else {
            SeedPolicy::Derived
        },
        space: SpaceOptions {
            free_zeros: run.free_zeros,
            ..Default::default()
        },
        model: run.flap_sign.options(),
        train_initial_state: run.x0.into(),
        filter: (!run.no_filter).then_some(FilterSpec {
            cutoff_hz: run.cutoff,
            order: DEFAULT_ORDER,
        }),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn print_rho(report: &TrialReport) {
    for s in State::VALIDATION {
        match report.rho(*s) {
            Some(r) => println!("  rho[{s}] = {r:.4}"),
            None => println!("  rho[{s}] = undefined"),
        }
    }
}

fn identify(args: &IdentifyArgs) -> CliResult<()> {
    let method = parse_method(&args.method, args.run.iters, args.run.exclusion)?;
    let cfg = experiment(&args.run, method)?;
    let data = prepare_data(&cfg)?;
    let report = run_prepared(&cfg, &data)?;

    let out = &args.out;
    write_file(&out.join("report.json"), &to_json(&report)?)?;
    write_file(&out.join("best_params.json"), &to_json(&report.best_params)?)?;
    let mut params = String::from("name,best,mean,ci_lower,ci_upper\n");
    for p in &report.parameters {
        params.push_str(&format!(
            "{},{},{},{},{}\n",
            p.name, p.best, p.mean, p.ci_lower, p.ci_upper
        ));
    }
    write_file(&out.join("parameters.csv"), &params)?;
    // wall-clock times vary run to run, so they live outside report.json
    let mut timing = String::from("trial,seconds\n");
    for (i, t) in report.wall_clock_s.iter().enumerate() {
        timing.push_str(&format!("{i},{t}\n"));
    }
    write_file(&out.join("timing.csv"), &timing)?;

    println!(
        "{}: best trial {} of {}, training cost {:.6}, validation cost {:.6}",
        report.method,
        report.best_trial,
        report.trials.len(),
        report.training_cost,
        report.validation_cost
    );
    print_rho(&report);
    Ok(())
}

fn compare(args: &CompareArgs) -> CliResult<()> {
    let methods = args
        .methods
        .split(',')
        .filter(|m| !m.trim().is_empty())
        .map(|m| parse_method(m, args.run.iters, args.run.exclusion))
        .collect::<CliResult<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    let base = experiment(&args.run, methods[0].clone())?;
    let table = compare_methods(&base, &methods)?;
    write_file(&args.out.join("comparison.csv"), &table.to_csv())?;
    write_file(&args.out.join("comparison.txt"), &table.to_text())?;
    write_file(&args.out.join("comparison.json"), &to_json(&table)?)?;
    print!("{}", table.to_text());
    Ok(())
}

/// A bare parameter set, or the best parameters and model options of a report.
fn load_model(path: &Path) -> CliResult<(ParameterSet, Option<ModelOptions>)> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("best_params").is_some() {
        let report: TrialReport = serde_json::from_value(value).map_err(|e| CliError::Data(e.into()))?;
        return Ok((report.best_params, Some(report.config.model)));
    }
    let params = serde_json::from_value(value).map_err(|e| CliError::Data(e.into()))?;
    Ok((params, None))
}

fn export(args: &ExportArgs) -> CliResult<()> {
    let (params, from_report) = load_model(&args.model)?;
    let model = match (args.flap_sign, from_report) {
        (Some(f), _) => f.options(),
        (None, Some(m)) => m,
        (None, None) => ModelOptions::default(),
    };
    let mut log = load_log_path(&args.data, None)?;
    if let Some(cutoff) = args.cutoff {
        log = butterworth_filter(&log, cutoff, DEFAULT_ORDER)?;
    }
    let log = select_segment(&log, args.split, args.segment.into())?;
    let cfg = FitnessConfig {
        model,
        scored_states: None,
        initial_state: args.x0.into(),
    };
    let written = export_timeseries(&params, &log, &cfg, &args.out)?;
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Identify(a) => identify(a),
        Command::Compare(a) => compare(a),
        Command::Export(a) => export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heli-ident: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
