//! Multi-trial identification experiments and their reports.
//!
//! An experiment loads (or synthesises) a log, low-pass filters it, splits it
//! into training and validation parts, runs several independently seeded
//! optimisations on the training part and scores the best model on the
//! validation part. Reports are plain data with a stable serialisation, so
//! two runs with the same configuration produce byte-identical JSON.

mod compare;
mod export;
mod stats;
mod synth;

use std::path::PathBuf;
use std::time::Instant;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{FitnessConfig, FitnessProblem, InitialState};
use crate::model::{ModelOptions, Param, ParameterSet, State};
use crate::optimizers::{
    run_pem, Ga, GaConfig, Iwo, IwoConfig, OptimizerResult, PemConfig, PredictionErrorProblem, SearchSpace,
    SpaceOptions,
};
use crate::signals::{butterworth_filter, load_log_path, split_train_validate, TimeSeriesLog};

pub use compare::{compare_methods, ComparisonTable};
pub use export::{export_timeseries, select_segment, ExportSegment};
pub use stats::{t_interval, Interval};
pub use synth::{benchmark_excitation, synthesize, SyntheticSpec, MULTISTEP_SECONDS};

/// Confidence level of the reported parameter intervals.
pub const CI_LEVEL: f64 = 0.95;

/// Optimiser and its settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Method {
    Iwo(IwoConfig),
    Ga(GaConfig),
    Pem(PemConfig),
}

impl Method {
    /// Default configuration of the named method (`iwo`, `ga` or `pem`).
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "iwo" => Some(Self::Iwo(IwoConfig::default())),
            "ga" => Some(Self::Ga(GaConfig::default())),
            "pem" => Some(Self::Pem(PemConfig::default())),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Iwo(_) => "iwo",
            Self::Ga(_) => "ga",
            Self::Pem(_) => "pem",
        }
    }

    /// Sets the iteration (generation) budget; the local search has none.
    pub fn set_iterations(&mut self, iterations: usize) {
        match self {
            Self::Iwo(c) => c.iter_max = iterations,
            Self::Ga(c) => c.generations = iterations,
            Self::Pem(_) => {}
        }
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut m = self.clone();
        match &mut m {
            Self::Iwo(c) => c.rng_seed = seed,
            Self::Ga(c) => c.rng_seed = seed,
            Self::Pem(c) => c.rng_seed = seed,
        }
        m
    }
}

impl Default for Method {
    fn default() -> Self {
        Self::Iwo(IwoConfig::default())
    }
}

/// How trial seeds derive from the master seed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Trial `i` draws from stream `i` of the master seed.
    #[default]
    Derived,
    /// Every trial repeats stream 0.
    Identical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)] // built once per experiment
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub cutoff_hz: f64,
    pub order: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            cutoff_hz: crate::signals::DEFAULT_CUTOFF_HZ,
            order: crate::signals::DEFAULT_ORDER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Fraction of samples used for training; the rest validates.
    pub split: f64,
    pub method: Method,
    pub trials: usize,
    pub seed: u64,
    pub seed_policy: SeedPolicy,
    pub space: SpaceOptions,
    pub model: ModelOptions,
    /// Start of the training simulations. Validation always starts from its
    /// first measured sample.
    pub train_initial_state: InitialState,
    /// Zero-phase low-pass applied to the whole log before splitting.
    pub filter: Option<FilterSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic(SyntheticSpec::default()),
            split: 0.5,
            method: Method::default(),
            trials: 10,
            seed: 0,
            seed_policy: SeedPolicy::Derived,
            space: SpaceOptions::default(),
            model: ModelOptions::default(),
            train_initial_state: InitialState::Trim,
            filter: Some(FilterSpec::default()),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split must lie in (0, 1), got {}", self.split)));
        }
        match &self.method {
            Method::Iwo(c) => c.validate(),
            Method::Ga(c) => c.validate(),
            Method::Pem(_) => Ok(()),
        }
    }

    fn training_fitness(&self) -> FitnessConfig {
        FitnessConfig {
            model: self.model,
            scored_states: None,
            initial_state: self.train_initial_state,
        }
    }

    fn validation_fitness(&self) -> FitnessConfig {
        FitnessConfig {
            model: self.model,
            scored_states: None,
            initial_state: InitialState::Measured,
        }
    }

    fn trial_stream(&self, trial: usize) -> u64 {
        match self.seed_policy {
            SeedPolicy::Derived => trial as u64,
            SeedPolicy::Identical => 0,
        }
    }
}

/// Training and validation parts after filtering.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedData {
    pub train: TimeSeriesLog,
    pub validate: TimeSeriesLog,
}

/// Loads the configured source, filters it and splits it.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let log = match &cfg.data {
        DataSource::File(path) => load_log_path(path, None)?,
        DataSource::Synthetic(spec) => synthesize(spec)?,
    };
    prepare_log(cfg, &log)
}

pub fn prepare_log(cfg: &ExperimentConfig, log: &TimeSeriesLog) -> Result<PreparedData> {
    let filtered = match cfg.filter {
        Some(f) => butterworth_filter(log, f.cutoff_hz, f.order)?,
        None => log.clone(),
    };
    let (train, validate) = split_train_validate(&filtered, cfg.split)?;
    Ok(PreparedData { train, validate })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub name: Param,
    /// Value in the best trial's solution.
    pub best: f64,
    pub mean: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    /// Best value of the optimiser's own objective.
    pub best_cost: f64,
    /// Correlation cost of that solution on the training part.
    pub training_cost: f64,
    pub evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: ExperimentConfig,
    pub method: String,
    pub best_trial: usize,
    pub best_cost: f64,
    pub training_cost: f64,
    pub best_params: ParameterSet,
    /// Canonical parameter order.
    pub parameters: Vec<ParameterEstimate>,
    /// Correlation of every measured state on the validation part; `None`
    /// when undefined or the model diverges.
    pub validation_rho: IndexMap<State, Option<f64>>,
    pub validation_cost: f64,
    pub validation_divergent: bool,
    pub trials: Vec<TrialSummary>,
    /// Seconds per trial. Kept out of the serialised report so that reruns
    /// compare equal byte for byte.
    #[serde(skip)]
    pub wall_clock_s: Vec<f64>,
    /// Best cost trace of the best trial.
    pub cost_trace: Vec<f64>,
}

impl TrialReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Validation correlation of `state`, if measured and defined.
    pub fn rho(&self, state: State) -> Option<f64> {
        self.validation_rho.get(&state).copied().flatten()
    }
}

fn run_trial(
    method: &Method,
    data: &PreparedData,
    space: &SearchSpace,
    cfg: &ExperimentConfig,
    stream: u64,
) -> Result<OptimizerResult> {
    match method {
        Method::Iwo(c) => {
            let problem = FitnessProblem::new(&data.train, &cfg.training_fitness())?;
            let mut iwo = Iwo::with_stream(&problem, space, c, stream)?;
            while !iwo.is_done() {
                iwo.step();
            }
            Ok(iwo.finish())
        }
        Method::Ga(c) => {
            let problem = FitnessProblem::new(&data.train, &cfg.training_fitness())?;
            let mut ga = Ga::with_stream(&problem, space, c, stream)?;
            while !ga.is_done() {
                ga.step();
            }
            Ok(ga.finish())
        }
        Method::Pem(c) => {
            let problem = PredictionErrorProblem::new(&data.train, cfg.model)?;
            run_pem(&problem, space, c)
        }
    }
}

/// Runs the configured experiment end to end.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialReport> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    run_prepared(cfg, &data)
}

/// As [`run_experiment`], on data that is already filtered and split.
pub fn run_prepared(cfg: &ExperimentConfig, data: &PreparedData) -> Result<TrialReport> {
    cfg.validate()?;
    let space = SearchSpace::helicopter(&ParameterSet::reference(), &cfg.space)?;
    let method = cfg.method.with_seed(cfg.seed);
    let train_problem = FitnessProblem::new(&data.train, &cfg.training_fitness())?;

    // trials are independent; collecting by index keeps the order fixed
    let outcomes: Vec<(OptimizerResult, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let started = Instant::now();
            let res = run_trial(&method, data, &space, cfg, cfg.trial_stream(trial))?;
            Ok((res, started.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let mut trials = Vec::with_capacity(outcomes.len());
    let mut solutions = Vec::with_capacity(outcomes.len());
    for (trial, (res, _)) in outcomes.iter().enumerate() {
        let params = res.best_params()?;
        trials.push(TrialSummary {
            trial,
            seed: cfg.seed,
            stream: cfg.trial_stream(trial),
            best_cost: res.best_cost,
            training_cost: train_problem.evaluate(&params)?.cost,
            evaluations: res.evaluations,
        });
        solutions.push(params);
    }
    let best_trial = trials
        .iter()
        .min_by(|a, b| a.best_cost.total_cmp(&b.best_cost).then(a.trial.cmp(&b.trial)))
        .expect("trials >= 1")
        .trial;
    let best_params = solutions[best_trial];

    let parameters = Param::ALL
        .iter()
        .map(|p| {
            let samples: Vec<f64> = solutions.iter().map(|s| s[*p]).collect();
            let iv = t_interval(&samples, CI_LEVEL);
            ParameterEstimate {
                name: *p,
                best: best_params[*p],
                mean: iv.mean,
                ci_lower: iv.lower,
                ci_upper: iv.upper,
            }
        })
        .collect();

    let validation = FitnessProblem::new(&data.validate, &cfg.validation_fitness())?.evaluate(&best_params)?;

    Ok(TrialReport {
        config: cfg.clone(),
        method: cfg.method.name().to_string(),
        best_trial,
        best_cost: trials[best_trial].best_cost,
        training_cost: trials[best_trial].training_cost,
        best_params,
        parameters,
        validation_rho: validation.per_state_rho,
        validation_cost: validation.cost,
        validation_divergent: validation.divergent,
        wall_clock_s: outcomes.iter().map(|(_, t)| *t).collect(),
        cost_trace: outcomes[best_trial].0.cost_trace.clone(),
        trials,
    })
}
