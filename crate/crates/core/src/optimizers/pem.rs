//! Local prediction-error baseline.
//!
//! A stand-in for classical prediction error minimisation: Nelder-Mead on the
//! normalised mean-squared one-step-ahead prediction error, started from the
//! centre of the search box.

use serde::{Deserialize, Serialize};

use super::{nelder_mead, NelderMeadOptions, Objective, OptimizerResult, SearchSpace};
use crate::error::{Error, Result};
use crate::model::{build_matrices, ControlInput, ModelOptions, ParameterSet, Rk4Propagator, State, StateVector};
use crate::signals::TimeSeriesLog;

/// Cost returned for candidates whose predictions are not finite.
const INVALID_COST: f64 = 1e300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PemConfig {
    pub max_evaluations: u64,
    /// Simplex restarts from the best point after the first descent.
    pub restarts: usize,
    /// Initial simplex edge as a fraction of each dimension's range.
    pub initial_step: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    /// Unused by the deterministic search; echoed into the result.
    pub rng_seed: u64,
}

impl Default for PemConfig {
    fn default() -> Self {
        Self {
            max_evaluations: 12_000,
            restarts: 1,
            initial_step: 0.1,
            f_tol: 1e-12,
            x_tol: 1e-8,
            rng_seed: 0,
        }
    }
}

/// Normalised one-step prediction error of the discretised model.
///
/// Each step starts from the measured state (unmeasured components carry the
/// previous prediction) and predicts the next sample. Errors are divided by
/// the channel's standard deviation so every measured state weighs equally.
#[derive(Clone, Debug)]
pub struct PredictionErrorProblem {
    model: ModelOptions,
    dt: f64,
    inputs: Vec<ControlInput>,
    measured: Vec<StateVector>,
    channels: Vec<(usize, f64)>,
}

impl PredictionErrorProblem {
    pub fn new(data: &TimeSeriesLog, model: ModelOptions) -> Result<Self> {
        let inputs = data.controls()?;
        let states = data.measured_states();
        if states.is_empty() {
            return Err(Error::InvalidInput("no measured state channel".into()));
        }
        let mut measured = vec![StateVector::zeros(); data.len()];
        let mut channels = Vec::with_capacity(states.len());
        for s in states {
            let series = data.state(s).expect("measured implies present");
            for (x, v) in measured.iter_mut().zip(series) {
                x[s.index()] = *v;
            }
            let n = series.len() as f64;
            let mean = series.iter().sum::<f64>() / n;
            let sd = (series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            channels.push((s.index(), if sd > 1e-12 { sd } else { 1.0 }));
        }
        Ok(Self {
            model,
            dt: data.dt(),
            inputs,
            measured,
            channels,
        })
    }

    pub fn prediction_error(&self, params: &ParameterSet) -> Result<f64> {
        let mats = build_matrices(params, &self.model)?;
        let prop = Rk4Propagator::new(&mats, self.dt);
        let mut x = self.measured[0];
        let mut total = 0.0;
        for k in 0..self.measured.len() - 1 {
            let pred = prop.step(&x, &self.inputs[k]);
            let next = &self.measured[k + 1];
            for &(i, scale) in &self.channels {
                total += ((pred[i] - next[i]) / scale).powi(2);
            }
            x = pred;
            for &(i, _) in &self.channels {
                x[i] = next[i];
            }
        }
        let mean = total / ((self.measured.len() - 1) * self.channels.len()) as f64;
        Ok(if mean.is_finite() { mean } else { INVALID_COST })
    }

    pub fn measured_states(&self) -> Vec<State> {
        self.channels.iter().map(|(i, _)| State::ALL[*i]).collect()
    }
}

impl Objective for PredictionErrorProblem {
    fn cost(&self, x: &[f64]) -> f64 {
        ParameterSet::from_slice(x)
            .and_then(|p| self.prediction_error(&p))
            .unwrap_or(INVALID_COST)
    }
}

/// Nelder-Mead from the box centre over the non-frozen coordinates; every
/// evaluated point is clamped into the box first.
pub fn run_pem<O: Objective + ?Sized>(objective: &O, space: &SearchSpace, cfg: &PemConfig) -> Result<OptimizerResult> {
    if !(cfg.initial_step > 0.0) {
        return Err(Error::Config("pem: initial_step must be positive".into()));
    }
    let free: Vec<usize> = (0..space.dim()).filter(|d| space.range(*d) > 0.0).collect();
    let embed = |y: &[f64]| {
        let mut x = space.midpoint();
        for (d, v) in free.iter().zip(y) {
            x[*d] = *v;
        }
        space.clamp(&mut x);
        x
    };
    let step: Vec<f64> = free.iter().map(|d| cfg.initial_step * space.range(*d)).collect();
    let mut start: Vec<f64> = free.iter().map(|d| space.midpoint()[*d]).collect();

    let mut trace = Vec::new();
    let mut evaluations = 0u64;
    let mut best = (embed(&start), f64::INFINITY);
    for _ in 0..=cfg.restarts {
        let remaining = cfg.max_evaluations.saturating_sub(evaluations);
        if remaining == 0 {
            break;
        }
        let opts = NelderMeadOptions {
            max_evaluations: remaining,
            f_tol: cfg.f_tol,
            x_tol: cfg.x_tol,
        };
        let res = nelder_mead(|y| objective.cost(&embed(y)), &start, &step, &opts);
        evaluations += res.evaluations;
        for v in res.trace {
            let prev = trace.last().copied().unwrap_or(f64::INFINITY);
            trace.push(v.min(prev));
        }
        if res.f < best.1 {
            best = (embed(&res.x), res.f);
        }
        start = res.x;
    }

    Ok(OptimizerResult {
        best: best.0,
        best_cost: *trace.last().unwrap_or(&best.1),
        cost_trace: trace,
        evaluations,
        rng_seed: cfg.rng_seed,
    })
}
