//! Correlation-based scoring of a candidate model against measured data.
//!
//! Each scored state contributes `(1 - rho)^2`, where `rho` is the Pearson
//! correlation between the measured and simulated series. The cost therefore
//! rewards matching the *shape* of each response and ignores its scale.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_matrices, propagate, ControlInput, ModelOptions, ParameterSet, Rk4Propagator, State, StateVector, Trajectory,
};
use crate::optimizers::Objective;
use crate::signals::TimeSeriesLog;

/// Series whose standard deviation falls below this have no defined correlation.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Largest possible per-state term, reached at `rho = -1`.
pub const MAX_TERM: f64 = 4.0;

/// Pearson correlation of two equal-length series.
///
/// Returns `Ok(None)` when either series is (numerically) constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {n}")));
    }
    let nf = n as f64;
    let mean_a = a.iter().sum::<f64>() / nf;
    let mean_b = b.iter().sum::<f64>() / nf;
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let da = x - mean_a;
        let db = y - mean_b;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa / nf).sqrt() < SIGMA_FLOOR || (sbb / nf).sqrt() < SIGMA_FLOOR {
        return Ok(None);
    }
    Ok(Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)))
}

/// Fitness maximised by the search; the negated cost.
pub fn fitness_from_cost(cost: f64) -> f64 {
    -cost
}

/// Where simulations of a candidate start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// First sample of each measured channel, zero elsewhere.
    #[default]
    Measured,
    /// The hover trim point (all perturbations zero). Suits records that
    /// begin at trim, where the first noisy sample would otherwise seed the
    /// unstable modes.
    Trim,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitnessConfig {
    pub model: ModelOptions,
    /// States to score; all measured states when `None`.
    pub scored_states: Option<Vec<State>>,
    pub initial_state: InitialState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub cost: f64,
    /// `None` marks an undefined correlation (flat series).
    pub per_state_rho: IndexMap<State, Option<f64>>,
    pub divergent: bool,
}

/// Data pre-extracted for repeated evaluation of candidate parameters.
#[derive(Clone, Debug)]
pub struct FitnessProblem {
    model: ModelOptions,
    dt: f64,
    x0: StateVector,
    inputs: Vec<ControlInput>,
    scored: Vec<(State, Vec<f64>)>,
}

impl FitnessProblem {
    pub fn new(data: &TimeSeriesLog, cfg: &FitnessConfig) -> Result<Self> {
        let inputs = data.controls()?;
        let states = match &cfg.scored_states {
            Some(s) => s.clone(),
            None => data.measured_states(),
        };
        if states.is_empty() {
            return Err(Error::InvalidInput("no measured state channel to score".into()));
        }
        let scored = states
            .iter()
            .map(|s| {
                if !data.is_measured(*s) {
                    return Err(Error::InvalidInput(format!("state `{s}` is not measured")));
                }
                Ok((*s, data.state(*s).expect("measured implies present").to_vec()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: cfg.model,
            dt: data.dt(),
            x0: match cfg.initial_state {
                InitialState::Measured => data.initial_state(),
                InitialState::Trim => StateVector::zeros(),
            },
            inputs,
            scored,
        })
    }

    pub fn scored_states(&self) -> impl Iterator<Item = State> + '_ {
        self.scored.iter().map(|(s, _)| *s)
    }

    /// Cost assigned to divergent candidates.
    pub fn ceiling(&self) -> f64 {
        MAX_TERM * self.scored.len() as f64
    }

    pub fn simulate(&self, params: &ParameterSet) -> Result<Trajectory> {
        let mats = build_matrices(params, &self.model)?;
        let prop = Rk4Propagator::new(&mats, self.dt);
        Ok(propagate(&prop, &self.x0, &self.inputs, self.dt))
    }

    pub fn evaluate(&self, params: &ParameterSet) -> Result<FitnessReport> {
        let traj = self.simulate(params)?;
        Ok(self.score(&traj))
    }

    fn score(&self, traj: &Trajectory) -> FitnessReport {
        if traj.divergent {
            return FitnessReport {
                cost: self.ceiling(),
                per_state_rho: self.scored.iter().map(|(s, _)| (*s, None)).collect(),
                divergent: true,
            };
        }
        let mut cost = 0.0;
        let mut per_state_rho = IndexMap::with_capacity(self.scored.len());
        for (state, measured) in &self.scored {
            let simulated = traj.channel(*state);
            let rho = pearson(measured, &simulated).expect("lengths agree by construction");
            cost += (1.0 - rho.unwrap_or(0.0)).powi(2);
            per_state_rho.insert(*state, rho);
        }
        FitnessReport {
            cost,
            per_state_rho,
            divergent: false,
        }
    }
}

impl Objective for FitnessProblem {
    fn cost(&self, x: &[f64]) -> f64 {
        match ParameterSet::from_slice(x).and_then(|p| self.evaluate(&p)) {
            Ok(report) => report.cost,
            Err(_) => self.ceiling(),
        }
    }

    fn penalty(&self) -> Option<f64> {
        Some(self.ceiling())
    }
}

/// One-shot evaluation of `params` against `data`.
pub fn evaluate(params: &ParameterSet, data: &TimeSeriesLog, cfg: &FitnessConfig) -> Result<FitnessReport> {
    FitnessProblem::new(data, cfg)?.evaluate(params)
}
