//! Bounded global and local search over the derivative vector.
//!
//! All three searches minimise an [`Objective`] inside a [`SearchSpace`] and
//! report an [`OptimizerResult`]. Randomness always comes from a seeded
//! ChaCha8 stream, and candidate batches are scored by index, so results do
//! not depend on how many threads evaluate them.

mod ga;
mod iwo;
mod nelder_mead;
mod pem;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParameterSet, N_PARAMS};

pub use ga::{run_ga, Ga, GaConfig};
pub use iwo::{
    competitive_exclusion, disperse, reproduce, run_iwo, sigma_schedule, ExclusionRule, Iwo, IwoConfig, Plant,
};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use pem::{run_pem, PemConfig, PredictionErrorProblem};

/// A cost to minimise. Implementations must be pure.
pub trait Objective: Sync {
    fn cost(&self, x: &[f64]) -> f64;

    /// Flat cost assigned to infeasible candidates, if the objective has one.
    /// Initialisation redraws such candidates.
    fn penalty(&self) -> Option<f64> {
        None
    }
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn cost(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Scores a batch in parallel; `out[i]` belongs to `points[i]`.
/// NaN costs are mapped to `+inf` so that ranking stays total.
pub(crate) fn evaluate_batch<O: Objective + ?Sized>(objective: &O, points: &[Vec<f64>]) -> Vec<f64> {
    points
        .par_iter()
        .map(|x| {
            let c = objective.cost(x);
            if c.is_nan() {
                f64::INFINITY
            } else {
                c
            }
        })
        .collect()
}

/// Draws `count` uniform starting points, redrawing those that score at the
/// objective's penalty for up to `attempts` rounds in total. Slots still
/// empty afterwards take the cheapest rejects. Returns positions, costs and
/// the number of evaluations spent.
pub(crate) fn initial_draws<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    count: usize,
    attempts: usize,
    rng: &mut R,
) -> (Vec<Vec<f64>>, Vec<f64>, u64) {
    let penalty = objective.penalty();
    let mut accepted: Vec<(Vec<f64>, f64)> = Vec::with_capacity(count);
    let mut rejected: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut evaluations = 0u64;
    for _ in 0..attempts.max(1) {
        let missing = count - accepted.len();
        if missing == 0 {
            break;
        }
        let batch: Vec<Vec<f64>> = (0..missing).map(|_| space.sample_uniform(rng)).collect();
        let costs = evaluate_batch(objective, &batch);
        evaluations += missing as u64;
        for (x, c) in batch.into_iter().zip(costs) {
            if penalty.is_some_and(|p| c >= p) {
                rejected.push((x, c));
            } else {
                accepted.push((x, c));
            }
        }
    }
    if accepted.len() < count {
        rejected.sort_by(|a, b| a.1.total_cmp(&b.1));
        let missing = count - accepted.len();
        accepted.extend(rejected.into_iter().take(missing));
    }
    let (positions, costs) = accepted.into_iter().unzip();
    (positions, costs, evaluations)
}

/// Seeded generator for one run. Distinct `stream`s of the same seed are
/// independent ChaCha8 streams.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Box bounds; frozen coordinates are pinned to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    frozen: BTreeSet<usize>,
}

/// How the helicopter search box is derived from a reference parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpaceOptions {
    /// Half-width as a multiple of the reference magnitude.
    pub scale: f64,
    pub min_half_width: f64,
    /// Search reference zeros instead of pinning them.
    pub free_zeros: bool,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        Self {
            scale: 3.0,
            min_half_width: 1.0,
            free_zeros: false,
        }
    }
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, frozen: BTreeSet<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Config(format!(
                "bounds must be non-empty and equal length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("dimension {d}: invalid bounds [{lo}, {hi}]")));
            }
        }
        if let Some(d) = frozen.iter().find(|d| **d >= lower.len()) {
            return Err(Error::Config(format!("frozen index {d} out of range")));
        }
        let (mut lower, mut upper) = (lower, upper);
        for &d in &frozen {
            lower[d] = 0.0;
            upper[d] = 0.0;
        }
        Ok(Self { lower, upper, frozen })
    }

    /// `[-half_width, half_width]` in every dimension.
    pub fn symmetric(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim], BTreeSet::new())
    }

    /// Zero-centred box of half-width `max(scale * |ref|, min_half_width)`
    /// per derivative; reference zeros are frozen unless `free_zeros`.
    pub fn helicopter(reference: &ParameterSet, opts: &SpaceOptions) -> Result<Self> {
        if !(opts.scale > 0.0 && opts.min_half_width > 0.0) {
            return Err(Error::Config(
                "space scale and minimum half-width must be positive".into(),
            ));
        }
        let mut lower = Vec::with_capacity(N_PARAMS);
        let mut upper = Vec::with_capacity(N_PARAMS);
        let mut frozen = BTreeSet::new();
        for (i, v) in reference.as_slice().iter().enumerate() {
            let half = (opts.scale * v.abs()).max(opts.min_half_width);
            lower.push(-half);
            upper.push(half);
            if *v == 0.0 && !opts.free_zeros {
                frozen.insert(i);
            }
        }
        Self::new(lower, upper, frozen)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn frozen(&self) -> &BTreeSet<usize> {
        &self.frozen
    }

    pub fn is_frozen(&self, d: usize) -> bool {
        self.frozen.contains(&d)
    }

    pub fn range(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(d, v)| *v >= self.lower[d] && *v <= self.upper[d])
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[d], self.upper[d]);
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|d| {
                if self.range(d) == 0.0 {
                    self.lower[d]
                } else {
                    rng.random_range(self.lower[d]..=self.upper[d])
                }
            })
            .collect()
    }
}

/// Outcome of one optimisation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    /// Best-so-far cost, one entry per iteration plus the initial state.
    pub cost_trace: Vec<f64>,
    pub evaluations: u64,
    pub rng_seed: u64,
}

impl OptimizerResult {
    pub fn best_params(&self) -> Result<ParameterSet> {
        ParameterSet::from_slice(&self.best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helicopter_space_freezes_reference_zeros() {
        let space = SearchSpace::helicopter(&ParameterSet::reference(), &SpaceOptions::default()).unwrap();
        assert_eq!(space.dim(), N_PARAMS);
        let frozen: Vec<_> = space.frozen().iter().copied().collect();
        use crate::model::Param;
        assert_eq!(
            frozen,
            vec![Param::Lw, Param::Mw, Param::Nw, Param::Yped, Param::Mcol]
                .into_iter()
                .map(Param::index)
                .collect::<Vec<_>>()
        );
        // X_u = -0.32066 -> minimum half-width; L_b = 133.6111 -> 3x
        assert_eq!(space.upper()[Param::Xu.index()], 1.0);
        assert!((space.upper()[Param::Lb.index()] - 400.8333).abs() < 1e-9);
        assert_eq!(space.lower()[Param::Lw.index()], 0.0);

        let free = SearchSpace::helicopter(
            &ParameterSet::reference(),
            &SpaceOptions {
                free_zeros: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(free.frozen().is_empty());
        assert_eq!(free.upper()[Param::Lw.index()], 1.0);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(SearchSpace::new(vec![1.0], vec![0.0], BTreeSet::new()).is_err());
        assert!(SearchSpace::new(vec![0.0], vec![1.0, 2.0], BTreeSet::new()).is_err());
        assert!(SearchSpace::new(vec![0.0], vec![1.0], [3].into_iter().collect()).is_err());
        let s = SearchSpace::new(vec![-1.0, -1.0], vec![1.0, 1.0], [1].into_iter().collect()).unwrap();
        assert_eq!(s.upper(), &[1.0, 0.0]);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = seeded_rng(42, 0).random();
        let b: u64 = seeded_rng(42, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, seeded_rng(42, 0).random::<u64>());
    }
}
