//! Invasive weed optimisation.
//!
//! A colony of plants (candidate solutions) reproduces every iteration: each
//! plant scatters a number of seeds that grows linearly with its fitness,
//! seeds land around the parent with a Gaussian spread that shrinks over the
//! run, and once the colony exceeds its ceiling the weakest are culled.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{evaluate_batch, initial_draws, seeded_rng, Objective, OptimizerResult, SearchSpace};
use crate::error::{Error, Result};
use crate::fitness::fitness_from_cost;

/// Culling policy once the colony exceeds `pop_max`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionRule {
    /// Keep the `pop_max` best of parents and offspring together.
    #[default]
    Truncation,
    /// As `Truncation`, but a culled parent survives (displacing the worst
    /// unprotected survivor) when one of its offspring ranks in the top
    /// quartile of the survivors.
    ParentRescue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IwoConfig {
    pub iter_max: usize,
    pub pop_initial: usize,
    pub pop_max: usize,
    pub seeds_min: usize,
    pub seeds_max: usize,
    /// Initial dispersal spread as a fraction of each dimension's range.
    pub sigma_initial: f64,
    /// Final dispersal spread as a fraction of each dimension's range.
    pub sigma_final: f64,
    /// Nonlinear modulation index of the spread schedule.
    pub modulation_index: f64,
    pub rng_seed: u64,
    pub exclusion: ExclusionRule,
    /// Rounds of redrawing for initial plants that land on the objective's
    /// penalty; 1 disables redrawing.
    pub init_attempts: usize,
}

impl Default for IwoConfig {
    fn default() -> Self {
        Self {
            iter_max: 200,
            pop_initial: 10,
            pop_max: 25,
            seeds_min: 0,
            seeds_max: 5,
            sigma_initial: 0.1,
            sigma_final: 0.001,
            modulation_index: 3.0,
            rng_seed: 0,
            exclusion: ExclusionRule::Truncation,
            init_attempts: 200,
        }
    }
}

impl IwoConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("iwo: {m}")));
        if self.pop_initial == 0 {
            return fail("pop_initial must be at least 1");
        }
        if self.pop_initial > self.pop_max {
            return fail("pop_initial must not exceed pop_max");
        }
        if self.seeds_min > self.seeds_max {
            return fail("seeds_min must not exceed seeds_max");
        }
        if !(self.sigma_final >= 0.0 && self.sigma_final <= self.sigma_initial && self.sigma_initial.is_finite()) {
            return fail("need 0 <= sigma_final <= sigma_initial");
        }
        if !(self.modulation_index > 0.0 && self.modulation_index.is_finite()) {
            return fail("modulation index must be positive");
        }
        Ok(())
    }
}

/// Dispersal spread (fraction of range) at iteration `iter`:
/// `((iter_max - iter) / iter_max)^n * (sigma_initial - sigma_final) + sigma_final`.
///
/// The ratio is normalised before exponentiation so that the spread starts at
/// exactly `sigma_initial` for any modulation index.
pub fn sigma_schedule(cfg: &IwoConfig, iter: usize) -> f64 {
    if cfg.iter_max == 0 {
        return cfg.sigma_initial;
    }
    let iter = iter.min(cfg.iter_max);
    let remaining = (cfg.iter_max - iter) as f64 / cfg.iter_max as f64;
    remaining.powf(cfg.modulation_index) * (cfg.sigma_initial - cfg.sigma_final) + cfg.sigma_final
}

/// Seeds per plant, interpolated linearly between the worst fitness
/// (`seeds_min`) and the best (`seeds_max`). A colony with no fitness spread
/// gets `seeds_min` everywhere.
pub fn reproduce(fitnesses: &[f64], cfg: &IwoConfig) -> Vec<usize> {
    let best = fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    let span = best - worst;
    if !(span > 0.0) || !span.is_finite() {
        return vec![cfg.seeds_min; fitnesses.len()];
    }
    let extra = (cfg.seeds_max - cfg.seeds_min) as f64;
    fitnesses
        .iter()
        .map(|f| cfg.seeds_min + ((f - worst) / span * extra).round() as usize)
        .collect()
}

/// Gaussian offspring of `parent`, clamped into `space`.
pub fn disperse<R: Rng + ?Sized>(parent: &[f64], sigma_fraction: f64, space: &SearchSpace, rng: &mut R) -> Vec<f64> {
    let mut child: Vec<f64> = parent
        .iter()
        .enumerate()
        .map(|(d, x)| {
            if space.is_frozen(d) {
                return 0.0;
            }
            let z: f64 = rng.sample(StandardNormal);
            x + sigma_fraction * space.range(d) * z
        })
        .collect();
    space.clamp(&mut child);
    child
}

/// A scored member of the colony.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub position: Vec<f64>,
    pub cost: f64,
    /// Iteration in which the plant was created (0 for the initial colony).
    pub born: usize,
    /// Insertion counter, unique within a run.
    pub id: u64,
    pub parent: Option<u64>,
}

fn rank(a: &Plant, b: &Plant) -> Ordering {
    a.cost
        .total_cmp(&b.cost)
        .then(a.born.cmp(&b.born))
        .then(a.id.cmp(&b.id))
}

/// Culls the colony to `pop_max` plants by cost; ties go to the older plant,
/// then to the earlier insertion. Colonies within the ceiling are returned
/// unchanged.
pub fn competitive_exclusion(mut plants: Vec<Plant>, pop_max: usize, rule: ExclusionRule) -> Vec<Plant> {
    if plants.len() <= pop_max {
        return plants;
    }
    plants.sort_by(rank);
    let dropped = plants.split_off(pop_max);
    if rule == ExclusionRule::Truncation || pop_max == 0 {
        return plants;
    }

    let quartile = pop_max.div_ceil(4);
    let promising: BTreeSet<u64> = plants[..quartile].iter().filter_map(|p| p.parent).collect();
    let rescued = dropped.into_iter().filter(|p| promising.contains(&p.id));
    for (slot, parent) in (quartile..plants.len()).zip(rescued) {
        // the worst unprotected survivor makes room
        plants.pop();
        plants.insert(slot, parent);
    }
    plants.sort_by(rank);
    plants
}

/// Stepwise IWO run; [`run_iwo`] drives it to completion.
pub struct Iwo<'a, O: Objective + ?Sized> {
    objective: &'a O,
    space: &'a SearchSpace,
    cfg: IwoConfig,
    rng: ChaCha8Rng,
    colony: Vec<Plant>,
    iter: usize,
    next_id: u64,
    evaluations: u64,
    best: Plant,
    trace: Vec<f64>,
}

impl<'a, O: Objective + ?Sized> Iwo<'a, O> {
    /// Scatters and scores the initial colony.
    pub fn new(objective: &'a O, space: &'a SearchSpace, cfg: &IwoConfig) -> Result<Self> {
        Self::with_stream(objective, space, cfg, 0)
    }

    pub(crate) fn with_stream(objective: &'a O, space: &'a SearchSpace, cfg: &IwoConfig, stream: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = seeded_rng(cfg.rng_seed, stream);
        let (positions, costs, drawn) = initial_draws(objective, space, cfg.pop_initial, cfg.init_attempts, &mut rng);
        Self::start(objective, space, cfg, rng, positions, costs, drawn)
    }

    /// Starts from caller-supplied positions (clamped into the space).
    pub fn with_colony(
        objective: &'a O,
        space: &'a SearchSpace,
        cfg: &IwoConfig,
        mut positions: Vec<Vec<f64>>,
    ) -> Result<Self> {
        cfg.validate()?;
        if positions.is_empty() || positions.len() > cfg.pop_max || positions.iter().any(|p| p.len() != space.dim()) {
            return Err(Error::Config(format!(
                "iwo: initial colony must hold 1..={} vectors of length {}",
                cfg.pop_max,
                space.dim()
            )));
        }
        for p in &mut positions {
            space.clamp(p);
        }
        let costs = evaluate_batch(objective, &positions);
        let drawn = positions.len() as u64;
        Self::start(
            objective,
            space,
            cfg,
            seeded_rng(cfg.rng_seed, 0),
            positions,
            costs,
            drawn,
        )
    }

    fn start(
        objective: &'a O,
        space: &'a SearchSpace,
        cfg: &IwoConfig,
        rng: ChaCha8Rng,
        positions: Vec<Vec<f64>>,
        costs: Vec<f64>,
        evaluations: u64,
    ) -> Result<Self> {
        let colony: Vec<Plant> = positions
            .into_iter()
            .zip(costs)
            .enumerate()
            .map(|(i, (position, cost))| Plant {
                position,
                cost,
                born: 0,
                id: i as u64,
                parent: None,
            })
            .collect();
        let best = colony
            .iter()
            .min_by(|a, b| rank(a, b))
            .expect("pop_initial >= 1")
            .clone();
        Ok(Self {
            objective,
            space,
            cfg: cfg.clone(),
            rng,
            next_id: colony.len() as u64,
            evaluations,
            trace: vec![best.cost],
            colony,
            iter: 0,
            best,
        })
    }

    pub fn colony(&self) -> &[Plant] {
        &self.colony
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    pub fn is_done(&self) -> bool {
        self.iter >= self.cfg.iter_max
    }

    /// One reproduce / disperse / exclude cycle.
    pub fn step(&mut self) {
        self.iter += 1;
        let sigma = sigma_schedule(&self.cfg, self.iter);
        let fitnesses: Vec<f64> = self.colony.iter().map(|p| fitness_from_cost(p.cost)).collect();
        let seeds = reproduce(&fitnesses, &self.cfg);

        let mut positions = Vec::new();
        let mut parents = Vec::new();
        for (plant, &n) in self.colony.iter().zip(&seeds) {
            for _ in 0..n {
                positions.push(disperse(&plant.position, sigma, self.space, &mut self.rng));
                parents.push(plant.id);
            }
        }
        let costs = evaluate_batch(self.objective, &positions);
        self.evaluations += positions.len() as u64;

        let mut merged = std::mem::take(&mut self.colony);
        for ((position, cost), parent) in positions.into_iter().zip(costs).zip(parents) {
            merged.push(Plant {
                position,
                cost,
                born: self.iter,
                id: self.next_id,
                parent: Some(parent),
            });
            self.next_id += 1;
        }
        self.colony = competitive_exclusion(merged, self.cfg.pop_max, self.cfg.exclusion);

        if let Some(top) = self.colony.iter().min_by(|a, b| rank(a, b)) {
            if top.cost < self.best.cost {
                self.best = top.clone();
            }
        }
        self.trace.push(self.best.cost);
    }

    pub fn finish(self) -> OptimizerResult {
        OptimizerResult {
            best: self.best.position,
            best_cost: self.best.cost,
            cost_trace: self.trace,
            evaluations: self.evaluations,
            rng_seed: self.cfg.rng_seed,
        }
    }
}

/// Runs IWO for `cfg.iter_max` iterations and returns the best plant ever seen.
pub fn run_iwo<O: Objective + ?Sized>(objective: &O, space: &SearchSpace, cfg: &IwoConfig) -> Result<OptimizerResult> {
    let mut iwo = Iwo::new(objective, space, cfg)?;
    while !iwo.is_done() {
        iwo.step();
    }
    Ok(iwo.finish())
}
