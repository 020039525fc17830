//! Real-coded genetic algorithm used as a global-search baseline.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{evaluate_batch, initial_draws, seeded_rng, Objective, OptimizerResult, SearchSpace};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub generations: usize,
    pub pop_size: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// BLX-alpha extension of the parents' interval.
    pub blend_alpha: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation spread as a fraction of each dimension's range.
    pub mutation_sigma: f64,
    pub elitism: usize,
    pub rng_seed: u64,
    /// Rounds of redrawing for initial individuals that land on the
    /// objective's penalty; 1 disables redrawing.
    pub init_attempts: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            generations: 200,
            pop_size: 40,
            tournament_size: 2,
            crossover_rate: 0.9,
            blend_alpha: 0.5,
            mutation_rate: 0.1,
            mutation_sigma: 0.05,
            elitism: 1,
            rng_seed: 0,
            init_attempts: 200,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("ga: {m}")));
        if self.pop_size < 2 {
            return fail("pop_size must be at least 2");
        }
        if self.tournament_size == 0 {
            return fail("tournament_size must be at least 1");
        }
        if self.elitism >= self.pop_size {
            return fail("elitism must be smaller than pop_size");
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.blend_alpha >= 0.0 && self.mutation_sigma >= 0.0) {
            return fail("blend_alpha and mutation_sigma must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Individual {
    genes: Vec<f64>,
    cost: f64,
}

/// Stepwise GA run; [`run_ga`] drives it to completion.
pub struct Ga<'a, O: Objective + ?Sized> {
    objective: &'a O,
    space: &'a SearchSpace,
    cfg: GaConfig,
    rng: ChaCha8Rng,
    population: Vec<Individual>,
    generation: usize,
    evaluations: u64,
    best: Individual,
    trace: Vec<f64>,
}

impl<'a, O: Objective + ?Sized> Ga<'a, O> {
    pub fn new(objective: &'a O, space: &'a SearchSpace, cfg: &GaConfig) -> Result<Self> {
        Self::with_stream(objective, space, cfg, 0)
    }

    pub(crate) fn with_stream(objective: &'a O, space: &'a SearchSpace, cfg: &GaConfig, stream: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = seeded_rng(cfg.rng_seed, stream);
        let (genes, costs, drawn) = initial_draws(objective, space, cfg.pop_size, cfg.init_attempts, &mut rng);
        Self::start(objective, space, cfg, rng, genes, costs, drawn)
    }

    /// Starts from a caller-supplied population (clamped into the space).
    pub fn with_population(
        objective: &'a O,
        space: &'a SearchSpace,
        cfg: &GaConfig,
        population: Vec<Vec<f64>>,
    ) -> Result<Self> {
        cfg.validate()?;
        if population.len() != cfg.pop_size || population.iter().any(|g| g.len() != space.dim()) {
            return Err(Error::Config(format!(
                "ga: initial population must hold {} vectors of length {}",
                cfg.pop_size,
                space.dim()
            )));
        }
        let mut genes = population;
        for g in &mut genes {
            space.clamp(g);
        }
        let costs = evaluate_batch(objective, &genes);
        let drawn = genes.len() as u64;
        Self::start(objective, space, cfg, seeded_rng(cfg.rng_seed, 0), genes, costs, drawn)
    }

    fn start(
        objective: &'a O,
        space: &'a SearchSpace,
        cfg: &GaConfig,
        rng: ChaCha8Rng,
        genes: Vec<Vec<f64>>,
        costs: Vec<f64>,
        evaluations: u64,
    ) -> Result<Self> {
        let population: Vec<Individual> = genes
            .into_iter()
            .zip(costs)
            .map(|(genes, cost)| Individual { genes, cost })
            .collect();
        let best = best_of(&population).clone();
        Ok(Self {
            objective,
            space,
            cfg: cfg.clone(),
            rng,
            evaluations,
            trace: vec![best.cost],
            population,
            generation: 0,
            best,
        })
    }

    pub fn population(&self) -> Vec<&[f64]> {
        self.population.iter().map(|i| i.genes.as_slice()).collect()
    }

    pub fn is_done(&self) -> bool {
        self.generation >= self.cfg.generations
    }

    fn tournament(&mut self) -> usize {
        let n = self.population.len();
        let mut winner = self.rng.random_range(0..n);
        for _ in 1..self.cfg.tournament_size {
            let challenger = self.rng.random_range(0..n);
            if self.population[challenger].cost < self.population[winner].cost {
                winner = challenger;
            }
        }
        winner
    }

    fn blend(&mut self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let alpha = self.cfg.blend_alpha;
        let mut c1 = Vec::with_capacity(a.len());
        let mut c2 = Vec::with_capacity(a.len());
        for (x, y) in a.iter().zip(b) {
            let (lo, hi) = if x <= y { (*x, *y) } else { (*y, *x) };
            let spread = hi - lo;
            let (lo, hi) = (lo - alpha * spread, hi + alpha * spread);
            if hi > lo {
                c1.push(self.rng.random_range(lo..=hi));
                c2.push(self.rng.random_range(lo..=hi));
            } else {
                c1.push(lo);
                c2.push(lo);
            }
        }
        (c1, c2)
    }

    fn mutate(&mut self, genes: &mut [f64]) {
        for (d, g) in genes.iter_mut().enumerate() {
            if self.rng.random::<f64>() < self.cfg.mutation_rate {
                let z: f64 = self.rng.sample(StandardNormal);
                *g += self.cfg.mutation_sigma * self.space.range(d) * z;
            }
        }
        self.space.clamp(genes);
    }

    pub fn step(&mut self) {
        self.generation += 1;
        let mut order: Vec<usize> = (0..self.population.len()).collect();
        order.sort_by(|&a, &b| {
            self.population[a]
                .cost
                .total_cmp(&self.population[b].cost)
                .then(a.cmp(&b))
        });
        let elites: Vec<Individual> = order[..self.cfg.elitism]
            .iter()
            .map(|&i| self.population[i].clone())
            .collect();

        let n_children = self.cfg.pop_size - elites.len();
        let mut children = Vec::with_capacity(n_children + 1);
        while children.len() < n_children {
            let a = self.tournament();
            let b = self.tournament();
            let (pa, pb) = (self.population[a].genes.clone(), self.population[b].genes.clone());
            let (mut c1, mut c2) = if self.rng.random::<f64>() < self.cfg.crossover_rate {
                self.blend(&pa, &pb)
            } else {
                (pa, pb)
            };
            self.mutate(&mut c1);
            self.mutate(&mut c2);
            children.push(c1);
            children.push(c2);
        }
        children.truncate(n_children);

        let costs = evaluate_batch(self.objective, &children);
        self.evaluations += children.len() as u64;
        let mut next = elites;
        next.extend(
            children
                .into_iter()
                .zip(costs)
                .map(|(genes, cost)| Individual { genes, cost }),
        );
        self.population = next;

        let top = best_of(&self.population);
        if top.cost < self.best.cost {
            self.best = top.clone();
        }
        self.trace.push(self.best.cost);
    }

    pub fn finish(self) -> OptimizerResult {
        OptimizerResult {
            best: self.best.genes,
            best_cost: self.best.cost,
            cost_trace: self.trace,
            evaluations: self.evaluations,
            rng_seed: self.cfg.rng_seed,
        }
    }
}

fn best_of(pop: &[Individual]) -> &Individual {
    pop.iter()
        .reduce(|best, i| if i.cost < best.cost { i } else { best })
        .expect("population is never empty")
}

pub fn run_ga<O: Objective + ?Sized>(objective: &O, space: &SearchSpace, cfg: &GaConfig) -> Result<OptimizerResult> {
    let mut ga = Ga::new(objective, space, cfg)?;
    while !ga.is_done() {
        ga.step();
    }
    Ok(ga.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn sphere_converges() {
        let space = SearchSpace::symmetric(5, 5.0).unwrap();
        for seed in 0..3 {
            let cfg = GaConfig {
                rng_seed: seed,
                ..Default::default()
            };
            let res = run_ga(&sphere, &space, &cfg).unwrap();
            assert!(res.best_cost < 1e-2, "seed {seed}: {}", res.best_cost);
            assert!(res.cost_trace.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(res.cost_trace.len(), 201);
        }
    }

    #[test]
    fn no_variation_keeps_population_fixed() {
        let space = SearchSpace::symmetric(3, 5.0).unwrap();
        let cfg = GaConfig {
            pop_size: 8,
            crossover_rate: 0.0,
            mutation_rate: 0.0,
            ..Default::default()
        };
        let member = vec![1.5, -2.0, 0.25];
        let mut ga = Ga::with_population(&sphere, &space, &cfg, vec![member.clone(); 8]).unwrap();
        for _ in 0..20 {
            ga.step();
            assert!(ga.population().iter().all(|g| *g == member.as_slice()));
        }
    }

    #[test]
    fn same_seed_same_result() {
        let space = SearchSpace::symmetric(4, 3.0).unwrap();
        let cfg = GaConfig {
            generations: 30,
            rng_seed: 77,
            ..Default::default()
        };
        assert_eq!(
            run_ga(&sphere, &space, &cfg).unwrap(),
            run_ga(&sphere, &space, &cfg).unwrap()
        );
    }

    #[test]
    fn children_stay_in_bounds() {
        let space = SearchSpace::new(vec![0.0, -1.0], vec![1.0, 1.0], [1].into_iter().collect()).unwrap();
        let shifted = |x: &[f64]| (x[0] - 2.0).powi(2);
        let cfg = GaConfig {
            generations: 10,
            ..Default::default()
        };
        let mut ga = Ga::new(&shifted, &space, &cfg).unwrap();
        while !ga.is_done() {
            ga.step();
            assert!(ga.population().iter().all(|g| space.contains(g) && g[1] == 0.0));
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let space = SearchSpace::symmetric(2, 1.0).unwrap();
        for cfg in [
            GaConfig {
                pop_size: 1,
                ..Default::default()
            },
            GaConfig {
                elitism: 40,
                ..Default::default()
            },
            GaConfig {
                crossover_rate: 1.5,
                ..Default::default()
            },
            GaConfig {
                tournament_size: 0,
                ..Default::default()
            },
        ] {
            assert!(run_ga(&sphere, &space, &cfg).is_err());
        }
    }
}
