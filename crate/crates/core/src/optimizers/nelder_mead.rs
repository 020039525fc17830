//! Unconstrained Nelder-Mead simplex search with the standard coefficients.

use serde::{Deserialize, Serialize};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadOptions {
    pub max_evaluations: u64,
    /// Stop once the spread of simplex values falls below this...
    pub f_tol: f64,
    /// ...and every vertex lies within this distance (max-norm) of the best.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 10_000,
            f_tol: 1e-12,
            x_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// Best vertex value at the start of every iteration, then the final best.
    pub trace: Vec<f64>,
    pub evaluations: u64,
    pub converged: bool,
}

/// Minimises `f` from `x0`; the initial simplex offsets coordinate `i` by `step[i]`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0u64;
    let mut eval = |x: &[f64], evaluations: &mut u64| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let f0 = eval(x0, &mut evaluations);
    if n == 0 {
        return NelderMeadResult {
            x: Vec::new(),
            f: f0,
            trace: vec![f0],
            evaluations,
            converged: true,
        };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
        let v = eval(&x, &mut evaluations);
        simplex.push((x, v));
    }

    let mut trace = Vec::new();
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);

        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol && size <= opts.x_tol {
            converged = true;
            break;
        }
        if evaluations >= opts.max_evaluations {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along =
            |t: f64, from: &[f64]| -> Vec<f64> { centroid.iter().zip(from).map(|(c, w)| c + t * (c - w)).collect() };

        let worst = simplex[n].0.clone();
        let xr = along(REFLECT, &worst);
        let fr = eval(&xr, &mut evaluations);

        if fr < simplex[0].1 {
            let xe = along(EXPAND, &worst);
            let fe = eval(&xe, &mut evaluations);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }

        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(CONTRACT, &worst);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT, &worst);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }

        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (v, b) in vertex.0.iter_mut().zip(&best) {
                *v = b + SHRINK * (*v - b);
            }
            vertex.1 = eval(&vertex.0, &mut evaluations);
        }
    }

    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        f,
        trace,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_minimum() {
        let centre = [1.0, -2.0, 0.5, 3.0];
        let bowl = |x: &[f64]| {
            x.iter()
                .zip(&centre)
                .enumerate()
                .map(|(i, (a, c))| (i + 1) as f64 * (a - c).powi(2))
                .sum()
        };
        let res = nelder_mead(bowl, &[0.0; 4], &[0.5; 4], &NelderMeadOptions::default());
        assert!(res.converged);
        for (x, c) in res.x.iter().zip(&centre) {
            assert!((x - c).abs() < 1e-4, "{:?}", res.x);
        }
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rosenbrock_2d() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let res = nelder_mead(rosen, &[-1.2, 1.0], &[0.1, 0.1], &NelderMeadOptions::default());
        assert!(
            (res.x[0] - 1.0).abs() < 1e-4 && (res.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            res.x
        );
    }

    #[test]
    fn budget_is_respected() {
        let opts = NelderMeadOptions {
            max_evaluations: 50,
            ..Default::default()
        };
        let res = nelder_mead(|x: &[f64]| x.iter().map(|v| v.abs()).sum(), &[5.0; 6], &[1.0; 6], &opts);
        assert!(!res.converged);
        // one iteration may overrun by at most a shrink
        assert!(res.evaluations <= 50 + 6 + 1);
    }
}
