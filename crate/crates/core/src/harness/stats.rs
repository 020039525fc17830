//! Small-sample confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Two-sided Student-t interval `mean ± t(1 - (1 - level)/2, n - 1) · s/√n`.
///
/// Sums run over deviations from the first sample, so identical samples give
/// a mean equal to that sample and exactly zero width. One sample gives the
/// degenerate interval at that value. Bounds are returned sorted.
pub fn t_interval(samples: &[f64], level: f64) -> Interval {
    assert!(!samples.is_empty(), "t_interval needs at least one sample");
    assert!(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
    let n = samples.len();
    let pivot = samples[0];
    let mean_dev = samples.iter().map(|x| x - pivot).sum::<f64>() / n as f64;
    let mean = pivot + mean_dev;
    if n == 1 {
        return Interval {
            mean,
            lower: mean,
            upper: mean,
        };
    }
    let ss: f64 = samples.iter().map(|x| (x - pivot - mean_dev).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let half = t * sd / (n as f64).sqrt();
    let (a, b) = (mean - half, mean + half);
    Interval {
        mean,
        lower: a.min(b),
        upper: a.max(b),
    }
}
