use std::f64::consts::PI;

use super::TimeSeriesLog;
use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 2;
pub const DEFAULT_CUTOFF_HZ: f64 = 5.0;

/// Direct-form II transposed second-order section, `a0` normalised to 1.
/// First-order sections have `b2 = a2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Delay-line contents that hold a constant input `x` in steady state.
    fn steady_state(&self, x: f64) -> [f64; 2] {
        let y = self.dc_gain() * x;
        let z2 = self.b2 * x - self.a2 * y;
        let z1 = y - self.b0 * x;
        [z1, z2]
    }

    fn run(&self, samples: &mut [f64], mut z: [f64; 2]) {
        for v in samples.iter_mut() {
            let x = *v;
            let y = self.b0 * x + z[0];
            z[0] = self.b1 * x - self.a1 * y + z[1];
            z[1] = self.b2 * x - self.a2 * y;
            *v = y;
        }
    }

    fn magnitude(&self, omega: f64) -> f64 {
        // |B(e^jw)| / |A(e^jw)| with z^-1 = e^-jw
        let (c1, s1) = (omega.cos(), omega.sin());
        let (c2, s2) = ((2.0 * omega).cos(), (2.0 * omega).sin());
        let num = ((self.b0 + self.b1 * c1 + self.b2 * c2).powi(2) + (self.b1 * s1 + self.b2 * s2).powi(2)).sqrt();
        let den = ((1.0 + self.a1 * c1 + self.a2 * c2).powi(2) + (self.a1 * s1 + self.a2 * s2).powi(2)).sqrt();
        num / den
    }
}

/// Digital Butterworth low-pass built with the bilinear transform.
///
/// The cutoff is pre-warped, so the single-pass magnitude at `cutoff_hz` is
/// exactly the half-power point `1/sqrt(2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ButterworthFilter {
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: f64,
    sections: Vec<Biquad>,
}

impl ButterworthFilter {
    pub fn lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if order == 0 || order > 16 {
            return Err(Error::InvalidInput(format!("filter order must be 1..=16, got {order}")));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        let nyquist = sample_rate_hz / 2.0;
        if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
            return Err(Error::InvalidInput(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz"
            )));
        }

        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // conjugate analog pole pair on the unit circle: s^2 + 2 sin(theta) s + 1
            let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
            let damping = 2.0 * theta.sin();
            let norm = 1.0 + damping * k + k2;
            sections.push(Biquad {
                b0: k2 / norm,
                b1: 2.0 * k2 / norm,
                b2: k2 / norm,
                a1: 2.0 * (k2 - 1.0) / norm,
                a2: (1.0 - damping * k + k2) / norm,
            });
        }
        if order % 2 == 1 {
            let norm = 1.0 + k;
            sections.push(Biquad {
                b0: k / norm,
                b1: k / norm,
                b2: 0.0,
                a1: (k - 1.0) / norm,
                a2: 0.0,
            });
        }
        Ok(Self {
            order,
            cutoff_hz,
            sample_rate_hz,
            sections,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Single-pass magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let omega = 2.0 * PI * freq_hz / self.sample_rate_hz;
        self.sections.iter().map(|s| s.magnitude(omega)).product()
    }

    /// Causal single pass starting from rest.
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let mut out = input.to_vec();
        for s in &self.sections {
            s.run(&mut out, [0.0; 2]);
        }
        out
    }

    fn filter_from_steady_state(&self, samples: &mut [f64]) {
        let mut level = samples.first().copied().unwrap_or(0.0);
        for s in &self.sections {
            let z = s.steady_state(level);
            s.run(samples, z);
            level *= s.dc_gain();
        }
    }

    /// Zero-phase forward-backward filtering.
    ///
    /// Ends are padded by odd reflection and each pass starts from the
    /// steady state of its first sample, which keeps edge transients small.
    pub fn filtfilt(&self, input: &[f64]) -> Vec<f64> {
        let n = input.len();
        if n < 2 {
            return input.to_vec();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * input[0] - input[i]));
        ext.extend_from_slice(input);
        ext.extend((1..=pad).map(|i| 2.0 * input[n - 1] - input[n - 1 - i]));

        self.filter_from_steady_state(&mut ext);
        ext.reverse();
        self.filter_from_steady_state(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Zero-phase low-pass of every measured channel; inputs and unmeasured
/// channels pass through untouched.
pub fn butterworth_filter(log: &TimeSeriesLog, cutoff_hz: f64, order: usize) -> Result<TimeSeriesLog> {
    let filter = ButterworthFilter::lowpass(order, cutoff_hz, log.sample_rate_hz())?;
    let mut out = log.clone();
    for name in log.mask() {
        let filtered = filter.filtfilt(log.channel(name).expect("mask is a subset of channels"));
        out.set_channel(name, filtered)?;
    }
    Ok(out)
}
