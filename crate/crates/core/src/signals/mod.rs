//! Flight-log handling: the multi-channel time series container, CSV
//! ingestion, low-pass filtering and 3-2-1-1 excitation synthesis.

mod butterworth;
mod csv_io;
mod excitation;

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Control, ControlInput, State, StateVector, N_INPUTS};

pub use butterworth::{butterworth_filter, Biquad, ButterworthFilter, DEFAULT_CUTOFF_HZ, DEFAULT_ORDER};
pub use csv_io::{load_log, load_log_path, save_log, save_log_path};
pub use excitation::{generate_3211, generate_sequence, ExcitationSpec, Pulse};

/// Uniformly sampled multi-channel record.
///
/// Channels keep insertion order. The mask lists the state channels that were
/// actually measured; control channels are inputs and never masked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesLog {
    sample_rate_hz: f64,
    start_time: f64,
    channels: IndexMap<String, Vec<f64>>,
    mask: BTreeSet<String>,
}

impl TimeSeriesLog {
    pub fn new(
        sample_rate_hz: f64,
        start_time: f64,
        channels: IndexMap<String, Vec<f64>>,
        mask: BTreeSet<String>,
    ) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::InvalidInput("start time is not finite".into()));
        }
        let mut lens = channels.values().map(Vec::len);
        let len = lens.next().unwrap_or(0);
        if lens.any(|l| l != len) {
            return Err(Error::InvalidInput("channels have different lengths".into()));
        }
        if len < 2 {
            return Err(Error::InvalidInput(format!(
                "a log needs at least 2 samples, got {len}"
            )));
        }
        if let Some(m) = mask.iter().find(|m| !channels.contains_key(*m)) {
            return Err(Error::InvalidInput(format!("masked channel `{m}` is not present")));
        }
        Ok(Self {
            sample_rate_hz,
            start_time,
            channels,
            mask,
        })
    }

    /// Builds a log from state and control series; every state supplied is masked.
    pub fn from_series(
        sample_rate_hz: f64,
        start_time: f64,
        states: &[(State, Vec<f64>)],
        controls: &[(Control, Vec<f64>)],
    ) -> Result<Self> {
        let mut channels = IndexMap::new();
        let mut mask = BTreeSet::new();
        for (s, v) in states {
            channels.insert(s.name().to_string(), v.clone());
            mask.insert(s.name().to_string());
        }
        for (c, v) in controls {
            channels.insert(c.name().to_string(), v.clone());
        }
        Self::new(sample_rate_hz, start_time, channels, mask)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 / self.sample_rate_hz
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn channels(&self) -> &IndexMap<String, Vec<f64>> {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn state(&self, s: State) -> Option<&[f64]> {
        self.channel(s.name())
    }

    pub fn mask(&self) -> &BTreeSet<String> {
        &self.mask
    }

    pub fn is_measured(&self, s: State) -> bool {
        self.mask.contains(s.name())
    }

    /// Measured states in model order.
    pub fn measured_states(&self) -> Vec<State> {
        State::ALL.iter().copied().filter(|s| self.is_measured(*s)).collect()
    }

    /// Replaces a channel's samples, keeping its position and mask status.
    pub fn set_channel(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "channel `{name}` has {} samples, log has {}",
                values.len(),
                self.len()
            )));
        }
        match self.channels.get_mut(name) {
            Some(slot) => {
                *slot = values;
                Ok(())
            }
            None => Err(Error::InvalidInput(format!("no channel `{name}`"))),
        }
    }

    /// Drops the named states from the mask (they stay as channels).
    pub fn unmask(&mut self, states: &[State]) {
        for s in states {
            self.mask.remove(s.name());
        }
    }

    /// Removes channels entirely.
    pub fn without_channels(&self, names: &[&str]) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .filter(|(k, _)| !names.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mask = self
            .mask
            .iter()
            .filter(|k| !names.contains(&k.as_str()))
            .cloned()
            .collect();
        Self::new(self.sample_rate_hz, self.start_time, channels, mask)
    }

    /// Control inputs per sample; every control channel must be present.
    pub fn controls(&self) -> Result<Vec<ControlInput>> {
        let cols: Vec<&[f64]> = Control::ALL
            .iter()
            .map(|c| {
                self.channel(c.name())
                    .ok_or_else(|| Error::InvalidInput(format!("missing control channel `{c}`")))
            })
            .collect::<Result<_>>()?;
        debug_assert_eq!(cols.len(), N_INPUTS);
        Ok((0..self.len())
            .map(|k| ControlInput::from_fn(|i, _| cols[i][k]))
            .collect())
    }

    /// First sample of each measured state; unmeasured states start at rest.
    pub fn initial_state(&self) -> StateVector {
        let mut x0 = StateVector::zeros();
        for s in self.measured_states() {
            x0[s.index()] = self.channels[s.name()][0];
        }
        x0
    }

    /// Contiguous sub-range of samples, start time shifted accordingly.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidInput(format!(
                "bad slice {start}..{end} of a {}-sample log",
                self.len()
            )));
        }
        let channels = self
            .channels
            .iter()
            .map(|(k, v)| (k.clone(), v[start..end].to_vec()))
            .collect();
        Self::new(self.sample_rate_hz, self.time(start), channels, self.mask.clone())
    }

    /// Appends `other` sample-wise; both logs must share rate, channels and mask.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.sample_rate_hz != other.sample_rate_hz
            || self.mask != other.mask
            || !self.channels.keys().eq(other.channels.keys())
        {
            return Err(Error::InvalidInput("logs are not compatible".into()));
        }
        let channels = self
            .channels
            .iter()
            .map(|(k, v)| {
                let mut joined = v.clone();
                joined.extend_from_slice(&other.channels[k]);
                (k.clone(), joined)
            })
            .collect();
        Self::new(self.sample_rate_hz, self.start_time, channels, self.mask.clone())
    }

    /// Adds zero-mean white noise to each measured channel, with standard
    /// deviation `relative_std` times that channel's RMS.
    pub fn add_measurement_noise<R: Rng + ?Sized>(&mut self, relative_std: f64, rng: &mut R) -> Result<()> {
        if !(relative_std >= 0.0 && relative_std.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise level must be non-negative, got {relative_std}"
            )));
        }
        if relative_std == 0.0 {
            return Ok(());
        }
        for name in self.mask.clone() {
            let series = self.channels.get_mut(&name).expect("mask is a subset of channels");
            let rms = (series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64).sqrt();
            let sigma = relative_std * rms;
            for v in series.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += sigma * z;
            }
        }
        Ok(())
    }
}

/// Contiguous prefix/suffix split for training and validation.
pub fn split_train_validate(log: &TimeSeriesLog, fraction: f64) -> Result<(TimeSeriesLog, TimeSeriesLog)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = log.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!("cannot split a {n}-sample log")));
    }
    let cut = (fraction * n as f64).round() as usize;
    if cut < 2 || n - cut < 2 {
        return Err(Error::InvalidInput(format!(
            "split fraction {fraction} leaves a part shorter than 2 samples"
        )));
    }
    Ok((log.slice(0, cut)?, log.slice(cut, n)?))
}
