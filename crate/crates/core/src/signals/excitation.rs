use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::TimeSeriesLog;
use crate::error::{Error, Result};
use crate::model::Control;

/// One constant-deflection segment of a multistep input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// `+1` or `-1`.
    pub sign: f64,
    pub seconds: f64,
}

/// Piecewise-constant stick excitation on a single axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationSpec {
    #[serde(with = "control_name")]
    pub axis: Control,
    pub amplitude: f64,
    pub durations: Vec<Pulse>,
    pub lead_in: f64,
    pub tail: f64,
}

impl ExcitationSpec {
    /// +A for 3 s, -A for 2 s, +A for 1 s, -A for 1 s; no lead-in or tail.
    pub fn new_3211(axis: Control, amplitude: f64) -> Self {
        let durations = [(1.0, 3.0), (-1.0, 2.0), (1.0, 1.0), (-1.0, 1.0)]
            .into_iter()
            .map(|(sign, seconds)| Pulse { sign, seconds })
            .collect();
        Self {
            axis,
            amplitude,
            durations,
            lead_in: 0.0,
            tail: 0.0,
        }
    }

    pub fn with_lead_in(mut self, seconds: f64) -> Self {
        self.lead_in = seconds;
        self
    }

    pub fn with_tail(mut self, seconds: f64) -> Self {
        self.tail = seconds;
        self
    }

    pub fn total_seconds(&self) -> f64 {
        self.lead_in + self.durations.iter().map(|p| p.seconds).sum::<f64>() + self.tail
    }

    fn validate(&self) -> Result<()> {
        // a zero amplitude is accepted and yields a quiet segment
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "excitation amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if self.durations.is_empty() {
            return Err(Error::InvalidInput("excitation needs at least one pulse".into()));
        }
        for p in &self.durations {
            if !(p.seconds > 0.0 && p.seconds.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "pulse duration must be positive, got {}",
                    p.seconds
                )));
            }
            if p.sign != 1.0 && p.sign != -1.0 {
                return Err(Error::InvalidInput(format!(
                    "pulse sign must be +1 or -1, got {}",
                    p.sign
                )));
            }
        }
        for (label, v) in [("lead-in", self.lead_in), ("tail", self.tail)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{label} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Axis samples; each segment is rounded to whole samples independently.
    fn samples(&self, sample_rate_hz: f64) -> Vec<f64> {
        let count = |secs: f64| (secs * sample_rate_hz).round() as usize;
        let mut out = vec![0.0; count(self.lead_in)];
        for p in &self.durations {
            out.extend(std::iter::repeat_n(p.sign * self.amplitude, count(p.seconds)));
        }
        out.extend(std::iter::repeat_n(0.0, count(self.tail)));
        out
    }
}

/// Four control channels with a multistep on `spec.axis` and zeros elsewhere.
pub fn generate_3211(spec: &ExcitationSpec, sample_rate_hz: f64) -> Result<TimeSeriesLog> {
    generate_sequence(std::slice::from_ref(spec), sample_rate_hz)
}

/// Plays several excitations back to back.
pub fn generate_sequence(specs: &[ExcitationSpec], sample_rate_hz: f64) -> Result<TimeSeriesLog> {
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let mut channels: IndexMap<String, Vec<f64>> = Control::ALL
        .iter()
        .map(|c| (c.name().to_string(), Vec::new()))
        .collect();
    for spec in specs {
        spec.validate()?;
        let samples = spec.samples(sample_rate_hz);
        for c in Control::ALL {
            let col = channels.get_mut(c.name()).expect("all controls inserted");
            if *c == spec.axis {
                col.extend_from_slice(&samples);
            } else {
                col.extend(std::iter::repeat_n(0.0, samples.len()));
            }
        }
    }
    TimeSeriesLog::new(sample_rate_hz, 0.0, channels, BTreeSet::new())
}

mod control_name {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use crate::model::Control;

    pub fn serialize<S: Serializer>(c: &Control, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(c.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Control, D::Error> {
        let name = String::deserialize(d)?;
        let short = format!("delta_{name}");
        Control::from_name(&name)
            .or_else(|| Control::from_name(&short))
            .ok_or_else(|| de::Error::custom(format!("unknown control axis `{name}`")))
    }
}
