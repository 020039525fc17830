//! Synthetic flight records from a known parameter set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_matrices, simulate, Control, ModelOptions, ParameterSet, State, StateVector};
use crate::optimizers::seeded_rng;
use crate::signals::{generate_sequence, ExcitationSpec, TimeSeriesLog};

/// Length of one 3-2-1-1 multistep in seconds.
pub const MULTISTEP_SECONDS: f64 = 7.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub truth: ParameterSet,
    pub model: ModelOptions,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Stick deflection of every multistep.
    pub amplitude: f64,
    /// Noise standard deviation relative to each channel's RMS.
    pub noise: f64,
    pub noise_seed: u64,
    /// Record `r_fb`, `c` and `d` as well; otherwise only the ten states a
    /// real vehicle can measure are written.
    pub all_states: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            truth: ParameterSet::reference(),
            model: ModelOptions::default(),
            duration_s: 30.0,
            sample_rate_hz: 100.0,
            amplitude: 0.1,
            noise: 0.01,
            noise_seed: 0,
            all_states: true,
        }
    }
}

/// Alternating lateral and longitudinal 3-2-1-1 inputs, as many as fit in
/// `duration_s`, centred between equal quiet margins.
pub fn benchmark_excitation(duration_s: f64, sample_rate_hz: f64, amplitude: f64) -> Result<TimeSeriesLog> {
    if !(duration_s >= MULTISTEP_SECONDS && duration_s.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "duration must be at least {MULTISTEP_SECONDS} s to hold one multistep, got {duration_s}"
        )));
    }
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let total = (duration_s * sample_rate_hz).round() as usize;
    let per_step = (MULTISTEP_SECONDS * sample_rate_hz).round() as usize;
    let count = (total / per_step).max(1);
    let quiet = total.saturating_sub(count * per_step);
    let lead = quiet / 2;

    let mut specs: Vec<ExcitationSpec> = (0..count)
        .map(|i| {
            let axis = if i % 2 == 0 { Control::Lat } else { Control::Lon };
            ExcitationSpec::new_3211(axis, amplitude)
        })
        .collect();
    specs[0] = specs[0].clone().with_lead_in(lead as f64 / sample_rate_hz);
    let last = specs.len() - 1;
    specs[last] = specs[last].clone().with_tail((quiet - lead) as f64 / sample_rate_hz);
    generate_sequence(&specs, sample_rate_hz)
}

/// Simulates `spec.truth` from trim under the benchmark excitation and adds
/// measurement noise. A truth model that leaves the divergence guard is
/// rejected, since its record would be truncated.
pub fn synthesize(spec: &SyntheticSpec) -> Result<TimeSeriesLog> {
    let inputs = benchmark_excitation(spec.duration_s, spec.sample_rate_hz, spec.amplitude)?;
    let mats = build_matrices(&spec.truth, &spec.model)?;
    let traj = simulate(&mats, &StateVector::zeros(), &inputs.controls()?, inputs.dt())?;
    if traj.divergent {
        return Err(Error::InvalidInput(format!(
            "truth model diverges after {:.2} s of the {:.2} s record",
            traj.len() as f64 * inputs.dt(),
            spec.duration_s
        )));
    }
    let states: Vec<(State, Vec<f64>)> = State::ALL
        .iter()
        .filter(|s| spec.all_states || !State::UNMEASURABLE.contains(s))
        .map(|s| (*s, traj.channel(*s)))
        .collect();
    let controls: Vec<(Control, Vec<f64>)> = Control::ALL
        .iter()
        .map(|c| (*c, inputs.channel(c.name()).expect("all controls generated").to_vec()))
        .collect();
    let mut log = TimeSeriesLog::from_series(spec.sample_rate_hz, 0.0, &states, &controls)?;
    let mut rng = seeded_rng(spec.noise_seed, 0);
    log.add_measurement_noise(spec.noise, &mut rng)?;
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric() -> ModelOptions {
        ModelOptions {
            flap_sign_symmetric: true,
        }
    }

    #[test]
    fn benchmark_layout() {
        let log = benchmark_excitation(30.0, 100.0, 0.1).unwrap();
        assert_eq!(log.len(), 3000);
        let lat = log.channel("delta_lat").unwrap();
        let lon = log.channel("delta_lon").unwrap();
        // 1 s quiet lead, lateral multistep, then longitudinal
        assert!(lat[..100].iter().all(|v| *v == 0.0));
        assert_eq!(lat[100], 0.1);
        assert_eq!(lon[800], 0.1);
        assert_eq!(lat[1500], 0.1);
        assert_eq!(lon[2200], 0.1);
        assert!(lat[2900..].iter().chain(&lon[2900..]).all(|v| *v == 0.0));
        assert!(log.channel("delta_ped").unwrap().iter().all(|v| *v == 0.0));
        assert!(benchmark_excitation(6.0, 100.0, 0.1).is_err());
    }

    #[test]
    fn odd_durations_keep_requested_length() {
        for (d, r) in [(10.0, 100.0), (17.3, 50.0), (7.0, 100.0)] {
            let log = benchmark_excitation(d, r, 0.2).unwrap();
            assert_eq!(log.len(), (d * r).round() as usize);
        }
    }

    #[test]
    fn noiseless_record_is_the_simulation() {
        let spec = SyntheticSpec {
            model: symmetric(),
            noise: 0.0,
            ..Default::default()
        };
        let log = synthesize(&spec).unwrap();
        assert_eq!(log.measured_states().len(), 13);
        assert_eq!(log.initial_state(), StateVector::zeros());

        let realistic = synthesize(&SyntheticSpec {
            all_states: false,
            ..spec.clone()
        })
        .unwrap();
        assert_eq!(realistic.measured_states().len(), 10);
        assert_eq!(realistic.channel("p"), log.channel("p"));
    }

    #[test]
    fn printed_signs_diverge_over_the_benchmark() {
        let err = synthesize(&SyntheticSpec::default()).unwrap_err();
        assert!(err.to_string().contains("diverges"), "{err}");
    }

    #[test]
    fn noise_is_seeded() {
        let spec = SyntheticSpec {
            model: symmetric(),
            noise_seed: 9,
            ..Default::default()
        };
        assert_eq!(synthesize(&spec).unwrap(), synthesize(&spec).unwrap());
        let other = synthesize(&SyntheticSpec {
            noise_seed: 10,
            ..spec.clone()
        })
        .unwrap();
        assert_ne!(other.channel("q"), synthesize(&spec).unwrap().channel("q"));
    }
}
