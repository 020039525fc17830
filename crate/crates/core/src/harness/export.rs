//! Measured-versus-simulated series for plotting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{FitnessConfig, FitnessProblem};
use crate::model::ParameterSet;
use crate::signals::TimeSeriesLog;

/// Which part of a log to export.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportSegment {
    #[default]
    All,
    Train,
    Validate,
}

/// Writes `<state>.csv` with columns `t,measured,simulated` for every
/// measured state of `data` into `out_dir`, one row per sample. Samples
/// after a divergence leave the `simulated` cell empty. Returns the paths
/// written.
pub fn export_timeseries(
    best: &ParameterSet,
    data: &TimeSeriesLog,
    cfg: &FitnessConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let problem = FitnessProblem::new(data, cfg)?;
    let traj = problem.simulate(best)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut written = Vec::new();
    for state in problem.scored_states() {
        let path = out_dir.join(format!("{state}.csv"));
        let measured = data.state(state).expect("scored states are measured");
        let simulated = traj.channel(state);
        let mut w = csv::Writer::from_path(&path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&path, io),
            other => Error::InvalidInput(format!("{}: {other:?}", path.display())),
        })?;
        w.write_record(["t", "measured", "simulated"])?;
        for (k, m) in measured.iter().enumerate() {
            let sim = simulated.get(k).map_or_else(String::new, f64::to_string);
            w.write_record([data.time(k).to_string(), m.to_string(), sim])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// The requested part of `log` under a training fraction of `split`.
pub fn select_segment(log: &TimeSeriesLog, split: f64, segment: ExportSegment) -> Result<TimeSeriesLog> {
    if segment == ExportSegment::All {
        return Ok(log.clone());
    }
    let (train, validate) = crate::signals::split_train_validate(log, split)?;
    Ok(if segment == ExportSegment::Train {
        train
    } else {
        validate
    })
}
