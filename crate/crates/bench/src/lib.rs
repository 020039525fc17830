//! Shared fixtures for the benchmarks.

use heli_ident_core::harness::{synthesize, SyntheticSpec};
use heli_ident_core::model::ModelOptions;
use heli_ident_core::signals::{split_train_validate, TimeSeriesLog};

pub const SYMMETRIC: ModelOptions = ModelOptions {
    flap_sign_symmetric: true,
};

/// Training half of the standard 30 s benchmark record.
pub fn training_log() -> TimeSeriesLog {
    let log = synthesize(&SyntheticSpec {
        model: SYMMETRIC,
        ..Default::default()
    })
    .expect("benchmark record synthesises");
    split_train_validate(&log, 0.5).expect("record splits").0
}
