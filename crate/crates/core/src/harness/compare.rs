//! Side-by-side validation correlations of several methods.

use serde::{Deserialize, Serialize};

use super::{prepare_data, run_prepared, ExperimentConfig, Method, TrialReport};
use crate::error::{Error, Result};
use crate::model::State;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub states: Vec<State>,
    pub methods: Vec<String>,
    /// `cells[row][col]`: validation correlation of `states[row]` under
    /// `methods[col]`.
    pub cells: Vec<Vec<Option<f64>>>,
    pub reports: Vec<TrialReport>,
}

/// Runs every method on the same prepared data and tabulates the validation
/// correlation of the roll/pitch rates and attitudes.
pub fn compare_methods(base: &ExperimentConfig, methods: &[Method]) -> Result<ComparisonTable> {
    if methods.is_empty() {
        return Err(Error::Config("compare needs at least one method".into()));
    }
    base.validate()?;
    let data = prepare_data(base)?;
    let reports = methods
        .iter()
        .map(|m| {
            let cfg = ExperimentConfig {
                method: m.clone(),
                ..base.clone()
            };
            run_prepared(&cfg, &data)
        })
        .collect::<Result<Vec<_>>>()?;
    let states = State::VALIDATION.to_vec();
    let cells = states
        .iter()
        .map(|s| reports.iter().map(|r| r.rho(*s)).collect())
        .collect();
    Ok(ComparisonTable {
        states,
        methods: methods.iter().map(|m| m.name().to_string()).collect(),
        cells,
        reports,
    })
}

fn cell_text(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.4}"))
}

impl ComparisonTable {
    pub fn column(&self, method: &str) -> Option<Vec<Option<f64>>> {
        let col = self.methods.iter().position(|m| m == method)?;
        Some(self.cells.iter().map(|row| row[col]).collect())
    }

    /// `state,<method>...` with full-precision values; undefined cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = format!("state,{}\n", self.methods.join(","));
        for (state, row) in self.states.iter().zip(&self.cells) {
            let vals: Vec<String> = row
                .iter()
                .map(|v| v.map_or_else(String::new, |x| x.to_string()))
                .collect();
            out.push_str(&format!("{},{}\n", state, vals.join(",")));
        }
        out
    }

    /// Right-aligned columns, four decimals.
    pub fn to_text(&self) -> String {
        let width = self.methods.iter().map(String::len).max().unwrap_or(0).max(7);
        let mut out = format!("{:<6}", "state");
        for m in &self.methods {
            out.push_str(&format!(" {m:>width$}"));
        }
        out.push('\n');
        for (state, row) in self.states.iter().zip(&self.cells) {
            out.push_str(&format!("{:<6}", state.name()));
            for v in row {
                out.push_str(&format!(" {:>width$}", cell_text(*v)));
            }
            out.push('\n');
        }
        out
    }
}
