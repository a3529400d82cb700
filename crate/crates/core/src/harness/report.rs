use std::io::Write;

use serde::{Deserialize, Serialize};

use super::plan::{ExperimentKind, ExperimentPlan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Fraction of datasets on which `H₀` was rejected.
    RejectionRate,
    /// Kolmogorov–Smirnov distance (mean over datasets for bootstrap studies).
    KsDistance,
    /// Mean Lindeberg term `L_n(ε)` over datasets.
    MeanLindeberg,
    /// Mean of `Σ_k Γ_n(k, k)` over datasets.
    MeanTrace,
}

/// One cell of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub d_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub metric: Metric,
    pub value: f64,
    pub stderr: f64,
    /// What `value` is compared against: `α` for rates, the 95% two-sample
    /// KS noise floor for distances, `Σ_{k ≤ d_n} λ_k` for traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    pub wall_time_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub software: String,
    pub kind: ExperimentKind,
    pub master_seed: u64,
    /// `false` when at least one cell failed; failed cells carry `error`.
    pub complete: bool,
    pub plan: ExperimentPlan,
    pub cells: Vec<Cell>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Zeroes every `wall_time_secs`, leaving only seed-determined fields.
    pub fn without_timing(mut self) -> Self {
        for c in &mut self.cells {
            c.wall_time_secs = 0.0;
        }
        self
    }

    /// One CSV row per cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for cell in &self.cells {
            let row = CsvRow {
                index: cell.index,
                n: cell.n,
                d_n: cell.d_n,
                alpha: cell.alpha,
                epsilon: cell.epsilon,
                metric: cell.metric,
                value: cell.value,
                stderr: cell.stderr,
                reference: cell.reference,
                wall_time_secs: cell.wall_time_secs,
                error: cell.error.as_deref(),
            };
            w.serialize(row).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// `Cell` with every column present, for fixed-width CSV rows.
#[derive(Serialize)]
struct CsvRow<'a> {
    index: usize,
    n: usize,
    d_n: usize,
    alpha: Option<f64>,
    epsilon: Option<f64>,
    metric: Metric,
    value: f64,
    stderr: f64,
    reference: Option<f64>,
    wall_time_secs: f64,
    error: Option<&'a str>,
}
