//! Empirical versions of the conditions behind the triangular-array CLT:
//! the Lindeberg term, centered cross moments and the trace of the
//! covariance, all taken under the empirical measure of a sample.

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{centered_rows, mean, Sample};

/// The ε grid `{2⁻⁴, 2⁻³, ..., 2⁴}`.
pub const DEFAULT_EPSILON_GRID: [f64; 9] = [0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

/// `n⁻¹ Σ_i ‖X_i − X̄‖² 1{‖X_i − X̄‖ > ε√n}`.
pub fn lindeberg_term(sample: &Sample, epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be > 0 (got {epsilon})")));
    }
    let n = sample.n() as f64;
    let threshold = epsilon * n.sqrt();
    let sum: f64 = centered_rows(sample)
        .chunks_exact(sample.d())
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .filter(|sq| sq.sqrt() > threshold)
        .sum();
    Ok(sum / n)
}

/// `n⁻¹ Σ_i X_i^(k) X_i^(l) − X̄^(k) X̄^(l)` for 0-based `k`, `l`.
pub fn covariance_entry(sample: &Sample, k: usize, l: usize) -> Result<f64> {
    let d = sample.d();
    for index in [k, l] {
        if index >= d {
            return Err(Error::IndexOutOfRange { index, bound: d });
        }
    }
    let m = mean(sample);
    let s: f64 = sample.rows().map(|r| (r[k] - m[k]) * (r[l] - m[l])).sum();
    Ok(s / sample.n() as f64)
}

/// `Σ_k Γ_n(k, k)`, the sum of the diagonal centered second moments.
pub fn trace_condition(sample: &Sample) -> f64 {
    let centered = centered_rows(sample);
    centered.iter().map(|x| x * x).sum::<f64>() / sample.n() as f64
}

/// The same trace through the norm identity `n⁻¹ Σ_i ‖X_i‖² − ‖X̄‖²`.
pub fn trace_by_norm_identity(sample: &Sample) -> f64 {
    let second: f64 = sample.as_slice().iter().map(|x| x * x).sum::<f64>() / sample.n() as f64;
    second - mean(sample).iter().map(|x| x * x).sum::<f64>()
}

/// Diagnostics of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub d: usize,
    /// Number of leading coordinates used for the Lindeberg terms.
    pub l_projection: usize,
    /// `L_n(ε)` keyed by ε, in grid order.
    #[serde(with = "epsilon_map")]
    pub lindeberg: Vec<(f64, f64)>,
    pub trace_sum: f64,
    /// `trace_sum` recomputed by the norm identity.
    pub trace_identity: f64,
    pub cov_entries: Vec<CovarianceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEntry {
    pub k: usize,
    pub l: usize,
    pub value: f64,
}

/// Lindeberg terms over `epsilon_grid` on the first `l_projection`
/// coordinates, the full trace, and the requested covariance entries.
pub fn full_report(
    sample: &Sample,
    epsilon_grid: &[f64],
    l_projection: usize,
    entries: &[(usize, usize)],
) -> Result<DiagnosticsReport> {
    if epsilon_grid.is_empty() {
        return Err(Error::InvalidConfig("epsilon grid must not be empty".into()));
    }
    if l_projection == 0 || l_projection > sample.d() {
        return Err(Error::InvalidConfig(format!(
            "projection level l must be in 1..={} (got {l_projection})",
            sample.d()
        )));
    }
    let projected = sample.leading_columns(l_projection);
    let lindeberg = epsilon_grid
        .iter()
        .map(|&eps| lindeberg_term(&projected, eps).map(|v| (eps, v)))
        .collect::<Result<Vec<_>>>()?;
    let cov_entries = entries
        .iter()
        .map(|&(k, l)| covariance_entry(sample, k, l).map(|value| CovarianceEntry { k, l, value }))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsReport {
        n: sample.n(),
        d: sample.d(),
        l_projection,
        lindeberg,
        trace_sum: trace_condition(sample),
        trace_identity: trace_by_norm_identity(sample),
        cov_entries,
    })
}

/// Serializes `[(ε, value)]` as a JSON object whose keys are the ε values, in order.
pub mod epsilon_map {
    use super::*;

    pub fn serialize<S: Serializer>(pairs: &[(f64, f64)], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(pairs.len()))?;
        for (eps, v) in pairs {
            map.serialize_entry(&eps.to_string(), v)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<(f64, f64)>, D::Error> {
        struct PairsVisitor;

        impl<'de> Visitor<'de> for PairsVisitor {
            type Value = Vec<(f64, f64)>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from epsilon to value")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((key, value)) = access.next_entry::<String, f64>()? {
                    let eps = key
                        .parse::<f64>()
                        .map_err(|_| serde::de::Error::custom(format!("bad epsilon key {key:?}")))?;
                    out.push((eps, value));
                }
                Ok(out)
            }
        }

        d.deserialize_map(PairsVisitor)
    }
}
