//! Experiment plans and their flat key/value configuration format.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DEFAULT_EPSILON_GRID;
use crate::error::{Error, Result};
use crate::sequence::{EigenvalueDecay, Innovation, MeanShift, SpectralModel, TruncationRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LevelStudy,
    BootstrapKs,
    LimitLaw,
    DiagnosticsSweep,
}

impl ExperimentKind {
    /// Tag folded into every seed derived for this kind of experiment.
    pub(crate) fn seed_tag(self) -> u64 {
        match self {
            Self::LevelStudy => 1,
            Self::BootstrapKs => 2,
            Self::LimitLaw => 3,
            Self::DiagnosticsSweep => 4,
        }
    }
}

/// Replaces the bootstrap column of a KS study by fresh draws of `V_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfTest {
    #[default]
    Off,
    /// Fresh datasets on streams disjoint from the truth column.
    Independent,
    /// The first `b_replicates` datasets of the truth column itself.
    Shared,
}

pub const DEFAULT_B_REPLICATES: usize = 2000;
pub const DEFAULT_BOOTSTRAP_DATASETS: usize = 10;
pub const DEFAULT_LIMIT_TRUNCATION: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub model: SpectralModel,
    pub truncation: TruncationRule,
    pub n_grid: Vec<usize>,
    pub m_datasets: usize,
    pub b_replicates: usize,
    pub alpha_list: Vec<f64>,
    pub master_seed: u64,
    /// Number of fixed datasets whose bootstrap law is compared to the truth.
    pub bootstrap_datasets: usize,
    pub self_test: SelfTest,
    pub epsilon_grid: Vec<f64>,
    /// Coordinates used for Lindeberg terms; `None` means all `d_n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_projection: Option<usize>,
    /// Terms kept in the reference law when `d_n` grows with `n`.
    pub limit_truncation: usize,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind, model: SpectralModel, truncation: TruncationRule, master_seed: u64) -> Self {
        Self {
            kind,
            model,
            truncation,
            n_grid: vec![100],
            m_datasets: 100,
            b_replicates: DEFAULT_B_REPLICATES,
            alpha_list: vec![0.05],
            master_seed,
            bootstrap_datasets: DEFAULT_BOOTSTRAP_DATASETS,
            self_test: SelfTest::Off,
            epsilon_grid: DEFAULT_EPSILON_GRID.to_vec(),
            l_projection: None,
            limit_truncation: DEFAULT_LIMIT_TRUNCATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        self.model.validate()?;
        self.truncation.validate()?;
        if self.n_grid.is_empty() {
            return fail("n_grid must not be empty".into());
        }
        if self.n_grid.contains(&0) {
            return fail("n_grid entries must be ≥ 1".into());
        }
        if self.m_datasets == 0 {
            return fail("m_datasets must be ≥ 1".into());
        }
        if self.b_replicates == 0 {
            return fail("b_replicates must be ≥ 1".into());
        }
        if self.alpha_list.is_empty() {
            return fail("alpha_list must not be empty".into());
        }
        if let Some(a) = self.alpha_list.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return fail(format!("alpha_list entries must lie in (0, 1) (got {a})"));
        }
        if self.bootstrap_datasets == 0 {
            return fail("bootstrap_datasets must be ≥ 1".into());
        }
        if self.epsilon_grid.is_empty() {
            return fail("epsilon_grid must not be empty".into());
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return fail(format!("epsilon_grid entries must be > 0 (got {e})"));
        }
        if self.l_projection == Some(0) {
            return fail("l_projection must be ≥ 1".into());
        }
        if self.limit_truncation == 0 {
            return fail("limit_truncation must be ≥ 1".into());
        }
        Ok(())
    }

    /// Parses and validates a plan file.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let file: PlanFile = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let plan = file.into_plan()?;
        plan.validate()?;
        Ok(plan)
    }
}

/// The on-disk plan: flat TOML keys with scalar and list values.
///
/// ```toml
/// kind = "level_study"       # level_study | bootstrap_ks | limit_law | diagnostics_sweep
/// master_seed = 42
/// n_grid = [200]
/// m_datasets = 2000
/// b_replicates = 1000
/// alpha_list = [0.05, 0.10]
/// spectrum = "list"          # list | power
/// spectrum_list = [1, 1, 1, 1, 1]
/// innovation = "gaussian"    # gaussian | rademacher | student_t
/// truncation = "fixed"       # fixed | power | log
/// truncation_d = 5
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    kind: ExperimentKind,
    master_seed: u64,
    n_grid: Vec<usize>,
    m_datasets: usize,
    b_replicates: Option<usize>,
    alpha_list: Option<Vec<f64>>,

    spectrum: String,
    spectrum_c: Option<f64>,
    spectrum_gamma: Option<f64>,
    spectrum_list: Option<Vec<f64>>,
    innovation: Option<String>,
    student_nu: Option<f64>,
    shift_magnitude: Option<f64>,
    shift_direction: Option<Vec<f64>>,
    rotation_seed: Option<u64>,

    truncation: String,
    truncation_d: Option<usize>,
    truncation_beta: Option<f64>,

    bootstrap_datasets: Option<usize>,
    self_test: Option<SelfTest>,
    epsilon_grid: Option<Vec<f64>>,
    l_projection: Option<usize>,
    limit_truncation: Option<usize>,
}

fn required<T>(value: Option<T>, key: &str, context: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidConfig(format!("{key} is required when {context}")))
}

impl PlanFile {
    fn into_plan(self) -> Result<ExperimentPlan> {
        let decay = match self.spectrum.as_str() {
            "power" => EigenvalueDecay::Power {
                c: self.spectrum_c.unwrap_or(1.0),
                gamma: required(self.spectrum_gamma, "spectrum_gamma", "spectrum = \"power\"")?,
            },
            "list" => EigenvalueDecay::Finite {
                lambdas: required(self.spectrum_list, "spectrum_list", "spectrum = \"list\"")?,
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "spectrum: expected \"power\" or \"list\", got {other:?}"
                )))
            }
        };
        let innovation = match self.innovation.as_deref().unwrap_or("gaussian") {
            "gaussian" => Innovation::Gaussian,
            "rademacher" => Innovation::Rademacher,
            "student_t" => Innovation::StudentT {
                nu: required(self.student_nu, "student_nu", "innovation = \"student_t\"")?,
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "innovation: expected \"gaussian\", \"rademacher\" or \"student_t\", got {other:?}"
                )))
            }
        };
        let mean_shift = match (self.shift_magnitude, self.shift_direction) {
            (None, None) => None,
            (Some(magnitude), direction) => Some(MeanShift {
                direction: direction.unwrap_or_else(|| vec![1.0]),
                magnitude,
            }),
            (None, Some(_)) => {
                return Err(Error::InvalidConfig(
                    "shift_magnitude is required when shift_direction is given".into(),
                ))
            }
        };
        let truncation = match self.truncation.as_str() {
            "fixed" => TruncationRule::Fixed {
                d: required(self.truncation_d, "truncation_d", "truncation = \"fixed\"")?,
            },
            "power" => TruncationRule::Power {
                beta: required(self.truncation_beta, "truncation_beta", "truncation = \"power\"")?,
            },
            "log" => TruncationRule::Log,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "truncation: expected \"fixed\", \"power\" or \"log\", got {other:?}"
                )))
            }
        };
        let model = SpectralModel {
            decay,
            innovation,
            mean_shift,
            rotation_seed: self.rotation_seed,
        };
        let mut plan = ExperimentPlan::new(self.kind, model, truncation, self.master_seed);
        plan.n_grid = self.n_grid;
        plan.m_datasets = self.m_datasets;
        plan.b_replicates = self.b_replicates.unwrap_or(DEFAULT_B_REPLICATES);
        if let Some(a) = self.alpha_list {
            plan.alpha_list = a;
        }
        plan.bootstrap_datasets = self.bootstrap_datasets.unwrap_or(DEFAULT_BOOTSTRAP_DATASETS);
        plan.self_test = self.self_test.unwrap_or_default();
        if let Some(g) = self.epsilon_grid {
            plan.epsilon_grid = g;
        }
        plan.l_projection = self.l_projection;
        plan.limit_truncation = self.limit_truncation.unwrap_or(DEFAULT_LIMIT_TRUNCATION);
        Ok(plan)
    }
}
