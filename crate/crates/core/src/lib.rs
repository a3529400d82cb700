//! Bootstrap test for the mean of a (possibly high-dimensional) random vector.
//!
//! The test statistic is `V_n = n‖X̄_n − μ₀‖²`. Its null law is approximated
//! by Efron's bootstrap of the centered sample, and `H₀: μ = μ₀` is rejected
//! when `V_n` exceeds the upper `(1−α)` quantile of the bootstrap replicates.
//! Under `H₀` the statistic converges to `Σ λ_i N_i²` with `λ_i` the
//! covariance eigenvalues, which [`limit`] samples by Monte Carlo. The
//! [`sequence`] module generates data whose dimension grows with `n`, and
//! [`harness`] runs the simulation studies that check all of this empirically.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod limit;
pub mod linalg;
pub mod rng;
pub mod sequence;
pub mod statistic;

pub use diagnostics::{full_report, lindeberg_term, DiagnosticsReport, DEFAULT_EPSILON_GRID};
pub use error::{Error, Result};
pub use harness::{run_plan, Cell, ExperimentKind, ExperimentPlan, ExperimentReport, Metric};
pub use limit::{ks_distance, EmpiricalCdf, WeightedChiSquare};
pub use linalg::{eigen_symmetric, mean, sample_covariance_biased, Sample, Spectrum, SymmetricMatrix};
pub use sequence::{EigenvalueDecay, Innovation, MeanShift, SpectralModel, TruncationRule};
pub use statistic::{bootstrap_distribution, run_test, v_statistic, BootstrapResult, TestConfig};
