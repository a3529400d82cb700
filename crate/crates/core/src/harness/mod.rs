//! Seed-deterministic simulation experiments.
//!
//! Every dataset, bootstrap run and reference sample draws from a stream
//! seeded by `derive_seed(master_seed, [kind, n-index, dataset-index, purpose])`,
//! so a cell's numbers depend only on the plan. Datasets within a cell are
//! evaluated in parallel and reduced in index order.

mod plan;
mod report;

use std::time::Instant;

use rayon::prelude::*;

pub use plan::{ExperimentKind, ExperimentPlan, SelfTest};
pub use report::{Cell, ExperimentReport, Metric};

use crate::diagnostics::full_report;
use crate::error::{Error, Result};
use crate::limit::{ks_distance, ks_noise_floor, EmpiricalCdf};
use crate::linalg::Sample;
use crate::rng::{derive_seed, stream};
use crate::sequence::{dn_of, generate_sample};
use crate::statistic::{critical_value, v_statistic, Resampler};

/// Standard deviation of the Kolmogorov distribution; times `√((m+b)/(mb))`
/// it is the null standard deviation of a two-sample KS distance.
const KOLMOGOROV_SD: f64 = 0.2748;

mod purpose {
    pub const DATA: u64 = 0;
    pub const BOOTSTRAP: u64 = 1;
    pub const TRUTH: u64 = 2;
    pub const LIMIT: u64 = 3;
    pub const SELF_TEST: u64 = 4;
}

/// Runs `plan`, calling `progress` as each cell completes.
pub fn run_plan(plan: &ExperimentPlan, progress: &mut dyn FnMut(&Cell)) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut runner = Runner {
        plan,
        cells: Vec::new(),
        progress,
    };
    for (ni, &n) in plan.n_grid.iter().enumerate() {
        let d = dn_of(plan.truncation, n);
        let started = Instant::now();
        let outcome = match plan.kind {
            ExperimentKind::LevelStudy => level_cells(plan, ni, n, d),
            ExperimentKind::BootstrapKs => bootstrap_ks_cells(plan, ni, n, d),
            ExperimentKind::LimitLaw => limit_law_cells(plan, ni, n, d),
            ExperimentKind::DiagnosticsSweep => diagnostics_cells(plan, ni, n, d),
        };
        let elapsed = started.elapsed().as_secs_f64();
        runner.push(n, d, outcome, elapsed);
    }
    let complete = runner.cells.iter().all(|c| c.error.is_none());
    Ok(ExperimentReport {
        software: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        kind: plan.kind,
        master_seed: plan.master_seed,
        complete,
        plan: plan.clone(),
        cells: runner.cells,
    })
}

fn expect_kind(plan: &ExperimentPlan, kind: ExperimentKind) -> Result<()> {
    if plan.kind != kind {
        return Err(Error::InvalidConfig(format!(
            "plan kind is {:?}, expected {kind:?}",
            plan.kind
        )));
    }
    Ok(())
}

/// Rejection rates of the bootstrap test per `(n, α)`.
pub fn run_level_study(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    expect_kind(plan, ExperimentKind::LevelStudy)?;
    run_plan(plan, &mut |_| {})
}

/// Mean KS distance between bootstrap laws and the sampling law of `V_n`.
pub fn run_bootstrap_ks(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    expect_kind(plan, ExperimentKind::BootstrapKs)?;
    run_plan(plan, &mut |_| {})
}

/// KS distance between the law of `V_n(d_n)` and the weighted chi-square limit.
pub fn run_limit_law(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    expect_kind(plan, ExperimentKind::LimitLaw)?;
    run_plan(plan, &mut |_| {})
}

/// Mean Lindeberg terms and traces per `n`.
pub fn run_diagnostics_sweep(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    expect_kind(plan, ExperimentKind::DiagnosticsSweep)?;
    run_plan(plan, &mut |_| {})
}

/// Cell contents before bookkeeping fields are attached.
struct Partial {
    alpha: Option<f64>,
    epsilon: Option<f64>,
    metric: Metric,
    value: f64,
    stderr: f64,
    reference: Option<f64>,
}

struct Runner<'a> {
    plan: &'a ExperimentPlan,
    cells: Vec<Cell>,
    progress: &'a mut dyn FnMut(&Cell),
}

impl Runner<'_> {
    fn push(&mut self, n: usize, d_n: usize, outcome: Result<Vec<Partial>>, elapsed: f64) {
        let partials = match outcome {
            Ok(p) => p,
            Err(e) => {
                let cell = Cell {
                    index: self.cells.len(),
                    n,
                    d_n,
                    alpha: None,
                    epsilon: None,
                    metric: default_metric(self.plan.kind),
                    value: 0.0,
                    stderr: 0.0,
                    reference: None,
                    wall_time_secs: elapsed,
                    error: Some(e.to_string()),
                };
                (self.progress)(&cell);
                self.cells.push(cell);
                return;
            }
        };
        for p in partials {
            let cell = Cell {
                index: self.cells.len(),
                n,
                d_n,
                alpha: p.alpha,
                epsilon: p.epsilon,
                metric: p.metric,
                value: p.value,
                stderr: p.stderr,
                reference: p.reference,
                wall_time_secs: elapsed,
                error: None,
            };
            (self.progress)(&cell);
            self.cells.push(cell);
        }
    }
}

fn default_metric(kind: ExperimentKind) -> Metric {
    match kind {
        ExperimentKind::LevelStudy => Metric::RejectionRate,
        ExperimentKind::BootstrapKs | ExperimentKind::LimitLaw => Metric::KsDistance,
        ExperimentKind::DiagnosticsSweep => Metric::MeanLindeberg,
    }
}

fn seed(plan: &ExperimentPlan, ni: usize, index: usize, purpose: u64) -> u64 {
    derive_seed(
        plan.master_seed,
        &[plan.kind.seed_tag(), ni as u64, index as u64, purpose],
    )
}

fn dataset(plan: &ExperimentPlan, ni: usize, index: usize, purpose: u64, n: usize, d: usize) -> Result<Sample> {
    generate_sample(&plan.model, n, d, &mut stream(seed(plan, ni, index, purpose), 0))
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn level_cells(plan: &ExperimentPlan, ni: usize, n: usize, d: usize) -> Result<Vec<Partial>> {
    let mu0 = vec![0.0; d];
    let decisions = (0..plan.m_datasets)
        .into_par_iter()
        .map(|ds| {
            let sample = dataset(plan, ni, ds, purpose::DATA, n, d)?;
            let statistic = v_statistic(&sample, &mu0)?;
            let replicates = Resampler::new(&sample)
                .replicates(plan.b_replicates, seed(plan, ni, ds, purpose::BOOTSTRAP));
            let ecdf = EmpiricalCdf::new(replicates)?;
            plan.alpha_list
                .iter()
                .map(|&alpha| Ok(statistic > critical_value(&ecdf, alpha)?))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let m = plan.m_datasets as f64;
    Ok(plan
        .alpha_list
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let rate = decisions.iter().filter(|d| d[ai]).count() as f64 / m;
            Partial {
                alpha: Some(alpha),
                epsilon: None,
                metric: Metric::RejectionRate,
                value: rate,
                stderr: (rate * (1.0 - rate) / m).sqrt(),
                reference: Some(alpha),
            }
        })
        .collect())
}

/// `V_n` centered at the true mean on datasets `0..count` of `purpose`.
fn statistic_law(
    plan: &ExperimentPlan,
    ni: usize,
    n: usize,
    d: usize,
    count: usize,
    purpose: u64,
) -> Result<Vec<f64>> {
    let mu = plan.model.mean_vector(d);
    (0..count)
        .into_par_iter()
        .map(|ds| v_statistic(&dataset(plan, ni, ds, purpose, n, d)?, &mu))
        .collect()
}

fn bootstrap_ks_cells(plan: &ExperimentPlan, ni: usize, n: usize, d: usize) -> Result<Vec<Partial>> {
    let truth = EmpiricalCdf::new(statistic_law(plan, ni, n, d, plan.m_datasets, purpose::TRUTH)?)?;
    let b = plan.b_replicates;
    let distances = (0..plan.bootstrap_datasets)
        .map(|omega| {
            let column = match plan.self_test {
                SelfTest::Off => {
                    let sample = dataset(plan, ni, omega, purpose::DATA, n, d)?;
                    Resampler::new(&sample).replicates(b, seed(plan, ni, omega, purpose::BOOTSTRAP))
                }
                SelfTest::Independent => {
                    let tag = purpose::SELF_TEST + 16 * omega as u64;
                    statistic_law(plan, ni, n, d, b, tag)?
                }
                SelfTest::Shared => statistic_law(plan, ni, n, d, b, purpose::TRUTH)?,
            };
            Ok(ks_distance(&truth, &EmpiricalCdf::new(column)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (value, stderr) = mean_and_stderr(&distances);
    Ok(vec![Partial {
        alpha: None,
        epsilon: None,
        metric: Metric::KsDistance,
        value,
        stderr,
        reference: Some(ks_noise_floor(plan.m_datasets, b)),
    }])
}

fn limit_law_cells(plan: &ExperimentPlan, ni: usize, n: usize, d: usize) -> Result<Vec<Partial>> {
    let m = plan.m_datasets;
    let observed = EmpiricalCdf::new(statistic_law(plan, ni, n, d, m, purpose::DATA)?)?;
    let terms = if plan.truncation.is_growing() {
        plan.limit_truncation.max(d)
    } else {
        d
    };
    let law = plan.model.decay.limit_law(terms)?;
    let reference = EmpiricalCdf::new(law.sample_seeded(m, seed(plan, ni, 0, purpose::LIMIT)))?;
    let mf = m as f64;
    Ok(vec![Partial {
        alpha: None,
        epsilon: None,
        metric: Metric::KsDistance,
        value: ks_distance(&observed, &reference),
        stderr: KOLMOGOROV_SD * (2.0 / mf).sqrt(),
        reference: Some(ks_noise_floor(m, m)),
    }])
}

fn diagnostics_cells(plan: &ExperimentPlan, ni: usize, n: usize, d: usize) -> Result<Vec<Partial>> {
    let l = plan.l_projection.unwrap_or(d).min(d);
    let reports = (0..plan.m_datasets)
        .into_par_iter()
        .map(|ds| full_report(&dataset(plan, ni, ds, purpose::DATA, n, d)?, &plan.epsilon_grid, l, &[]))
        .collect::<Result<Vec<_>>>()?;
    let mut cells: Vec<Partial> = plan
        .epsilon_grid
        .iter()
        .enumerate()
        .map(|(ei, &eps)| {
            let values: Vec<f64> = reports.iter().map(|r| r.lindeberg[ei].1).collect();
            let (value, stderr) = mean_and_stderr(&values);
            Partial {
                alpha: None,
                epsilon: Some(eps),
                metric: Metric::MeanLindeberg,
                value,
                stderr,
                reference: None,
            }
        })
        .collect();
    let traces: Vec<f64> = reports.iter().map(|r| r.trace_sum).collect();
    let (value, stderr) = mean_and_stderr(&traces);
    cells.push(Partial {
        alpha: None,
        epsilon: None,
        metric: Metric::MeanTrace,
        value,
        stderr,
        reference: Some(plan.model.decay.partial_trace(d)),
    });
    Ok(cells)
}
