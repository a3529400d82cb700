//! The statistic `V_n = n‖X̄_n − μ₀‖²`, its Efron bootstrap and the
//! resulting test decision.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::EmpiricalCdf;
use crate::linalg::{centered_rows, mean, Sample};
use crate::rng::stream;

/// Parameters of one bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub b_replicates: usize,
    pub seed: u64,
    /// Hypothesized mean; `None` means the origin.
    pub mu0: Option<Vec<f64>>,
}

impl TestConfig {
    pub fn new(alpha: f64, b_replicates: usize, seed: u64) -> Result<Self> {
        let config = Self {
            alpha,
            b_replicates,
            seed,
            mu0: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_mu0(mut self, mu0: Vec<f64>) -> Self {
        self.mu0 = Some(mu0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidProbability(self.alpha));
        }
        if self.b_replicates == 0 {
            return Err(Error::InvalidConfig("b_replicates must be ≥ 1".into()));
        }
        if let Some(mu0) = &self.mu0 {
            if mu0.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig("mu0 entries must be finite".into()));
            }
        }
        Ok(())
    }

    /// `mu0` resolved against dimension `d`.
    pub fn mu0_for(&self, d: usize) -> Result<Vec<f64>> {
        match &self.mu0 {
            None => Ok(vec![0.0; d]),
            Some(m) if m.len() == d => Ok(m.clone()),
            Some(m) => Err(Error::DimensionMismatch {
                expected: d,
                found: m.len(),
            }),
        }
    }
}

/// Bootstrap replicates, the critical value derived from them and the decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Replicate `j` in position `j`, i.e. in generation order.
    pub replicates: Vec<f64>,
    pub quantile: f64,
    pub p_value: f64,
    pub statistic: f64,
    pub reject: bool,
}

impl BootstrapResult {
    /// Applies the decision rule at level `alpha` to precomputed replicates.
    ///
    /// The critical value is the order statistic of rank `⌈(1−α)B⌉`, the
    /// p-value is `(1 + #{V* ≥ V}) / (B + 1)`, and `H₀` is rejected only when
    /// the statistic strictly exceeds the critical value.
    pub fn from_replicates(statistic: f64, replicates: Vec<f64>, alpha: f64) -> Result<Self> {
        let ecdf = EmpiricalCdf::new(replicates.clone())?;
        Self::decide(statistic, replicates, &ecdf, alpha)
    }

    pub(crate) fn decide(
        statistic: f64,
        replicates: Vec<f64>,
        ecdf: &EmpiricalCdf,
        alpha: f64,
    ) -> Result<Self> {
        let quantile = critical_value(ecdf, alpha)?;
        let b = ecdf.size();
        let exceed = b - ecdf.values().partition_point(|&v| v < statistic);
        Ok(Self {
            replicates,
            quantile,
            p_value: (1 + exceed) as f64 / (b + 1) as f64,
            statistic,
            reject: statistic > quantile,
        })
    }
}

/// `c*_{n,α}`: the upper `(1−α)` empirical quantile of the replicates.
pub fn critical_value(replicates: &EmpiricalCdf, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProbability(alpha));
    }
    replicates.quantile(1.0 - alpha)
}

/// `n ‖X̄_n − μ₀‖²`, computed on the centered data `X_i − μ₀`.
pub fn v_statistic(sample: &Sample, mu0: &[f64]) -> Result<f64> {
    let centered = sample.shifted(mu0)?;
    Ok(sample.n() as f64 * squared_norm(&mean(&centered)))
}

fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Precomputed rows `X_i − X̄_n` from which bootstrap replicates are drawn.
#[derive(Debug, Clone)]
pub struct Resampler {
    n: usize,
    d: usize,
    centered: Vec<f64>,
}

impl Resampler {
    pub fn new(sample: &Sample) -> Self {
        Self {
            n: sample.n(),
            d: sample.d(),
            centered: centered_rows(sample),
        }
    }

    /// One value of `V*_n`: draws `n` indices uniformly with replacement and
    /// returns `n ‖n⁻¹ Σ_k (X_{i_k} − X̄_n)‖²`.
    pub fn replicate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut acc = vec![0.0; self.d];
        for _ in 0..self.n {
            let i = rng.random_range(0..self.n);
            let row = &self.centered[i * self.d..(i + 1) * self.d];
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        // n ‖acc / n‖² = ‖acc‖² / n
        squared_norm(&acc) / self.n as f64
    }

    /// Replicates `0..b`, replicate `j` drawn from `stream(seed, j)`.
    pub fn replicates(&self, b: usize, seed: u64) -> Vec<f64> {
        (0..b)
            .into_par_iter()
            .map(|j| self.replicate(&mut stream(seed, j as u64)))
            .collect()
    }
}

/// A single bootstrap replicate of `V_n` using `rng` for the resampling indices.
pub fn bootstrap_replicate<R: Rng + ?Sized>(sample: &Sample, rng: &mut R) -> f64 {
    Resampler::new(sample).replicate(rng)
}

/// `B` replicates from the seed-derived streams plus the decision at `config.alpha`.
pub fn bootstrap_distribution(sample: &Sample, config: &TestConfig) -> Result<BootstrapResult> {
    config.validate()?;
    let mu0 = config.mu0_for(sample.d())?;
    let statistic = v_statistic(sample, &mu0)?;
    let replicates = Resampler::new(sample).replicates(config.b_replicates, config.seed);
    BootstrapResult::from_replicates(statistic, replicates, config.alpha)
}

/// The bootstrap test of `H₀: μ = μ₀`. Works unchanged on a truncated
/// `d_n`-column sample in the high-dimensional regime.
pub fn run_test(sample: &Sample, config: &TestConfig) -> Result<BootstrapResult> {
    bootstrap_distribution(sample, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(rows: &[&[f64]]) -> Sample {
        Sample::from_rows(rows).unwrap()
    }

    #[test]
    fn v_statistic_examples() {
        let s = sample(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(v_statistic(&s, &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(v_statistic(&s, &[0.5, 0.5]).unwrap(), 0.0);
        let s = sample(&[&[3.0, 4.0]]);
        assert_eq!(v_statistic(&s, &[0.0, 0.0]).unwrap(), 25.0);
    }

    #[test]
    fn v_statistic_at_sample_mean_is_negligible() {
        let s = sample(&[&[0.3, -1.7], &[2.2, 0.4], &[-0.9, 5.1]]);
        let m = mean(&s);
        assert!(v_statistic(&s, &m).unwrap() < 1e-28);
    }

    #[test]
    fn v_statistic_dimension_mismatch() {
        let s = sample(&[&[1.0, 2.0]]);
        assert_eq!(
            v_statistic(&s, &[0.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn single_observation_replicates_are_zero() {
        let s = sample(&[&[3.0, -2.0]]);
        let mut rng = stream(1, 0);
        for _ in 0..20 {
            assert_eq!(bootstrap_replicate(&s, &mut rng), 0.0);
        }
    }

    #[test]
    fn identical_rows_give_degenerate_result() {
        let s = sample(&[&[0.1, 2.0], &[0.1, 2.0], &[0.1, 2.0]]);
        let config = TestConfig::new(0.05, 50, 3).unwrap().with_mu0(vec![0.1, 2.0]);
        let r = bootstrap_distribution(&s, &config).unwrap();
        assert!(r.replicates.iter().all(|&v| v == 0.0));
        assert_eq!(r.quantile, 0.0);
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn two_point_replicates_take_values_zero_or_two() {
        let s = sample(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let config = TestConfig::new(0.25, 4000, 11).unwrap();
        let r = bootstrap_distribution(&s, &config).unwrap();
        assert!(r.replicates.iter().all(|&v| v == 0.0 || v == 2.0));
        let twos = r.replicates.iter().filter(|&&v| v == 2.0).count() as f64 / 4000.0;
        // binomial sd 0.0079
        assert!((twos - 0.5).abs() < 0.04);
        assert_eq!(r.quantile, 2.0);
    }

    #[test]
    fn quantile_uses_upper_order_statistic() {
        let reps: Vec<f64> = (1..=2000).rev().map(f64::from).collect();
        let r = BootstrapResult::from_replicates(0.0, reps, 0.05).unwrap();
        assert_eq!(r.quantile, 1900.0);
    }

    #[test]
    fn ties_do_not_reject_and_count_in_p_value() {
        let r = BootstrapResult::from_replicates(3.0, vec![1.0, 2.0, 3.0, 3.0], 0.25).unwrap();
        assert_eq!(r.quantile, 3.0);
        assert!(!r.reject);
        assert_eq!(r.p_value, 3.0 / 5.0);
    }

    #[test]
    fn large_shift_rejects() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| (0..4).map(|k| 10.0 + 1e-3 * ((i * 7 + k * 3) % 11) as f64).collect())
            .collect();
        let s = Sample::from_rows(&rows).unwrap();
        let r = run_test(&s, &TestConfig::new(0.05, 500, 5).unwrap()).unwrap();
        assert!(r.reject);
        assert_eq!(r.p_value, 1.0 / 501.0);
    }

    #[test]
    fn config_validation() {
        assert!(TestConfig::new(0.0, 10, 1).is_err());
        assert!(TestConfig::new(1.0, 10, 1).is_err());
        assert!(TestConfig::new(0.05, 0, 1).is_err());
        let s = sample(&[&[1.0, 2.0]]);
        let c = TestConfig::new(0.05, 10, 1).unwrap().with_mu0(vec![1.0]);
        assert!(matches!(
            bootstrap_distribution(&s, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distribution_is_thread_count_independent() {
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos(), i as f64 * 0.01])
            .collect();
        let s = Sample::from_rows(&rows).unwrap();
        let config = TestConfig::new(0.1, 300, 99).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| bootstrap_distribution(&s, &config).unwrap());
        let b = four.install(|| bootstrap_distribution(&s, &config).unwrap());
        assert_eq!(a, b);
    }

    fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..15)
    }

    proptest! {
        #[test]
        fn centering_invariance(rows in rows_strategy(), mu0 in proptest::collection::vec(-5.0f64..5.0, 3)) {
            let s = Sample::from_rows(&rows).unwrap();
            let moved = s.shifted(&mu0).unwrap();
            prop_assert_eq!(v_statistic(&s, &mu0).unwrap(), v_statistic(&moved, &[0.0; 3]).unwrap());
        }

        #[test]
        fn p_value_bounds_and_replicates_nonnegative(rows in rows_strategy(), seed in any::<u64>(), b in 1usize..60) {
            let s = Sample::from_rows(&rows).unwrap();
            let r = bootstrap_distribution(&s, &TestConfig::new(0.1, b, seed).unwrap()).unwrap();
            prop_assert!(r.replicates.iter().all(|&v| v >= 0.0));
            prop_assert!(r.p_value >= 1.0 / (b as f64 + 1.0) && r.p_value <= 1.0);
            prop_assert_eq!(r.reject, r.statistic > r.quantile);
        }

        #[test]
        fn quantile_monotone_in_alpha(
            reps in proptest::collection::vec(0.0f64..10.0, 1..50),
            a1 in 0.001f64..0.999,
            a2 in 0.001f64..0.999,
        ) {
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            let e = EmpiricalCdf::new(reps).unwrap();
            prop_assert!(critical_value(&e, lo).unwrap() >= critical_value(&e, hi).unwrap());
        }
    }
}
