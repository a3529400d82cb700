//! Data generation in sequence space.
//!
//! Observations are the first `d` coordinates of an `l²`-valued random
//! sequence `Z = μ + (√λ_k ε_k)_k` with i.i.d. standardized innovations
//! `ε_k`, so the covariance operator is `diag(λ_1, λ_2, ...)`. An optional
//! fixed random rotation turns this into a dense covariance with the same
//! eigenvalues.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::WeightedChiSquare;
use crate::linalg::{Sample, SymmetricMatrix};
use crate::rng::{gamma, stream, PolarNormal};

/// The eigenvalue sequence of the covariance operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EigenvalueDecay {
    /// `λ_k = c · k^(−γ)` for `k = 1, 2, ...`; trace class iff `γ > 1`.
    Power { c: f64, gamma: f64 },
    /// Finitely many nonzero eigenvalues; `λ_k = 0` past the end of the list.
    Finite { lambdas: Vec<f64> },
}

impl EigenvalueDecay {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Power { c, gamma } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidModel(format!("scale c must be > 0 (got {c})")));
                }
                if !(gamma.is_finite() && *gamma > 1.0) {
                    return Err(Error::InvalidModel(format!(
                        "decay exponent gamma must be > 1 for a trace-class covariance (got {gamma})"
                    )));
                }
            }
            Self::Finite { lambdas } => {
                if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
                    return Err(Error::InvalidModel(format!(
                        "eigenvalues must be finite and nonnegative (got {bad})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `λ_k` for 1-based `k`.
    pub fn lambda(&self, k: usize) -> f64 {
        match self {
            Self::Power { c, gamma } => c * (k as f64).powf(-gamma),
            Self::Finite { lambdas } => lambdas.get(k - 1).copied().unwrap_or(0.0),
        }
    }

    /// `(λ_1, ..., λ_d)`.
    pub fn leading(&self, d: usize) -> Vec<f64> {
        (1..=d).map(|k| self.lambda(k)).collect()
    }

    /// `Σ_{k ≤ d} λ_k`.
    pub fn partial_trace(&self, d: usize) -> f64 {
        self.leading(d).iter().sum()
    }

    /// `Σ_{k > l} λ_k`.
    pub fn tail_after(&self, l: usize) -> f64 {
        match self {
            Self::Finite { lambdas } => lambdas.iter().skip(l).sum(),
            Self::Power { c, gamma } => {
                // explicit terms, then Euler–Maclaurin for Σ_{k ≥ K} c k^(−γ)
                let big_k = l + 10_000;
                let explicit: f64 = (l + 1..big_k).map(|k| self.lambda(k)).sum();
                let kf = big_k as f64;
                let integral = c * kf.powf(1.0 - gamma) / (gamma - 1.0);
                let correction = 0.5 * c * kf.powf(-gamma) + c * gamma * kf.powf(-gamma - 1.0) / 12.0;
                explicit + integral + correction
            }
        }
    }

    /// The limit law truncated after `l` terms, with the omitted mass recorded.
    pub fn limit_law(&self, l: usize) -> Result<WeightedChiSquare> {
        WeightedChiSquare::with_tail(self.leading(l), self.tail_after(l))
    }
}

/// Law of the standardized innovations `ε` (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Innovation {
    Gaussian,
    Rademacher,
    /// Student t with `nu ≥ 3` degrees of freedom, scaled by `√((ν−2)/ν)`.
    StudentT { nu: f64 },
}

impl Innovation {
    pub fn validate(&self) -> Result<()> {
        if let Self::StudentT { nu } = self {
            if !(nu.is_finite() && *nu >= 3.0) {
                return Err(Error::InvalidModel(format!(
                    "student_t degrees of freedom must be ≥ 3 (got {nu})"
                )));
            }
        }
        Ok(())
    }

    /// Largest attainable `|ε|`, if bounded.
    pub fn bound(&self) -> Option<f64> {
        match self {
            Self::Rademacher => Some(1.0),
            _ => None,
        }
    }
}

struct InnovationSampler {
    law: Innovation,
    normals: PolarNormal,
}

impl InnovationSampler {
    fn new(law: Innovation) -> Self {
        Self {
            law,
            normals: PolarNormal::new(),
        }
    }

    fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        match self.law {
            Innovation::Gaussian => self.normals.sample(rng),
            Innovation::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Innovation::StudentT { nu } => {
                let z = self.normals.sample(rng);
                let chi2 = 2.0 * gamma(0.5 * nu, &mut self.normals, rng);
                z / (chi2 / nu).sqrt() * ((nu - 2.0) / nu).sqrt()
            }
        }
    }
}

/// Mean `δ · e` with `e` the normalized `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanShift {
    pub direction: Vec<f64>,
    pub magnitude: f64,
}

impl MeanShift {
    pub fn validate(&self) -> Result<()> {
        let norm = l2_norm(&self.direction);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidModel("mean shift direction must be a nonzero finite vector".into()));
        }
        if !self.magnitude.is_finite() {
            return Err(Error::InvalidModel("mean shift magnitude must be finite".into()));
        }
        Ok(())
    }
}

/// A data-generating process for observations in `l²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub decay: EigenvalueDecay,
    pub innovation: Innovation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_shift: Option<MeanShift>,
    /// Seed of a random orthogonal matrix `Q`; when set, rows are `μ + Q z`
    /// and the covariance is `Q diag(λ) Qᵀ` instead of `diag(λ)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_seed: Option<u64>,
}

impl SpectralModel {
    pub fn new(decay: EigenvalueDecay, innovation: Innovation) -> Self {
        Self {
            decay,
            innovation,
            mean_shift: None,
            rotation_seed: None,
        }
    }

    pub fn gaussian_identity(d: usize) -> Self {
        Self::new(
            EigenvalueDecay::Finite {
                lambdas: vec![1.0; d],
            },
            Innovation::Gaussian,
        )
    }

    pub fn with_mean_shift(mut self, shift: MeanShift) -> Self {
        self.mean_shift = Some(shift);
        self
    }

    pub fn with_rotation(mut self, seed: u64) -> Self {
        self.rotation_seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.decay.validate()?;
        self.innovation.validate()?;
        if let Some(shift) = &self.mean_shift {
            shift.validate()?;
        }
        Ok(())
    }

    /// First `d` coordinates of the mean.
    pub fn mean_vector(&self, d: usize) -> Vec<f64> {
        let mut mu = vec![0.0; d];
        if let Some(shift) = &self.mean_shift {
            let norm = l2_norm(&shift.direction);
            for (m, e) in mu.iter_mut().zip(&shift.direction) {
                *m = shift.magnitude * e / norm;
            }
        }
        mu
    }

    /// Covariance of the first `d` coordinates.
    pub fn covariance(&self, d: usize) -> SymmetricMatrix {
        let lambdas = self.decay.leading(d);
        match self.rotation_seed {
            None => SymmetricMatrix::from_diagonal(&lambdas),
            Some(seed) => {
                let q = random_orthogonal(d, seed);
                let mut cov = SymmetricMatrix::zeros(d);
                for k in 0..d {
                    for l in 0..=k {
                        let v = (0..d).map(|j| q[k * d + j] * lambdas[j] * q[l * d + j]).sum();
                        cov.set(k, l, v);
                    }
                }
                cov
            }
        }
    }
}

/// Draws `n` observations of the first `d` coordinates, row by row.
pub fn generate_sample<R: Rng + ?Sized>(
    model: &SpectralModel,
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<Sample> {
    model.validate()?;
    if n == 0 || d == 0 {
        return Err(Error::InvalidSample(format!("need n, d ≥ 1 (got n={n}, d={d})")));
    }
    let scales: Vec<f64> = model.decay.leading(d).iter().map(|l| l.sqrt()).collect();
    let mu = model.mean_vector(d);
    let rotation = model.rotation_seed.map(|seed| random_orthogonal(d, seed));
    let mut innovations = InnovationSampler::new(model.innovation);
    let mut data = Vec::with_capacity(n * d);
    let mut z = vec![0.0; d];
    for _ in 0..n {
        for (zk, s) in z.iter_mut().zip(&scales) {
            *zk = s * innovations.sample(rng);
        }
        match &rotation {
            None => data.extend(z.iter().zip(&mu).map(|(zk, m)| m + zk)),
            Some(q) => data.extend((0..d).map(|k| {
                mu[k] + q[k * d..(k + 1) * d].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()
            })),
        }
    }
    Sample::new(n, d, data)
}

/// Row-major `d × d` orthogonal matrix: Gram–Schmidt applied to a Gaussian matrix.
pub fn random_orthogonal(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, 0);
    let mut normals = PolarNormal::new();
    // columns stored contiguously while orthogonalizing
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| normals.sample(&mut rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= dot * ci;
                }
            }
        }
        let norm = l2_norm(&v);
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut q = vec![0.0; d * d];
    for (j, c) in cols.iter().enumerate() {
        for (k, &x) in c.iter().enumerate() {
            q[k * d + j] = x;
        }
    }
    q
}

/// Rule choosing the number of observed coordinates `d_n` for sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TruncationRule {
    Fixed { d: usize },
    /// `max(1, ⌊n^β⌋)`
    Power { beta: f64 },
    /// `max(1, ⌊log₂ n⌋)`
    Log,
}

impl TruncationRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fixed { d: 0 } => Err(Error::InvalidConfig("fixed truncation needs d ≥ 1".into())),
            Self::Power { beta } if !(beta.is_finite() && *beta > 0.0) => Err(Error::InvalidConfig(
                format!("truncation exponent beta must be > 0 (got {beta})"),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_growing(&self) -> bool {
        !matches!(self, Self::Fixed { .. })
    }
}

/// `d_n` under `rule`.
pub fn dn_of(rule: TruncationRule, n: usize) -> usize {
    let n = n.max(1);
    match rule {
        TruncationRule::Fixed { d } => d.max(1),
        // slack so exact powers such as 100^0.5 are not floored to 9
        TruncationRule::Power { beta } => ((n as f64).powf(beta) + 1e-9).floor().max(1.0) as usize,
        TruncationRule::Log => (n.ilog2() as usize).max(1),
    }
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// The first `l` coordinates of `x` (all of `x` if it is shorter).
pub fn truncate(x: &[f64], l: usize) -> Vec<f64> {
    x[..l.min(x.len())].to_vec()
}

/// `v` followed by zeros up to length `target_len`.
pub fn embed(v: &[f64], target_len: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    if target_len > out.len() {
        out.resize(target_len, 0.0);
    }
    out
}

/// The orthogonal projection onto the first `l` coordinates, kept at the length of `x`.
pub fn project(x: &[f64], l: usize) -> Vec<f64> {
    embed(&truncate(x, l), x.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_covariance_biased;
    use proptest::prelude::*;

    #[test]
    fn dn_examples() {
        assert_eq!(dn_of(TruncationRule::Fixed { d: 7 }, 1000), 7);
        assert_eq!(dn_of(TruncationRule::Power { beta: 0.5 }, 100), 10);
        assert_eq!(dn_of(TruncationRule::Power { beta: 0.5 }, 1600), 40);
        assert_eq!(dn_of(TruncationRule::Log, 1024), 10);
        assert_eq!(dn_of(TruncationRule::Log, 1), 1);
        assert_eq!(dn_of(TruncationRule::Power { beta: 0.1 }, 1), 1);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(truncate(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.0, 2.0]);
        let e = embed(&[1.0, 2.0], 4);
        assert_eq!(e, vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(l2_norm(&e), l2_norm(&[1.0, 2.0]));
        let x = [3.0, -1.0, 2.0];
        assert_eq!(project(&project(&x, 2), 2), project(&x, 2));
    }

    #[test]
    fn zero_spectrum_gives_zero_sample() {
        let model = SpectralModel::new(
            EigenvalueDecay::Finite { lambdas: vec![0.0; 3] },
            Innovation::Gaussian,
        );
        let s = generate_sample(&model, 10, 3, &mut stream(1, 0)).unwrap();
        assert!(s.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_models_rejected() {
        let bad_gamma = SpectralModel::new(EigenvalueDecay::Power { c: 1.0, gamma: 1.0 }, Innovation::Gaussian);
        assert!(matches!(
            generate_sample(&bad_gamma, 5, 2, &mut stream(1, 0)),
            Err(Error::InvalidModel(_))
        ));
        let bad_nu = SpectralModel::new(
            EigenvalueDecay::Power { c: 1.0, gamma: 2.0 },
            Innovation::StudentT { nu: 2.5 },
        );
        assert!(matches!(
            generate_sample(&bad_nu, 5, 2, &mut stream(1, 0)),
            Err(Error::InvalidModel(_))
        ));
        let bad_shift = SpectralModel::gaussian_identity(2).with_mean_shift(MeanShift {
            direction: vec![0.0, 0.0],
            magnitude: 1.0,
        });
        assert!(bad_shift.validate().is_err());
    }

    #[test]
    fn power_decay_covariance_matches() {
        // population covariance diag(1, 1/4, 1/9); entry sd ≤ sqrt(2)/sqrt(n) · λ scale
        let model = SpectralModel::new(EigenvalueDecay::Power { c: 1.0, gamma: 2.0 }, Innovation::Gaussian);
        let s = generate_sample(&model, 100_000, 3, &mut stream(2024, 0)).unwrap();
        let cov = sample_covariance_biased(&s);
        let expect = [[1.0, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 1.0 / 9.0]];
        for (k, row) in expect.iter().enumerate() {
            for (l, e) in row.iter().enumerate() {
                assert!((cov.get(k, l) - e).abs() < 0.02, "({k},{l}) = {}", cov.get(k, l));
            }
        }
    }

    #[test]
    fn identity_model_is_standard_normal() {
        let s = generate_sample(&SpectralModel::gaussian_identity(4), 50_000, 4, &mut stream(8, 0)).unwrap();
        let cov = sample_covariance_biased(&s);
        for k in 0..4 {
            for l in 0..4 {
                let e = if k == l { 1.0 } else { 0.0 };
                assert!((cov.get(k, l) - e).abs() < 0.03);
            }
        }
    }

    #[test]
    fn innovations_are_standardized() {
        for law in [Innovation::Rademacher, Innovation::StudentT { nu: 5.0 }] {
            let model = SpectralModel::new(EigenvalueDecay::Finite { lambdas: vec![1.0] }, law);
            let s = generate_sample(&model, 200_000, 1, &mut stream(3, 0)).unwrap();
            let m = s.as_slice().iter().sum::<f64>() / 2e5;
            let v = s.as_slice().iter().map(|x| x * x).sum::<f64>() / 2e5;
            assert!(m.abs() < 0.015, "{law:?} mean {m}");
            assert!((v - 1.0).abs() < 0.03, "{law:?} var {v}");
        }
    }

    #[test]
    fn mean_shift_and_rotation() {
        let model = SpectralModel::gaussian_identity(3)
            .with_mean_shift(MeanShift {
                direction: vec![3.0, 4.0],
                magnitude: 2.0,
            })
            .with_rotation(17);
        assert_eq!(model.mean_vector(3), vec![1.2, 1.6, 0.0]);
        let q = random_orthogonal(5, 17);
        for a in 0..5 {
            for b in 0..5 {
                let dot: f64 = (0..5).map(|k| q[k * 5 + a] * q[k * 5 + b]).sum();
                assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let cov = model.covariance(3);
        for k in 0..3 {
            for l in 0..3 {
                assert!((cov.get(k, l) - if k == l { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotated_model_keeps_eigenvalues() {
        let model = SpectralModel::new(
            EigenvalueDecay::Finite { lambdas: vec![4.0, 1.0, 0.25] },
            Innovation::Gaussian,
        )
        .with_rotation(5);
        let cov = model.covariance(3);
        assert!(cov.get(0, 1).abs() > 1e-3);
        let spec = crate::linalg::eigen_symmetric(&cov).unwrap();
        for (a, b) in spec.eigenvalues.iter().zip([4.0, 1.0, 0.25]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn power_tail_matches_long_sum() {
        let decay = EigenvalueDecay::Power { c: 1.0, gamma: 2.0 };
        // Σ_{k>5} k^-2 = π²/6 − Σ_{k≤5} k^-2
        let exact = std::f64::consts::PI.powi(2) / 6.0 - decay.partial_trace(5);
        assert!((decay.tail_after(5) - exact).abs() < 1e-12);
        let f = EigenvalueDecay::Finite { lambdas: vec![3.0, 2.0, 1.0] };
        assert_eq!(f.tail_after(1), 3.0);
        assert_eq!(f.tail_after(5), 0.0);
    }

    proptest! {
        #[test]
        fn truncation_is_norm_nonincreasing(x in proptest::collection::vec(-1e3f64..1e3, 1..50), l in 1usize..60) {
            prop_assert!(l2_norm(&truncate(&x, l)) <= l2_norm(&x));
        }

        #[test]
        fn embedding_preserves_norm(v in proptest::collection::vec(-1e3f64..1e3, 1..50), extra in 0usize..50) {
            let e = embed(&v, v.len() + extra);
            prop_assert!((l2_norm(&e) - l2_norm(&v)).abs() <= 1e-12 * (1.0 + l2_norm(&v)));
        }

        #[test]
        fn projection_is_idempotent(x in proptest::collection::vec(-1e3f64..1e3, 1..50), l in 1usize..60) {
            let p = project(&x, l);
            prop_assert_eq!(project(&p, l), p);
        }
    }
}
