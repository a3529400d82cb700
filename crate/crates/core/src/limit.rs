//! The weighted chi-square limit law `V = Σ λ_i N_i²`, empirical CDFs and
//! the Kolmogorov–Smirnov distance between them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigen_symmetric, SymmetricMatrix};
use crate::rng::{stream, PolarNormal};

/// Eigenvalues in `[-CLAMP_TOLERANCE, 0)` are treated as rounding noise and set to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

/// Number of draws per derived stream in [`WeightedChiSquare::sample_seeded`].
pub const DRAWS_PER_STREAM: usize = 4096;

/// `Σ_i λ_i N_i²` over a finite list of weights, with the mass of any
/// omitted weights recorded in `truncation_tail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedChiSquare {
    lambdas: Vec<f64>,
    truncation_tail: f64,
}

impl WeightedChiSquare {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        Self::with_tail(lambdas, 0.0)
    }

    pub fn with_tail(lambdas: Vec<f64>, truncation_tail: f64) -> Result<Self> {
        if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidModel(format!(
                "weights must be finite and nonnegative (got {bad})"
            )));
        }
        if !(truncation_tail.is_finite() && truncation_tail >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "truncation tail must be finite and nonnegative (got {truncation_tail})"
            )));
        }
        Ok(Self {
            lambdas,
            truncation_tail,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn truncation_tail(&self) -> f64 {
        self.truncation_tail
    }

    /// `Σ λ_i` over the retained weights.
    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Variance of one draw, `2 Σ λ_i²`.
    pub fn variance(&self) -> f64 {
        2.0 * self.lambdas.iter().map(|l| l * l).sum::<f64>()
    }

    /// One draw using normals from `normals`.
    pub fn draw<R: Rng + ?Sized>(&self, normals: &mut PolarNormal, rng: &mut R) -> f64 {
        self.lambdas
            .iter()
            .map(|&lam| {
                let z = normals.sample(rng);
                lam * z * z
            })
            .sum()
    }

    /// `m` independent draws from a single generator.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<f64> {
        let mut normals = PolarNormal::new();
        (0..m).map(|_| self.draw(&mut normals, rng)).collect()
    }

    /// `m` draws in parallel; chunk `c` of [`DRAWS_PER_STREAM`] draws uses
    /// `stream(seed, c)`, so the output does not depend on the thread count.
    pub fn sample_seeded(&self, m: usize, seed: u64) -> Vec<f64> {
        let chunks = m.div_ceil(DRAWS_PER_STREAM);
        (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let len = DRAWS_PER_STREAM.min(m - c * DRAWS_PER_STREAM);
                let mut rng = stream(seed, c as u64);
                self.sample(len, &mut rng)
            })
            .collect()
    }
}

/// The limit law for data with covariance `gamma`: its eigenvalues, with
/// tiny negative rounding clamped to zero.
pub fn limit_from_covariance(gamma: &SymmetricMatrix) -> Result<WeightedChiSquare> {
    let spectrum = eigen_symmetric(gamma)?;
    let scale = 1.0 + gamma.trace().abs();
    let mut lambdas = Vec::with_capacity(spectrum.dim());
    for lam in spectrum.eigenvalues {
        if lam < -CLAMP_TOLERANCE * scale {
            return Err(Error::NotPositiveSemidefinite(lam));
        }
        lambdas.push(lam.max(0.0));
    }
    WeightedChiSquare::new(lambdas)
}

/// 1-based ascending rank `⌈p · size⌉`, clamped to `[1, size]`.
///
/// A relative slack of `1e-12` absorbs products like `0.95 · 2000` that land
/// a hair above an integer.
pub fn upper_rank(p: f64, size: usize) -> usize {
    let x = p * size as f64;
    let r = (x - 1e-12 * x.max(1.0)).ceil();
    (r.max(1.0) as usize).min(size)
}

/// Right-continuous empirical distribution function of a finite list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSample("empirical CDF needs at least one value".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidSample("empirical CDF values must not be NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    /// `#{values ≤ x} / size`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.size() as f64
    }

    fn count_le(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v <= x)
    }

    /// The value at ascending rank `⌈p · size⌉`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(self.values[upper_rank(p, self.size()) - 1])
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.size() as f64
    }
}

/// `sup_x |F_a(x) − F_b(x)|`, evaluated exactly by walking the merged jump points.
///
/// Between jumps both functions are constant, and the left limit at a jump
/// equals the value at the previous jump, so checking each jump's value is
/// enough.
pub fn ks_distance(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (va, vb) = (a.values(), b.values());
    let (na, nb) = (va.len() as f64, vb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < va.len() || j < vb.len() {
        let x = match (va.get(i), vb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < va.len() && va[i] <= x {
            i += 1;
        }
        while j < vb.len() && vb[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Two-sided 95% quantile of the two-sample KS null law, `1.36 · √((m+b)/(m·b))`.
pub fn ks_noise_floor(m: usize, b: usize) -> f64 {
    let (m, b) = (m as f64, b as f64);
    1.36 * ((m + b) / (m * b)).sqrt()
}
