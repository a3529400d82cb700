//! Seed derivation and random variate generation.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] whose
//! key comes from a 64-bit seed and whose stream id is an index
//! (replicate, chunk, ...). A seed for a sub-task is obtained by folding a
//! path of integer tags into the master seed with the SplitMix64 finalizer:
//!
//! ```text
//! h_0 = master
//! h_{i+1} = splitmix64(h_i ^ splitmix64(tag_i + 0x9E3779B97F4A7C15 * (i + 1)))
//! ```
//!
//! Results therefore depend only on `(seed, index)`, never on which thread
//! evaluated them or in what order.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `path` into `master`, yielding an independent seed per distinct path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().enumerate().fold(master, |h, (i, &tag)| {
        let salted = splitmix64(tag.wrapping_add(GOLDEN_GAMMA.wrapping_mul(i as u64 + 1)));
        splitmix64(h ^ salted)
    })
}

/// The generator for stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard normal variates by the Marsaglia polar method.
///
/// Each accepted point yields two independent normals; the second one is
/// kept and returned by the next call.
#[derive(Debug, Clone, Default)]
pub struct PolarNormal {
    spare: Option<f64>,
}

impl PolarNormal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let v = 2.0 * rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }
}

/// Gamma(shape, 1) variates by Marsaglia and Tsang's squeeze method.
///
/// Requires `shape >= 1`.
pub fn gamma<R: Rng + ?Sized>(shape: f64, normals: &mut PolarNormal, rng: &mut R) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = normals.sample(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        if u < 1.0 - 0.0331 * x * x * x * x || u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}
