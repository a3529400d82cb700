//! Dense linear algebra: observation matrices, means, the biased sample
//! covariance and a cyclic Jacobi eigensolver for symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of cyclic Jacobi sweeps.
pub const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius mass, relative to `1 + ‖A‖_F`, at which Jacobi stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// An `n × d` matrix of observations stored row-major; row `i` is `X_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidSample(format!(
                "sample must have at least one row and one column (got {n}×{d})"
            )));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "non-finite entry at row {}, column {}",
                pos / d + 1,
                pos % d + 1
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), d, data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.d + k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `X_i − shift` for every row.
    pub fn shifted(&self, shift: &[f64]) -> Result<Sample> {
        if shift.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: shift.len(),
            });
        }
        let data = self
            .rows()
            .flat_map(|row| row.iter().zip(shift).map(|(x, m)| x - m))
            .collect();
        Sample::new(self.n, self.d, data)
    }

    /// The first `l` coordinates of every row (`l` is clamped to `d`).
    pub fn leading_columns(&self, l: usize) -> Sample {
        let l = l.clamp(1, self.d);
        if l == self.d {
            return self.clone();
        }
        let data = self.rows().flat_map(|row| row[..l].iter().copied()).collect();
        Sample {
            n: self.n,
            d: l,
            data,
        }
    }
}

/// A real symmetric `d × d` matrix. Every write goes to both `(k, l)` and
/// `(l, k)`, so the stored entries are symmetric bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            entries: vec![0.0; d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for k in 0..d {
            m.set(k, k, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, &v) in diag.iter().enumerate() {
            m.set(k, k, v);
        }
        m
    }

    /// Builds from row-major rows; fails unless the input is exactly symmetric and finite.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        let mut m = Self::zeros(d);
        for (k, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            for (l, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidSample(format!(
                        "non-finite matrix entry at ({k}, {l})"
                    )));
                }
                m.entries[k * d + l] = v;
            }
        }
        for k in 0..d {
            for l in 0..k {
                if m.get(k, l) != m.get(l, k) {
                    return Err(Error::InvalidSample(format!(
                        "matrix is not symmetric at ({k}, {l})"
                    )));
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[k * self.d + l]
    }

    #[inline]
    pub fn set(&mut self, k: usize, l: usize, value: f64) {
        self.entries[k * self.d + l] = value;
        self.entries[l * self.d + k] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|k| self.get(k, k)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Eigen-decomposition `A = Q Λ Qᵀ` of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Row-major `d × d` orthogonal matrix; column `j` belongs to `eigenvalues[j]`.
    pub eigenvectors: Vec<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    #[inline]
    pub fn vector_entry(&self, k: usize, j: usize) -> f64 {
        self.eigenvectors[k * self.dim() + j]
    }

    /// Entry `(k, l)` of `Q Λ Qᵀ`.
    pub fn reconstruct(&self, k: usize, l: usize) -> f64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(j, lam)| self.vector_entry(k, j) * lam * self.vector_entry(l, j))
            .sum()
    }
}

/// Column means `n⁻¹ Σ_i X_i`.
///
/// Accumulates deviations from the first row, so a constant column has a
/// mean equal to that constant exactly.
pub fn mean(sample: &Sample) -> Vec<f64> {
    let first = sample.row(0);
    let mut acc = vec![0.0; sample.d()];
    for row in sample.rows().skip(1) {
        for ((a, x), x0) in acc.iter_mut().zip(row).zip(first) {
            *a += x - x0;
        }
    }
    let n = sample.n() as f64;
    first.iter().zip(acc).map(|(x0, a)| x0 + a / n).collect()
}

/// Rows minus the column means.
pub(crate) fn centered_rows(sample: &Sample) -> Vec<f64> {
    let m = mean(sample);
    sample
        .rows()
        .flat_map(|row| row.iter().zip(&m).map(|(x, mu)| x - mu).collect::<Vec<_>>())
        .collect()
}

/// The covariance of the empirical measure: entry `(k, l)` is
/// `n⁻¹ Σ_i X_i^(k) X_i^(l) − X̄^(k) X̄^(l)` (divisor `n`).
///
/// Computed from centered rows, which is algebraically the same quantity.
pub fn sample_covariance_biased(sample: &Sample) -> SymmetricMatrix {
    let d = sample.d();
    let centered = centered_rows(sample);
    let mut cov = SymmetricMatrix::zeros(d);
    let n = sample.n() as f64;
    for k in 0..d {
        for l in 0..=k {
            let s: f64 = centered.chunks_exact(d).map(|r| r[k] * r[l]).sum();
            cov.set(k, l, s / n);
        }
    }
    cov
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Sweeps over all pairs `p < q` in row order, annihilating `a_pq` with a
/// plane rotation, until the off-diagonal Frobenius norm is at most
/// `JACOBI_TOLERANCE · (1 + ‖A‖_F)`. Eigenvalues are returned in descending
/// order with the eigenvector columns permuted to match.
pub fn eigen_symmetric(matrix: &SymmetricMatrix) -> Result<Spectrum> {
    let d = matrix.dim();
    if d == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
        });
    }
    let mut a = matrix.entries.clone();
    let mut v = vec![0.0; d * d];
    for k in 0..d {
        v[k * d + k] = 1.0;
    }
    let threshold = JACOBI_TOLERANCE * (1.0 + matrix.frobenius_norm());
    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                s += a[p * d + q] * a[p * d + q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if off > threshold {
            return Err(Error::NonConvergence {
                sweeps: MAX_SWEEPS,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j * d + j].total_cmp(&a[i * d + i]));
    let eigenvalues = order.iter().map(|&i| a[i * d + i]).collect();
    let mut eigenvectors = vec![0.0; d * d];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..d {
            eigenvectors[k * d + new_col] = v[k * d + old_col];
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn mean_examples() {
        let s = Sample::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(mean(&s), vec![2.0, 3.0]);
        let s = Sample::from_rows(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(mean(&s), vec![0.0, 0.0]);
        let s = Sample::from_rows(&[[5.0, -1.0, 2.0]]).unwrap();
        assert_eq!(mean(&s), vec![5.0, -1.0, 2.0]);
    }

    #[test]
    fn constant_column_mean_is_exact() {
        let s = Sample::from_rows(&[[0.1, 7.3], [0.1, 7.3], [0.1, 7.3]]).unwrap();
        assert_eq!(mean(&s), vec![0.1, 7.3]);
    }

    #[test]
    fn covariance_examples() {
        let s = Sample::from_rows(&[[1.0], [-1.0]]).unwrap();
        assert_eq!(sample_covariance_biased(&s).get(0, 0), 1.0);

        let c = 3.7;
        let s = Sample::from_rows(&[[c, c], [c, c]]).unwrap();
        assert_eq!(sample_covariance_biased(&s), SymmetricMatrix::zeros(2));

        let s = Sample::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let cov = sample_covariance_biased(&s);
        assert_eq!(cov.get(0, 0), 0.25);
        assert_eq!(cov.get(1, 1), 0.25);
        assert_eq!(cov.get(0, 1), -0.25);
        assert_eq!(cov.get(1, 0), -0.25);
    }

    #[test]
    fn sample_rejects_bad_input() {
        assert!(Sample::new(0, 2, vec![]).is_err());
        assert!(Sample::new(1, 2, vec![1.0]).is_err());
        assert!(matches!(
            Sample::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::InvalidSample(_))
        ));
        assert!(Sample::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn eigen_examples() {
        let s = eigen_symmetric(&SymmetricMatrix::identity(3)).unwrap();
        assert_close(&s.eigenvalues, &[1.0, 1.0, 1.0], 1e-14);

        let m = SymmetricMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let s = eigen_symmetric(&m).unwrap();
        assert_close(&s.eigenvalues, &[3.0, 1.0], 1e-14);

        let s = eigen_symmetric(&SymmetricMatrix::from_diagonal(&[2.0, 5.0, 0.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![5.0, 2.0, 0.0]);
        // eigenvectors follow the permutation
        assert_eq!(s.vector_entry(1, 0), 1.0);
        assert_eq!(s.vector_entry(0, 1), 1.0);
    }

    #[test]
    fn eigen_of_zero_matrix() {
        let s = eigen_symmetric(&SymmetricMatrix::zeros(4)).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0; 4]);
    }

    #[test]
    fn asymmetric_rows_rejected() {
        assert!(SymmetricMatrix::from_rows(&[[1.0, 2.0], [2.5, 1.0]]).is_err());
    }

    fn symmetric_strategy() -> impl Strategy<Value = SymmetricMatrix> {
        (1usize..=12).prop_flat_map(|d| {
            proptest::collection::vec(-1.0f64..1.0, d * d).prop_map(move |raw| {
                let mut m = SymmetricMatrix::zeros(d);
                for k in 0..d {
                    for l in 0..=k {
                        m.set(k, l, raw[k * d + l]);
                    }
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn jacobi_reconstructs(m in symmetric_strategy()) {
            let s = eigen_symmetric(&m).unwrap();
            let d = m.dim();
            let tol = 1e-10 * (1.0 + m.max_abs());
            for k in 0..d {
                for l in 0..d {
                    prop_assert!((s.reconstruct(k, l) - m.get(k, l)).abs() <= tol);
                    let dot: f64 = (0..d).map(|i| s.vector_entry(i, k) * s.vector_entry(i, l)).sum();
                    let expect = if k == l { 1.0 } else { 0.0 };
                    prop_assert!((dot - expect).abs() <= 1e-10);
                }
            }
            let tr = m.trace();
            prop_assert!((s.eigenvalues.iter().sum::<f64>() - tr).abs() <= 1e-9 * (1.0 + tr.abs()));
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn covariance_is_psd(rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 4), 1..30)) {
            let s = Sample::from_rows(&rows).unwrap();
            let cov = sample_covariance_biased(&s);
            let spec = eigen_symmetric(&cov).unwrap();
            let tr = cov.trace();
            prop_assert!(spec.eigenvalues.iter().all(|&l| l >= -1e-10 * (1.0 + tr)));
        }

        #[test]
        fn mean_is_translation_equivariant(
            rows in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 3), 1..20),
            shift in proptest::collection::vec(-100.0f64..100.0, 3),
        ) {
            let s = Sample::from_rows(&rows).unwrap();
            let neg: Vec<f64> = shift.iter().map(|c| -c).collect();
            let moved = s.shifted(&neg).unwrap();
            for ((a, b), c) in mean(&moved).iter().zip(mean(&s)).zip(&shift) {
                prop_assert!((a - (b + c)).abs() <= 1e-12 * (1.0 + b.abs() + c.abs()));
            }
        }
    }
}
