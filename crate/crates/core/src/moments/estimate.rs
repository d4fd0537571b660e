use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::tbl::LoadEnsemble;

/// Hermitian covariance, held densely (small systems) or as a centered
/// sample factor `C` with `Σ = C Cᴴ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Covariance {
    Dense(Mat<c64>),
    /// `factor` covers rows `0..factor.nrows()`; the remaining rows of the
    /// `n × n` covariance are zero.
    Sampled { factor: Mat<c64>, n: usize },
}

impl Covariance {
    pub fn n(&self) -> usize {
        match self {
            Covariance::Dense(d) => d.nrows(),
            Covariance::Sampled { n, .. } => *n,
        }
    }

    /// Explicit `n × n` matrix; only for small systems.
    pub fn to_dense(&self) -> Mat<c64> {
        match self {
            Covariance::Dense(d) => d.clone(),
            Covariance::Sampled { factor, n } => {
                let mut out = Mat::<c64>::zeros(*n, *n);
                let k = factor.nrows();
                let g = factor * factor.adjoint();
                out.as_mut().submatrix_mut(0, 0, k, k).copy_from(&g);
                out
            }
        }
    }

    /// `tr Σ`, the sum of its singular values for PSD input.
    pub fn trace(&self) -> f64 {
        match self {
            Covariance::Dense(d) => (0..d.nrows()).map(|i| d[(i, i)].re).sum(),
            Covariance::Sampled { factor, .. } => factor.norm_l2().powi(2),
        }
    }

    /// `‖Σ‖_F`.
    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Covariance::Dense(d) => d.norm_l2(),
            Covariance::Sampled { factor, .. } => (factor.adjoint() * factor).norm_l2(),
        }
    }
}

/// Mean vector and covariance of a random load or response.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentPair {
    pub mean: Vec<c64>,
    pub covariance: Covariance,
}

impl MomentPair {
    /// Dense moments; the covariance must be Hermitian.
    pub fn from_dense(mean: Vec<c64>, covariance: Mat<c64>) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::Contract(format!(
                "covariance is {}x{}, mean has length {n}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let scale = covariance.norm_l2().max(f64::MIN_POSITIVE);
        let defect = (&covariance - covariance.adjoint()).norm_l2();
        if defect > 1e-12 * scale {
            return Err(Error::Contract(format!(
                "covariance is not Hermitian (relative defect {:.2e})",
                defect / scale
            )));
        }
        Ok(Self {
            mean,
            covariance: Covariance::Dense(covariance),
        })
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased covariance `1/(I−1) Σ (f−f̄)(f−f̄)ᴴ`, kept in
/// centered-factor form.
pub fn estimate_moments(ensemble: &LoadEnsemble) -> Result<MomentPair> {
    estimate_from_samples(ensemble.loaded.as_ref(), ensemble.n)
}

/// As [`estimate_moments`] for a raw `k × I` sample block padded to `n` rows.
pub fn estimate_from_samples(samples: MatRef<'_, c64>, n: usize) -> Result<MomentPair> {
    let (k, count) = (samples.nrows(), samples.ncols());
    if count < 2 {
        return Err(Error::Contract(format!(
            "covariance estimation needs at least 2 samples, got {count}"
        )));
    }
    if k > n {
        return Err(Error::Contract("sample rows exceed system size".into()));
    }
    let inv = 1.0 / count as f64;
    let mut mean = vec![c64::new(0.0, 0.0); n];
    for (i, m) in mean.iter_mut().enumerate().take(k) {
        *m = samples.row(i).iter().sum::<c64>() * inv;
    }
    let scale = 1.0 / ((count - 1) as f64).sqrt();
    let factor = Mat::from_fn(k, count, |i, j| (samples[(i, j)] - mean[i]) * scale);
    Ok(MomentPair {
        mean,
        covariance: Covariance::Sampled { factor, n },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_samples_have_zero_covariance() {
        let col = [c64::new(1.0, 2.0), c64::new(-3.0, 0.5)];
        let s = Mat::from_fn(2, 2, |i, _| col[i]);
        let m = estimate_from_samples(s.as_ref(), 4).unwrap();
        assert_eq!(m.mean[0], col[0]);
        assert_eq!(m.mean[3], c64::new(0.0, 0.0));
        assert_eq!(m.covariance.to_dense().norm_l2(), 0.0);
    }

    #[test]
    fn matches_textbook_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Mat::from_fn(5, 3, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = estimate_from_samples(s.as_ref(), 5).unwrap();
        let mut cov = Mat::<c64>::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                let mut acc = c64::new(0.0, 0.0);
                for t in 0..3 {
                    let mi = (s[(i, 0)] + s[(i, 1)] + s[(i, 2)]) / 3.0;
                    let mj = (s[(j, 0)] + s[(j, 1)] + s[(j, 2)]) / 3.0;
                    acc += (s[(i, t)] - mi) * (s[(j, t)] - mj).conj();
                }
                cov[(i, j)] = acc / 2.0;
            }
        }
        assert!((&m.covariance.to_dense() - &cov).norm_l2() < 1e-14);
        assert!((m.covariance.trace() - (0..5).map(|i| cov[(i, i)].re).sum::<f64>()).abs() < 1e-14);
        assert!((m.covariance.frobenius_norm() - cov.norm_l2()).abs() < 1e-14);
    }

    #[test]
    fn single_sample_is_rejected() {
        let s = Mat::<c64>::zeros(3, 1);
        assert!(matches!(estimate_from_samples(s.as_ref(), 3), Err(Error::Contract(_))));
    }

    #[test]
    fn non_hermitian_dense_is_rejected() {
        let mut c = Mat::<c64>::zeros(2, 2);
        c[(0, 1)] = c64::new(1.0, 0.0);
        assert!(MomentPair::from_dense(vec![c64::new(0.0, 0.0); 2], c).is_err());
    }
}
