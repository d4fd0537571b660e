//! Truncated SVD of a load covariance and rank selection.

use std::io::Write;
use std::path::Path;

use faer::{c64, Mat, MatRef, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::estimate::{Covariance, MomentPair};
use crate::error::{Error, Result};
use crate::linalg::dense::normalize_column_phases;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SvdMethod {
    /// Eigendecomposition of the smaller Gram matrix of the sample factor,
    /// with a thin-SVD fallback when a kept vector would lose accuracy.
    Exact,
    /// Range finder with `l_max + oversample` Gaussian probes and
    /// `power_iterations` subspace iterations. The energy total stays exact
    /// because it comes from `‖C‖_F²`.
    Randomized {
        oversample: usize,
        power_iterations: usize,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankPolicy {
    pub l_max: usize,
    pub energy_tol: f64,
    pub method: SvdMethod,
}

impl Default for RankPolicy {
    fn default() -> Self {
        Self {
            l_max: 64,
            energy_tol: 0.99,
            method: SvdMethod::Exact,
        }
    }
}

impl RankPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.l_max == 0 {
            return Err(Error::Config("rank.l_max must be at least 1".into()));
        }
        if !(self.energy_tol > 0.0 && self.energy_tol <= 1.0) {
            return Err(Error::Config(format!(
                "rank.energy_tol must lie in (0, 1], got {}",
                self.energy_tol
            )));
        }
        Ok(())
    }
}

/// `Σ ≈ U_l diag(S_l) V_lᴴ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankFactorization {
    pub u: Mat<c64>,
    pub s: Vec<f64>,
    pub v: Mat<c64>,
    /// `V_l = U_l` exactly; propagation then needs `l` solves instead of `2l`.
    pub hermitian: bool,
    /// Every singular value that was computed, descending.
    pub spectrum: Vec<f64>,
    /// `Σᵢ Sᵢ` over the whole covariance.
    pub total: f64,
}

impl LowRankFactorization {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn energy_captured(&self) -> f64 {
        if self.total > 0.0 {
            self.s.iter().sum::<f64>() / self.total
        } else {
            1.0
        }
    }

    /// `U_l diag(S_l) V_lᴴ`, explicit; for small systems only.
    pub fn to_dense(&self) -> Mat<c64> {
        let us = Mat::from_fn(self.u.nrows(), self.rank(), |i, j| self.u[(i, j)] * self.s[j]);
        us * self.v.adjoint()
    }

    /// Keeps only the leading `l` terms.
    pub fn truncate(&self, l: usize) -> Self {
        let l = l.min(self.rank());
        Self {
            u: self.u.subcols(0, l).to_owned(),
            s: self.s[..l].to_vec(),
            v: self.v.subcols(0, l).to_owned(),
            hermitian: self.hermitian,
            spectrum: self.spectrum.clone(),
            total: self.total,
        }
    }

    /// Writes `index,value` rows of the computed singular values (1-based).
    pub fn write_spectrum_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("index,value\n");
        for (i, s) in self.spectrum.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, s));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Smallest `l` whose leading sum reaches `energy_tol · total`, capped at
/// `l_max` and at the number of available values.
pub fn select_rank(values: &[f64], total: f64, energy_tol: f64, l_max: usize) -> usize {
    if total <= 0.0 || values.is_empty() {
        return values.len().min(l_max).min(1);
    }
    let target = energy_tol * total;
    let mut acc = 0.0;
    for (i, s) in values.iter().enumerate() {
        acc += s;
        // relative slack absorbs round-off in the running sum
        if acc >= target * (1.0 - 4.0 * f64::EPSILON * (i + 1) as f64) {
            return (i + 1).min(l_max);
        }
    }
    values.len().min(l_max)
}

/// Left singular vectors and values of the `k × I` factor, padded to `n` rows.
/// Left singular vectors and values of `C` from `C Cᴴ` or `CᴴC`, whichever is
/// smaller. The values `σ²` carry an absolute error of order `ε σ₁²`, the
/// same as a decomposition of the assembled covariance. In the wide-Gram case
/// `u = C v / σ` loses `σ₁/σ` digits, so `None` asks for the thin SVD when a
/// kept vector has `σ < 1e-6 σ₁`.
fn gram_svd(factor: MatRef<'_, c64>, l_max: usize) -> Option<(Mat<c64>, Vec<f64>)> {
    let (m, k) = factor.shape();
    if m == 0 || k == 0 {
        return None;
    }
    let gram = if m <= k { factor * factor.adjoint() } else { factor.adjoint() * factor };
    let eig = gram.self_adjoint_eigen(Side::Lower).ok()?;
    let d = eig.S().column_vector();
    let order: Vec<usize> = (0..d.nrows()).rev().collect();
    let sigma: Vec<f64> = order.iter().map(|&i| d[i].re.max(0.0).sqrt()).collect();
    let vecs = eig.U();
    if m <= k {
        let u = Mat::from_fn(m, order.len(), |r, c| vecs[(r, order[c])]);
        return Some((u, sigma));
    }
    let keep = l_max.min(sigma.len());
    if keep > 0 && sigma[keep - 1] < 1e-6 * sigma[0] {
        return None;
    }
    let v = Mat::from_fn(k, keep, |r, c| vecs[(r, order[c])]);
    let mut u = factor * &v;
    for (c, s) in sigma.iter().take(keep).enumerate() {
        let scale = 1.0 / s;
        u.col_mut(c).iter_mut().for_each(|x| *x *= scale);
    }
    Some((u, sigma))
}

fn factor_svd(factor: MatRef<'_, c64>, n: usize, policy: &RankPolicy) -> Result<(Mat<c64>, Vec<f64>)> {
    let fail = |e| Error::DegenerateInput(format!("SVD failed: {e:?}"));
    let (w, sigma) = match policy.method {
        SvdMethod::Exact => match gram_svd(factor, policy.l_max) {
            Some(found) => found,
            None => {
                let svd = factor.thin_svd().map_err(fail)?;
                let s: Vec<f64> = svd.S().column_vector().iter().map(|v| v.re).collect();
                (svd.U().to_owned(), s)
            }
        },
        SvdMethod::Randomized {
            oversample,
            power_iterations,
            seed,
        } => {
            let k = (policy.l_max + oversample).min(factor.nrows()).min(factor.ncols());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
            let omega = Mat::from_fn(factor.ncols(), k, |_, _| c64::new(gauss(), gauss()));
            let mut q = (factor * &omega).qr().compute_thin_Q();
            for _ in 0..power_iterations {
                let z = (factor.adjoint() * &q).qr().compute_thin_Q();
                q = (factor * &z).qr().compute_thin_Q();
            }
            let b = q.adjoint() * factor;
            let svd = b.thin_svd().map_err(fail)?;
            let s: Vec<f64> = svd.S().column_vector().iter().map(|v| v.re).collect();
            (&q * svd.U(), s)
        }
    };
    let mut u = Mat::<c64>::zeros(n, w.ncols());
    u.as_mut().submatrix_mut(0, 0, w.nrows(), w.ncols()).copy_from(&w);
    Ok((u, sigma))
}

/// Truncated SVD of the covariance with rank chosen by the energy criterion.
pub fn truncated_svd(moments: &MomentPair, l_max: usize, energy_tol: f64) -> Result<LowRankFactorization> {
    truncated_svd_with(
        moments,
        &RankPolicy {
            l_max,
            energy_tol,
            method: SvdMethod::Exact,
        },
    )
}

pub fn truncated_svd_with(moments: &MomentPair, policy: &RankPolicy) -> Result<LowRankFactorization> {
    policy.validate()?;
    let total = moments.covariance.trace();
    match &moments.covariance {
        Covariance::Sampled { factor, n } => {
            let (u, sigma) = factor_svd(factor.as_ref(), *n, policy)?;
            let spectrum: Vec<f64> = sigma.iter().map(|s| s * s).collect();
            let l = select_rank(&spectrum, total, policy.energy_tol, policy.l_max);
            let mut u = u.subcols(0, l).to_owned();
            normalize_column_phases(u.as_mut());
            Ok(LowRankFactorization {
                v: u.clone(),
                u,
                s: spectrum[..l].to_vec(),
                hermitian: true,
                spectrum,
                total,
            })
        }
        Covariance::Dense(d) => dense_truncated(d.as_ref(), total, policy),
    }
}

fn dense_truncated(d: MatRef<'_, c64>, total: f64, policy: &RankPolicy) -> Result<LowRankFactorization> {
    let evd = d
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::DegenerateInput(format!("eigendecomposition failed: {e:?}")))?;
    let n = d.nrows();
    let vals: Vec<f64> = evd.S().column_vector().iter().map(|v| v.re).collect();
    let largest = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if vals.iter().all(|&v| v >= -1e-10 * largest) {
        // PSD: eigenvalues are the singular values, U = V
        let order: Vec<usize> = (0..n).rev().collect();
        let spectrum: Vec<f64> = order.iter().map(|&i| vals[i].max(0.0)).collect();
        let l = select_rank(&spectrum, total, policy.energy_tol, policy.l_max);
        let mut u = Mat::from_fn(n, l, |i, j| evd.U()[(i, order[j])]);
        normalize_column_phases(u.as_mut());
        return Ok(LowRankFactorization {
            v: u.clone(),
            u,
            s: spectrum[..l].to_vec(),
            hermitian: true,
            spectrum,
            total,
        });
    }
    let svd = d
        .thin_svd()
        .map_err(|e| Error::DegenerateInput(format!("SVD failed: {e:?}")))?;
    let spectrum: Vec<f64> = svd.S().column_vector().iter().map(|v| v.re).collect();
    let sum: f64 = spectrum.iter().sum();
    let l = select_rank(&spectrum, sum, policy.energy_tol, policy.l_max);
    let mut u = svd.U().subcols(0, l).to_owned();
    let mut v = svd.V().subcols(0, l).to_owned();
    // rotate both sides alike so U S Vᴴ is unchanged
    for (j, rot) in normalize_column_phases(u.as_mut()).into_iter().enumerate() {
        for r in 0..n {
            v[(r, j)] *= rot;
        }
    }
    Ok(LowRankFactorization {
        u,
        s: spectrum[..l].to_vec(),
        v,
        hermitian: false,
        spectrum,
        total: sum,
    })
}
