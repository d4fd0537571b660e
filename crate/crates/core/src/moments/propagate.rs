//! Mean and low-rank covariance propagation through `A(ω)⁻¹`.

use faer::{c64, Mat, MatRef};

use super::svd::LowRankFactorization;
use crate::error::{Error, Result};
use crate::linalg::FactoredSystem;

/// `Σ_x ≈ U_x diag(S_x) V_xᴴ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionCovariance {
    pub u: Mat<c64>,
    pub s: Vec<f64>,
    pub v: Mat<c64>,
    /// `V_x = U_x` exactly.
    pub hermitian: bool,
}

impl SolutionCovariance {
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `C Cᴴ` for an explicit factor `C`, e.g. solved centered samples.
    pub fn from_factor(factor: Mat<c64>) -> Self {
        Self {
            s: vec![1.0; factor.ncols()],
            v: factor.clone(),
            u: factor,
            hermitian: true,
        }
    }

    /// Restriction to a subset of DOFs (rows of both factors).
    pub fn restrict(&self, dofs: &[usize]) -> Result<Self> {
        check_indices(dofs, self.n())?;
        let pick = |m: &Mat<c64>| Mat::from_fn(dofs.len(), m.ncols(), |i, j| m[(dofs[i], j)]);
        Ok(Self {
            u: pick(&self.u),
            s: self.s.clone(),
            v: pick(&self.v),
            hermitian: self.hermitian,
        })
    }
}

fn check_indices(idx: &[usize], n: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= n) {
        Some(bad) => Err(Error::Contract(format!("index {bad} out of range for dimension {n}"))),
        None => Ok(()),
    }
}

fn column(v: &[c64]) -> MatRef<'_, c64> {
    MatRef::from_column_major_slice(v, v.len(), 1)
}

/// `x̄ = A(ω)⁻¹ f̄`: one forward solve.
pub fn solve_mean(fac: &dyn FactoredSystem, mean: &[c64]) -> Result<Vec<c64>> {
    let x = fac.solve(column(mean))?;
    Ok(x.col(0).iter().copied().collect())
}

/// Solves `A U_x = U_l` (and `A V_x = V_l` unless the factorization is
/// Hermitian): `l` or `2l` forward solves.
pub fn propagate_factors(fac: &dyn FactoredSystem, factors: &LowRankFactorization) -> Result<SolutionCovariance> {
    if factors.u.nrows() != fac.dim() {
        return Err(Error::Contract(format!(
            "factors have {} rows, operator has {}",
            factors.u.nrows(),
            fac.dim()
        )));
    }
    if factors.hermitian {
        let u = fac.solve(factors.u.as_ref())?;
        return Ok(SolutionCovariance {
            v: u.clone(),
            u,
            s: factors.s.clone(),
            hermitian: true,
        });
    }
    let l = factors.rank();
    let mut both = Mat::<c64>::zeros(fac.dim(), 2 * l);
    both.as_mut().subcols_mut(0, l).copy_from(&factors.u);
    both.as_mut().subcols_mut(l, l).copy_from(&factors.v);
    let x = fac.solve(both.as_ref())?;
    Ok(SolutionCovariance {
        u: x.subcols(0, l).to_owned(),
        s: factors.s.clone(),
        v: x.subcols(l, l).to_owned(),
        hermitian: false,
    })
}

/// The `rows × cols` block of `U_x S_x V_xᴴ`.
pub fn reconstruct_covariance(sc: &SolutionCovariance, rows: &[usize], cols: &[usize]) -> Result<Mat<c64>> {
    check_indices(rows, sc.n())?;
    check_indices(cols, sc.n())?;
    let us = Mat::from_fn(rows.len(), sc.rank(), |i, j| sc.u[(rows[i], j)] * sc.s[j]);
    let vb = Mat::from_fn(cols.len(), sc.rank(), |i, j| sc.v[(cols[i], j)]);
    Ok(us * vb.adjoint())
}

/// Whole `n × n` reconstruction; small systems only.
pub fn reconstruct_full(sc: &SolutionCovariance) -> Mat<c64> {
    let all: Vec<usize> = (0..sc.n()).collect();
    reconstruct_covariance(sc, &all, &all).expect("indices in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseLu, SolveStats};
    use faer::linalg::solvers::Solve;
    use crate::moments::{estimate::MomentPair, svd::truncated_svd};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(n: usize, m: usize, seed: u64) -> Mat<c64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, m, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn identity_operator_returns_input_covariance() {
        let stats = SolveStats::default();
        let g = rand_mat(6, 3, 1);
        let cov = &g * g.adjoint();
        let m = MomentPair::from_dense(vec![c64::new(0.0, 0.0); 6], cov.clone()).unwrap();
        let f = truncated_svd(&m, 6, 1.0).unwrap();
        let lu = DenseLu::factorize(Mat::<c64>::identity(6, 6), 0.0, &stats).unwrap();
        let sc = propagate_factors(&lu, &f).unwrap();
        assert!((&sc.u - &f.u).norm_l2() < 1e-14);
        assert!((&reconstruct_full(&sc) - &cov).norm_l2() < 1e-13 * cov.norm_l2());
        assert_eq!(lu.solve_count(), f.rank());
    }

    #[test]
    fn general_factors_need_two_solves_per_rank() {
        let stats = SolveStats::default();
        let mut d = Mat::<c64>::zeros(3, 3);
        d[(0, 0)] = c64::new(2.0, 0.0);
        d[(1, 1)] = c64::new(-1.0, 0.0);
        let m = MomentPair::from_dense(vec![c64::new(0.0, 0.0); 3], d).unwrap();
        let f = truncated_svd(&m, 3, 1.0).unwrap();
        let a = rand_mat(3, 3, 4) + Mat::from_fn(3, 3, |i, j| if i == j { c64::new(3.0, 0.0) } else { c64::new(0.0, 0.0) });
        let lu = DenseLu::factorize(a.clone(), 0.0, &stats).unwrap();
        let sc = propagate_factors(&lu, &f).unwrap();
        assert_eq!(lu.solve_count(), 2 * f.rank());
        let ainv = a.partial_piv_lu().solve(Mat::<c64>::identity(3, 3));
        let oracle = &ainv * f.to_dense() * ainv.adjoint();
        assert!((&reconstruct_full(&sc) - &oracle).norm_l2() < 1e-12 * oracle.norm_l2());
    }

    #[test]
    fn sub_blocks_match_full_reconstruction() {
        let sc = SolutionCovariance::from_factor(rand_mat(8, 3, 9));
        let full = reconstruct_full(&sc);
        let (rows, cols) = ([1usize, 5, 7], [0usize, 2]);
        let blk = reconstruct_covariance(&sc, &rows, &cols).unwrap();
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                assert!((blk[(i, j)] - full[(r, c)]).norm() < 1e-15);
            }
        }
        assert!(matches!(reconstruct_covariance(&sc, &[8], &[0]), Err(Error::Contract(_))));
    }
}
