//! Galerkin-projected reduced system `K_r − ω² M_r`.

use faer::{c64, Mat, MatRef};

use super::basis::ProjectionBasis;
use crate::error::{Error, Result};
use crate::fem::CoupledSystem;
use crate::linalg::solve::hz;
use crate::linalg::{DenseLu, FactoredSystem, FrequencyModel, SolveStats};

/// `K_r = Vᴴ K V`, `M_r = Vᴴ M V`. Immutable after construction.
#[derive(Debug)]
pub struct ReducedSystem {
    pub k_r: Mat<c64>,
    pub m_r: Mat<c64>,
    stats: SolveStats,
}

impl ReducedSystem {
    pub fn new(k_r: Mat<c64>, m_r: Mat<c64>) -> Result<Self> {
        let r = k_r.nrows();
        if k_r.ncols() != r || m_r.nrows() != r || m_r.ncols() != r {
            return Err(Error::Contract("reduced K and M must be square of equal size".into()));
        }
        Ok(Self {
            k_r,
            m_r,
            stats: SolveStats::default(),
        })
    }

    pub fn r(&self) -> usize {
        self.k_r.nrows()
    }

    /// `K_r − ω² M_r`.
    pub fn operator(&self, omega: f64) -> Mat<c64> {
        let w2 = omega * omega;
        Mat::from_fn(self.r(), self.r(), |i, j| self.k_r[(i, j)] - self.m_r[(i, j)] * w2)
    }
}

impl FrequencyModel for ReducedSystem {
    fn dim(&self) -> usize {
        self.r()
    }

    fn factorize(&self, omega: f64) -> Result<Box<dyn FactoredSystem + '_>> {
        Ok(Box::new(DenseLu::factorize(self.operator(omega), omega, &self.stats)?))
    }

    fn stats(&self) -> &SolveStats {
        &self.stats
    }
}

/// A projection basis together with its reduced matrices.
#[derive(Debug)]
pub struct RomModel {
    pub basis: ProjectionBasis,
    pub reduced: ReducedSystem,
    /// Wall-clock cost of building the model, when known.
    pub offline_seconds: f64,
}

impl RomModel {
    pub fn new(sys: &CoupledSystem, basis: ProjectionBasis) -> Result<Self> {
        let reduced = reduce(sys, &basis)?;
        Ok(Self {
            basis,
            reduced,
            offline_seconds: 0.0,
        })
    }
}

/// Projects `K` (with its loss factor) and `M` onto the basis.
pub fn reduce(sys: &CoupledSystem, basis: &ProjectionBasis) -> Result<ReducedSystem> {
    if basis.n() != sys.n() {
        return Err(Error::Contract(format!(
            "basis has {} rows, system has {}",
            basis.n(),
            sys.n()
        )));
    }
    let v = basis.v.as_ref();
    let kv = if sys.material.loss_factor == 0.0 {
        sys.k.mul_dense(v)
    } else {
        sys.stiffness_c64().mul_dense(v)
    };
    let mv = sys.m.mul_dense(v);
    ReducedSystem::new(v.adjoint() * kv, v.adjoint() * mv)
}

/// `x_r` from `(K_r − ω² M_r) x_r = f_r`.
pub fn solve_reduced(rs: &ReducedSystem, omega: f64, rhs_reduced: MatRef<'_, c64>) -> Result<Mat<c64>> {
    if rhs_reduced.nrows() != rs.r() {
        return Err(Error::Contract(format!(
            "reduced right-hand side has {} rows, reduced system has {}",
            rhs_reduced.nrows(),
            rs.r()
        )));
    }
    let lu = rs.factorize(omega).map_err(|e| match e {
        Error::Solver { reason, .. } => Error::Solver {
            frequency_hz: hz(omega),
            reason: format!("reduced operator: {reason}"),
        },
        other => other,
    })?;
    lu.solve(rhs_reduced)
}

/// `f_r = Vᴴ f`. Rows of `f` beyond its length are taken as zero, so a
/// load stored on the structural rows only projects with `V`'s top rows.
pub fn project(basis: &ProjectionBasis, f: MatRef<'_, c64>) -> Result<Mat<c64>> {
    if f.nrows() > basis.n() {
        return Err(Error::Contract(format!(
            "vector has {} rows, basis has {}",
            f.nrows(),
            basis.n()
        )));
    }
    Ok(basis.v.as_ref().subrows(0, f.nrows()).adjoint() * f)
}

/// `x ≈ V x_r`.
pub fn lift(basis: &ProjectionBasis, x_r: MatRef<'_, c64>) -> Mat<c64> {
    &basis.v * x_r
}

/// Selected rows of `V x_r`, without forming the full lift.
pub fn lift_rows(basis: &ProjectionBasis, x_r: MatRef<'_, c64>, rows: &[usize]) -> Mat<c64> {
    let vr = Mat::from_fn(rows.len(), basis.r(), |i, j| basis.v[(rows[i], j)]);
    vr * x_r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::mor::basis::orthonormalize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(n: usize, m: usize, seed: u64) -> Mat<c64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, m, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn system(n: usize) -> CoupledSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut kt = Vec::new();
        let mut mt = Vec::new();
        for i in 0..n {
            kt.push((i, i, 3.0 + rng.random::<f64>()));
            mt.push((i, i, 1.0));
            if i + 1 < n {
                kt.push((i, i + 1, -0.7));
                mt.push((i + 1, i, 0.1));
            }
        }
        CoupledSystem::from_matrices(
            CsrMatrix::from_triplets(n, n, &kt).unwrap(),
            CsrMatrix::from_triplets(n, n, &mt).unwrap(),
            n / 2,
        )
        .unwrap()
    }

    fn basis_of(v: Mat<c64>) -> ProjectionBasis {
        let w = v.ncols();
        orthonormalize(v.as_ref(), w, 1e-10).unwrap()
    }

    #[test]
    fn identity_basis_reproduces_matrices() {
        let sys = system(6);
        let basis = ProjectionBasis {
            v: Mat::identity(6, 6),
            points_hz: vec![],
            order: 1,
            input_counts: vec![6],
            deflations: vec![],
        };
        let rs = reduce(&sys, &basis).unwrap();
        assert!((&rs.k_r - sys.k.to_c64().to_dense_c64()).norm_l2() < 1e-15);
        assert!((&rs.m_r - sys.m.to_c64().to_dense_c64()).norm_l2() < 1e-15);
    }

    #[test]
    fn rayleigh_quotients_match() {
        let sys = system(12);
        let basis = basis_of(rand_mat(12, 4, 1));
        let rs = reduce(&sys, &basis).unwrap();
        let k = sys.k.to_c64().to_dense_c64();
        for seed in 0..5 {
            let z0 = rand_mat(4, 1, 100 + seed);
            let z = Mat::from_fn(4, 1, |i, _| z0[(i, 0)] / z0.norm_l2());
            let lhs = (z.adjoint() * &rs.k_r * &z)[(0, 0)];
            let vz = &basis.v * &z;
            let rhs = (vz.adjoint() * &k * &vz)[(0, 0)];
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let sys = system(8);
        let rs = reduce(&sys, &basis_of(rand_mat(8, 3, 2))).unwrap();
        let x = solve_reduced(&rs, 0.3, Mat::<c64>::zeros(3, 1).as_ref()).unwrap();
        assert_eq!(x.norm_l2(), 0.0);
    }

    #[test]
    fn scalar_reduced_system_is_a_division() {
        let rs = ReducedSystem::new(
            Mat::from_fn(1, 1, |_, _| c64::new(5.0, 0.0)),
            Mat::from_fn(1, 1, |_, _| c64::new(2.0, 0.0)),
        )
        .unwrap();
        let f = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 2.0));
        let x = solve_reduced(&rs, 1.5, f.as_ref()).unwrap();
        let expect = c64::new(1.0, 2.0) / (5.0 - 2.0 * 2.25);
        assert!((x[(0, 0)] - expect).norm() < 1e-14);
    }

    #[test]
    fn singular_reduced_operator_is_a_solver_error() {
        let rs = ReducedSystem::new(
            Mat::from_fn(1, 1, |_, _| c64::new(4.0, 0.0)),
            Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0)),
        )
        .unwrap();
        let f = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
        assert!(matches!(solve_reduced(&rs, 2.0, f.as_ref()), Err(Error::Solver { .. })));
    }

    #[test]
    fn lift_and_project_on_subspace() {
        let basis = basis_of(rand_mat(9, 3, 3));
        let mut e1 = Mat::<c64>::zeros(3, 1);
        e1[(0, 0)] = c64::new(1.0, 0.0);
        assert!((lift(&basis, e1.as_ref()) - basis.v.subcols(0, 1)).norm_l2() < 1e-15);
        let inside = &basis.v * rand_mat(3, 1, 4);
        let back = lift(&basis, project(&basis, inside.as_ref()).unwrap().as_ref());
        assert!((&back - &inside).norm_l2() < 1e-12 * inside.norm_l2());
        let x = rand_mat(9, 1, 5);
        let px = lift(&basis, project(&basis, x.as_ref()).unwrap().as_ref());
        assert!((&x - &px).norm_l2() <= x.norm_l2());
        let rows = [0usize, 4, 8];
        let sub = lift_rows(&basis, e1.as_ref(), &rows);
        for (i, &r) in rows.iter().enumerate() {
            assert_eq!(sub[(i, 0)], basis.v[(r, 0)]);
        }
    }

    #[test]
    fn truncated_loads_project_with_top_rows() {
        let basis = basis_of(rand_mat(10, 3, 6));
        let short = rand_mat(4, 2, 7);
        let mut full = Mat::<c64>::zeros(10, 2);
        full.as_mut().subrows_mut(0, 4).copy_from(&short);
        let a = project(&basis, short.as_ref()).unwrap();
        let b = project(&basis, full.as_ref()).unwrap();
        assert!((&a - &b).norm_l2() < 1e-15);
    }
}
