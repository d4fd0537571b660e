//! Factorized frequency-domain operators with residual-checked solves and
//! solve-count instrumentation.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::ops::Sub;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::{c64, Mat, MatRef};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Relative residual `‖b − A x‖ / ‖b‖` every solve must meet.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Process-wide counters attached to a model.
#[derive(Debug, Default)]
pub struct SolveStats {
    sparse_factorizations: AtomicUsize,
    sparse_solves: AtomicUsize,
    dense_factorizations: AtomicUsize,
    dense_solves: AtomicUsize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveCounts {
    pub sparse_factorizations: usize,
    pub sparse_solves: usize,
    pub dense_factorizations: usize,
    pub dense_solves: usize,
}

impl Sub for SolveCounts {
    type Output = SolveCounts;
    fn sub(self, rhs: Self) -> Self {
        SolveCounts {
            sparse_factorizations: self.sparse_factorizations - rhs.sparse_factorizations,
            sparse_solves: self.sparse_solves - rhs.sparse_solves,
            dense_factorizations: self.dense_factorizations - rhs.dense_factorizations,
            dense_solves: self.dense_solves - rhs.dense_solves,
        }
    }
}

impl SolveStats {
    pub fn snapshot(&self) -> SolveCounts {
        SolveCounts {
            sparse_factorizations: self.sparse_factorizations.load(Ordering::SeqCst),
            sparse_solves: self.sparse_solves.load(Ordering::SeqCst),
            dense_factorizations: self.dense_factorizations.load(Ordering::SeqCst),
            dense_solves: self.dense_solves.load(Ordering::SeqCst),
        }
    }
}

/// `A(ω)` factorized at one frequency; reusable for any number of right-hand sides.
pub trait FactoredSystem: Send + Sync {
    fn omega(&self) -> f64;

    fn dim(&self) -> usize;

    /// Solves `A(ω) X = B` column by column. Each column counts as one
    /// forward solve.
    fn solve(&self, rhs: MatRef<'_, c64>) -> Result<Mat<c64>>;

    /// Forward solves performed through this factorization so far.
    fn solve_count(&self) -> usize;

    /// Largest relative residual seen so far.
    fn max_residual(&self) -> f64;
}

/// Anything that yields `A(ω) = K − ω² M` factorizations: the full-order
/// coupled system or a reduced model lifted back to full coordinates.
pub trait FrequencyModel: Sync {
    fn dim(&self) -> usize;

    fn factorize(&self, omega: f64) -> Result<Box<dyn FactoredSystem + '_>>;

    fn stats(&self) -> &SolveStats;
}

pub(crate) fn hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

struct Residuals {
    solves: AtomicUsize,
    max_residual_bits: AtomicU64,
}

impl Residuals {
    fn new() -> Self {
        Self {
            solves: AtomicUsize::new(0),
            max_residual_bits: AtomicU64::new(0f64.to_bits()),
        }
    }

    fn record(&self, ncols: usize, residual: f64) {
        self.solves.fetch_add(ncols, Ordering::SeqCst);
        let mut cur = self.max_residual_bits.load(Ordering::SeqCst);
        while f64::from_bits(cur) < residual {
            match self.max_residual_bits.compare_exchange(
                cur,
                residual.to_bits(),
                Ordering::SeqCst,
                Ordering::SeqCst,
            ) {
                Ok(_) => break,
                Err(v) => cur = v,
            }
        }
    }

    fn max(&self) -> f64 {
        f64::from_bits(self.max_residual_bits.load(Ordering::SeqCst))
    }
}

fn max_relative_residual(
    rhs: MatRef<'_, c64>,
    x: MatRef<'_, c64>,
    apply: &dyn Fn(MatRef<'_, c64>) -> Mat<c64>,
) -> (f64, Mat<c64>) {
    let ax = apply(x);
    let r = Mat::from_fn(rhs.nrows(), rhs.ncols(), |i, j| rhs[(i, j)] - ax[(i, j)]);
    let mut worst = 0.0f64;
    for j in 0..rhs.ncols() {
        let bn = rhs.col(j).norm_l2();
        let rn = r.col(j).norm_l2();
        let rel = if bn > 0.0 { rn / bn } else { rn };
        // NaN must never compare as acceptable
        worst = if rel.is_nan() { f64::NAN } else { worst.max(rel) };
        if worst.is_nan() {
            break;
        }
    }
    (worst, r)
}

/// Runs `raw` and enforces the residual bound, applying one step of
/// iterative refinement when the first attempt falls short.
fn checked_solve(
    omega: f64,
    rhs: MatRef<'_, c64>,
    raw: &dyn Fn(MatRef<'_, c64>) -> Mat<c64>,
    apply: &dyn Fn(MatRef<'_, c64>) -> Mat<c64>,
) -> Result<(Mat<c64>, f64)> {
    let mut x = raw(rhs);
    let (mut res, r) = max_relative_residual(rhs, x.as_ref(), apply);
    if !(res <= RESIDUAL_TOL) && res.is_finite() {
        log::debug!("residual {res:.2e} at {:.3} Hz; refining", hz(omega));
        let d = raw(r.as_ref());
        x += &d;
        res = max_relative_residual(rhs, x.as_ref(), apply).0;
    }
    if res <= RESIDUAL_TOL {
        Ok((x, res))
    } else {
        Err(Error::Solver {
            frequency_hz: hz(omega),
            reason: format!(
                "relative residual {res:.3e} exceeds {RESIDUAL_TOL:.0e} (operator singular or near-resonant)"
            ),
        })
    }
}

enum SparseFactor {
    Real(Lu<usize, f64>),
    Complex(Lu<usize, c64>),
}

/// Sparse LU of `A(ω)`. Real operators (undamped, real frequency) are
/// factorized in real arithmetic and complex right-hand sides are split into
/// real and imaginary parts.
pub struct SparseLu<'a> {
    factor: SparseFactor,
    operator: CsrMatrix<c64>,
    omega: f64,
    stats: &'a SolveStats,
    residuals: Residuals,
}

impl<'a> SparseLu<'a> {
    pub fn factorize(
        operator: CsrMatrix<c64>,
        symbolic: Option<&SymbolicLu<usize>>,
        omega: f64,
        stats: &'a SolveStats,
    ) -> Result<Self> {
        let fail = |reason: String| Error::Solver {
            frequency_hz: hz(omega),
            reason,
        };
        let factor = if operator.is_real() {
            let a = operator.real_part().to_faer();
            let sym = match symbolic {
                Some(s) => s.clone(),
                None => SymbolicLu::try_new(a.symbolic())
                    .map_err(|e| fail(format!("symbolic LU failed: {e:?}")))?,
            };
            SparseFactor::Real(
                Lu::try_new_with_symbolic(sym, a.as_ref())
                    .map_err(|e| fail(format!("LU failed: {e:?}")))?,
            )
        } else {
            let a = operator.to_faer();
            let sym = match symbolic {
                Some(s) => s.clone(),
                None => SymbolicLu::try_new(a.symbolic())
                    .map_err(|e| fail(format!("symbolic LU failed: {e:?}")))?,
            };
            SparseFactor::Complex(
                Lu::try_new_with_symbolic(sym, a.as_ref())
                    .map_err(|e| fail(format!("LU failed: {e:?}")))?,
            )
        };
        stats.sparse_factorizations.fetch_add(1, Ordering::SeqCst);
        Ok(Self {
            factor,
            operator,
            omega,
            stats,
            residuals: Residuals::new(),
        })
    }

    /// Symbolic analysis shared by every operator with this pattern.
    pub fn symbolic_for(pattern: &CsrMatrix<f64>) -> Result<SymbolicLu<usize>> {
        let a = pattern.to_faer();
        SymbolicLu::try_new(a.symbolic()).map_err(|e| Error::Solver {
            frequency_hz: f64::NAN,
            reason: format!("symbolic LU failed: {e:?}"),
        })
    }

    pub fn operator(&self) -> &CsrMatrix<c64> {
        &self.operator
    }

    fn raw(&self, rhs: MatRef<'_, c64>) -> Mat<c64> {
        let (n, k) = (rhs.nrows(), rhs.ncols());
        match &self.factor {
            SparseFactor::Real(lu) => {
                let mut split = Mat::<f64>::from_fn(n, 2 * k, |i, j| {
                    if j < k {
                        rhs[(i, j)].re
                    } else {
                        rhs[(i, j - k)].im
                    }
                });
                lu.solve_in_place(split.as_mut());
                Mat::from_fn(n, k, |i, j| c64::new(split[(i, j)], split[(i, j + k)]))
            }
            SparseFactor::Complex(lu) => {
                let mut x = rhs.to_owned();
                lu.solve_in_place(x.as_mut());
                x
            }
        }
    }
}

impl FactoredSystem for SparseLu<'_> {
    fn omega(&self) -> f64 {
        self.omega
    }

    fn dim(&self) -> usize {
        self.operator.nrows()
    }

    fn solve(&self, rhs: MatRef<'_, c64>) -> Result<Mat<c64>> {
        if rhs.nrows() != self.dim() {
            return Err(Error::Contract(format!(
                "right-hand side has {} rows, operator has {}",
                rhs.nrows(),
                self.dim()
            )));
        }
        let (x, res) = checked_solve(
            self.omega,
            rhs,
            &|b| self.raw(b),
            &|x| self.operator.mul_dense(x),
        )?;
        self.stats
            .sparse_solves
            .fetch_add(rhs.ncols(), Ordering::SeqCst);
        self.residuals.record(rhs.ncols(), res);
        Ok(x)
    }

    fn solve_count(&self) -> usize {
        self.residuals.solves.load(Ordering::SeqCst)
    }

    fn max_residual(&self) -> f64 {
        self.residuals.max()
    }
}

/// Dense LU with partial pivoting for reduced operators.
pub struct DenseLu<'a> {
    lu: PartialPivLu<c64>,
    operator: Mat<c64>,
    omega: f64,
    stats: &'a SolveStats,
    residuals: Residuals,
}

impl<'a> DenseLu<'a> {
    pub fn factorize(operator: Mat<c64>, omega: f64, stats: &'a SolveStats) -> Result<Self> {
        if operator.nrows() != operator.ncols() {
            return Err(Error::Contract("dense operator must be square".into()));
        }
        let lu = operator.partial_piv_lu();
        stats.dense_factorizations.fetch_add(1, Ordering::SeqCst);
        Ok(Self {
            lu,
            operator,
            omega,
            stats,
            residuals: Residuals::new(),
        })
    }

    pub fn operator(&self) -> MatRef<'_, c64> {
        self.operator.as_ref()
    }
}

impl FactoredSystem for DenseLu<'_> {
    fn omega(&self) -> f64 {
        self.omega
    }

    fn dim(&self) -> usize {
        self.operator.nrows()
    }

    fn solve(&self, rhs: MatRef<'_, c64>) -> Result<Mat<c64>> {
        if rhs.nrows() != self.dim() {
            return Err(Error::Contract(format!(
                "right-hand side has {} rows, reduced operator has {}",
                rhs.nrows(),
                self.dim()
            )));
        }
        let (x, res) = checked_solve(
            self.omega,
            rhs,
            &|b| {
                let mut x = b.to_owned();
                self.lu.solve_in_place(x.as_mut());
                x
            },
            &|x| &self.operator * x,
        )?;
        self.stats
            .dense_solves
            .fetch_add(rhs.ncols(), Ordering::SeqCst);
        self.residuals.record(rhs.ncols(), res);
        Ok(x)
    }

    fn solve_count(&self) -> usize {
        self.residuals.solves.load(Ordering::SeqCst)
    }

    fn max_residual(&self) -> f64 {
        self.residuals.max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, diag: f64) -> CsrMatrix<c64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c64::new(diag, 0.0)));
            if i + 1 < n {
                t.push((i, i + 1, c64::new(-1.0, 0.0)));
                t.push((i + 1, i, c64::new(-1.0, 0.0)));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn real_path_solves_complex_rhs() {
        let stats = SolveStats::default();
        let a = tridiag(6, 3.0);
        let lu = SparseLu::factorize(a.clone(), None, 1.0, &stats).unwrap();
        let b = Mat::from_fn(6, 2, |i, j| c64::new(i as f64 + 1.0, j as f64 - 0.5));
        let x = lu.solve(b.as_ref()).unwrap();
        let ax = a.mul_dense(x.as_ref());
        for i in 0..6 {
            for j in 0..2 {
                assert!((ax[(i, j)] - b[(i, j)]).norm() < 1e-13);
            }
        }
        assert_eq!(lu.solve_count(), 2);
        assert_eq!(stats.snapshot().sparse_solves, 2);
        assert_eq!(stats.snapshot().sparse_factorizations, 1);
    }

    #[test]
    fn complex_path_matches_dense() {
        let stats = SolveStats::default();
        let mut a = tridiag(5, 2.5);
        a = CsrMatrix::linear_combination(
            &a,
            c64::new(1.0, 0.0),
            &CsrMatrix::<c64>::identity(5),
            c64::new(0.0, 0.3),
        )
        .unwrap();
        let sparse = SparseLu::factorize(a.clone(), None, 2.0, &stats).unwrap();
        let dense = DenseLu::factorize(a.to_dense_c64(), 2.0, &stats).unwrap();
        let b = Mat::from_fn(5, 1, |i, _| c64::new(1.0, i as f64));
        let xs = sparse.solve(b.as_ref()).unwrap();
        let xd = dense.solve(b.as_ref()).unwrap();
        for i in 0..5 {
            assert!((xs[(i, 0)] - xd[(i, 0)]).norm() < 1e-13);
        }
        assert_eq!(stats.snapshot().dense_solves, 1);
    }

    #[test]
    fn singular_operator_is_reported_with_frequency() {
        let stats = SolveStats::default();
        let a = Mat::<c64>::zeros(3, 3);
        let lu = DenseLu::factorize(a, 2.0 * PI * 50.0, &stats).unwrap();
        let b = Mat::from_fn(3, 1, |_, _| c64::new(1.0, 0.0));
        match lu.solve(b.as_ref()) {
            Err(Error::Solver { frequency_hz, .. }) => assert!((frequency_hz - 50.0).abs() < 1e-9),
            other => panic!("expected solver error, got {:?}", other.map(|_| ())),
        }
    }
}
