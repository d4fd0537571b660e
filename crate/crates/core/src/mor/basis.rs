//! Orthonormal projection bases with logged deflation.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::dense::{normalize_column_phases, orthonormality_defect};

/// A candidate column dropped as numerically dependent.
#[derive(Clone, Debug, PartialEq)]
pub struct Deflation {
    /// Expansion point index.
    pub point: usize,
    /// Moment level within that point.
    pub level: usize,
    /// Input column index.
    pub input: usize,
    /// Remaining norm relative to the candidate's original norm.
    pub relative_norm: f64,
}

/// Incremental block Gram–Schmidt: classical block projection applied
/// twice against accepted columns, then modified Gram–Schmidt with
/// reorthogonalization inside the block.
#[derive(Clone, Debug)]
pub struct Orthonormalizer {
    v: Mat<c64>,
    r: usize,
    tol: f64,
    pub deflations: Vec<Deflation>,
}

impl Orthonormalizer {
    pub fn new(n: usize, tol: f64, capacity: usize) -> Self {
        Self {
            v: Mat::zeros(n, capacity.max(1)),
            r: 0,
            tol,
            deflations: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn basis(&self) -> MatRef<'_, c64> {
        self.v.as_ref().subcols(0, self.r)
    }

    /// Ensures room for `extra` more columns.
    pub fn reserve(&mut self, extra: usize) {
        if self.r + extra <= self.v.ncols() {
            return;
        }
        let cap = (self.r + extra).max(2 * self.v.ncols());
        let mut grown = Mat::<c64>::zeros(self.v.nrows(), cap);
        grown.as_mut().subcols_mut(0, self.r).copy_from(self.v.as_ref().subcols(0, self.r));
        self.v = grown;
    }

    /// Orthonormalizes `w` against the accepted columns and appends the
    /// survivors; returns them. `labels[j]` names column `j` in the log.
    pub fn push_block(&mut self, point: usize, level: usize, mut w: Mat<c64>, labels: &[usize]) -> Mat<c64> {
        let m = w.ncols();
        debug_assert_eq!(labels.len(), m);
        let norms0: Vec<f64> = (0..m).map(|j| w.col(j).norm_l2()).collect();
        if self.r > 0 {
            let v = self.v.as_ref().subcols(0, self.r);
            for _ in 0..2 {
                let c = v.adjoint() * &w;
                w -= v * &c;
            }
        }
        self.reserve(m);
        let start = self.r;
        for j in 0..m {
            let mut col = w.col(j).to_owned();
            for _ in 0..2 {
                for k in start..self.r {
                    let q = self.v.col(k);
                    let h = q.adjoint() * &col;
                    for i in 0..col.nrows() {
                        col[i] -= q[i] * h;
                    }
                }
            }
            let nrm = col.norm_l2();
            let rel = if norms0[j] > 0.0 { nrm / norms0[j] } else { 0.0 };
            if !(rel > self.tol) {
                log::debug!("deflated point {point} level {level} input {} (relative norm {rel:.2e})", labels[j]);
                self.deflations.push(Deflation {
                    point,
                    level,
                    input: labels[j],
                    relative_norm: rel,
                });
                continue;
            }
            let inv = c64::new(1.0 / nrm, 0.0);
            let mut dst = self.v.col_mut(self.r);
            for i in 0..col.nrows() {
                dst[i] = col[i] * inv;
            }
            self.r += 1;
        }
        self.v.as_ref().subcols(start, self.r - start).to_owned()
    }
}

/// `V ∈ C^{n×r}` with orthonormal columns plus its construction record.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionBasis {
    pub v: Mat<c64>,
    pub points_hz: Vec<f64>,
    pub order: usize,
    /// Input columns supplied per expansion point.
    pub input_counts: Vec<usize>,
    pub deflations: Vec<Deflation>,
}

impl ProjectionBasis {
    /// Finalizes an orthonormalizer: fixes column phases and checks the
    /// orthonormality invariant.
    pub fn from_orthonormalizer(
        orth: Orthonormalizer,
        points_hz: Vec<f64>,
        order: usize,
        input_counts: Vec<usize>,
    ) -> Result<Self> {
        if orth.rank() == 0 {
            return Err(Error::DegenerateInput(
                "every basis candidate was deflated; inputs are zero or dependent".into(),
            ));
        }
        let mut v = orth.basis().to_owned();
        normalize_column_phases(v.as_mut());
        let basis = Self {
            v,
            points_hz,
            order,
            input_counts,
            deflations: orth.deflations,
        };
        let defect = basis.orthonormality_defect();
        if defect > 1e-10 {
            return Err(Error::DegenerateInput(format!(
                "basis lost orthonormality (‖VᴴV − I‖_F = {defect:.2e})"
            )));
        }
        Ok(basis)
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn r(&self) -> usize {
        self.v.ncols()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        orthonormality_defect(self.v.as_ref())
    }

    /// Nominal size before deflation: points × inputs × order.
    pub fn nominal_size(&self) -> usize {
        self.input_counts.iter().sum::<usize>() * self.order
    }
}

/// Orthonormalizes the columns of `blocks`, read as consecutive groups of
/// `block_width` (one group per moment level of a single point).
pub fn orthonormalize(blocks: MatRef<'_, c64>, block_width: usize, tol: f64) -> Result<ProjectionBasis> {
    if blocks.ncols() == 0 || block_width == 0 {
        return Err(Error::DegenerateInput("no columns to orthonormalize".into()));
    }
    let mut orth = Orthonormalizer::new(blocks.nrows(), tol, blocks.ncols());
    let mut level = 0;
    let mut start = 0;
    while start < blocks.ncols() {
        let width = block_width.min(blocks.ncols() - start);
        let labels: Vec<usize> = (0..width).collect();
        orth.push_block(0, level, blocks.subcols(start, width).to_owned(), &labels);
        start += width;
        level += 1;
    }
    let levels = level;
    ProjectionBasis::from_orthonormalizer(orth, vec![], levels, vec![block_width])
}
