//! Compressed sparse row storage used for assembly, mat-vec products and
//! hand-off to the sparse LU backend.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Range};

use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// Entry type of a [`CsrMatrix`]: real or complex double precision.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + AddAssign
    + Mul<Output = Self>
    + 'static
{
    fn to_c64(self) -> c64;
    fn abs(self) -> f64;
    fn conj(self) -> Self;
    /// `self * z`, promoted to complex.
    fn mul_c(self, z: c64) -> c64;
}

impl Scalar for f64 {
    #[inline]
    fn to_c64(self) -> c64 {
        c64::new(self, 0.0)
    }
    #[inline]
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn mul_c(self, z: c64) -> c64 {
        c64::new(self * z.re, self * z.im)
    }
}

impl Scalar for c64 {
    #[inline]
    fn to_c64(self) -> c64 {
        self
    }
    #[inline]
    fn abs(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn conj(self) -> Self {
        c64::conj(&self)
    }
    #[inline]
    fn mul_c(self, z: c64) -> c64 {
        self * z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// in insertion order, so the result is bit-reproducible for a given input
    /// sequence. Explicit zeros are kept as structural entries.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::Contract(format!(
                    "triplet ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
        }
        // stable: equal keys keep insertion order
        order.sort_by_key(|&i| (triplets[i].0, triplets[i].1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &i in &order {
            let (r, c, v) = triplets[i];
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self
    where
        T: From<f64>,
    {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::from(1.0); n],
        }
    }

    pub fn from_dense(a: MatRef<'_, T>) -> Self
    where
        T: faer::traits::ComplexField,
    {
        let mut trip = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != T::default() {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &trip).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Stored value at `(i, j)`, or zero when the entry is structurally absent.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::default(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> Self {
        let trip: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &trip).expect("indices in range")
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Sub-block `rows × cols`, re-indexed from zero.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let mut trip = Vec::new();
        for i in rows.clone() {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                if cols.contains(&j) {
                    trip.push((i - rows.start, j - cols.start, v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &trip).expect("indices in range")
    }

    /// Largest absolute stored value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum of `|a_ij - conj(a_ji)|` over stored entries, relative to the
    /// largest entry (Hermitian for complex, symmetric for real).
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.iter()
            .map(|(i, j, v)| (v.to_c64() - self.get(j, i).conj().to_c64()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// `y = A x` for a complex vector.
    pub fn mul_vec(&self, x: &[c64]) -> Vec<c64> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension mismatch");
        (0..self.nrows)
            .map(|i| {
                let (cs, vs) = self.row(i);
                cs.iter()
                    .zip(vs)
                    .fold(c64::new(0.0, 0.0), |acc, (&j, &v)| acc + v.mul_c(x[j]))
            })
            .collect()
    }

    /// `Y = A X` for a dense complex block. Columns are processed in
    /// groups so each pass over the matrix serves several of them.
    pub fn mul_dense(&self, x: MatRef<'_, c64>) -> Mat<c64> {
        const GROUP: usize = 8;
        assert_eq!(x.nrows(), self.ncols, "mul_dense dimension mismatch");
        let (n, m) = (self.nrows, x.ncols());
        let mut y = Mat::<c64>::zeros(n, m);
        // row-interleaved copy of a column group: xg[j * GROUP + c]
        let mut xg = vec![c64::new(0.0, 0.0); self.ncols * GROUP];
        let mut yg = vec![c64::new(0.0, 0.0); n * GROUP];
        let mut start = 0;
        while start < m {
            let w = GROUP.min(m - start);
            for c in 0..w {
                for (j, v) in x.col(start + c).iter().enumerate() {
                    xg[j * GROUP + c] = *v;
                }
            }
            for i in 0..n {
                let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
                let mut acc = [c64::new(0.0, 0.0); GROUP];
                for (&j, &v) in self.col_idx[lo..hi].iter().zip(&self.values[lo..hi]) {
                    let xs = &xg[j * GROUP..j * GROUP + GROUP];
                    for c in 0..GROUP {
                        acc[c] += v.mul_c(xs[c]);
                    }
                }
                yg[i * GROUP..i * GROUP + GROUP].copy_from_slice(&acc);
            }
            for c in 0..w {
                for (i, out) in y.col_mut(start + c).iter_mut().enumerate() {
                    *out = yg[i * GROUP + c];
                }
            }
            start += w;
        }
        y
    }

    /// Dense copy, for desk-scale verification only.
    pub fn to_dense_c64(&self) -> Mat<c64> {
        let mut d = Mat::<c64>::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v.to_c64();
        }
        d
    }

    /// `alpha * A + beta * B` on the union pattern of both operands.
    pub fn linear_combination<U: Scalar>(
        a: &CsrMatrix<T>,
        alpha: c64,
        b: &CsrMatrix<U>,
        beta: c64,
    ) -> Result<CsrMatrix<c64>> {
        if a.nrows != b.nrows || a.ncols != b.ncols {
            return Err(Error::Contract(format!(
                "cannot combine {}x{} with {}x{}",
                a.nrows, a.ncols, b.nrows, b.ncols
            )));
        }
        let mut row_ptr = Vec::with_capacity(a.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(a.nnz() + b.nnz());
        let mut values = Vec::with_capacity(a.nnz() + b.nnz());
        for i in 0..a.nrows {
            let (ac, av) = a.row(i);
            let (bc, bv) = b.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let ja = ac.get(p).copied().unwrap_or(usize::MAX);
                let jb = bc.get(q).copied().unwrap_or(usize::MAX);
                if ja == jb {
                    col_idx.push(ja);
                    values.push(av[p].mul_c(alpha) + bv[q].mul_c(beta));
                    p += 1;
                    q += 1;
                } else if ja < jb {
                    col_idx.push(ja);
                    values.push(av[p].mul_c(alpha));
                    p += 1;
                } else {
                    col_idx.push(jb);
                    values.push(bv[q].mul_c(beta));
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            nrows: a.nrows,
            ncols: a.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Column-compressed copy in faer's format, keeping explicit zeros.
    pub fn to_faer(&self) -> SparseColMat<usize, T>
    where
        T: faer::traits::ComplexField,
    {
        let trip: Vec<_> = self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .expect("valid sorted triplets")
    }
}

impl CsrMatrix<c64> {
    /// True when every stored value has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn real_part(&self) -> CsrMatrix<f64> {
        self.map(|v| v.re)
    }

    /// Structural pattern equality (same stored positions).
    pub fn same_pattern<U>(&self, other: &CsrMatrix<U>) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }
}

impl CsrMatrix<f64> {
    pub fn to_c64(&self) -> CsrMatrix<c64> {
        self.map(|v| c64::new(v, 0.0))
    }

    /// `y = A x` for a real vector.
    pub fn mul_vec_real(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec_real dimension mismatch");
        (0..self.nrows)
            .map(|i| {
                let (cs, vs) = self.row(i);
                cs.iter().zip(vs).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut d = Mat::<f64>::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    /// Scales every stored value.
    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }
}
