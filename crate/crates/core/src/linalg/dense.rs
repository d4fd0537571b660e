use faer::{c64, Mat, MatMut, MatRef};

pub fn zero() -> c64 {
    c64::new(0.0, 0.0)
}

pub fn frobenius_norm(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

pub fn column_norm(a: MatRef<'_, c64>, j: usize) -> f64 {
    a.col(j).norm_l2()
}

pub fn vector_norm(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `Aᴴ B`.
pub fn adjoint_mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    a.adjoint() * b
}

/// Rotates every column so that its largest-magnitude entry is real and
/// positive. Ties resolve to the lowest row index. Returns the unit factor
/// applied to each column.
pub fn normalize_column_phases(mut a: MatMut<'_, c64>) -> Vec<c64> {
    let mut rotations = vec![c64::new(1.0, 0.0); a.ncols()];
    for j in 0..a.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..a.nrows() {
            let m = a[(i, j)].norm();
            if m > best_abs {
                best_abs = m;
                best = i;
            }
        }
        if best_abs <= 0.0 {
            continue;
        }
        let pivot = a[(best, j)];
        let rot = pivot.conj() / pivot.norm();
        for i in 0..a.nrows() {
            a[(i, j)] *= rot;
        }
        let p = a[(best, j)];
        a[(best, j)] = c64::new(p.re, 0.0);
        rotations[j] = rot;
    }
    rotations
}

/// Column-stacked copy of a vector list.
pub fn columns_to_mat(n: usize, cols: &[Vec<c64>]) -> Mat<c64> {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub fn col_to_vec(a: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    a.col(j).iter().copied().collect()
}

/// Horizontal concatenation of blocks with equal row counts.
pub fn hstack(blocks: &[MatRef<'_, c64>]) -> Mat<c64> {
    let nrows = blocks.first().map_or(0, |b| b.nrows());
    let ncols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::<c64>::zeros(nrows, ncols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), nrows, "hstack row mismatch");
        out.as_mut().submatrix_mut(0, off, nrows, b.ncols()).copy_from(b);
        off += b.ncols();
    }
    out
}

/// Frobenius norm of `‖Vᴴ V − I‖`.
pub fn orthonormality_defect(v: MatRef<'_, c64>) -> f64 {
    let g = adjoint_mul(v, v);
    let mut acc = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            acc += (g[(i, j)] - c64::new(target, 0.0)).norm_sqr();
        }
    }
    acc.sqrt()
}
