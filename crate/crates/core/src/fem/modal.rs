//! Dense eigenfrequency extraction for desk-scale verification.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Eigenfrequencies in Hz of `K φ = ω² M φ`, ascending. Solves the dense
/// eigenproblem of `M⁻¹ K`; negative round-off eigenvalues clamp to zero.
pub fn dense_eigenfrequencies(k: &CsrMatrix<f64>, m: &CsrMatrix<f64>) -> Result<Vec<f64>> {
    let a = m.to_dense().partial_piv_lu().solve(k.to_dense());
    let eig = a
        .eigenvalues()
        .map_err(|e| Error::DegenerateInput(format!("dense eigensolver failed: {e:?}")))?;
    let mut f: Vec<f64> = eig.iter().map(|l| l.re.max(0.0).sqrt() / (2.0 * PI)).collect();
    f.sort_by(f64::total_cmp);
    Ok(f)
}

/// The first `count` eigenfrequencies above `floor_hz`, skipping rigid modes.
pub fn elastic_eigenfrequencies(
    k: &CsrMatrix<f64>,
    m: &CsrMatrix<f64>,
    floor_hz: f64,
    count: usize,
) -> Result<Vec<f64>> {
    Ok(dense_eigenfrequencies(k, m)?
        .into_iter()
        .filter(|&f| f > floor_hz)
        .take(count)
        .collect())
}
