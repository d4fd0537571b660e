//! Error measures between full- and reduced-order results.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::moments::SolutionCovariance;

/// A complex response sampled on a frequency grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub frequencies_hz: Vec<f64>,
    pub values: Vec<c64>,
}

impl Trace {
    pub fn new(frequencies_hz: Vec<f64>, values: Vec<c64>) -> Result<Self> {
        if frequencies_hz.len() != values.len() {
            return Err(Error::Contract(format!(
                "trace has {} frequencies but {} values",
                frequencies_hz.len(),
                values.len()
            )));
        }
        Ok(Self { frequencies_hz, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Drops the listed frequencies (matched to 1 µHz).
    pub fn without(&self, skip_hz: &[f64]) -> Self {
        let keep = |f: f64| !skip_hz.iter().any(|&s| (s - f).abs() < 1e-6);
        let (f, v) = self
            .frequencies_hz
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| keep(**f))
            .map(|(f, v)| (*f, *v))
            .unzip();
        Self {
            frequencies_hz: f,
            values: v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferError {
    /// `max_ω ||p_FOM| − |p_ROM||`.
    pub max_abs: f64,
    /// `max_abs / max_ω |p_FOM|`.
    pub relative: f64,
}

/// Max-abs difference of magnitudes and its value relative to the peak
/// full-order magnitude.
pub fn transfer_error(fom: &Trace, rom: &Trace) -> Result<TransferError> {
    if fom.len() != rom.len()
        || fom
            .frequencies_hz
            .iter()
            .zip(&rom.frequencies_hz)
            .any(|(a, b)| (a - b).abs() > 1e-6)
    {
        return Err(Error::Contract(format!(
            "frequency grids differ: reference has {} points [{}], comparison has {} points [{}]",
            fom.len(),
            describe_grid(&fom.frequencies_hz),
            rom.len(),
            describe_grid(&rom.frequencies_hz)
        )));
    }
    let max_abs = fom
        .values
        .iter()
        .zip(&rom.values)
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max);
    let peak = fom.values.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let relative = if peak > 0.0 {
        max_abs / peak
    } else if max_abs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(TransferError { max_abs, relative })
}

pub(crate) fn describe_grid(f: &[f64]) -> String {
    match (f.first(), f.last()) {
        (Some(a), Some(b)) => format!("{a} .. {b} Hz"),
        _ => "empty".into(),
    }
}

/// Column-stacks `[a b]`.
fn stack(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.nrows(), a.ncols() + b.ncols());
    out.as_mut().subcols_mut(0, a.ncols()).copy_from(a);
    out.as_mut().subcols_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// `‖U diag(d) Vᴴ‖_F` through thin QR of both factors; never forms the
/// `n × n` product.
fn factored_norm(u: MatRef<'_, c64>, d: &[f64], v: MatRef<'_, c64>) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    let ru = u.qr().thin_R().to_owned();
    let rv = v.qr().thin_R().to_owned();
    let rud = Mat::from_fn(ru.nrows(), ru.ncols(), |i, j| ru[(i, j)] * d[j]);
    (rud * rv.adjoint()).norm_l2()
}

/// `‖Σ_ref − Σ‖_F / ‖Σ_ref‖_F` for two factored covariances, evaluated on
/// the stacked factors `[U_ref U] diag(S_ref, −S) [V_ref V]ᴴ`.
pub fn covariance_error(reference: &SolutionCovariance, approx: &SolutionCovariance) -> Result<f64> {
    if reference.n() != approx.n() {
        return Err(Error::Contract(format!(
            "covariances have dimensions {} and {}",
            reference.n(),
            approx.n()
        )));
    }
    let denom = factored_norm(reference.u.as_ref(), &reference.s, reference.v.as_ref());
    if !(denom > 0.0) {
        return Err(Error::Contract("reference covariance is zero".into()));
    }
    // faer's matrix equality panics on mismatched shapes
    let same_shape = reference.u.shape() == approx.u.shape() && reference.v.shape() == approx.v.shape();
    if same_shape && reference == approx {
        return Ok(0.0);
    }
    let u = stack(reference.u.as_ref(), approx.u.as_ref());
    let v = stack(reference.v.as_ref(), approx.v.as_ref());
    let d: Vec<f64> = reference.s.iter().copied().chain(approx.s.iter().map(|s| -s)).collect();
    Ok(factored_norm(u.as_ref(), &d, v.as_ref()) / denom)
}

/// Dense counterpart of [`covariance_error`].
pub fn covariance_error_dense(reference: MatRef<'_, c64>, approx: MatRef<'_, c64>) -> Result<f64> {
    if reference.nrows() != approx.nrows() || reference.ncols() != approx.ncols() {
        return Err(Error::Contract("covariance shapes differ".into()));
    }
    let denom = reference.norm_l2();
    if !(denom > 0.0) {
        return Err(Error::Contract("reference covariance is zero".into()));
    }
    Ok((reference - approx).norm_l2() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::reconstruct_full;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(n: usize, m: usize, seed: u64) -> Mat<c64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, m, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn trace(values: &[f64]) -> Trace {
        let f = (0..values.len()).map(|i| 16.0 + 2.0 * i as f64).collect();
        Trace::new(f, values.iter().map(|&v| c64::new(0.0, v)).collect()).unwrap()
    }

    #[test]
    fn identical_traces_have_zero_error() {
        let t = trace(&[1.0, 3.0, 2.0]);
        let e = transfer_error(&t, &t).unwrap();
        assert_eq!(e.max_abs, 0.0);
        assert_eq!(e.relative, 0.0);
    }

    #[test]
    fn constant_offset_is_the_error() {
        let a = trace(&[1.0, 3.0, 2.0]);
        let b = trace(&[1.25, 3.25, 2.25]);
        let e = transfer_error(&a, &b).unwrap();
        assert!((e.max_abs - 0.25).abs() < 1e-15);
        assert!((e.relative - 0.25 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn grid_mismatch_names_both_grids() {
        let a = trace(&[1.0, 2.0]);
        let b = trace(&[1.0, 2.0, 3.0]);
        let msg = transfer_error(&a, &b).unwrap_err().to_string();
        assert!(msg.contains("16 .. 18 Hz") && msg.contains("16 .. 20 Hz"), "{msg}");
    }

    #[test]
    fn skipped_frequencies_are_removed() {
        let t = trace(&[1.0, 2.0, 3.0]).without(&[18.0]);
        assert_eq!(t.frequencies_hz, vec![16.0, 20.0]);
    }

    #[test]
    fn factored_error_matches_dense_oracle() {
        let general = |u, v, s: Vec<f64>| SolutionCovariance { u, v, s, hermitian: false };
        let a = general(rand_mat(10, 1, 1), rand_mat(10, 1, 2), vec![2.0]);
        let b = general(rand_mat(10, 1, 3), rand_mat(10, 1, 4), vec![0.7]);
        let dense = covariance_error_dense(reconstruct_full(&a).as_ref(), reconstruct_full(&b).as_ref()).unwrap();
        let fact = covariance_error(&a, &b).unwrap();
        assert!((dense - fact).abs() < 1e-12 * dense, "{dense} vs {fact}");

        let c = SolutionCovariance::from_factor(rand_mat(12, 4, 5));
        let d = SolutionCovariance::from_factor(rand_mat(12, 2, 6));
        let dense = covariance_error_dense(reconstruct_full(&c).as_ref(), reconstruct_full(&d).as_ref()).unwrap();
        assert!((dense - covariance_error(&c, &d).unwrap()).abs() < 1e-12 * dense);
    }

    #[test]
    fn identical_factors_have_zero_error() {
        let c = SolutionCovariance::from_factor(rand_mat(8, 3, 7));
        assert_eq!(covariance_error(&c, &c).unwrap(), 0.0);
    }

    #[test]
    fn small_differences_are_resolved() {
        // perturbation of relative size 1e-9 survives without cancellation
        let u = rand_mat(30, 5, 8);
        let du = rand_mat(30, 5, 9);
        let v = Mat::from_fn(30, 5, |i, j| u[(i, j)] + du[(i, j)] * 1e-9);
        let a = SolutionCovariance::from_factor(u);
        let b = SolutionCovariance::from_factor(v);
        let dense = covariance_error_dense(reconstruct_full(&a).as_ref(), reconstruct_full(&b).as_ref()).unwrap();
        let fact = covariance_error(&a, &b).unwrap();
        assert!((dense - fact).abs() < 1e-4 * dense, "{dense} vs {fact}");
    }

    #[test]
    fn zero_reference_is_rejected() {
        let z = SolutionCovariance::from_factor(Mat::zeros(4, 1));
        assert!(matches!(covariance_error(&z, &z), Err(Error::Contract(_))));
    }
}
