//! Block rational Arnoldi on `A(σ)⁻¹ M` at fixed expansion points.

use std::f64::consts::PI;

use faer::{c64, Mat, MatRef};
use rayon::prelude::*;

use super::basis::{Orthonormalizer, ProjectionBasis};
use crate::error::{Error, Result};
use crate::fem::CoupledSystem;
use crate::linalg::{FactoredSystem, FrequencyModel};
use crate::moments::{LowRankFactorization, MomentPair};

pub const DEFAULT_ORDER: usize = 20;
pub const DEFAULT_DEFLATION_TOL: f64 = 1e-10;
pub const DEFAULT_POINTS_HZ: [f64; 2] = [114.0, 414.0];
const DEFAULT_BAND_HZ: (f64, f64) = (16.0, 500.0);

#[derive(Clone, Debug)]
pub struct ExpansionConfig {
    pub points_hz: Vec<f64>,
    pub order: usize,
    pub deflation_tol: f64,
    /// Input vectors per expansion point, `n × m_p`.
    pub inputs: Vec<Mat<c64>>,
}

impl ExpansionConfig {
    pub fn validate(&self, n: usize, band_hz: Option<(f64, f64)>) -> Result<()> {
        if self.points_hz.is_empty() {
            return Err(Error::Config("at least one expansion point is required".into()));
        }
        if self.order == 0 {
            return Err(Error::Config("expansion order must be at least 1".into()));
        }
        if !(self.deflation_tol > 0.0 && self.deflation_tol < 1.0) {
            return Err(Error::Config(format!(
                "deflation tolerance must lie in (0, 1), got {}",
                self.deflation_tol
            )));
        }
        if self.inputs.len() != self.points_hz.len() {
            return Err(Error::Contract(format!(
                "{} input sets for {} expansion points",
                self.inputs.len(),
                self.points_hz.len()
            )));
        }
        for (p, (&f, b)) in self.points_hz.iter().zip(&self.inputs).enumerate() {
            if !(f > 0.0) {
                return Err(Error::Config(format!("expansion point {p} must be positive, got {f} Hz")));
            }
            if let Some((lo, hi)) = band_hz {
                if f < lo || f > hi {
                    return Err(Error::Config(format!(
                        "expansion point {f} Hz lies outside the band [{lo}, {hi}] Hz"
                    )));
                }
            }
            if b.ncols() == 0 {
                return Err(Error::Contract(format!("expansion point {p} has no input vectors")));
            }
            if b.nrows() != n {
                return Err(Error::Contract(format!(
                    "inputs at point {p} have {} rows, system has {n}",
                    b.nrows()
                )));
            }
        }
        Ok(())
    }
}

/// The default points scaled proportionally into `[f_min, f_max]`.
pub fn default_points_hz(f_min: f64, f_max: f64) -> Vec<f64> {
    let (lo, hi) = DEFAULT_BAND_HZ;
    DEFAULT_POINTS_HZ
        .iter()
        .map(|&p| f_min + (p - lo) / (hi - lo) * (f_max - f_min))
        .collect()
}

/// Arnoldi inputs at one point: the mean, the left factors and, unless
/// `include_right` is false, the right factors. Hermitian factors have
/// `V = U`; the duplicates are then removed by deflation.
pub fn inputs_from_moments(moments: &MomentPair, factors: &LowRankFactorization, include_right: bool) -> Result<Mat<c64>> {
    let n = moments.n();
    if factors.u.nrows() != n {
        return Err(Error::Contract(format!(
            "factors have {} rows, mean has {n}",
            factors.u.nrows()
        )));
    }
    let l = factors.rank();
    let m = 1 + l + if include_right { l } else { 0 };
    let mut b = Mat::<c64>::zeros(n, m);
    for (i, &x) in moments.mean.iter().enumerate() {
        b[(i, 0)] = x;
    }
    b.as_mut().subcols_mut(1, l).copy_from(&factors.u);
    if include_right {
        b.as_mut().subcols_mut(1 + l, l).copy_from(&factors.v);
    }
    Ok(b)
}

fn expansion_error(frequency_hz: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Solver { reason, .. } => Error::ExpansionPoint { frequency_hz, reason },
        other => other,
    }
}

fn factorize_at<'a>(sys: &'a CoupledSystem, sigma: f64) -> Result<Box<dyn FactoredSystem + 'a>> {
    let hz = sigma / (2.0 * PI);
    sys.factorize(sigma).map_err(expansion_error(hz))
}

/// Unnormalized moments `[s_0, …, s_{q−1}]` with `s_0 = A(σ)⁻¹ B` and
/// `s_k = A(σ)⁻¹ M s_{k−1}`, level by level. Entries scale geometrically
/// with `k`; use only for small `q`.
pub fn krylov_block(sys: &CoupledSystem, sigma: f64, inputs: MatRef<'_, c64>, q: usize) -> Result<Mat<c64>> {
    if q == 0 || inputs.ncols() == 0 {
        return Err(Error::Contract("krylov_block needs q ≥ 1 and at least one input".into()));
    }
    let (n, m) = (sys.n(), inputs.ncols());
    let fac = factorize_at(sys, sigma)?;
    let hz = sigma / (2.0 * PI);
    let mut out = Mat::<c64>::zeros(n, m * q);
    let mut s = fac.solve(inputs).map_err(expansion_error(hz))?;
    for k in 0..q {
        out.as_mut().subcols_mut(k * m, m).copy_from(&s);
        if k + 1 < q {
            s = fac.solve(sys.m.mul_dense(s.as_ref()).as_ref()).map_err(expansion_error(hz))?;
        }
    }
    Ok(out)
}

/// Orthonormal moment levels of one point: level `k` spans the new
/// directions of `s_k` relative to levels `0..k`.
#[derive(Clone, Debug)]
pub struct PointBlocks {
    pub levels: Vec<(Mat<c64>, Vec<usize>)>,
    pub local: Orthonormalizer,
}

/// Same span as [`krylov_block`], built stably: each level is
/// orthonormalized against the earlier levels of this point before
/// the next multiplication by `A(σ)⁻¹ M`.
pub fn arnoldi_point(
    sys: &CoupledSystem,
    point: usize,
    sigma: f64,
    inputs: MatRef<'_, c64>,
    q: usize,
    tol: f64,
) -> Result<PointBlocks> {
    let hz = sigma / (2.0 * PI);
    let fac = factorize_at(sys, sigma)?;
    let mut local = Orthonormalizer::new(sys.n(), tol, inputs.ncols() * q);
    let mut levels = Vec::with_capacity(q);
    let mut w = fac.solve(inputs).map_err(expansion_error(hz))?;
    let mut labels: Vec<usize> = (0..inputs.ncols()).collect();
    for k in 0..q {
        let before = local.deflations.len();
        let block = local.push_block(point, k, std::mem::replace(&mut w, Mat::new()), &labels);
        let dropped: Vec<usize> = local.deflations[before..].iter().map(|d| d.input).collect();
        labels.retain(|l| !dropped.contains(l));
        if block.ncols() == 0 {
            log::debug!("point {point} ({hz:.2} Hz): Krylov space exhausted at level {k}");
            break;
        }
        if k + 1 < q {
            w = fac.solve(sys.m.mul_dense(block.as_ref()).as_ref()).map_err(expansion_error(hz))?;
        }
        levels.push((block, labels.clone()));
    }
    log::info!(
        "point {point} ({hz:.2} Hz): {} local directions, {} local deflations",
        local.rank(),
        local.deflations.len()
    );
    Ok(PointBlocks { levels, local })
}

/// Global basis over all expansion points. Points run in parallel; the
/// global orthonormalization visits them in configuration order, so the
/// result does not depend on the thread count.
pub fn build_basis(sys: &CoupledSystem, cfg: &ExpansionConfig) -> Result<ProjectionBasis> {
    cfg.validate(sys.n(), None)?;
    let points: Vec<PointBlocks> = cfg
        .points_hz
        .par_iter()
        .zip(cfg.inputs.par_iter())
        .enumerate()
        .map(|(p, (&f, b))| arnoldi_point(sys, p, 2.0 * PI * f, b.as_ref(), cfg.order, cfg.deflation_tol))
        .collect::<Result<_>>()?;
    let capacity = points.iter().map(|p| p.local.rank()).sum();
    let mut points = points.into_iter();
    // the first point's local basis is already globally orthonormal
    let first = points.next().expect("at least one expansion point");
    let mut global = first.local;
    global.reserve(capacity);
    let mut cross = Vec::new();
    for (p, blocks) in points.enumerate() {
        global.deflations.extend(blocks.local.deflations);
        let before = std::mem::take(&mut global.deflations);
        for (k, (block, labels)) in blocks.levels.into_iter().enumerate() {
            global.push_block(p + 1, k, block, &labels);
        }
        cross.append(&mut global.deflations);
        global.deflations = before;
    }
    global.deflations.append(&mut cross);
    let counts = cfg.inputs.iter().map(|b| b.ncols()).collect();
    let basis = ProjectionBasis::from_orthonormalizer(global, cfg.points_hz.clone(), cfg.order, counts)?;
    log::info!(
        "projection basis: r = {} of nominal {}, {} deflations",
        basis.r(),
        basis.nominal_size(),
        basis.deflations.len()
    );
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::mor::{reduce, solve_reduced, lift};
    use faer::linalg::solvers::Solve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Spring chain with a fluid-like tail coupled through `K` and `M`.
    pub(crate) fn toy(n: usize, n_s: usize) -> CoupledSystem {
        let mut kt = Vec::new();
        let mut mt = Vec::new();
        for i in 0..n {
            kt.push((i, i, 2.0 + 0.3 * i as f64));
            mt.push((i, i, 1.0 + 0.05 * i as f64));
            if i + 1 < n {
                kt.push((i, i + 1, -1.0));
                kt.push((i + 1, i, -1.0));
            }
        }
        // one-way coupling terms in the off-diagonal blocks
        kt.push((0, n_s, -0.2));
        mt.push((n_s, 0, 0.3));
        let k = CsrMatrix::from_triplets(n, n, &kt).unwrap();
        let m = CsrMatrix::from_triplets(n, n, &mt).unwrap();
        CoupledSystem::from_matrices(k, m, n_s).unwrap()
    }

    fn rand_mat(n: usize, m: usize, seed: u64) -> Mat<c64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, m, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn dense_solve(sys: &CoupledSystem, omega: f64, b: MatRef<'_, c64>) -> Mat<c64> {
        sys.dynamic_stiffness(omega).to_dense_c64().partial_piv_lu().solve(b)
    }

    fn rel(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
        (a - b).norm_l2() / b.norm_l2()
    }

    fn config(points_hz: Vec<f64>, order: usize, inputs: Vec<Mat<c64>>) -> ExpansionConfig {
        ExpansionConfig {
            points_hz,
            order,
            deflation_tol: DEFAULT_DEFLATION_TOL,
            inputs,
        }
    }

    #[test]
    fn order_one_spans_zeroth_moments() {
        let sys = toy(10, 6);
        let b = rand_mat(10, 2, 1);
        let sigma = 2.0 * PI * 0.1;
        let s0 = krylov_block(&sys, sigma, b.as_ref(), 1).unwrap();
        let basis = build_basis(&sys, &config(vec![0.1], 1, vec![b.clone()])).unwrap();
        assert_eq!(basis.r(), 2);
        // s0 lies in span(V)
        let proj = &basis.v * (basis.v.adjoint() * &s0);
        assert!(rel(proj.as_ref(), s0.as_ref()) < 1e-12);
    }

    #[test]
    fn raw_block_follows_recurrence() {
        let sys = toy(8, 5);
        let b = rand_mat(8, 2, 2);
        let sigma = 0.4;
        let s = krylov_block(&sys, sigma, b.as_ref(), 3).unwrap();
        let s0 = dense_solve(&sys, sigma, b.as_ref());
        assert!(rel(s.subcols(0, 2), s0.as_ref()) < 1e-12);
        let m = sys.m.to_c64().to_dense_c64();
        let s1 = dense_solve(&sys, sigma, (&m * &s0).as_ref());
        assert!(rel(s.subcols(2, 2), s1.as_ref()) < 1e-12);
        let s2 = dense_solve(&sys, sigma, (&m * &s1).as_ref());
        assert!(rel(s.subcols(4, 2), s2.as_ref()) < 1e-12);
    }

    #[test]
    fn zero_mass_leaves_only_zeroth_moments() {
        let n = 7;
        let k = CsrMatrix::from_triplets(
            n,
            n,
            &(0..n).map(|i| (i, i, 1.0 + i as f64)).collect::<Vec<_>>(),
        )
        .unwrap();
        let sys = CoupledSystem::from_matrices(k, CsrMatrix::zeros(n, n), 4).unwrap();
        let b = rand_mat(n, 3, 3);
        let basis = build_basis(&sys, &config(vec![1.0], 5, vec![b])).unwrap();
        assert_eq!(basis.r(), 3);
        assert!(basis.deflations.iter().all(|d| d.level == 1));
    }

    #[test]
    fn full_krylov_space_reproduces_fom_everywhere() {
        let n = 10;
        let sys = toy(n, 6);
        let b = rand_mat(n, 1, 4);
        let basis = build_basis(&sys, &config(vec![0.12], n, vec![b.clone()])).unwrap();
        assert_eq!(basis.r(), n);
        let rs = reduce(&sys, &basis).unwrap();
        for f in [0.01, 0.05, 0.1, 0.2, 0.3, 0.45] {
            let omega = 2.0 * PI * f;
            let br = basis.v.adjoint() * &b;
            let x = lift(&basis, solve_reduced(&rs, omega, br.as_ref()).unwrap().as_ref());
            let oracle = dense_solve(&sys, omega, b.as_ref());
            assert!(rel(x.as_ref(), oracle.as_ref()) < 1e-10, "f = {f}");
        }
    }

    #[test]
    fn interpolates_inputs_at_every_point() {
        let n = 40;
        let sys = toy(n, 25);
        let inputs = vec![rand_mat(n, 3, 5), rand_mat(n, 2, 6)];
        let points = vec![0.08, 0.3];
        let basis = build_basis(&sys, &config(points.clone(), 3, inputs.clone())).unwrap();
        assert!(basis.r() <= 15);
        assert!(basis.orthonormality_defect() < 1e-10);
        let rs = reduce(&sys, &basis).unwrap();
        for (f, b) in points.iter().zip(&inputs) {
            let omega = 2.0 * PI * f;
            let br = basis.v.adjoint() * b;
            let x = lift(&basis, solve_reduced(&rs, omega, br.as_ref()).unwrap().as_ref());
            let oracle = dense_solve(&sys, omega, b.as_ref());
            assert!(rel(x.as_ref(), oracle.as_ref()) < 1e-8);
        }
    }

    #[test]
    fn matches_moments_up_to_order() {
        // transfer function h(μ) = cᴴ A(σ² + μ)⁻¹ b, derivatives by finite differences
        let n = 30;
        let sys = toy(n, 18);
        let b = rand_mat(n, 1, 7);
        let c = rand_mat(n, 1, 8);
        let f0 = 0.15;
        let sigma2 = (2.0 * PI * f0).powi(2);
        let q = 3;
        let basis = build_basis(&sys, &config(vec![f0], q, vec![b.clone()])).unwrap();
        let rs = reduce(&sys, &basis).unwrap();
        let br = basis.v.adjoint() * &b;
        let h_fom = |mu: f64| (c.adjoint() * dense_solve(&sys, (sigma2 + mu).sqrt(), b.as_ref()))[(0, 0)];
        let h_rom = |mu: f64| {
            let x = lift(&basis, solve_reduced(&rs, (sigma2 + mu).sqrt(), br.as_ref()).unwrap().as_ref());
            (c.adjoint() * x)[(0, 0)]
        };
        let h = 1e-3 * sigma2;
        let d0 = (h_rom(0.0) - h_fom(0.0)).norm() / h_fom(0.0).norm();
        assert!(d0 < 1e-12);
        let d1 = |g: &dyn Fn(f64) -> c64| (g(h) - g(-h)) / (2.0 * h);
        let d2 = |g: &dyn Fn(f64) -> c64| (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
        let (a1, o1) = (d1(&h_rom), d1(&h_fom));
        let (a2, o2) = (d2(&h_rom), d2(&h_fom));
        assert!((a1 - o1).norm() / o1.norm() < 1e-6, "first derivative");
        assert!((a2 - o2).norm() / o2.norm() < 1e-4, "second derivative");
    }

    #[test]
    fn resonant_point_is_an_expansion_error() {
        // K = diag(1, 4), M = I: resonance at ω = 1
        let k = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 4.0)]).unwrap();
        let sys = CoupledSystem::from_matrices(k, CsrMatrix::identity(2), 1).unwrap();
        let b = rand_mat(2, 1, 9);
        let err = build_basis(&sys, &config(vec![1.0 / (2.0 * PI)], 2, vec![b])).unwrap_err();
        assert!(matches!(err, Error::ExpansionPoint { .. }), "{err}");
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let sys = toy(6, 3);
        let cfg = config(vec![0.1], 2, vec![Mat::zeros(6, 0)]);
        assert!(matches!(build_basis(&sys, &cfg), Err(Error::Contract(_))));
        let cfg = config(vec![0.1], 0, vec![rand_mat(6, 1, 1)]);
        assert!(matches!(build_basis(&sys, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn default_points_scale_with_band() {
        let p = default_points_hz(16.0, 500.0);
        assert_eq!(p, vec![114.0, 414.0]);
        let p = default_points_hz(32.0, 1000.0);
        assert!((p[0] - (32.0 + 98.0 / 484.0 * 968.0)).abs() < 1e-12);
    }

    #[test]
    fn is_deterministic() {
        let sys = toy(20, 12);
        let cfg = config(vec![0.05, 0.2], 4, vec![rand_mat(20, 2, 1), rand_mat(20, 2, 2)]);
        let a = build_basis(&sys, &cfg).unwrap();
        let b = build_basis(&sys, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
