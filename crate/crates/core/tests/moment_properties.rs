//! Invariants of moment estimation, truncated SVD, propagation and the
//! error measures on random inputs.

use faer::{c64, Mat, Side};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vibrouq::linalg::dense::orthonormality_defect;
use vibrouq::linalg::{DenseLu, SolveStats};
use vibrouq::moments::{
    estimate_from_samples, propagate_factors, reconstruct_full, truncated_svd, truncated_svd_with, RankPolicy,
    SolutionCovariance, SvdMethod,
};
use vibrouq::sweep::{covariance_error, covariance_error_dense, transfer_error, Trace};

fn random_complex(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<c64> {
    Mat::from_fn(r, c, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn hermitian_defect(a: &Mat<c64>) -> f64 {
    (a - a.adjoint()).norm_l2() / a.norm_l2().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sample_covariance_is_hermitian_psd(seed in any::<u64>(), k in 2usize..12, extra in 0usize..4, count in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = random_complex(&mut rng, k, count);
        let m = estimate_from_samples(samples.as_ref(), k + extra).unwrap();
        let sigma = m.covariance.to_dense();
        prop_assert!(hermitian_defect(&sigma) <= 1e-12);
        let e = sigma.self_adjoint_eigenvalues(Side::Lower).unwrap();
        let top = e.iter().copied().fold(0.0, f64::max);
        prop_assert!(e.iter().all(|&x| x >= -1e-10 * top));
        for i in k..k + extra {
            prop_assert_eq!(m.mean[i], c64::new(0.0, 0.0));
        }
    }

    #[test]
    fn truncated_factors_are_orthonormal_sorted_and_hermitian(
        seed in any::<u64>(), k in 2usize..16, count in 2usize..30, tol in 0.5f64..1.0, randomized in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = estimate_from_samples(random_complex(&mut rng, k, count).as_ref(), k).unwrap();
        let method = if randomized {
            SvdMethod::Randomized { oversample: 4, power_iterations: 2, seed }
        } else {
            SvdMethod::Exact
        };
        let f = truncated_svd_with(&m, &RankPolicy { l_max: k, energy_tol: tol, method }).unwrap();
        prop_assert!(f.rank() >= 1);
        prop_assert!(orthonormality_defect(f.u.as_ref()) <= 1e-10);
        prop_assert!(orthonormality_defect(f.v.as_ref()) <= 1e-10);
        prop_assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.hermitian && f.u == f.v);
        prop_assert!(f.energy_captured() >= tol * (1.0 - 1e-12) || f.rank() == k.min(count));
    }

    #[test]
    fn truncation_error_never_grows_with_rank(seed in any::<u64>(), n in 3usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = estimate_from_samples(random_complex(&mut rng, n, n + 3).as_ref(), n).unwrap();
        let sigma = m.covariance.to_dense();
        let full = truncated_svd(&m, n, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for l in 0..=full.rank() {
            let e = (&sigma - full.truncate(l).to_dense()).norm_l2();
            prop_assert!(e <= prev * (1.0 + 1e-12) + 1e-14);
            prev = e;
        }
        prop_assert!(prev <= 1e-12 * sigma.norm_l2());
    }

    #[test]
    fn propagated_covariance_stays_hermitian(seed in any::<u64>(), n in 2usize..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = estimate_from_samples(random_complex(&mut rng, n, 2 * n).as_ref(), n).unwrap();
        let f = truncated_svd(&m, n, 1.0).unwrap();
        let a = &random_complex(&mut rng, n, n) + Mat::<c64>::identity(n, n) * faer::Scale(c64::new(2.0, 0.0));
        let stats = SolveStats::default();
        let lu = DenseLu::factorize(a, 1.0, &stats).unwrap();
        let sc = propagate_factors(&lu, &f).unwrap();
        prop_assert!(hermitian_defect(&reconstruct_full(&sc)) <= 1e-8);
        prop_assert_eq!(stats.snapshot().dense_solves, f.rank());
    }

    #[test]
    fn covariance_error_matches_the_dense_definition(seed in any::<u64>(), n in 2usize..15, ra in 1usize..6, rb in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SolutionCovariance::from_factor(random_complex(&mut rng, n, ra));
        let b = SolutionCovariance::from_factor(random_complex(&mut rng, n, rb));
        let factored = covariance_error(&a, &b).unwrap();
        let dense = covariance_error_dense(reconstruct_full(&a).as_ref(), reconstruct_full(&b).as_ref()).unwrap();
        prop_assert!((factored - dense).abs() <= 1e-10 * dense.max(1.0));
        prop_assert_eq!(covariance_error(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn transfer_error_is_zero_on_itself_and_scale_free(
        seed in any::<u64>(), len in 1usize..30, scale in 1e-6f64..1e6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..len).map(|i| 10.0 + 2.0 * i as f64).collect();
        let a: Vec<c64> = (0..len).map(|_| c64::new(rng.random::<f64>() + 0.1, rng.random())).collect();
        let b: Vec<c64> = a.iter().map(|x| x * c64::new(1.0 + 0.1 * rng.random::<f64>(), 0.0)).collect();
        let ta = Trace::new(f.clone(), a.clone()).unwrap();
        prop_assert_eq!(transfer_error(&ta, &ta).unwrap().max_abs, 0.0);
        let e1 = transfer_error(&ta, &Trace::new(f.clone(), b.clone()).unwrap()).unwrap().relative;
        let sa = Trace::new(f.clone(), a.iter().map(|x| x * scale).collect()).unwrap();
        let sb = Trace::new(f, b.iter().map(|x| x * scale).collect()).unwrap();
        let e2 = transfer_error(&sa, &sb).unwrap().relative;
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.max(1e-300));
    }
}
