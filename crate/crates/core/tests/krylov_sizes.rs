//! Basis sizes and the full-Krylov limit.

use std::f64::consts::PI;

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vibrouq::fem::{assemble_system, build_cavity_mesh, build_plate_mesh, CoupledSystem, MaterialProperties};
use vibrouq::linalg::FrequencyModel;
use vibrouq::mor::{build_basis, lift, project, solve_reduced, ExpansionConfig, RomModel, DEFAULT_ORDER};
use vibrouq::mor::krylov::DEFAULT_POINTS_HZ;

fn model(nx: usize, nz: usize) -> CoupledSystem {
    let plate = build_plate_mesh(0.48, 0.4, nx, nx).unwrap();
    let cavity = build_cavity_mesh(0.48, 0.4, 0.4, nx, nx, nz).unwrap();
    assemble_system(plate, cavity, &MaterialProperties::default()).unwrap()
}

fn random(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Mat<c64> {
    Mat::from_fn(n, m, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

/// Mean plus 15 left and 15 right factors at two points, order 20: 1240
/// directions before deflation, all of them kept for generic inputs.
#[test]
fn default_configuration_has_nominal_size_1240() {
    let sys = model(12, 6);
    assert!(sys.n() >= 1240);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inputs = 1 + 15 + 15;
    let cfg = ExpansionConfig {
        points_hz: DEFAULT_POINTS_HZ.to_vec(),
        order: DEFAULT_ORDER,
        deflation_tol: 1e-10,
        inputs: vec![random(&mut rng, sys.n(), inputs), random(&mut rng, sys.n(), inputs)],
    };
    let basis = build_basis(&sys, &cfg).unwrap();
    assert_eq!(basis.nominal_size(), 1240);
    assert_eq!(basis.r(), 1240, "{} deflations", basis.deflations.len());
    assert!(basis.orthonormality_defect() <= 1e-10);
}

/// One input with `q = n` spans an invariant subspace of `A(σ)⁻¹M` that
/// contains the input, so the reduced model is exact at every frequency.
/// Rounding in the long recurrence grows away from `σ` and the forward error
/// follows the conditioning of `A(ω)`, so exactness is checked as a backward
/// error in the full operator.
#[test]
fn full_krylov_space_reproduces_the_whole_band() {
    let sys = model(2, 2);
    let n = sys.n();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = random(&mut rng, n, 1);
    let cfg = ExpansionConfig {
        points_hz: vec![150.0],
        order: n,
        deflation_tol: 1e-10,
        inputs: vec![b.clone()],
    };
    let rom = RomModel::new(&sys, build_basis(&sys, &cfg).unwrap()).unwrap();
    let br = project(&rom.basis, b.as_ref()).unwrap();
    let mut checked = 0;
    for k in 0..50 {
        let f = 16.0 + 9.7 * k as f64;
        let omega = 2.0 * PI * f;
        // resonances are skipped, as in a sweep
        if sys.factorize(omega).and_then(|fac| fac.solve(b.as_ref())).is_err() {
            continue;
        }
        let y = lift(&rom.basis, solve_reduced(&rom.reduced, omega, br.as_ref()).unwrap().as_ref());
        let (ky, my) = (sys.k.mul_dense(y.as_ref()), sys.m.mul_dense(y.as_ref()));
        let w2 = faer::Scale(c64::new(omega * omega, 0.0));
        let residual = &b - (&ky - &my * w2);
        let backward = residual.norm_l2() / (ky.norm_l2() + omega * omega * my.norm_l2() + b.norm_l2());
        assert!(backward <= 1e-10, "{f} Hz: backward error {backward:.2e} with r = {}", rom.basis.r());
        checked += 1;
    }
    assert!(checked >= 45, "{checked}");
}
