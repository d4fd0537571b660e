//! Structural invariants of the assembled model and of the load ensembles,
//! checked over randomized mesh sizes, spectra arguments and seeds.

use std::f64::consts::PI;

use faer::{Mat, Side};
use proptest::prelude::*;

use vibrouq::fem::{assemble_system, build_cavity_mesh, build_plate_mesh, MaterialProperties};
use vibrouq::linalg::CsrMatrix;
use vibrouq::tbl::{wall_pressure_spectrum, CorcosGoody, SpectrumModel, TblConfig, TblGenerator, WavenumberGrid};

fn block(a: &CsrMatrix<f64>, r: std::ops::Range<usize>, c: std::ops::Range<usize>) -> Mat<f64> {
    a.block(r, c).to_dense()
}

fn symmetry_defect(a: &Mat<f64>) -> f64 {
    (a - a.transpose()).norm_l2() / a.norm_l2().max(f64::MIN_POSITIVE)
}

fn eig_range(a: &Mat<f64>) -> (f64, f64) {
    let e = a.self_adjoint_eigenvalues(Side::Lower).expect("symmetric eigensolver converges");
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coupled_matrices_keep_their_block_structure(
        nx in 2usize..5, ny in 2usize..5, nz in 2usize..5,
        lx in 0.2f64..1.5, ly in 0.2f64..1.5, lz in 0.1f64..1.0,
    ) {
        let plate = build_plate_mesh(lx, ly, nx, ny).unwrap();
        let cavity = build_cavity_mesh(lx, ly, lz, nx, ny, nz).unwrap();
        prop_assert_eq!(plate.n_nodes(), (nx + 1) * (ny + 1));
        prop_assert_eq!(cavity.n_nodes(), (nx + 1) * (ny + 1) * (nz + 1));
        // the cavity's z = 0 face carries the plate's node grid
        for j in 0..=ny {
            for i in 0..=nx {
                let p = plate.coords[j * (nx + 1) + i];
                let c = cavity.coords[cavity.node(i, j, 0)];
                prop_assert!((p[0] - c[0]).abs() < 1e-12 && (p[1] - c[1]).abs() < 1e-12 && c[2].abs() < 1e-12);
            }
        }

        let mat = MaterialProperties::default();
        let sys = assemble_system(plate, cavity, &mat).unwrap();
        let (ns, n) = (sys.n_s, sys.n());
        prop_assert_eq!(n, ns + sys.n_f);
        prop_assert_eq!(ns, 4 * (nx + 1) * (ny + 1));

        prop_assert_eq!(sys.k.block(ns..n, 0..ns).max_abs(), 0.0);
        prop_assert_eq!(sys.m.block(0..ns, ns..n).max_abs(), 0.0);
        let k_sf = block(&sys.k, 0..ns, ns..n);
        let m_fs = block(&sys.m, ns..n, 0..ns);
        let c = sys.c_sf.to_dense();
        prop_assert!((&k_sf + &c).norm_l2() <= 1e-14 * c.norm_l2());
        let rho_ct = Mat::from_fn(n - ns, ns, |i, j| mat.density_fluid * c[(j, i)]);
        prop_assert!((&m_fs - &rho_ct).norm_l2() <= 1e-14 * rho_ct.norm_l2());

        let ks = block(&sys.k, 0..ns, 0..ns);
        let ms = block(&sys.m, 0..ns, 0..ns);
        let kf = block(&sys.k, ns..n, ns..n);
        let mf = block(&sys.m, ns..n, ns..n);
        for a in [&ks, &ms, &kf, &mf] {
            prop_assert!(symmetry_defect(a) < 1e-13);
        }
        for m in [&ms, &mf] {
            let (lo, hi) = eig_range(m);
            prop_assert!(lo > 1e-12 * hi, "mass block not positive definite: {lo:e} .. {hi:e}");
        }
        let (lo, hi) = eig_range(&kf);
        prop_assert!(lo > -1e-10 * hi, "K_f not semidefinite: {lo:e}");
    }

    #[test]
    fn corcos_spectrum_is_nonnegative_and_even_in_ky(
        kx in -60.0f64..60.0, ky in -60.0f64..60.0, f in 5.0f64..800.0,
    ) {
        let model = SpectrumModel::CorcosGoody(CorcosGoody::default());
        let omega = 2.0 * PI * f;
        let a = wall_pressure_spectrum(&model, kx, ky, omega).unwrap();
        let b = wall_pressure_spectrum(&model, kx, -ky, omega).unwrap();
        prop_assert!(a >= 0.0 && a.is_finite());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn band_grid_is_symmetric_and_covers_the_convective_peak(
        uc in 20.0f64..300.0, fmax in 10.0f64..2000.0, nx in 2usize..40, ny in 2usize..40,
    ) {
        let g = WavenumberGrid::for_band(uc, fmax, nx, ny).unwrap();
        for axis in [&g.kx, &g.ky] {
            let m = axis.len();
            for j in 0..m {
                prop_assert!((axis[j] + axis[m - 1 - j]).abs() <= 1e-12 * axis[m - 1]);
            }
        }
        prop_assert!(g.kx[g.kx.len() - 1] > 2.0 * PI * fmax / uc);
    }
}

fn small_generator() -> (TblGenerator, usize, usize) {
    let plate = build_plate_mesh(0.5, 0.4, 4, 3).unwrap();
    let cavity = build_cavity_mesh(0.5, 0.4, 0.3, 4, 3, 2).unwrap();
    let sys = assemble_system(plate.clone(), cavity, &MaterialProperties::default()).unwrap();
    let cfg = TblConfig {
        n_kx: 10,
        n_ky: 10,
        source_nx: 8,
        source_ny: 6,
        ..Default::default()
    };
    (TblGenerator::new(&cfg, &plate, sys.n()).unwrap(), sys.n(), sys.n_s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ensembles_load_only_the_plate_and_extend_by_prefix(
        f in 10.0f64..500.0, seed in any::<u64>(), short in 2usize..6, extra in 1usize..6,
    ) {
        let (g, n, ns) = small_generator();
        let a = g.generate(f, short, seed).unwrap();
        let b = g.generate(f, short + extra, seed).unwrap();
        prop_assert_eq!(a.n, n);
        prop_assert!(a.n_loaded() <= ns);
        let full = b.to_full();
        for i in ns..n {
            for j in 0..b.sample_count() {
                prop_assert_eq!(full[(i, j)], faer::c64::new(0.0, 0.0));
            }
        }
        // sample i does not depend on how many samples were drawn
        prop_assert!(a.loaded == b.loaded.subcols(0, short).to_owned());
        // and is reproducible
        prop_assert!(a == g.generate(f, short, seed).unwrap());
    }
}
