//! Discretization checks against analytic and refined-mesh eigenfrequencies.

use vibrouq::fem::modal::{dense_eigenfrequencies, elastic_eigenfrequencies};
use vibrouq::fem::{assemble_cavity, assemble_plate, build_cavity_mesh, build_plate_mesh, MaterialProperties};

/// Rigid-wall box: the first nonzero mode of a 1 m cube is axial, `c / 2L`.
#[test]
fn unit_cube_first_cavity_mode_is_half_the_sound_speed() {
    let mat = MaterialProperties::default();
    let mesh = build_cavity_mesh(1.0, 1.0, 1.0, 8, 8, 8).unwrap();
    let (k, m) = assemble_cavity(&mesh, &mat).unwrap();
    let f = dense_eigenfrequencies(&k, &m).unwrap();
    // one constant-pressure mode at zero
    assert!(f[0] < 1e-3, "{}", f[0]);
    let exact = mat.speed_of_sound / 2.0;
    assert!((f[1] - exact).abs() / exact < 0.02, "{} vs {exact}", f[1]);
    // the three axial modes are degenerate on a cube
    assert!((f[3] - f[1]).abs() / f[1] < 1e-8, "{:?}", &f[..4]);
}

/// The conforming plate element gives Rayleigh–Ritz upper bounds on nested
/// meshes, so every elastic frequency decreases under refinement and the
/// successive differences shrink.
#[test]
fn free_plate_frequencies_converge_from_above() {
    let mat = MaterialProperties::default();
    let modes = 8;
    let freqs: Vec<Vec<f64>> = [2usize, 4, 8]
        .iter()
        .map(|&ne| {
            let mesh = build_plate_mesh(0.48, 0.4, ne, ne).unwrap();
            let (k, m) = assemble_plate(&mesh, &mat).unwrap();
            // three rigid-body modes sit at zero
            elastic_eigenfrequencies(&k, &m, 1.0, modes).unwrap()
        })
        .collect();
    for f in &freqs {
        assert_eq!(f.len(), modes);
    }
    for i in 0..modes {
        let (c, mid, fine) = (freqs[0][i], freqs[1][i], freqs[2][i]);
        assert!(c >= mid * (1.0 - 1e-10) && mid >= fine * (1.0 - 1e-10), "mode {i}: {c} {mid} {fine}");
        assert!((mid - fine) <= (c - mid) + 1e-9 * fine, "mode {i}: {c} {mid} {fine}");
    }
    // the fine mesh resolves the lowest modes to well under a percent
    for i in 0..3 {
        assert!((freqs[1][i] - freqs[2][i]) / freqs[2][i] < 0.01, "mode {i}: {:?}", freqs.iter().map(|f| f[i]).collect::<Vec<_>>());
    }
}
