//! Uncorrelated wall plane wave synthesis of sampled pressure fields.

use std::f64::consts::PI;

use faer::{c64, Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spectrum::{wall_pressure_spectrum, SpectrumModel};
use crate::error::{Error, Result};
use crate::fem::PlateMesh;

#[derive(Clone, Debug, PartialEq)]
pub struct WavenumberGrid {
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub dkx: f64,
    pub dky: f64,
}

fn symmetric_axis(kmax: f64, n: usize) -> (Vec<f64>, f64) {
    if n == 1 {
        return (vec![0.0], 2.0 * kmax);
    }
    let dk = 2.0 * kmax / (n - 1) as f64;
    ((0..n).map(|j| -kmax + j as f64 * dk).collect(), dk)
}

impl WavenumberGrid {
    /// Uniform grid on `[−kmax, kmax]` in each direction.
    pub fn symmetric(kmax_x: f64, kmax_y: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(kmax_x > 0.0) || !(kmax_y > 0.0) {
            return Err(Error::Config(format!(
                "wavenumber grid needs positive extents and counts, got {nx}x{ny} up to ({kmax_x}, {kmax_y})"
            )));
        }
        let (kx, dkx) = symmetric_axis(kmax_x, nx);
        let (ky, dky) = symmetric_axis(kmax_y, ny);
        Ok(Self { kx, ky, dkx, dky })
    }

    /// Covers the convective wavenumber at `f_max_hz` with 50% margin.
    pub fn for_band(convective_velocity: f64, f_max_hz: f64, nx: usize, ny: usize) -> Result<Self> {
        let kmax = 1.5 * 2.0 * PI * f_max_hz / convective_velocity;
        Self::symmetric(kmax, kmax, nx, ny)
    }

    pub fn nx(&self) -> usize {
        self.kx.len()
    }

    pub fn ny(&self) -> usize {
        self.ky.len()
    }
}

/// Plane-wave amplitudes `sqrt(Φ δkx δky / 4π²)`, an `nx × ny` matrix.
pub fn amplitudes(model: &SpectrumModel, grid: &WavenumberGrid, omega: f64) -> Result<Mat<f64>> {
    let scale = grid.dkx * grid.dky / (4.0 * PI * PI);
    let mut a = Mat::<f64>::zeros(grid.nx(), grid.ny());
    for (h, &kx) in grid.kx.iter().enumerate() {
        for (j, &ky) in grid.ky.iter().enumerate() {
            a[(h, j)] = (wall_pressure_spectrum(model, kx, ky, omega)? * scale).sqrt();
        }
    }
    Ok(a)
}

/// i.i.d. phases on `[0, 2π)`, reproducible per seed.
pub fn draw_phases(seed: u64, nx: usize, ny: usize) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phases = Mat::<f64>::zeros(nx, ny);
    for h in 0..nx {
        for j in 0..ny {
            phases[(h, j)] = 2.0 * PI * rng.random::<f64>();
        }
    }
    phases
}

fn check_phases(grid: &WavenumberGrid, phases: MatRef<'_, f64>) -> Result<()> {
    if phases.nrows() != grid.nx() || phases.ncols() != grid.ny() {
        return Err(Error::Contract(format!(
            "phase matrix is {}x{}, wavenumber grid is {}x{}",
            phases.nrows(),
            phases.ncols(),
            grid.nx(),
            grid.ny()
        )));
    }
    Ok(())
}

/// Complex plane-wave coefficients `a_hj e^{iφ_hj}`.
pub fn wave_coefficients(amps: MatRef<'_, f64>, phases: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(amps.nrows(), amps.ncols(), |h, j| {
        c64::from_polar(amps[(h, j)], phases[(h, j)])
    })
}

/// Pressure at arbitrary points.
pub fn synthesize_pressure_field(
    model: &SpectrumModel,
    grid: &WavenumberGrid,
    omega: f64,
    points: &[[f64; 2]],
    phases: MatRef<'_, f64>,
) -> Result<Vec<c64>> {
    check_phases(grid, phases)?;
    let coeff = wave_coefficients(amplitudes(model, grid, omega)?.as_ref(), phases);
    Ok(points
        .iter()
        .map(|&[x, y]| {
            let ey: Vec<c64> = grid.ky.iter().map(|&ky| c64::from_polar(1.0, ky * y)).collect();
            let mut p = c64::new(0.0, 0.0);
            for (h, &kx) in grid.kx.iter().enumerate() {
                let mut row = c64::new(0.0, 0.0);
                for (j, e) in ey.iter().enumerate() {
                    row += coeff[(h, j)] * e;
                }
                p += c64::from_polar(1.0, kx * x) * row;
            }
            p
        })
        .collect())
}

/// Plane-wave factors on a tensor grid of source points; the field is then
/// `P = Ex C Eyᵀ` for coefficients `C`. Independent of frequency.
#[derive(Clone, Debug)]
pub struct PlaneWaveBasis {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    ex: Mat<c64>,
    ey_t: Mat<c64>,
}

impl PlaneWaveBasis {
    pub fn new(grid: &WavenumberGrid, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let ex = Mat::from_fn(xs.len(), grid.nx(), |i, h| c64::from_polar(1.0, grid.kx[h] * xs[i]));
        let ey_t = Mat::from_fn(grid.ny(), ys.len(), |j, i| c64::from_polar(1.0, grid.ky[j] * ys[i]));
        Self { xs, ys, ex, ey_t }
    }

    /// Source points in row-major order (`x` fastest), matching
    /// [`PlaneWaveBasis::field`].
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.ys
            .iter()
            .flat_map(|&y| self.xs.iter().map(move |&x| [x, y]))
            .collect()
    }

    /// Field at [`PlaneWaveBasis::points`] for coefficient matrix `C`.
    pub fn field(&self, coeff: MatRef<'_, c64>) -> Vec<c64> {
        let p = &self.ex * coeff * &self.ey_t;
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(p[(i, j)]);
            }
        }
        out
    }
}

/// Index of the nearest source point for every target point. Ties resolve
/// to the lowest source index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NearestNeighbor {
    pub map: Vec<usize>,
}

impl NearestNeighbor {
    pub fn build(sources: &[[f64; 2]], targets: &[[f64; 2]]) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::Config("nearest-neighbour transfer needs at least one source point".into()));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in sources {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let span = [hi[0] - lo[0], hi[1] - lo[1]];
        let area = (span[0] * span[1]).max(span[0].max(span[1]).powi(2) / sources.len() as f64);
        let h = if area > 0.0 { (area / sources.len() as f64).sqrt() } else { 1.0 };
        let dims = [
            ((span[0] / h).floor() as usize + 1).min(1 << 12),
            ((span[1] / h).floor() as usize + 1).min(1 << 12),
        ];
        let cell = |p: &[f64; 2], d: usize| -> usize {
            (((p[d] - lo[d]) / h).floor().max(0.0) as usize).min(dims[d] - 1)
        };
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); dims[0] * dims[1]];
        for (s, p) in sources.iter().enumerate() {
            buckets[cell(p, 1) * dims[0] + cell(p, 0)].push(s);
        }
        let map = targets
            .iter()
            .map(|t| {
                let (cx, cy) = (cell(t, 0) as isize, cell(t, 1) as isize);
                let mut best = (f64::INFINITY, usize::MAX);
                let max_ring = dims[0].max(dims[1]) as isize;
                for r in 0..=max_ring {
                    // points in rings beyond r are at least r·h away
                    if best.1 != usize::MAX && best.0 < (r as f64 - 1.0).max(0.0).powi(2) * h * h {
                        break;
                    }
                    for gy in (cy - r)..=(cy + r) {
                        for gx in (cx - r)..=(cx + r) {
                            let on_ring = (gx - cx).abs() == r || (gy - cy).abs() == r;
                            if !on_ring || gx < 0 || gy < 0 || gx >= dims[0] as isize || gy >= dims[1] as isize {
                                continue;
                            }
                            for &s in &buckets[gy as usize * dims[0] + gx as usize] {
                                let p = sources[s];
                                let d2 = (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2);
                                if d2 < best.0 || (d2 == best.0 && s < best.1) {
                                    best = (d2, s);
                                }
                            }
                        }
                    }
                }
                best.1
            })
            .collect();
        Ok(Self { map })
    }

    pub fn apply(&self, source_values: &[c64]) -> Vec<c64> {
        self.map.iter().map(|&s| source_values[s]).collect()
    }
}

/// Nodal plate pressures from the nearest source sample.
pub fn transfer_to_mesh(
    source_points: &[[f64; 2]],
    source_pressures: &[c64],
    target: &PlateMesh,
) -> Result<Vec<c64>> {
    if source_points.len() != source_pressures.len() {
        return Err(Error::Contract("source points and pressures differ in length".into()));
    }
    Ok(NearestNeighbor::build(source_points, &target.coords)?.apply(source_pressures))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_plate_mesh;
    use crate::tbl::spectrum::CorcosGoody;
    use rand::Rng;

    #[test]
    fn grid_is_symmetric_and_covers_convective_peak() {
        let g = WavenumberGrid::for_band(161.0, 500.0, 32, 32).unwrap();
        assert_eq!(g.nx(), 32);
        for j in 0..32 {
            assert!((g.kx[j] + g.kx[31 - j]).abs() < 1e-12);
        }
        assert!(g.kx[31] > 2.0 * PI * 500.0 / 161.0);
    }

    #[test]
    fn phases_are_reproducible_and_in_range() {
        let a = draw_phases(42, 5, 7);
        let b = draw_phases(42, 5, 7);
        assert_eq!(a, b);
        assert_ne!(a, draw_phases(43, 5, 7));
        for h in 0..5 {
            for j in 0..7 {
                assert!((0.0..2.0 * PI).contains(&a[(h, j)]));
            }
        }
    }

    #[test]
    fn tensor_fast_path_matches_direct_sum() {
        let model = SpectrumModel::CorcosGoody(CorcosGoody::default());
        let grid = WavenumberGrid::for_band(161.0, 500.0, 8, 6).unwrap();
        let omega = 2.0 * PI * 230.0;
        let phases = draw_phases(7, 8, 6);
        let basis = PlaneWaveBasis::new(&grid, vec![0.0, 0.1, 0.25], vec![0.05, 0.3]);
        let coeff = wave_coefficients(amplitudes(&model, &grid, omega).unwrap().as_ref(), phases.as_ref());
        let fast = basis.field(coeff.as_ref());
        let direct = synthesize_pressure_field(&model, &grid, omega, &basis.points(), phases.as_ref()).unwrap();
        let scale = direct.iter().map(|p| p.norm()).fold(0.0, f64::max);
        for (a, b) in fast.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        let model = SpectrumModel::default();
        let grid = WavenumberGrid::symmetric(10.0, 10.0, 4, 4).unwrap();
        let phases = draw_phases(0, 4, 3);
        let r = synthesize_pressure_field(&model, &grid, 100.0, &[[0.0, 0.0]], phases.as_ref());
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn nearest_neighbour_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pt = || [rng.random::<f64>() * 0.5, rng.random::<f64>() * 0.3];
        let sources: Vec<[f64; 2]> = (0..100).map(|_| pt()).collect();
        let mut targets: Vec<[f64; 2]> = (0..100).map(|_| pt()).collect();
        targets.push([-1.0, 2.0]);
        targets.push([10.0, -5.0]);
        let nn = NearestNeighbor::build(&sources, &targets).unwrap();
        for (t, &got) in targets.iter().zip(&nn.map) {
            let mut best = (f64::INFINITY, 0);
            for (s, p) in sources.iter().enumerate() {
                let d = (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2);
                if d < best.0 {
                    best = (d, s);
                }
            }
            assert_eq!(got, best.1);
        }
    }

    #[test]
    fn nearest_neighbour_edge_cases() {
        let plate = build_plate_mesh(1.0, 1.0, 2, 2).unwrap();
        let vals: Vec<c64> = (0..9).map(|i| c64::new(i as f64, 0.0)).collect();
        assert_eq!(transfer_to_mesh(&plate.coords, &vals, &plate).unwrap(), vals);
        let one = transfer_to_mesh(&[[0.3, 0.3]], &[c64::new(2.0, 1.0)], &plate).unwrap();
        assert!(one.iter().all(|&v| v == c64::new(2.0, 1.0)));
        // equidistant sources: lowest index wins
        let nn = NearestNeighbor::build(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]], &[[0.0, 0.0]]).unwrap();
        assert_eq!(nn.map, vec![0]);
        assert!(matches!(transfer_to_mesh(&[], &[], &plate), Err(Error::Config(_))));
    }
}
