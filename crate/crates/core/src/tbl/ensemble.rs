//! Per-frequency ensembles of stochastic TBL load vectors.

use std::f64::consts::PI;

use faer::{c64, Mat};
use rayon::prelude::*;

use super::load::LoadOperator;
use super::spectrum::SpectrumModel;
use super::synthesis::{amplitudes, draw_phases, wave_coefficients, NearestNeighbor, PlaneWaveBasis, WavenumberGrid};
use crate::error::{Error, Result};
use crate::fem::PlateMesh;

#[derive(Clone, Debug, PartialEq)]
pub struct TblConfig {
    pub spectrum: SpectrumModel,
    pub n_kx: usize,
    pub n_ky: usize,
    /// Top of the band; sets the wavenumber extent.
    pub f_max_hz: f64,
    /// Cell-centred pressure sampling grid over the plate.
    pub source_nx: usize,
    pub source_ny: usize,
}

impl Default for TblConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumModel::default(),
            n_kx: 32,
            n_ky: 32,
            f_max_hz: 500.0,
            source_nx: 32,
            source_ny: 32,
        }
    }
}

/// `I` load samples at one frequency. Only the first `loaded.nrows()` rows
/// (the plate DOFs) are stored; the remaining `n − n_s` rows are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadEnsemble {
    pub frequency_hz: f64,
    pub n: usize,
    pub loaded: Mat<c64>,
    pub seed: u64,
}

impl LoadEnsemble {
    pub fn new(frequency_hz: f64, n: usize, loaded: Mat<c64>, seed: u64) -> Result<Self> {
        if loaded.nrows() > n {
            return Err(Error::Contract(format!(
                "{} loaded rows exceed system size {n}",
                loaded.nrows()
            )));
        }
        Ok(Self {
            frequency_hz,
            n,
            loaded,
            seed,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.loaded.ncols()
    }

    pub fn n_loaded(&self) -> usize {
        self.loaded.nrows()
    }

    /// Full-length sample `i`, zero in the unloaded rows.
    pub fn sample(&self, i: usize) -> Vec<c64> {
        let mut v = vec![c64::new(0.0, 0.0); self.n];
        for (r, x) in v.iter_mut().zip(self.loaded.col(i).iter()) {
            *r = *x;
        }
        v
    }

    /// Full `n × I` sample matrix.
    pub fn to_full(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.n, self.sample_count());
        m.as_mut()
            .submatrix_mut(0, 0, self.n_loaded(), self.sample_count())
            .copy_from(&self.loaded);
        m
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Frequency identifier for seeding: the frequency in millihertz. Keyed by
/// value rather than grid index so the same frequency draws the same loads
/// in every run, grid or stage.
pub fn frequency_key(frequency_hz: f64) -> u64 {
    (frequency_hz * 1000.0).round() as u64
}

/// Counter-based seed of one sample.
pub fn sample_seed(seed: u64, frequency_key: u64, sample: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ frequency_key) ^ sample)
}

/// Composes phase draw, plane-wave synthesis, nearest-neighbour transfer
/// and load integration. All geometry-dependent pieces are built once.
#[derive(Clone, Debug)]
pub struct TblGenerator {
    spectrum: SpectrumModel,
    grid: WavenumberGrid,
    basis: PlaneWaveBasis,
    nn: NearestNeighbor,
    load: LoadOperator,
    n_total: usize,
}

impl TblGenerator {
    pub fn new(cfg: &TblConfig, plate: &PlateMesh, n_total: usize) -> Result<Self> {
        cfg.spectrum.validate()?;
        if cfg.source_nx == 0 || cfg.source_ny == 0 {
            return Err(Error::Config("pressure source grid must be nonempty".into()));
        }
        if n_total < plate.n_dofs() {
            return Err(Error::Contract("system smaller than the plate DOF count".into()));
        }
        let grid = WavenumberGrid::for_band(cfg.spectrum.convective_velocity(), cfg.f_max_hz, cfg.n_kx, cfg.n_ky)?;
        let centres = |n: usize, l: f64| (0..n).map(|i| (i as f64 + 0.5) * l / n as f64).collect::<Vec<_>>();
        let basis = PlaneWaveBasis::new(&grid, centres(cfg.source_nx, plate.lx), centres(cfg.source_ny, plate.ly));
        let nn = NearestNeighbor::build(&basis.points(), &plate.coords)?;
        Ok(Self {
            spectrum: cfg.spectrum.clone(),
            grid,
            basis,
            nn,
            load: LoadOperator::build(plate)?,
            n_total,
        })
    }

    pub fn grid(&self) -> &WavenumberGrid {
        &self.grid
    }

    pub fn load_operator(&self) -> &LoadOperator {
        &self.load
    }

    /// Ensemble of `samples` load vectors at one frequency.
    pub fn generate(&self, frequency_hz: f64, samples: usize, seed: u64) -> Result<LoadEnsemble> {
        if samples < 2 {
            return Err(Error::Contract(format!(
                "at least 2 samples are needed for a covariance, got {samples}"
            )));
        }
        if !(frequency_hz > 0.0) {
            return Err(Error::Config(format!("excitation frequency must be positive, got {frequency_hz}")));
        }
        let omega = 2.0 * PI * frequency_hz;
        let amps = amplitudes(&self.spectrum, &self.grid, omega)?;
        let key = frequency_key(frequency_hz);
        let cols: Vec<Vec<c64>> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let phases = draw_phases(sample_seed(seed, key, i as u64), self.grid.nx(), self.grid.ny());
                let coeff = wave_coefficients(amps.as_ref(), phases.as_ref());
                let nodal = self.nn.apply(&self.basis.field(coeff.as_ref()));
                self.load.apply(&nodal)
            })
            .collect::<Result<_>>()?;
        let loaded = Mat::from_fn(self.load.matrix.nrows(), samples, |r, c| cols[c][r]);
        LoadEnsemble::new(frequency_hz, self.n_total, loaded, seed)
    }
}

/// Ensembles for every listed frequency.
pub fn generate_ensemble(
    cfg: &TblConfig,
    plate: &PlateMesh,
    n_total: usize,
    frequencies_hz: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<LoadEnsemble>> {
    let generator = TblGenerator::new(cfg, plate, n_total)?;
    frequencies_hz
        .iter()
        .map(|&f| generator.generate(f, samples, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_plate_mesh;

    fn generator() -> (PlateMesh, TblGenerator) {
        let plate = build_plate_mesh(0.48, 0.4, 4, 4).unwrap();
        let cfg = TblConfig {
            n_kx: 8,
            n_ky: 8,
            source_nx: 6,
            source_ny: 5,
            ..Default::default()
        };
        let g = TblGenerator::new(&cfg, &plate, plate.n_dofs() + 50).unwrap();
        (plate, g)
    }

    #[test]
    fn samples_are_reproducible_and_fluid_rows_zero() {
        let (plate, g) = generator();
        let a = g.generate(120.0, 4, 9).unwrap();
        let b = g.generate(120.0, 4, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_loaded(), plate.n_dofs());
        let full = a.to_full();
        for i in plate.n_dofs()..a.n {
            for s in 0..4 {
                assert_eq!(full[(i, s)], c64::new(0.0, 0.0));
            }
        }
        assert_eq!(a.sample(2)[..plate.n_dofs()], full.col(2).iter().copied().collect::<Vec<_>>()[..plate.n_dofs()]);
        assert_ne!(a, g.generate(120.0, 4, 10).unwrap());
    }

    #[test]
    fn sample_order_independence() {
        // sample i is the same whether 3 or 5 samples are drawn
        let (_, g) = generator();
        let a = g.generate(250.0, 3, 1).unwrap();
        let b = g.generate(250.0, 5, 1).unwrap();
        for r in 0..a.n_loaded() {
            for s in 0..3 {
                assert_eq!(a.loaded[(r, s)], b.loaded[(r, s)]);
            }
        }
    }

    #[test]
    fn rejects_single_sample() {
        let (_, g) = generator();
        assert!(matches!(g.generate(100.0, 1, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn seeds_mix_all_inputs() {
        let s = sample_seed(1, frequency_key(114.0), 0);
        assert_ne!(s, sample_seed(2, frequency_key(114.0), 0));
        assert_ne!(s, sample_seed(1, frequency_key(116.0), 0));
        assert_ne!(s, sample_seed(1, frequency_key(114.0), 1));
        assert_eq!(frequency_key(114.0), 114_000);
    }
}
