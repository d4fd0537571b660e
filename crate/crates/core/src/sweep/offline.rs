//! Offline phase: moments and truncated SVD at each expansion point, then
//! the global basis and the reduced matrices.

use std::time::Instant;

use faer::{c64, Mat};

use super::config::SweepConfig;
use super::run::EnsembleSource;
use crate::error::Result;
use crate::fem::CoupledSystem;
use crate::moments::{estimate_moments, truncated_svd_with};
use crate::mor::{build_basis, default_points_hz, inputs_from_moments, ExpansionConfig, RomModel, DEFAULT_DEFLATION_TOL, DEFAULT_ORDER};

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineConfig {
    pub points_hz: Vec<f64>,
    pub order: usize,
    pub deflation_tol: f64,
    /// Also feed right singular vectors when they equal the left ones.
    /// They are deflated again, so this only reproduces the nominal size.
    pub duplicate_right_factors: bool,
}

impl OfflineConfig {
    /// Default points scaled into the sweep band.
    pub fn for_band(f_min_hz: f64, f_max_hz: f64) -> Self {
        Self {
            points_hz: default_points_hz(f_min_hz, f_max_hz),
            order: DEFAULT_ORDER,
            deflation_tol: DEFAULT_DEFLATION_TOL,
            duplicate_right_factors: false,
        }
    }
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self::for_band(16.0, 500.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineReport {
    /// Retained rank `l` per expansion point.
    pub ranks: Vec<usize>,
    /// Input vectors per expansion point.
    pub inputs: Vec<usize>,
    pub r: usize,
    pub nominal: usize,
    pub deflations: usize,
    pub seconds: f64,
}

/// Arnoldi inputs (mean plus factors) at every expansion point.
pub fn expansion_inputs(
    source: &dyn EnsembleSource,
    sweep: &SweepConfig,
    cfg: &OfflineConfig,
) -> Result<(Vec<Mat<c64>>, Vec<usize>)> {
    let mut inputs = Vec::with_capacity(cfg.points_hz.len());
    let mut ranks = Vec::with_capacity(cfg.points_hz.len());
    for &f in &cfg.points_hz {
        let ens = source.ensemble(f, sweep.samples, sweep.seed)?;
        let moments = estimate_moments(&ens)?;
        let factors = truncated_svd_with(&moments, &sweep.rank)?;
        log::info!(
            "expansion point {f} Hz: rank {} captures {:.4} of the covariance trace",
            factors.rank(),
            factors.energy_captured()
        );
        let right = !factors.hermitian || cfg.duplicate_right_factors;
        ranks.push(factors.rank());
        inputs.push(inputs_from_moments(&moments, &factors, right)?);
    }
    Ok((inputs, ranks))
}

/// Builds the reduced model; the returned model carries the total offline
/// wall-clock time, load generation included.
pub fn build_rom(
    system: &CoupledSystem,
    source: &dyn EnsembleSource,
    sweep: &SweepConfig,
    cfg: &OfflineConfig,
) -> Result<(RomModel, OfflineReport)> {
    let start = Instant::now();
    let (inputs, ranks) = expansion_inputs(source, sweep, cfg)?;
    let counts = inputs.iter().map(|b| b.ncols()).collect();
    let exp = ExpansionConfig {
        points_hz: cfg.points_hz.clone(),
        order: cfg.order,
        deflation_tol: cfg.deflation_tol,
        inputs,
    };
    exp.validate(system.n(), Some((sweep.f_min_hz, sweep.f_max_hz)))?;
    let basis = build_basis(system, &exp)?;
    let mut rom = RomModel::new(system, basis)?;
    rom.offline_seconds = start.elapsed().as_secs_f64();
    let report = OfflineReport {
        ranks,
        inputs: counts,
        r: rom.basis.r(),
        nominal: rom.basis.nominal_size(),
        deflations: rom.basis.deflations.len(),
        seconds: rom.offline_seconds,
    };
    Ok((rom, report))
}
