//! Frequency sweep driver for the three propagation modes.

use std::f64::consts::PI;
use std::time::Instant;

use faer::{c64, Mat, MatRef};
use rayon::prelude::*;

use super::config::{SweepConfig, SweepMode};
use super::metrics::Trace;
use crate::error::{Error, Result};
use crate::fem::CoupledSystem;
use crate::linalg::{DenseLu, FactoredSystem, FrequencyModel};
use crate::moments::{estimate_moments, truncated_svd_with, Covariance, LowRankFactorization, MomentPair, SolutionCovariance};
use crate::mor::{lift, lift_rows, project, RomModel};
use crate::tbl::{LoadEnsemble, TblGenerator};

/// Right-hand sides per block solve in full-sample propagation; bounds memory.
const SAMPLE_CHUNK: usize = 250;

/// Supplies the load ensemble at one frequency.
pub trait EnsembleSource: Sync {
    fn ensemble(&self, frequency_hz: f64, samples: usize, seed: u64) -> Result<LoadEnsemble>;
}

impl EnsembleSource for TblGenerator {
    fn ensemble(&self, frequency_hz: f64, samples: usize, seed: u64) -> Result<LoadEnsemble> {
        self.generate(frequency_hz, samples, seed)
    }
}

/// Wall-clock seconds per phase of one frequency step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    /// Load generation; the same for every mode and not part of the total.
    pub excite: f64,
    pub svd: f64,
    pub assemble: f64,
    pub factorize: f64,
    pub solve: f64,
    /// Projection of loads onto the basis and lifting of results.
    pub reduce: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.svd + self.assemble + self.factorize + self.solve + self.reduce
    }

    pub fn add(&mut self, other: &PhaseTimings) {
        self.excite += other.excite;
        self.svd += other.svd;
        self.assemble += other.assemble;
        self.factorize += other.factorize;
        self.solve += other.solve;
        self.reduce += other.reduce;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyResult {
    pub frequency_hz: f64,
    /// Mean response at the probe DOFs.
    pub mean_probes: Vec<c64>,
    /// Response covariance among the probe DOFs.
    pub covariance_probes: Mat<c64>,
    /// Propagated factor count: `l`, or `I` in full-sample mode.
    pub rank: usize,
    /// Forward solves through this step's factorization.
    pub solves: usize,
    pub residual: f64,
    pub timings: PhaseTimings,
    /// Full mean and covariance factors, when retained.
    pub mean: Option<Vec<c64>>,
    pub factors: Option<SolutionCovariance>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlaggedFrequency {
    pub frequency_hz: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub probes: Vec<usize>,
    pub results: Vec<FrequencyResult>,
    pub flagged: Vec<FlaggedFrequency>,
    /// One-time basis construction cost, reported separately.
    pub offline_seconds: f64,
}

impl SweepResult {
    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.frequency_hz).collect()
    }

    /// Mean response at probe `k`.
    pub fn trace(&self, k: usize) -> Trace {
        Trace {
            frequencies_hz: self.frequencies_hz(),
            values: self.results.iter().map(|r| r.mean_probes[k]).collect(),
        }
    }

    /// Variance at probe `k`.
    pub fn variance(&self, k: usize) -> Vec<f64> {
        self.results.iter().map(|r| r.covariance_probes[(k, k)].re).collect()
    }

    pub fn total_timings(&self) -> PhaseTimings {
        let mut t = PhaseTimings::default();
        for r in &self.results {
            t.add(&r.timings);
        }
        t
    }
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn pick_rows(x: MatRef<'_, c64>, rows: &[usize]) -> Mat<c64> {
    Mat::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

fn probe_covariance(u: MatRef<'_, c64>, s: &[f64], v: MatRef<'_, c64>) -> Mat<c64> {
    let us = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * s[j]);
    us * v.adjoint()
}

/// Rows of the load that may be nonzero.
fn loaded_rows(moments: &MomentPair) -> usize {
    match &moments.covariance {
        Covariance::Sampled { factor, .. } => factor.nrows(),
        Covariance::Dense(d) => d.nrows(),
    }
}

/// `[mean | U (| V)]` restricted to the first `k` rows.
fn input_block(moments: &MomentPair, f: &LowRankFactorization, k: usize) -> Mat<c64> {
    let l = f.rank();
    let width = 1 + if f.hermitian { l } else { 2 * l };
    Mat::from_fn(k, width, |i, j| match j {
        0 => moments.mean[i],
        j if j <= l => f.u[(i, j - 1)],
        j => f.v[(i, j - 1 - l)],
    })
}

fn pad_rows(x: MatRef<'_, c64>, n: usize) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(n, x.ncols());
    out.as_mut().subrows_mut(0, x.nrows()).copy_from(x);
    out
}

/// Splits solved `[mean | U (| V)]` columns into results.
fn split_solution(x: MatRef<'_, c64>, f: &LowRankFactorization) -> (Vec<c64>, SolutionCovariance) {
    let l = f.rank();
    let mean = x.col(0).iter().copied().collect();
    let u = x.subcols(1, l).to_owned();
    let v = if f.hermitian { u.clone() } else { x.subcols(1 + l, l).to_owned() };
    (
        mean,
        SolutionCovariance {
            u,
            s: f.s.clone(),
            v,
            hermitian: f.hermitian,
        },
    )
}

/// Evaluates single frequencies in any mode; [`run_sweep`] maps it over a grid.
pub struct SweepEngine<'a> {
    pub system: &'a CoupledSystem,
    pub source: &'a dyn EnsembleSource,
    pub rom: Option<&'a RomModel>,
    pub config: &'a SweepConfig,
}

impl<'a> SweepEngine<'a> {
    pub fn new(
        system: &'a CoupledSystem,
        source: &'a dyn EnsembleSource,
        rom: Option<&'a RomModel>,
        config: &'a SweepConfig,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(bad) = config.probes.iter().find(|&&p| p >= system.n()) {
            return Err(Error::Config(format!(
                "probe DOF {bad} out of range for a system with {} DOFs",
                system.n()
            )));
        }
        if let Some(rom) = rom {
            if rom.basis.n() != system.n() {
                return Err(Error::Contract(format!(
                    "basis has {} rows, system has {}",
                    rom.basis.n(),
                    system.n()
                )));
            }
        }
        Ok(Self {
            system,
            source,
            rom,
            config,
        })
    }

    /// Load ensemble and its moments at one frequency.
    pub fn moments(&self, frequency_hz: f64) -> Result<(MomentPair, f64)> {
        let t = Instant::now();
        let ens = self.source.ensemble(frequency_hz, self.config.samples, self.config.seed)?;
        if ens.n != self.system.n() {
            return Err(Error::Contract(format!(
                "ensemble at {frequency_hz} Hz has length {}, system has {}",
                ens.n,
                self.system.n()
            )));
        }
        let m = estimate_moments(&ens)?;
        Ok((m, seconds(t)))
    }

    pub fn evaluate(&self, mode: SweepMode, frequency_hz: f64, keep_factors: bool) -> Result<FrequencyResult> {
        let (moments, excite) = self.moments(frequency_hz)?;
        let mut res = match mode {
            SweepMode::Fom => self.full_sample(&moments, frequency_hz, keep_factors),
            SweepMode::FomLowRank => self.low_rank(&moments, frequency_hz, keep_factors),
            SweepMode::Rom => self.reduced(&moments, frequency_hz, keep_factors),
        }?;
        res.timings.excite = excite;
        Ok(res)
    }

    fn factorize(&self, omega: f64, timings: &mut PhaseTimings) -> Result<Box<dyn FactoredSystem + 'a>> {
        let t = Instant::now();
        let a = self.system.dynamic_stiffness(omega);
        timings.assemble = seconds(t);
        let t = Instant::now();
        let lu = self.system.factorize_operator(a, omega)?;
        timings.factorize = seconds(t);
        Ok(Box::new(lu))
    }

    fn full_sample(&self, moments: &MomentPair, frequency_hz: f64, keep: bool) -> Result<FrequencyResult> {
        let Covariance::Sampled { factor, .. } = &moments.covariance else {
            return Err(Error::Contract("full-sample propagation needs sampled moments".into()));
        };
        let n = self.system.n();
        let probes = &self.config.probes;
        let mut timings = PhaseTimings::default();
        let lu = self.factorize(2.0 * PI * frequency_hz, &mut timings)?;
        let t = Instant::now();
        let k = factor.nrows();
        let count = factor.ncols();
        let mean = lu.solve(MatRef::from_column_major_slice(&moments.mean, n, 1))?;
        let mut probe_x = Mat::<c64>::zeros(probes.len(), count);
        let mut full = keep.then(|| Mat::<c64>::zeros(n, count));
        let mut start = 0;
        while start < count {
            let w = SAMPLE_CHUNK.min(count - start);
            let x = lu.solve(pad_rows(factor.as_ref().subcols(start, w), n).as_ref())?;
            probe_x
                .as_mut()
                .subcols_mut(start, w)
                .copy_from(pick_rows(x.as_ref(), probes));
            if let Some(f) = full.as_mut() {
                f.as_mut().subcols_mut(start, w).copy_from(&x);
            }
            start += w;
        }
        debug_assert!(k <= n);
        timings.solve = seconds(t);
        let mean: Vec<c64> = mean.col(0).iter().copied().collect();
        Ok(FrequencyResult {
            frequency_hz,
            mean_probes: probes.iter().map(|&p| mean[p]).collect(),
            covariance_probes: &probe_x * probe_x.adjoint(),
            rank: count,
            solves: lu.solve_count(),
            residual: lu.max_residual(),
            timings,
            mean: keep.then_some(mean),
            factors: full.map(SolutionCovariance::from_factor),
        })
    }

    fn low_rank(&self, moments: &MomentPair, frequency_hz: f64, keep: bool) -> Result<FrequencyResult> {
        let n = self.system.n();
        let probes = &self.config.probes;
        let t = Instant::now();
        let f = truncated_svd_with(moments, &self.config.rank)?;
        let mut timings = PhaseTimings {
            svd: seconds(t),
            ..Default::default()
        };
        let lu = self.factorize(2.0 * PI * frequency_hz, &mut timings)?;
        let t = Instant::now();
        let rhs = input_block(moments, &f, n);
        let x = lu.solve(rhs.as_ref())?;
        timings.solve = seconds(t);
        let (mean, sc) = split_solution(x.as_ref(), &f);
        let up = pick_rows(sc.u.as_ref(), probes);
        let vp = pick_rows(sc.v.as_ref(), probes);
        Ok(FrequencyResult {
            frequency_hz,
            mean_probes: probes.iter().map(|&p| mean[p]).collect(),
            covariance_probes: probe_covariance(up.as_ref(), &sc.s, vp.as_ref()),
            rank: f.rank(),
            solves: lu.solve_count(),
            residual: lu.max_residual(),
            timings,
            mean: keep.then_some(mean),
            factors: keep.then_some(sc),
        })
    }

    fn reduced(&self, moments: &MomentPair, frequency_hz: f64, keep: bool) -> Result<FrequencyResult> {
        let rom = self
            .rom
            .ok_or_else(|| Error::Config("ROM mode requires a projection basis".into()))?;
        let probes = &self.config.probes;
        let omega = 2.0 * PI * frequency_hz;
        let t = Instant::now();
        let f = truncated_svd_with(moments, &self.config.rank)?;
        let mut timings = PhaseTimings {
            svd: seconds(t),
            ..Default::default()
        };
        let t = Instant::now();
        let rhs_r = project(&rom.basis, input_block(moments, &f, loaded_rows(moments)).as_ref())?;
        timings.reduce = seconds(t);
        let t = Instant::now();
        let a_r = rom.reduced.operator(omega);
        timings.assemble = seconds(t);
        let t = Instant::now();
        let lu = DenseLu::factorize(a_r, omega, rom.reduced.stats())?;
        timings.factorize = seconds(t);
        let t = Instant::now();
        let x_r = lu.solve(rhs_r.as_ref())?;
        timings.solve = seconds(t);
        let t = Instant::now();
        let (mean_p, sc_p) = split_solution(lift_rows(&rom.basis, x_r.as_ref(), probes).as_ref(), &f);
        let full = keep.then(|| split_solution(lift(&rom.basis, x_r.as_ref()).as_ref(), &f));
        timings.reduce += seconds(t);
        let (mean, factors) = match full {
            Some((m, sc)) => (Some(m), Some(sc)),
            None => (None, None),
        };
        Ok(FrequencyResult {
            frequency_hz,
            mean_probes: mean_p,
            covariance_probes: probe_covariance(sc_p.u.as_ref(), &sc_p.s, sc_p.v.as_ref()),
            rank: f.rank(),
            solves: lu.solve_count(),
            residual: lu.max_residual(),
            timings,
            mean,
            factors,
        })
    }
}

/// Runs `config.mode` over the configured grid. Frequencies whose solve
/// fails or breaches the residual tolerance are flagged, logged and
/// skipped; any other error aborts the sweep.
pub fn run_sweep(
    config: &SweepConfig,
    system: &CoupledSystem,
    source: &dyn EnsembleSource,
    rom: Option<&RomModel>,
) -> Result<SweepResult> {
    let grid = config.grid()?;
    if config.mode == SweepMode::Rom && rom.is_none() {
        return Err(Error::Config("ROM mode requires a projection basis".into()));
    }
    let engine = SweepEngine::new(system, source, rom, config)?;
    let outcomes: Vec<Result<FrequencyResult>> = grid
        .par_iter()
        .map(|&f| {
            let r = engine.evaluate(config.mode, f, config.keeps_factors(f));
            if r.is_ok() {
                log::debug!("{} sweep: {f} Hz done", config.mode);
            }
            r
        })
        .collect();
    let mut results = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    for (f, outcome) in grid.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(Error::Solver { reason, .. }) => {
                log::warn!("{} sweep: skipping {f} Hz: {reason}", config.mode);
                flagged.push(FlaggedFrequency {
                    frequency_hz: *f,
                    reason,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SweepResult {
        mode: config.mode,
        probes: config.probes.clone(),
        results,
        flagged,
        offline_seconds: rom.map_or(0.0, |r| r.offline_seconds),
    })
}
