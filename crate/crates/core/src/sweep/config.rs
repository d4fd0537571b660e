use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::moments::RankPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepMode {
    /// Full-order model with every centered sample propagated.
    Fom,
    /// Reduced model with low-rank factors.
    Rom,
    /// Full-order model with low-rank factors.
    FomLowRank,
}

impl SweepMode {
    pub const ALL: [SweepMode; 3] = [SweepMode::Rom, SweepMode::Fom, SweepMode::FomLowRank];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::Fom => "fom",
            SweepMode::Rom => "rom",
            SweepMode::FomLowRank => "fom-lowrank",
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fom" => Ok(SweepMode::Fom),
            "rom" => Ok(SweepMode::Rom),
            "fom-lowrank" | "fom_lowrank" | "fomlowrank" => Ok(SweepMode::FomLowRank),
            other => Err(Error::Config(format!(
                "unknown sweep mode '{other}' (expected fom, rom or fom-lowrank)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub step_hz: f64,
    pub mode: SweepMode,
    /// Global DOF indices whose mean and covariance are recorded.
    pub probes: Vec<usize>,
    pub seed: u64,
    pub samples: usize,
    pub rank: RankPolicy,
    /// Frequencies at which full solution factors are retained.
    pub keep_factors_hz: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            f_min_hz: 16.0,
            f_max_hz: 500.0,
            step_hz: 2.0,
            mode: SweepMode::Rom,
            probes: Vec::new(),
            seed: 1,
            samples: 1000,
            rank: RankPolicy::default(),
            keep_factors_hz: Vec::new(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_min_hz >= 0.0) || !self.f_max_hz.is_finite() || self.f_max_hz < self.f_min_hz {
            return Err(Error::Config(format!(
                "need 0 ≤ sweep.f_min ≤ sweep.f_max, got {} and {}",
                self.f_min_hz, self.f_max_hz
            )));
        }
        if !(self.step_hz > 0.0) {
            return Err(Error::Config(format!("sweep.step must be positive, got {}", self.step_hz)));
        }
        let steps = (self.f_max_hz - self.f_min_hz) / self.step_hz;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "sweep.f_max − sweep.f_min = {} is not a multiple of sweep.step = {}",
                self.f_max_hz - self.f_min_hz,
                self.step_hz
            )));
        }
        if self.samples < 2 {
            return Err(Error::Config(format!("sweep.samples must be at least 2, got {}", self.samples)));
        }
        self.rank.validate()
    }

    /// `{f_min, f_min + step, …, f_max}`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let steps = ((self.f_max_hz - self.f_min_hz) / self.step_hz).round() as usize;
        Ok((0..=steps).map(|k| self.f_min_hz + k as f64 * self.step_hz).collect())
    }

    pub fn keeps_factors(&self, frequency_hz: f64) -> bool {
        self.keep_factors_hz.iter().any(|&f| (f - frequency_hz).abs() < 1e-6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_band_has_243_steps() {
        let g = SweepConfig::default().grid().unwrap();
        assert_eq!(g.len(), 243);
        assert_eq!(g[0], 16.0);
        assert_eq!(*g.last().unwrap(), 500.0);
    }

    #[test]
    fn single_frequency_band() {
        let cfg = SweepConfig {
            f_min_hz: 114.0,
            f_max_hz: 114.0,
            ..Default::default()
        };
        assert_eq!(cfg.grid().unwrap(), vec![114.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        for (lo, hi, step) in [(-1.0, 10.0, 1.0), (10.0, 5.0, 1.0), (0.0, 10.0, 0.0), (0.0, 10.0, 3.0)] {
            let cfg = SweepConfig {
                f_min_hz: lo,
                f_max_hz: hi,
                step_hz: step,
                ..Default::default()
            };
            assert!(matches!(cfg.grid(), Err(Error::Config(_))), "{lo} {hi} {step}");
        }
    }

    #[test]
    fn modes_round_trip() {
        for m in SweepMode::ALL {
            assert_eq!(m.as_str().parse::<SweepMode>().unwrap(), m);
        }
        assert!("modal".parse::<SweepMode>().is_err());
    }
}
