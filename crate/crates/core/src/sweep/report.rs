//! Per-step timing table in the layout ROM | FOM | FOM low-rank.

use std::fmt::Write;

use super::config::SweepMode;
use super::run::{PhaseTimings, SweepResult};

#[derive(Clone, Debug, PartialEq)]
pub struct TimingColumn {
    pub mode: SweepMode,
    pub steps: usize,
    pub offline_seconds: f64,
    /// Mean seconds per frequency step.
    pub per_step: PhaseTimings,
}

impl TimingColumn {
    pub fn total(&self) -> f64 {
        self.per_step.total()
    }

    /// Offline cost plus one online step.
    pub fn first_step(&self) -> f64 {
        self.offline_seconds + self.total()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimingTable {
    pub columns: Vec<TimingColumn>,
}

impl TimingTable {
    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, mode: SweepMode) -> Option<&TimingColumn> {
        self.columns.iter().find(|c| c.mode == mode)
    }

    /// Smallest step count `k` with `offline + k·t_rom ≤ k·t_ref`, if any.
    pub fn amortization_steps(&self, reference: SweepMode) -> Option<usize> {
        let rom = self.column(SweepMode::Rom)?;
        let other = self.column(reference)?;
        let saving = other.total() - rom.total();
        if !(saving > 0.0) {
            return None;
        }
        Some(((rom.offline_seconds / saving).ceil() as usize).max(1))
    }

    pub fn to_text(&self) -> String {
        if self.columns.is_empty() {
            return String::new();
        }
        let mut out = String::new();
        let _ = write!(out, "{:<26}", "seconds per step");
        for c in &self.columns {
            let _ = write!(out, "{:>14}", c.mode.as_str());
        }
        out.push('\n');
        let rows: [(&str, fn(&TimingColumn) -> f64); 8] = [
            ("compute V (offline)", |c| c.offline_seconds),
            ("SVD", |c| c.per_step.svd),
            ("assembly", |c| c.per_step.assemble),
            ("factorization", |c| c.per_step.factorize),
            ("low-rank factors (solve)", |c| c.per_step.solve),
            ("projection and lifting", |c| c.per_step.reduce),
            ("total", |c| c.total()),
            ("first step", |c| c.first_step()),
        ];
        for (name, get) in rows {
            let _ = write!(out, "{name:<26}");
            for c in &self.columns {
                let _ = write!(out, "{:>14.4}", get(c));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<26}", "steps");
        for c in &self.columns {
            let _ = write!(out, "{:>14}", c.steps);
        }
        out.push('\n');
        for reference in [SweepMode::Fom, SweepMode::FomLowRank] {
            if self.column(SweepMode::Rom).is_some() && self.column(reference).is_some() {
                let verdict = match self.amortization_steps(reference) {
                    Some(k) => format!("{k} steps"),
                    None => "never".into(),
                };
                let _ = writeln!(out, "offline cost amortized against {reference} after {verdict}");
            }
        }
        out
    }
}

/// Per-mode mean step timings. Columns follow the order ROM, FOM,
/// FOM low-rank; modes without results are omitted.
pub fn timing_report(results: &[&SweepResult]) -> TimingTable {
    let mut columns = Vec::new();
    for mode in SweepMode::ALL {
        let runs: Vec<&&SweepResult> = results.iter().filter(|r| r.mode == mode).collect();
        let steps: usize = runs.iter().map(|r| r.results.len()).sum();
        if steps == 0 {
            continue;
        }
        let mut sum = PhaseTimings::default();
        for r in &runs {
            sum.add(&r.total_timings());
        }
        let k = steps as f64;
        let per_step = PhaseTimings {
            excite: sum.excite / k,
            svd: sum.svd / k,
            assemble: sum.assemble / k,
            factorize: sum.factorize / k,
            solve: sum.solve / k,
            reduce: sum.reduce / k,
        };
        columns.push(TimingColumn {
            mode,
            steps,
            offline_seconds: runs.iter().map(|r| r.offline_seconds).sum(),
            per_step,
        });
    }
    TimingTable { columns }
}
