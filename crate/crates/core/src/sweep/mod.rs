//! Frequency sweeps, error measures and timing tables.

pub mod config;
pub mod metrics;
pub mod offline;
pub mod report;
pub mod run;

pub use config::{SweepConfig, SweepMode};
pub use metrics::{covariance_error, covariance_error_dense, transfer_error, Trace, TransferError};
pub use offline::{build_rom, expansion_inputs, OfflineConfig, OfflineReport};
pub use report::{timing_report, TimingColumn, TimingTable};
pub use run::{run_sweep, EnsembleSource, FlaggedFrequency, FrequencyResult, PhaseTimings, SweepEngine, SweepResult};
