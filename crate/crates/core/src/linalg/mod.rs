pub mod dense;
pub mod solve;
pub mod sparse;

pub use solve::{DenseLu, FactoredSystem, FrequencyModel, SolveCounts, SolveStats, SparseLu};
pub use sparse::CsrMatrix;
