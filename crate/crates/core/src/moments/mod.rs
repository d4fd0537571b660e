//! Load moments, truncated SVD of the load covariance and propagation of
//! mean and low-rank factors through the dynamic stiffness.

pub mod estimate;
pub mod propagate;
pub mod svd;

pub use estimate::{estimate_from_samples, estimate_moments, Covariance, MomentPair};
pub use propagate::{
    propagate_factors, reconstruct_covariance, reconstruct_full, solve_mean, SolutionCovariance,
};
pub use svd::{select_rank, truncated_svd, truncated_svd_with, LowRankFactorization, RankPolicy, SvdMethod};
