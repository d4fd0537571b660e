//! Krylov model order reduction with a global projection basis.

pub mod basis;
pub mod krylov;
pub mod reduced;

pub use basis::{orthonormalize, Deflation, Orthonormalizer, ProjectionBasis};
pub use krylov::{
    arnoldi_point, build_basis, default_points_hz, inputs_from_moments, krylov_block, ExpansionConfig,
    DEFAULT_DEFLATION_TOL, DEFAULT_ORDER,
};
pub use reduced::{lift, lift_rows, project, reduce, solve_reduced, ReducedSystem, RomModel};
