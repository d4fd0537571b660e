//! Turbulent boundary layer excitation: wall-pressure spectra, plane-wave
//! synthesis, transfer to the plate mesh and consistent load vectors.

pub mod ensemble;
pub mod load;
pub mod spectrum;
pub mod synthesis;

pub use ensemble::{frequency_key, generate_ensemble, sample_seed, LoadEnsemble, TblConfig, TblGenerator};
pub use load::{assemble_force_vector, LoadOperator};
pub use spectrum::{wall_pressure_spectrum, CorcosGoody, SpectrumModel, TabulatedSpectrum};
pub use synthesis::{
    draw_phases, synthesize_pressure_field, transfer_to_mesh, NearestNeighbor, PlaneWaveBasis, WavenumberGrid,
};
