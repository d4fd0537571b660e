//! Plate and cavity meshes, element assembly and the coupled system.

pub mod acoustic;
pub mod coupling;
pub mod material;
pub mod mesh;
pub mod modal;
pub mod plate;
pub mod quadrature;
pub mod system;

pub use acoustic::assemble_cavity;
pub use coupling::{assemble_coupling, assemble_coupling_on};
pub use material::MaterialProperties;
pub use mesh::{build_cavity_mesh, build_plate_mesh, check_interface, CavityMesh, PlateMesh};
pub use plate::assemble_plate;
pub use system::{assemble_system, CoupledSystem, ModelGeometry};
