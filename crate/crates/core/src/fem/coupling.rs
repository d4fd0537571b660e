//! Plate–cavity interface matrix `C_sf = ∫_Γ ψ N_pᵀ dΓ`.

use super::mesh::{check_interface, CavityMesh, PlateMesh};
use super::plate::{element_dofs, plate_shape, CORNERS};
use super::quadrature::gauss_unit;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// `∫ ψ_a N_c` over one `hx × hy` interface patch; `c` runs over the face
/// corners in the plate's corner order.
pub fn coupling_element(hx: f64, hy: f64) -> [[f64; 4]; 16] {
    let mut ce = [[0.0; 4]; 16];
    let rule = gauss_unit(4);
    for &(xi, wx) in &rule {
        for &(eta, wy) in &rule {
            let s = plate_shape(hx, hy, xi, eta);
            let w = wx * wy * hx * hy;
            for (c, &(cx, cy)) in CORNERS.iter().enumerate() {
                let np = (if cx == 0 { 1.0 - xi } else { xi }) * (if cy == 0 { 1.0 - eta } else { eta });
                for a in 0..16 {
                    ce[a][c] += w * s.n[a] * np;
                }
            }
        }
    }
    ce
}

/// Coupling over the whole plate.
pub fn assemble_coupling(plate: &PlateMesh, cavity: &CavityMesh) -> Result<CsrMatrix<f64>> {
    let all: Vec<usize> = (0..plate.n_elements()).collect();
    assemble_coupling_on(plate, cavity, &all)
}

/// Coupling restricted to the listed plate elements (the wetted patches).
/// An empty list yields the zero matrix.
pub fn assemble_coupling_on(
    plate: &PlateMesh,
    cavity: &CavityMesh,
    wetted: &[usize],
) -> Result<CsrMatrix<f64>> {
    check_interface(plate, cavity)?;
    let (n_s, n_f) = (plate.n_dofs(), cavity.n_nodes());
    if let Some(&bad) = wetted.iter().find(|&&e| e >= plate.n_elements()) {
        return Err(Error::Interface(format!(
            "wetted element {bad} outside plate with {} elements",
            plate.n_elements()
        )));
    }
    let (hx, hy) = plate.element_size();
    let ce = coupling_element(hx, hy);
    let mut trip = Vec::with_capacity(64 * wetted.len());
    for &e in wetted {
        let dofs = element_dofs(plate, e);
        // cavity z = 0 nodes share the plate's node indices
        let faces = plate.elements[e].map(|node| cavity.dof_map(node));
        for a in 0..16 {
            for c in 0..4 {
                trip.push((dofs[a], faces[c], ce[a][c]));
            }
        }
    }
    CsrMatrix::from_triplets(n_s, n_f, &trip)
}
