//! Consistent plate load vectors from nodal pressures.

use faer::c64;

use crate::error::{Error, Result};
use crate::fem::plate::{element_dofs, plate_shape, CORNERS};
use crate::fem::quadrature::gauss_unit;
use crate::fem::PlateMesh;
use crate::linalg::CsrMatrix;

/// Maps nodal pressures (bilinear within each element) to the consistent
/// load `∫ p ψ_i dΩ` on every plate DOF. Sparse `n_s × n_nodes`.
#[derive(Clone, Debug)]
pub struct LoadOperator {
    pub matrix: CsrMatrix<f64>,
}

impl LoadOperator {
    pub fn build(plate: &PlateMesh) -> Result<Self> {
        let (hx, hy) = plate.element_size();
        let rule = gauss_unit(3);
        let mut le = [[0.0; 4]; 16];
        for &(xi, wx) in &rule {
            for &(eta, wy) in &rule {
                let s = plate_shape(hx, hy, xi, eta);
                let w = wx * wy * hx * hy;
                for (c, &(cx, cy)) in CORNERS.iter().enumerate() {
                    let np = (if cx == 0 { 1.0 - xi } else { xi }) * (if cy == 0 { 1.0 - eta } else { eta });
                    for a in 0..16 {
                        le[a][c] += w * s.n[a] * np;
                    }
                }
            }
        }
        let mut trip = Vec::with_capacity(64 * plate.n_elements());
        for e in 0..plate.n_elements() {
            let dofs = element_dofs(plate, e);
            for a in 0..16 {
                for (c, &node) in plate.elements[e].iter().enumerate() {
                    trip.push((dofs[a], node, le[a][c]));
                }
            }
        }
        Ok(Self {
            matrix: CsrMatrix::from_triplets(plate.n_dofs(), plate.n_nodes(), &trip)?,
        })
    }

    pub fn apply(&self, nodal_pressures: &[c64]) -> Result<Vec<c64>> {
        if nodal_pressures.len() != self.matrix.ncols() {
            return Err(Error::Contract(format!(
                "{} nodal pressures for a plate with {} nodes",
                nodal_pressures.len(),
                self.matrix.ncols()
            )));
        }
        Ok(self.matrix.mul_vec(nodal_pressures))
    }
}

/// `f_TBL` of length `n_s` for the given nodal pressures.
pub fn assemble_force_vector(nodal_pressures: &[c64], plate: &PlateMesh) -> Result<Vec<c64>> {
    LoadOperator::build(plate)?.apply(nodal_pressures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_cavity_mesh, build_plate_mesh, assemble_coupling};

    fn w_sum(plate: &PlateMesh, f: &[c64]) -> c64 {
        (0..plate.n_nodes()).map(|n| f[plate.w_dof(n)]).sum()
    }

    #[test]
    fn unit_and_linear_pressure_resultants() {
        let plate = build_plate_mesh(0.48, 0.4, 6, 5).unwrap();
        let area = 0.48 * 0.4;
        let ones = vec![c64::new(1.0, 0.0); plate.n_nodes()];
        let f = assemble_force_vector(&ones, &plate).unwrap();
        assert!((w_sum(&plate, &f) - c64::new(area, 0.0)).norm() < 1e-14);
        let px: Vec<c64> = plate.coords.iter().map(|c| c64::new(c[0], 0.0)).collect();
        let f = assemble_force_vector(&px, &plate).unwrap();
        assert!((w_sum(&plate, &f).re - area * 0.48 / 2.0).abs() < 1e-10);
        let zeros = vec![c64::new(0.0, 0.0); plate.n_nodes()];
        assert!(assemble_force_vector(&zeros, &plate).unwrap().iter().all(|v| *v == c64::new(0.0, 0.0)));
    }

    #[test]
    fn equals_interface_coupling_block() {
        // both integrate ψ against bilinear face functions exactly
        let plate = build_plate_mesh(0.48, 0.4, 3, 4).unwrap();
        let cavity = build_cavity_mesh(0.48, 0.4, 0.6, 3, 4, 2).unwrap();
        let c = assemble_coupling(&plate, &cavity).unwrap();
        let l = LoadOperator::build(&plate).unwrap().matrix;
        let face = c.block(0..plate.n_dofs(), 0..plate.n_nodes());
        for (i, j, v) in l.iter() {
            assert!((face.get(i, j) - v).abs() < 1e-15);
        }
        assert_eq!(face.nnz(), l.nnz());
    }
}
