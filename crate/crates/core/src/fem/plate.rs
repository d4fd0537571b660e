//! Conforming Kirchhoff plate element: bicubic Hermite rectangle with
//! `w, w_x, w_y, w_xy` at each corner.

use super::material::MaterialProperties;
use super::mesh::PlateMesh;
use super::quadrature::gauss_unit;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Corner positions in local coordinates, counter-clockwise.
pub const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

/// Cubic Hermite functions on an interval of length `h` at `ξ ∈ [0, 1]`,
/// returned as `[value, d/dx, d²/dx²]` in physical units. Order: value at 0,
/// slope at 0, value at 1, slope at 1.
pub fn hermite(h: f64, xi: f64) -> [[f64; 3]; 4] {
    let (x2, x3) = (xi * xi, xi * xi * xi);
    [
        [1.0 - 3.0 * x2 + 2.0 * x3, (-6.0 * xi + 6.0 * x2) / h, (-6.0 + 12.0 * xi) / (h * h)],
        [h * (xi - 2.0 * x2 + x3), 1.0 - 4.0 * xi + 3.0 * x2, (-4.0 + 6.0 * xi) / h],
        [3.0 * x2 - 2.0 * x3, (6.0 * xi - 6.0 * x2) / h, (6.0 - 12.0 * xi) / (h * h)],
        [h * (-x2 + x3), -2.0 * xi + 3.0 * x2, (-2.0 + 6.0 * xi) / h],
    ]
}

/// Shape function values and second derivatives of one element.
#[derive(Clone, Copy, Debug)]
pub struct PlateShape {
    pub n: [f64; 16],
    pub n_xx: [f64; 16],
    pub n_yy: [f64; 16],
    pub n_xy: [f64; 16],
}

/// Element DOF `4·corner + k` with `k` indexing `(w, w_x, w_y, w_xy)`.
pub fn plate_shape(hx: f64, hy: f64, xi: f64, eta: f64) -> PlateShape {
    let fx = hermite(hx, xi);
    let fy = hermite(hy, eta);
    let mut s = PlateShape {
        n: [0.0; 16],
        n_xx: [0.0; 16],
        n_yy: [0.0; 16],
        n_xy: [0.0; 16],
    };
    for (c, &(cx, cy)) in CORNERS.iter().enumerate() {
        // (x-family index, y-family index) per nodal DOF
        let families = [
            (2 * cx, 2 * cy),
            (2 * cx + 1, 2 * cy),
            (2 * cx, 2 * cy + 1),
            (2 * cx + 1, 2 * cy + 1),
        ];
        for (k, &(a, b)) in families.iter().enumerate() {
            let d = 4 * c + k;
            s.n[d] = fx[a][0] * fy[b][0];
            s.n_xx[d] = fx[a][2] * fy[b][0];
            s.n_yy[d] = fx[a][0] * fy[b][2];
            s.n_xy[d] = fx[a][1] * fy[b][1];
        }
    }
    s
}

/// Element stiffness and consistent mass of an `hx × hy` rectangle.
pub fn plate_element(hx: f64, hy: f64, mat: &MaterialProperties) -> ([[f64; 16]; 16], [[f64; 16]; 16]) {
    let bend = mat.bending_stiffness();
    let nu = mat.poisson_ratio;
    let rho_t = mat.areal_mass();
    let mut ke = [[0.0; 16]; 16];
    let mut me = [[0.0; 16]; 16];
    let rule = gauss_unit(4);
    for &(xi, wx) in &rule {
        for &(eta, wy) in &rule {
            let s = plate_shape(hx, hy, xi, eta);
            let w = wx * wy * hx * hy;
            for a in 0..16 {
                for b in 0..16 {
                    let curv = s.n_xx[a] * s.n_xx[b]
                        + s.n_yy[a] * s.n_yy[b]
                        + nu * (s.n_xx[a] * s.n_yy[b] + s.n_yy[a] * s.n_xx[b])
                        + 2.0 * (1.0 - nu) * s.n_xy[a] * s.n_xy[b];
                    ke[a][b] += w * bend * curv;
                    me[a][b] += w * rho_t * s.n[a] * s.n[b];
                }
            }
        }
    }
    (ke, me)
}

/// Global element DOFs in the order used by [`plate_shape`].
pub fn element_dofs(mesh: &PlateMesh, e: usize) -> [usize; 16] {
    let mut d = [0; 16];
    for (c, &node) in mesh.elements[e].iter().enumerate() {
        for (k, g) in mesh.dof_map(node).into_iter().enumerate() {
            d[4 * c + k] = g;
        }
    }
    d
}

/// Free-edge plate stiffness `K_s` and mass `M_s`.
pub fn assemble_plate(
    mesh: &PlateMesh,
    mat: &MaterialProperties,
) -> Result<(CsrMatrix<f64>, CsrMatrix<f64>)> {
    mat.validate()?;
    let (hx, hy) = mesh.element_size();
    if !(hx > 0.0 && hy > 0.0) {
        return Err(Error::Mesh(format!("singular element Jacobian ({hx} x {hy})")));
    }
    // every element of the structured mesh is congruent
    let (ke, me) = plate_element(hx, hy, mat);
    let n = mesh.n_dofs();
    let nnz = 256 * mesh.n_elements();
    let mut kt = Vec::with_capacity(nnz);
    let mut mt = Vec::with_capacity(nnz);
    for e in 0..mesh.n_elements() {
        let dofs = element_dofs(mesh, e);
        for a in 0..16 {
            for b in 0..16 {
                kt.push((dofs[a], dofs[b], ke[a][b]));
                mt.push((dofs[a], dofs[b], me[a][b]));
            }
        }
    }
    Ok((
        CsrMatrix::from_triplets(n, n, &kt)?,
        CsrMatrix::from_triplets(n, n, &mt)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::build_plate_mesh;

    #[test]
    fn hermite_nodal_interpolation() {
        let h = 0.3;
        let at0 = hermite(h, 0.0);
        let at1 = hermite(h, 1.0);
        let expect0 = [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]];
        let expect1 = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for f in 0..4 {
            for d in 0..2 {
                assert!((at0[f][d] - expect0[f][d]).abs() < 1e-14);
                assert!((at1[f][d] - expect1[f][d]).abs() < 1e-14);
            }
        }
    }

    fn field_dofs(mesh: &PlateMesh, f: impl Fn(f64, f64) -> [f64; 4]) -> Vec<f64> {
        let mut v = vec![0.0; mesh.n_dofs()];
        for (node, &[x, y]) in mesh.coords.iter().enumerate() {
            for (k, g) in mesh.dof_map(node).into_iter().enumerate() {
                v[g] = f(x, y)[k];
            }
        }
        v
    }

    #[test]
    fn rigid_modes_are_in_the_null_space() {
        let mesh = build_plate_mesh(0.48, 0.4, 5, 4).unwrap();
        let (k, _) = assemble_plate(&mesh, &MaterialProperties::default()).unwrap();
        let scale = k.max_abs();
        let modes: [&dyn Fn(f64, f64) -> [f64; 4]; 3] = [
            &|_, _| [1.0, 0.0, 0.0, 0.0],
            &|x, _| [x, 1.0, 0.0, 0.0],
            &|_, y| [y, 0.0, 1.0, 0.0],
        ];
        for mode in modes {
            let v = field_dofs(&mesh, mode);
            let kv = k.mul_vec_real(&v);
            assert!(kv.iter().all(|r| r.abs() < 1e-10 * scale));
        }
    }

    #[test]
    fn reproduces_constant_curvature_energy() {
        // w = x²/2 has w_xx = 1: energy density B, strain energy ½ B A
        let mat = MaterialProperties::default();
        let mesh = build_plate_mesh(0.6, 0.5, 3, 4).unwrap();
        let (k, m) = assemble_plate(&mesh, &mat).unwrap();
        let v = field_dofs(&mesh, |x, _| [0.5 * x * x, x, 0.0, 0.0]);
        let kv = k.mul_vec_real(&v);
        let energy: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
        let area = 0.6 * 0.5;
        assert!((energy - mat.bending_stiffness() * area).abs() < 1e-9 * energy);
        // and the total mass from the constant mode
        let one = field_dofs(&mesh, |_, _| [1.0, 0.0, 0.0, 0.0]);
        let mv = m.mul_vec_real(&one);
        let mass: f64 = one.iter().zip(&mv).map(|(a, b)| a * b).sum();
        assert!((mass - mat.areal_mass() * area).abs() < 1e-12 * mass);
    }

    #[test]
    fn matrices_are_symmetric() {
        let mesh = build_plate_mesh(1.0, 0.7, 3, 2).unwrap();
        let (k, m) = assemble_plate(&mesh, &MaterialProperties::default()).unwrap();
        assert!(k.hermitian_defect() < 1e-12);
        assert!(m.hermitian_defect() < 1e-12);
    }
}
