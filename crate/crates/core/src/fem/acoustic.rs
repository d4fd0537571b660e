//! Trilinear hexahedral element for the pressure Helmholtz problem.

use super::material::MaterialProperties;
use super::mesh::CavityMesh;
use super::quadrature::gauss_unit;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

const HEX_CORNERS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (1, 1, 1),
    (0, 1, 1),
];

fn lin(c: usize, t: f64) -> (f64, f64) {
    if c == 0 {
        (1.0 - t, -1.0)
    } else {
        (t, 1.0)
    }
}

/// Element `∫ ∇N ∇Nᵀ` and `(1/c²) ∫ N Nᵀ` of an `hx × hy × hz` brick.
pub fn hex_element(h: (f64, f64, f64), speed_of_sound: f64) -> ([[f64; 8]; 8], [[f64; 8]; 8]) {
    let (hx, hy, hz) = h;
    let inv_c2 = 1.0 / (speed_of_sound * speed_of_sound);
    let mut ke = [[0.0; 8]; 8];
    let mut me = [[0.0; 8]; 8];
    let rule = gauss_unit(2);
    for &(xi, wx) in &rule {
        for &(eta, wy) in &rule {
            for &(zeta, wz) in &rule {
                let w = wx * wy * wz * hx * hy * hz;
                let mut n = [0.0; 8];
                let mut g = [[0.0; 3]; 8];
                for (a, &(cx, cy, cz)) in HEX_CORNERS.iter().enumerate() {
                    let (fx, dx) = lin(cx, xi);
                    let (fy, dy) = lin(cy, eta);
                    let (fz, dz) = lin(cz, zeta);
                    n[a] = fx * fy * fz;
                    g[a] = [dx * fy * fz / hx, fx * dy * fz / hy, fx * fy * dz / hz];
                }
                for a in 0..8 {
                    for b in 0..8 {
                        ke[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2]);
                        me[a][b] += w * inv_c2 * n[a] * n[b];
                    }
                }
            }
        }
    }
    (ke, me)
}

/// Rigid-wall cavity matrices `K_f` and `M_f`; `K_f − ω² M_f` discretizes
/// `Δp + (ω/c)² p`.
pub fn assemble_cavity(
    mesh: &CavityMesh,
    mat: &MaterialProperties,
) -> Result<(CsrMatrix<f64>, CsrMatrix<f64>)> {
    mat.validate()?;
    let h = mesh.element_size();
    if !(h.0 > 0.0 && h.1 > 0.0 && h.2 > 0.0) {
        return Err(Error::Mesh(format!("singular element Jacobian {h:?}")));
    }
    let (ke, me) = hex_element(h, mat.speed_of_sound);
    let n = mesh.n_nodes();
    let mut kt = Vec::with_capacity(64 * mesh.n_elements());
    let mut mt = Vec::with_capacity(64 * mesh.n_elements());
    for el in &mesh.elements {
        for a in 0..8 {
            for b in 0..8 {
                let (i, j) = (mesh.dof_map(el[a]), mesh.dof_map(el[b]));
                kt.push((i, j, ke[a][b]));
                mt.push((i, j, me[a][b]));
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
    use crate::fem::mesh::build_cavity_mesh;

    #[test]
    fn constant_pressure_is_in_the_null_space() {
        let mesh = build_cavity_mesh(0.5, 0.4, 0.3, 3, 2, 4).unwrap();
        let (k, m) = assemble_cavity(&mesh, &MaterialProperties::default()).unwrap();
        let one = vec![1.0; mesh.n_nodes()];
        assert!(k.mul_vec_real(&one).iter().all(|v| v.abs() < 1e-12 * k.max_abs()));
        let mass: f64 = m.mul_vec_real(&one).iter().sum();
        assert!((mass - 0.5 * 0.4 * 0.3 / (340.0 * 340.0)).abs() < 1e-15);
        assert!(k.hermitian_defect() < 1e-12);
        assert!(m.hermitian_defect() < 1e-12);
    }

    #[test]
    fn linear_field_gradient_energy() {
        // p = z: ∫|∇p|² = volume
        let mesh = build_cavity_mesh(0.5, 0.4, 0.3, 2, 3, 2).unwrap();
        let (k, _) = assemble_cavity(&mesh, &MaterialProperties::default()).unwrap();
        let p: Vec<f64> = mesh.coords.iter().map(|c| c[2]).collect();
        let kp = k.mul_vec_real(&p);
        let e: f64 = p.iter().zip(&kp).map(|(a, b)| a * b).sum();
        assert!((e - 0.06).abs() < 1e-13);
    }
}
