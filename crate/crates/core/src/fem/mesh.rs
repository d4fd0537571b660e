//! Structured meshes for the rectangular plate and the box cavity beneath it.
//!
//! The plate occupies `z = 0`, the cavity `[0, lx] × [0, ly] × [0, lz]`. Node
//! numbering is row-major with `x` fastest, so the cavity's `z = 0` face uses
//! exactly the plate's node indices.

use crate::error::{Error, Result};

/// Degrees of freedom per plate node: `w, ∂w/∂x, ∂w/∂y, ∂²w/∂x∂y`.
pub const PLATE_DOFS_PER_NODE: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct PlateMesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub coords: Vec<[f64; 2]>,
    /// Counter-clockwise corner nodes, starting at the lower-left corner.
    pub elements: Vec<[usize; 4]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CavityMesh {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub coords: Vec<[f64; 3]>,
    /// Bottom face counter-clockwise, then the top face in the same order.
    pub elements: Vec<[usize; 8]>,
}

fn check_extent(name: &str, len: f64, count: usize) -> Result<()> {
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::Config(format!("{name} length must be positive, got {len}")));
    }
    if count < 2 {
        return Err(Error::Config(format!(
            "{name} needs at least 2 elements, got {count}"
        )));
    }
    Ok(())
}

pub fn build_plate_mesh(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<PlateMesh> {
    check_extent("plate x", lx, nx)?;
    check_extent("plate y", ly, ny)?;
    let (hx, hy) = (lx / nx as f64, ly / ny as f64);
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            coords.push([i as f64 * hx, j as f64 * hy]);
        }
    }
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
        }
    }
    Ok(PlateMesh {
        nx,
        ny,
        lx,
        ly,
        coords,
        elements,
    })
}

impl PlateMesh {
    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_dofs(&self) -> usize {
        PLATE_DOFS_PER_NODE * self.n_nodes()
    }

    pub fn element_size(&self) -> (f64, f64) {
        (self.lx / self.nx as f64, self.ly / self.ny as f64)
    }

    /// Global indices of `(w, w_x, w_y, w_xy)` at a node.
    pub fn dof_map(&self, node: usize) -> [usize; 4] {
        let b = PLATE_DOFS_PER_NODE * node;
        [b, b + 1, b + 2, b + 3]
    }

    /// Transverse deflection DOF of a node.
    pub fn w_dof(&self, node: usize) -> usize {
        PLATE_DOFS_PER_NODE * node
    }

    /// Lower-left corner of an element.
    pub fn element_origin(&self, e: usize) -> [f64; 2] {
        self.coords[self.elements[e][0]]
    }

    /// Element containing `(x, y)`; points on shared edges go to the element
    /// with the larger index.
    pub fn locate(&self, x: f64, y: f64) -> Option<usize> {
        let (hx, hy) = self.element_size();
        if !(0.0..=self.lx).contains(&x) || !(0.0..=self.ly).contains(&y) {
            return None;
        }
        let i = ((x / hx).floor() as usize).min(self.nx - 1);
        let j = ((y / hy).floor() as usize).min(self.ny - 1);
        Some(j * self.nx + i)
    }
}

pub fn build_cavity_mesh(
    lx: f64,
    ly: f64,
    lz: f64,
    nx: usize,
    ny: usize,
    nz: usize,
) -> Result<CavityMesh> {
    check_extent("cavity x", lx, nx)?;
    check_extent("cavity y", ly, ny)?;
    check_extent("cavity z", lz, nz)?;
    let (hx, hy, hz) = (lx / nx as f64, ly / ny as f64, lz / nz as f64);
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                coords.push([i as f64 * hx, j as f64 * hy, k as f64 * hz]);
            }
        }
    }
    let node = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut elements = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                elements.push([
                    node(i, j, k),
                    node(i + 1, j, k),
                    node(i + 1, j + 1, k),
                    node(i, j + 1, k),
                    node(i, j, k + 1),
                    node(i + 1, j, k + 1),
                    node(i + 1, j + 1, k + 1),
                    node(i, j + 1, k + 1),
                ]);
            }
        }
    }
    Ok(CavityMesh {
        nx,
        ny,
        nz,
        lx,
        ly,
        lz,
        coords,
        elements,
    })
}

impl CavityMesh {
    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1) * (self.nz + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn element_size(&self) -> (f64, f64, f64) {
        (
            self.lx / self.nx as f64,
            self.ly / self.ny as f64,
            self.lz / self.nz as f64,
        )
    }

    /// Pressure DOF of a node (one per node).
    pub fn dof_map(&self, node: usize) -> usize {
        node
    }

    /// Node index at grid position `(i, j, k)`.
    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        (k * (self.ny + 1) + j) * (self.nx + 1) + i
    }
}

/// Fails unless the cavity's `z = 0` face grid coincides with the plate grid.
pub fn check_interface(plate: &PlateMesh, cavity: &CavityMesh) -> Result<()> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if plate.nx != cavity.nx || plate.ny != cavity.ny {
        return Err(Error::Interface(format!(
            "plate grid {}x{} does not match cavity face grid {}x{}",
            plate.nx, plate.ny, cavity.nx, cavity.ny
        )));
    }
    if !close(plate.lx, cavity.lx) || !close(plate.ly, cavity.ly) {
        return Err(Error::Interface(format!(
            "plate extent {}x{} m does not match cavity face {}x{} m",
            plate.lx, plate.ly, cavity.lx, cavity.ly
        )));
    }
    Ok(())
}
