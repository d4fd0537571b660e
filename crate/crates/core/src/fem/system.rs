//! Coupled plate–cavity system `[K − ω² M] x = f` with structural DOFs first.

use std::ops::Range;
use std::sync::OnceLock;

use faer::c64;
use faer::sparse::linalg::solvers::SymbolicLu;

use super::acoustic::assemble_cavity;
use super::coupling::assemble_coupling;
use super::material::MaterialProperties;
use super::mesh::{check_interface, CavityMesh, PlateMesh};
use super::plate::assemble_plate;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, FactoredSystem, FrequencyModel, SolveStats, SparseLu};

#[derive(Clone, Debug)]
pub struct ModelGeometry {
    pub plate: PlateMesh,
    pub cavity: CavityMesh,
}

/// `K = [[K_s, −C_sf], [0, K_f]]`, `M = [[M_s, 0], [ρ_f C_sfᵀ, M_f]]`.
pub struct CoupledSystem {
    pub k: CsrMatrix<f64>,
    pub m: CsrMatrix<f64>,
    pub c_sf: CsrMatrix<f64>,
    pub n_s: usize,
    pub n_f: usize,
    pub material: MaterialProperties,
    pub geometry: Option<ModelGeometry>,
    /// `K` with the structural block scaled by `1 + iη`; `None` when undamped.
    k_damped: Option<CsrMatrix<c64>>,
    /// Union pattern of `K` and `M`, shared by every `A(ω)`.
    pattern: CsrMatrix<f64>,
    symbolic: OnceLock<SymbolicLu<usize>>,
    stats: SolveStats,
}

impl std::fmt::Debug for CoupledSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoupledSystem")
            .field("n_s", &self.n_s)
            .field("n_f", &self.n_f)
            .field("nnz_k", &self.k.nnz())
            .field("nnz_m", &self.m.nnz())
            .finish()
    }
}

/// Meshes, assembles and couples the plate and cavity.
pub fn assemble_system(
    plate: PlateMesh,
    cavity: CavityMesh,
    mat: &MaterialProperties,
) -> Result<CoupledSystem> {
    check_interface(&plate, &cavity)?;
    let (k_s, m_s) = assemble_plate(&plate, mat)?;
    let (k_f, m_f) = assemble_cavity(&cavity, mat)?;
    let c_sf = assemble_coupling(&plate, &cavity)?;
    let mut sys = CoupledSystem::from_blocks(&k_s, &m_s, &k_f, &m_f, c_sf, mat.clone())?;
    sys.geometry = Some(ModelGeometry { plate, cavity });
    Ok(sys)
}

impl CoupledSystem {
    pub fn from_blocks(
        k_s: &CsrMatrix<f64>,
        m_s: &CsrMatrix<f64>,
        k_f: &CsrMatrix<f64>,
        m_f: &CsrMatrix<f64>,
        c_sf: CsrMatrix<f64>,
        material: MaterialProperties,
    ) -> Result<Self> {
        let (n_s, n_f) = (k_s.nrows(), k_f.nrows());
        if m_s.nrows() != n_s || m_f.nrows() != n_f || c_sf.nrows() != n_s || c_sf.ncols() != n_f {
            return Err(Error::Contract("inconsistent block dimensions".into()));
        }
        let n = n_s + n_f;
        let rho = material.density_fluid;
        let mut kt: Vec<(usize, usize, f64)> = k_s.iter().collect();
        kt.extend(c_sf.iter().map(|(i, j, v)| (i, n_s + j, -v)));
        kt.extend(k_f.iter().map(|(i, j, v)| (n_s + i, n_s + j, v)));
        let mut mt: Vec<(usize, usize, f64)> = m_s.iter().collect();
        mt.extend(c_sf.iter().map(|(i, j, v)| (n_s + j, i, rho * v)));
        mt.extend(m_f.iter().map(|(i, j, v)| (n_s + i, n_s + j, v)));
        let k = CsrMatrix::from_triplets(n, n, &kt)?;
        let m = CsrMatrix::from_triplets(n, n, &mt)?;
        Self::finish(k, m, c_sf, n_s, material, None)
    }

    /// Wraps arbitrary `K`, `M` whose first `n_s` rows are structural; used
    /// for toy systems. The coupling block is read back from `K`.
    pub fn from_matrices(k: CsrMatrix<f64>, m: CsrMatrix<f64>, n_s: usize) -> Result<Self> {
        Self::from_matrices_with(k, m, n_s, MaterialProperties::default(), None)
    }

    /// As [`Self::from_matrices`], for matrices read back from files. The
    /// material supplies the loss factor; `M` already carries `ρ_f`.
    pub fn from_matrices_with(
        k: CsrMatrix<f64>,
        m: CsrMatrix<f64>,
        n_s: usize,
        material: MaterialProperties,
        geometry: Option<ModelGeometry>,
    ) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n || m.nrows() != n || m.ncols() != n || n_s > n {
            return Err(Error::Contract("K and M must be square, equal-sized and n_s <= n".into()));
        }
        if let Some(g) = &geometry {
            if g.plate.n_dofs() != n_s || g.cavity.n_nodes() != n - n_s {
                return Err(Error::Contract(format!(
                    "geometry has {} + {} DOFs, matrices have {n_s} + {}",
                    g.plate.n_dofs(),
                    g.cavity.n_nodes(),
                    n - n_s
                )));
            }
        }
        let c_sf = k.block(0..n_s, n_s..n).scaled(-1.0);
        Self::finish(k, m, c_sf, n_s, material, geometry)
    }

    fn finish(
        k: CsrMatrix<f64>,
        m: CsrMatrix<f64>,
        c_sf: CsrMatrix<f64>,
        n_s: usize,
        material: MaterialProperties,
        geometry: Option<ModelGeometry>,
    ) -> Result<Self> {
        let n = k.nrows();
        let pattern = CsrMatrix::linear_combination(&k, c64::new(1.0, 0.0), &m, c64::new(1.0, 0.0))?
            .real_part();
        let eta = material.loss_factor;
        let k_damped = (eta != 0.0).then(|| {
            let trip: Vec<_> = k
                .iter()
                .map(|(i, j, v)| {
                    let s = if i < n_s && j < n_s { c64::new(1.0, eta) } else { c64::new(1.0, 0.0) };
                    (i, j, s * v)
                })
                .collect();
            CsrMatrix::from_triplets(n, n, &trip).expect("indices in range")
        });
        Ok(Self {
            k,
            m,
            c_sf,
            n_s,
            n_f: n - n_s,
            material,
            geometry,
            k_damped,
            pattern,
            symbolic: OnceLock::new(),
            stats: SolveStats::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n_s + self.n_f
    }

    pub fn structure_dofs(&self) -> Range<usize> {
        0..self.n_s
    }

    pub fn fluid_dofs(&self) -> Range<usize> {
        self.n_s..self.n()
    }

    pub fn plate(&self) -> Option<&PlateMesh> {
        self.geometry.as_ref().map(|g| &g.plate)
    }

    /// Stiffness as used in `A(ω)`, including the structural loss factor.
    pub fn stiffness_c64(&self) -> CsrMatrix<c64> {
        match &self.k_damped {
            Some(kd) => kd.clone(),
            None => self.k.to_c64(),
        }
    }

    /// `A(ω) = K − ω² M` on the fixed union pattern of `K` and `M`.
    pub fn dynamic_stiffness(&self, omega: f64) -> CsrMatrix<c64> {
        let w2 = c64::new(-omega * omega, 0.0);
        let one = c64::new(1.0, 0.0);
        let a = match &self.k_damped {
            Some(kd) => CsrMatrix::linear_combination(kd, one, &self.m, w2),
            None => CsrMatrix::linear_combination(&self.k, one, &self.m, w2),
        };
        a.expect("K and M share dimensions")
    }

    pub fn pattern(&self) -> &CsrMatrix<f64> {
        &self.pattern
    }

    /// Factorizes an operator from [`Self::dynamic_stiffness`], reusing the
    /// cached symbolic analysis.
    pub fn factorize_operator(&self, operator: CsrMatrix<c64>, omega: f64) -> Result<SparseLu<'_>> {
        SparseLu::factorize(operator, Some(self.symbolic()?), omega, &self.stats)
    }

    fn symbolic(&self) -> Result<&SymbolicLu<usize>> {
        if let Some(s) = self.symbolic.get() {
            return Ok(s);
        }
        let s = SparseLu::symbolic_for(&self.pattern)?;
        Ok(self.symbolic.get_or_init(|| s))
    }
}

impl FrequencyModel for CoupledSystem {
    fn dim(&self) -> usize {
        self.n()
    }

    fn factorize(&self, omega: f64) -> Result<Box<dyn FactoredSystem + '_>> {
        Ok(Box::new(self.factorize_operator(self.dynamic_stiffness(omega), omega)?))
    }

    fn stats(&self) -> &SolveStats {
        &self.stats
    }
}
