use super::boundary::on_side;
use super::element::{darcy_stiffness, elasticity_stiffness};
use super::{
    BoundaryCondition, CoefficientField, DofMap, ElasticField, Material, ProblemKind, Side,
    SideCondition, StructuredMesh,
};
use crate::error::{GeneoError, Result};
use crate::linalg::{SparseMatrixCsr, TripletBuilder};

/// A discretized boundary value problem: mesh, dof numbering, material,
/// boundary conditions and a constant volume source.
#[derive(Debug, Clone)]
pub struct FemProblem {
    pub mesh: StructuredMesh,
    pub dofs: DofMap,
    pub material: Material,
    pub bc: BoundaryCondition,
    /// Volume source `f` (Darcy uses the first component) or body force.
    pub source: [f64; 2],
    constrained: Vec<Option<f64>>,
}

/// Matrix on a subset of dofs, numbered by position in `dofs`.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub dofs: Vec<usize>,
    pub matrix: SparseMatrixCsr,
}

impl FemProblem {
    pub fn darcy(
        mesh: StructuredMesh,
        field: CoefficientField,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        Self::new(mesh, Material::Darcy(field), bc, [1.0, 0.0])
    }

    pub fn elasticity(
        mesh: StructuredMesh,
        field: ElasticField,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        Self::new(mesh, Material::Elastic(field), bc, [0.0, 0.0])
    }

    pub fn new(
        mesh: StructuredMesh,
        material: Material,
        bc: BoundaryCondition,
        source: [f64; 2],
    ) -> Result<Self> {
        let (kind, len) = match &material {
            Material::Darcy(f) => (ProblemKind::Darcy, f.len()),
            Material::Elastic(f) => (ProblemKind::Elasticity, f.young.len()),
        };
        if len != mesh.num_elements() {
            return Err(GeneoError::Shape {
                expected: mesh.num_elements(),
                got: len,
            });
        }
        if !bc.has_dirichlet() {
            return Err(GeneoError::Singular(
                "no Dirichlet boundary: the operator has a nontrivial kernel".into(),
            ));
        }
        let dofs = DofMap::new(&mesh, kind);
        let constrained = bc.constrained_values(&mesh, &dofs);
        Ok(Self {
            mesh,
            dofs,
            material,
            bc,
            source,
            constrained,
        })
    }

    pub fn with_source(mut self, source: [f64; 2]) -> Self {
        self.source = source;
        self
    }

    pub fn kind(&self) -> ProblemKind {
        self.dofs.kind()
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.num_dofs()
    }

    /// Dirichlet value per global dof.
    pub fn constrained(&self) -> &[Option<f64>] {
        &self.constrained
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.constrained[dof].is_none()
    }

    /// Element matrix in the element's local dof order.
    pub fn element_matrix(&self, e: usize) -> Vec<f64> {
        let (hx, hy) = (self.mesh.hx(), self.mesh.hy());
        match &self.material {
            Material::Darcy(f) => darcy_stiffness(hx, hy, f.value(e))
                .iter()
                .flatten()
                .copied()
                .collect(),
            Material::Elastic(f) => {
                let k = elasticity_stiffness(hx, hy, f.young.value(e), f.poisson[e]);
                let mut out = vec![0.0; 64];
                for i in 0..8 {
                    for j in 0..8 {
                        out[i * 8 + j] = 0.5 * (k[i][j] + k[j][i]);
                    }
                }
                out
            }
        }
    }

    /// Stiffness matrix summed over `elements` in the numbering given by
    /// `local_of` (global dof → local index, `usize::MAX` if absent). No
    /// boundary conditions applied.
    fn raw_assembly(
        &self,
        elements: &[usize],
        n: usize,
        local_of: &dyn Fn(usize) -> usize,
    ) -> SparseMatrixCsr {
        let per = 4 * self.dofs.components();
        let mut b = TripletBuilder::with_capacity(n, elements.len() * per * per);
        for &e in elements {
            let ke = self.element_matrix(e);
            let gd = self.dofs.element_dofs(&self.mesh, e);
            let ld: Vec<usize> = gd.iter().map(|&g| local_of(g)).collect();
            for i in 0..per {
                if ld[i] == usize::MAX {
                    continue;
                }
                for j in 0..per {
                    if ld[j] != usize::MAX {
                        b.push(ld[i], ld[j], ke[i * per + j]);
                    }
                }
            }
        }
        b.build()
    }

    /// Global stiffness without any constraint elimination.
    pub fn assemble_neumann(&self) -> SparseMatrixCsr {
        let all: Vec<usize> = (0..self.mesh.num_elements()).collect();
        self.raw_assembly(&all, self.num_dofs(), &|g| g)
    }

    /// Load vector from the volume source and Neumann sides.
    pub fn load_vector(&self) -> Vec<f64> {
        let c = self.dofs.components();
        let mut f = vec![0.0; self.num_dofs()];
        let area = self.mesh.hx() * self.mesh.hy();
        for e in 0..self.mesh.num_elements() {
            for &node in &self.mesh.element_nodes(e) {
                for k in 0..c {
                    f[self.dofs.dof(node, k)] += 0.25 * area * self.source[k];
                }
            }
        }
        for side in Side::ALL {
            let SideCondition::Neumann(g) = self.bc.side(side) else {
                continue;
            };
            if g.iter().all(|v| *v == 0.0) {
                continue;
            }
            let (count, len) = match side {
                Side::Bottom | Side::Top => (self.mesh.nx, self.mesh.hx()),
                Side::Left | Side::Right => (self.mesh.ny, self.mesh.hy()),
            };
            for edge in 0..count {
                let ends = match side {
                    Side::Bottom => [(edge, 0), (edge + 1, 0)],
                    Side::Top => [(edge, self.mesh.ny), (edge + 1, self.mesh.ny)],
                    Side::Left => [(0, edge), (0, edge + 1)],
                    Side::Right => [(self.mesh.nx, edge), (self.mesh.nx, edge + 1)],
                };
                for (i, j) in ends {
                    let node = self.mesh.node_index(i, j);
                    for k in 0..c {
                        f[self.dofs.dof(node, k)] += 0.5 * len * g[k];
                    }
                }
            }
        }
        f
    }

    /// Global system with Dirichlet dofs eliminated symmetrically.
    pub fn assemble(&self) -> Result<(SparseMatrixCsr, Vec<f64>)> {
        let a = self.assemble_neumann();
        let mut rhs = self.load_vector();
        let a = eliminate(&a, &self.constrained, Some(&mut rhs));
        Ok((a, rhs))
    }

    /// Sorted global dofs touched by `elements`.
    pub fn dofs_of_elements(&self, elements: &[usize]) -> Vec<usize> {
        let mut mark = vec![false; self.num_dofs()];
        for &e in elements {
            for d in self.dofs.element_dofs(&self.mesh, e) {
                mark[d] = true;
            }
        }
        mark.iter()
            .enumerate()
            .filter_map(|(d, &m)| m.then_some(d))
            .collect()
    }

    /// Neumann matrix of `elements` on the sorted dof list `local_dofs`,
    /// with global Dirichlet dofs eliminated (unit diagonal). Artificial
    /// boundaries stay natural.
    pub fn assemble_on(&self, elements: &[usize], local_dofs: &[usize]) -> SparseMatrixCsr {
        debug_assert!(local_dofs.windows(2).all(|w| w[0] < w[1]));
        let lookup = |g: usize| local_dofs.binary_search(&g).unwrap_or(usize::MAX);
        let raw = self.raw_assembly(elements, local_dofs.len(), &lookup);
        let constrained: Vec<Option<f64>> =
            local_dofs.iter().map(|&g| self.constrained[g]).collect();
        eliminate(&raw, &constrained, None)
    }

    /// Local Neumann matrix over an element subset (positive semi-definite).
    pub fn assemble_local(&self, elements: &[usize]) -> Result<LocalSystem> {
        if elements.is_empty() {
            return Err(GeneoError::Domain("empty element subset".into()));
        }
        if let Some(&e) = elements.iter().find(|&&e| e >= self.mesh.num_elements()) {
            return Err(GeneoError::Domain(format!("element {e} out of range")));
        }
        let dofs = self.dofs_of_elements(elements);
        let matrix = self.assemble_on(elements, &dofs);
        Ok(LocalSystem { dofs, matrix })
    }

    /// Nodal coordinates of a dof.
    pub fn dof_coords(&self, dof: usize) -> (f64, f64) {
        self.mesh.node_coords(self.dofs.node_of(dof).0)
    }

    /// Whether a node lies on the outer boundary of the domain.
    pub fn on_domain_boundary(&self, node: usize) -> bool {
        let (i, j) = self.mesh.node_ij(node);
        Side::ALL.iter().any(|&s| on_side(&self.mesh, i, j, s))
    }
}

/// Zeroes rows and columns of constrained dofs, puts 1 on their diagonal and
/// moves the known values to the right-hand side.
pub fn eliminate(
    a: &SparseMatrixCsr,
    constrained: &[Option<f64>],
    rhs: Option<&mut Vec<f64>>,
) -> SparseMatrixCsr {
    let n = a.dim();
    if let Some(r) = rhs {
        for i in 0..n {
            if constrained[i].is_some() {
                continue;
            }
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if let Some(g) = constrained[c] {
                    r[i] -= v * g;
                }
            }
        }
        for i in 0..n {
            if let Some(g) = constrained[i] {
                r[i] = g;
            }
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(a.nnz());
    let mut values = Vec::with_capacity(a.nnz());
    offsets.push(0);
    for i in 0..n {
        if constrained[i].is_some() {
            indices.push(i);
            values.push(1.0);
        } else {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if constrained[c].is_none() {
                    indices.push(c);
                    values.push(v);
                }
            }
        }
        offsets.push(indices.len());
    }
    SparseMatrixCsr::from_raw(n, offsets, indices, values)
        .expect("elimination preserves CSR structure")
}

/// Q1 Darcy system `∫ κ ∇u·∇v = ∫ f v` with `f = 1`.
pub fn assemble_darcy(
    mesh: &StructuredMesh,
    field: &CoefficientField,
    bc: &BoundaryCondition,
) -> Result<(SparseMatrixCsr, Vec<f64>)> {
    FemProblem::darcy(*mesh, field.clone(), bc.clone())?.assemble()
}

/// Q1 plane-strain elasticity system with zero body force.
pub fn assemble_elasticity(
    mesh: &StructuredMesh,
    field: &ElasticField,
    bc: &BoundaryCondition,
) -> Result<(SparseMatrixCsr, Vec<f64>)> {
    FemProblem::elasticity(*mesh, field.clone(), bc.clone())?.assemble()
}

/// Local Neumann matrix of a subdomain (or overlap zone) element subset.
pub fn assemble_local(problem: &FemProblem, element_subset: &[usize]) -> Result<LocalSystem> {
    problem.assemble_local(element_subset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_constrained_single_element_is_identity() {
        let m = StructuredMesh::unit_square(1).unwrap();
        let f = CoefficientField::constant(&m, 1.0).unwrap();
        let (a, b) = assemble_darcy(&m, &f, &BoundaryCondition::all_dirichlet(0.0)).unwrap();
        assert_eq!(a, SparseMatrixCsr::identity(4));
        assert_eq!(b, vec![0.0; 4]);
    }

    #[test]
    fn missing_dirichlet_is_singular() {
        let m = StructuredMesh::unit_square(2).unwrap();
        let f = CoefficientField::constant(&m, 1.0).unwrap();
        assert!(matches!(
            assemble_darcy(&m, &f, &BoundaryCondition::neumann()),
            Err(GeneoError::Singular(_))
        ));
    }

    #[test]
    fn empty_subset_rejected() {
        let m = StructuredMesh::unit_square(2).unwrap();
        let f = CoefficientField::constant(&m, 1.0).unwrap();
        let p = FemProblem::darcy(m, f, BoundaryCondition::all_dirichlet(0.0)).unwrap();
        assert!(p.assemble_local(&[]).is_err());
    }

    #[test]
    fn neumann_flux_integrates_edge_length() {
        let m = StructuredMesh::new(2, 1, 2.0, 1.0).unwrap();
        let f = CoefficientField::constant(&m, 1.0).unwrap();
        let bc = BoundaryCondition::neumann()
            .with(Side::Bottom, SideCondition::Dirichlet([0.0; 2]))
            .with(Side::Top, SideCondition::Neumann([3.0, 0.0]));
        let p = FemProblem::darcy(m, f, bc).unwrap().with_source([0.0; 2]);
        let load = p.load_vector();
        let total: f64 = load.iter().sum();
        assert!((total - 6.0).abs() < 1e-14);
    }
}
