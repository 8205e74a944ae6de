use crate::error::{GeneoError, Result};

/// Uniform `nx × ny` quadrilateral grid on `[0, lx] × [0, ly]`.
///
/// Nodes are numbered row-major, `node = j·(nx+1) + i`; elements likewise,
/// `element = ey·nx + ex`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredMesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl StructuredMesh {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(GeneoError::Domain(
                "mesh needs at least one element per axis".into(),
            ));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(GeneoError::Domain("domain extents must be positive".into()));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Unit square with `n × n` elements.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    pub fn node_coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(node);
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    #[inline]
    pub fn element_index(&self, ex: usize, ey: usize) -> usize {
        ey * self.nx + ex
    }

    #[inline]
    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    pub fn element_center(&self, e: usize) -> (f64, f64) {
        let (ex, ey) = self.element_ij(e);
        ((ex as f64 + 0.5) * self.hx(), (ey as f64 + 0.5) * self.hy())
    }

    /// Corner nodes counterclockwise from the lower-left corner.
    #[inline]
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (ex, ey) = self.element_ij(e);
        [
            self.node_index(ex, ey),
            self.node_index(ex + 1, ey),
            self.node_index(ex + 1, ey + 1),
            self.node_index(ex, ey + 1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// Scalar diffusion, one dof per node.
    Darcy,
    /// Plane-strain linear elasticity, two dofs per node.
    Elasticity,
}

impl ProblemKind {
    pub fn components(self) -> usize {
        match self {
            ProblemKind::Darcy => 1,
            ProblemKind::Elasticity => 2,
        }
    }
}

/// Interleaved numbering: `dof = node·components + component`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofMap {
    kind: ProblemKind,
    num_nodes: usize,
}

impl DofMap {
    pub fn new(mesh: &StructuredMesh, kind: ProblemKind) -> Self {
        Self {
            kind,
            num_nodes: mesh.num_nodes(),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn components(&self) -> usize {
        self.kind.components()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_nodes * self.components()
    }

    #[inline]
    pub fn dof(&self, node: usize, component: usize) -> usize {
        debug_assert!(component < self.components());
        node * self.components() + component
    }

    #[inline]
    pub fn node_of(&self, dof: usize) -> (usize, usize) {
        (dof / self.components(), dof % self.components())
    }

    pub fn element_dofs(&self, mesh: &StructuredMesh, e: usize) -> Vec<usize> {
        let c = self.components();
        mesh.element_nodes(e)
            .iter()
            .flat_map(|&n| (0..c).map(move |k| n * c + k))
            .collect()
    }
}
