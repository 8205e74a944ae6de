use std::fmt;
use std::sync::Arc;

use super::{DofMap, StructuredMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    fn index(self) -> usize {
        match self {
            Side::Bottom => 0,
            Side::Right => 1,
            Side::Top => 2,
            Side::Left => 3,
        }
    }
}

pub type BoundaryFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub enum SideCondition {
    /// Prescribed flux (Darcy, first component) or traction.
    Neumann([f64; 2]),
    Dirichlet([f64; 2]),
    /// Dirichlet data evaluated at node coordinates.
    DirichletFn(BoundaryFn),
}

impl fmt::Debug for SideCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideCondition::Neumann(g) => write!(f, "Neumann({g:?})"),
            SideCondition::Dirichlet(v) => write!(f, "Dirichlet({v:?})"),
            SideCondition::DirichletFn(_) => write!(f, "DirichletFn(..)"),
        }
    }
}

impl SideCondition {
    pub fn is_dirichlet(&self) -> bool {
        !matches!(self, SideCondition::Neumann(_))
    }
}

/// One condition per side of the rectangle. Nodes on a corner shared by a
/// Dirichlet and a Neumann side are Dirichlet.
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    sides: [SideCondition; 4],
}

impl Default for BoundaryCondition {
    fn default() -> Self {
        Self {
            sides: std::array::from_fn(|_| SideCondition::Neumann([0.0; 2])),
        }
    }
}

impl BoundaryCondition {
    /// Homogeneous Neumann on every side.
    pub fn neumann() -> Self {
        Self::default()
    }

    pub fn all_dirichlet(value: f64) -> Self {
        Self {
            sides: std::array::from_fn(|_| SideCondition::Dirichlet([value; 2])),
        }
    }

    /// Dirichlet `top` on the top side, `bottom` on the bottom side,
    /// homogeneous Neumann elsewhere.
    pub fn top_bottom(top: f64, bottom: f64) -> Self {
        Self::default()
            .with(Side::Top, SideCondition::Dirichlet([top; 2]))
            .with(Side::Bottom, SideCondition::Dirichlet([bottom; 2]))
    }

    pub fn with(mut self, side: Side, cond: SideCondition) -> Self {
        self.sides[side.index()] = cond;
        self
    }

    pub fn side(&self, side: Side) -> &SideCondition {
        &self.sides[side.index()]
    }

    pub fn has_dirichlet(&self) -> bool {
        self.sides.iter().any(SideCondition::is_dirichlet)
    }

    /// Dirichlet value per dof (`None` for free dofs).
    pub fn constrained_values(&self, mesh: &StructuredMesh, dofs: &DofMap) -> Vec<Option<f64>> {
        let mut out = vec![None; dofs.num_dofs()];
        for node in 0..mesh.num_nodes() {
            if let Some(v) = self.node_value(mesh, node) {
                for c in 0..dofs.components() {
                    out[dofs.dof(node, c)] = Some(v[c]);
                }
            }
        }
        out
    }

    fn node_value(&self, mesh: &StructuredMesh, node: usize) -> Option<[f64; 2]> {
        let (i, j) = mesh.node_ij(node);
        let (x, y) = mesh.node_coords(node);
        Side::ALL
            .iter()
            .filter(|s| on_side(mesh, i, j, **s))
            .find_map(|s| match self.side(*s) {
                SideCondition::Dirichlet(v) => Some(*v),
                SideCondition::DirichletFn(f) => Some(f(x, y)),
                SideCondition::Neumann(_) => None,
            })
    }
}

pub fn on_side(mesh: &StructuredMesh, i: usize, j: usize, side: Side) -> bool {
    match side {
        Side::Bottom => j == 0,
        Side::Top => j == mesh.ny,
        Side::Left => i == 0,
        Side::Right => i == mesh.nx,
    }
}
