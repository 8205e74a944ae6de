//! Structured-grid Q1 discretization of scalar diffusion (Darcy) and
//! plane-strain linear elasticity with piecewise-constant coefficients.

mod assembly;
mod boundary;
mod coefficients;
pub mod element;
mod mesh;

pub use assembly::{
    assemble_darcy, assemble_elasticity, assemble_local, eliminate, FemProblem, LocalSystem,
};
pub use boundary::{on_side, BoundaryCondition, BoundaryFn, Side, SideCondition};
pub use coefficients::{CoefficientField, ElasticField, FieldKind, Material, Rect};
pub use mesh::{DofMap, ProblemKind, StructuredMesh};
