//! Overlapping Schwarz domain decomposition with a GenEO spectral coarse
//! space for scalar diffusion and plane-strain elasticity on structured
//! Q1 meshes.
//!
//! The usual pipeline is
//! [`fem::FemProblem`] → [`decomposition::build_decomposition`] →
//! [`decomposition::PartitionOfUnity`] → [`geneo::build_geneo_basis`] →
//! [`geneo::assemble_coarse`] → [`solvers::SchwarzPreconditioner`] →
//! [`solvers::pcg`].

pub mod decomposition;
pub mod error;
pub mod fem;
pub mod geneo;
pub mod linalg;
pub mod solvers;

pub use error::{GeneoError, Result};
