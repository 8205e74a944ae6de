use crate::decomposition::{Decomposition, PartitionOfUnity};
use crate::error::{GeneoError, Result};
use crate::fem::FemProblem;
use crate::linalg::SparseMatrixCsr;

/// Local eigenproblem `A_j p = λ X_j A_j^o X_j p` of one subdomain.
#[derive(Debug, Clone)]
pub struct GeneoPencil {
    /// Neumann matrix on Ω_j; only global Dirichlet dofs are eliminated.
    pub a: SparseMatrixCsr,
    /// `X_j A_j^o X_j` with `A_j^o` assembled on the overlap elements.
    pub b: SparseMatrixCsr,
}

impl GeneoPencil {
    /// Upper bound on the number of finite eigenvalues (nonzero rows of B).
    pub fn rank_bound(&self) -> usize {
        (0..self.b.dim())
            .filter(|&i| self.b.row(i).1.iter().any(|&v| v != 0.0))
            .count()
    }
}

pub fn assemble_geneo_pencil(
    problem: &FemProblem,
    decomp: &Decomposition,
    pou: &PartitionOfUnity,
    j: usize,
) -> Result<GeneoPencil> {
    let s = decomp
        .subdomains
        .get(j)
        .ok_or_else(|| GeneoError::Domain(format!("no subdomain {j}")))?;
    let a = problem.assemble_on(&s.elements, &s.dofs);
    let overlap = problem.assemble_on(&s.overlap_elements, &s.dofs);
    let b = overlap.diag_scaled(&pou.weights[j]);
    Ok(GeneoPencil { a, b })
}
