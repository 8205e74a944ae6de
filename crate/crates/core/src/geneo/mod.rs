//! GenEO coarse space: per-subdomain generalized eigenproblems in the
//! overlaps, eigenvector selection, partition-of-unity stitching and the
//! coarse operator.

mod basis;
mod coarse;
mod pencil;

pub use basis::{
    build_geneo_basis, select_mj, solve_pencil, EigenSolverKind, GeneoBasis, GeneoOptions,
    MjChoice, Selection, SubdomainBasis,
};
pub use coarse::{assemble_coarse, CoarseFunction, CoarseSpace, ExchangeStats};
pub use pencil::{assemble_geneo_pencil, GeneoPencil};

use std::io::Write;

use crate::decomposition::Decomposition;
use crate::error::Result;
use crate::fem::FemProblem;

/// `v_H = R_H v_h`
pub fn coarse_restrict(coarse: &CoarseSpace, v_h: &[f64]) -> Result<Vec<f64>> {
    coarse.restrict(v_h)
}

/// `v_h = R_Hᵀ v_H`
pub fn coarse_prolong(coarse: &CoarseSpace, v_coarse: &[f64]) -> Result<Vec<f64>> {
    coarse.prolong(v_coarse)
}

/// CSV rows `subdomain,index,dof,x,y,value` for every stored basis vector.
pub fn write_basis_csv<W: Write>(
    problem: &FemProblem,
    decomp: &Decomposition,
    basis: &GeneoBasis,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "subdomain,index,dof,x,y,value")?;
    for (s, b) in decomp.subdomains.iter().zip(&basis.subdomains) {
        for (k, v) in b.vectors.iter().enumerate() {
            for (&g, &x) in s.dofs.iter().zip(v) {
                let (cx, cy) = problem.dof_coords(g);
                writeln!(out, "{},{k},{g},{cx},{cy},{x}", s.id)?;
            }
        }
    }
    Ok(())
}
