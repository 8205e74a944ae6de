use super::{Decomposition, Subdomain};
use crate::error::{GeneoError, Result};
use crate::fem::FemProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PouKind {
    /// `1/multiplicity`, piecewise constant.
    Standard,
    /// Proportional to the distance from the artificial boundary.
    Sarkis,
}

/// Diagonal weights `X_j` per subdomain, over local dofs.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub kind: PouKind,
    pub weights: Vec<Vec<f64>>,
}

impl PartitionOfUnity {
    pub fn build(decomp: &Decomposition, problem: &FemProblem, kind: PouKind) -> Result<Self> {
        match kind {
            PouKind::Standard => standard_pou(decomp, problem),
            PouKind::Sarkis => sarkis_pou(decomp, problem),
        }
    }

    /// `Σ_j μ_{j,k}` per global dof.
    pub fn sum(&self, decomp: &Decomposition) -> Vec<f64> {
        let mut s = vec![0.0; decomp.num_dofs()];
        for (sub, w) in decomp.subdomains.iter().zip(&self.weights) {
            for (&g, &mu) in sub.dofs.iter().zip(w) {
                s[g] += mu;
            }
        }
        s
    }
}

/// `μ_{j,k} = 1/multiplicity(k)`, zeroed on Dirichlet and artificial
/// boundary dofs, then renormalized across subdomains.
pub fn standard_pou(decomp: &Decomposition, _problem: &FemProblem) -> Result<PartitionOfUnity> {
    normalized(decomp, PouKind::Standard, |s, l| {
        1.0 / decomp.multiplicity[s.dofs[l]] as f64
    })
}

/// Weights proportional to the discrete distance (in element layers) from
/// the artificial boundary of each subdomain.
pub fn sarkis_pou(decomp: &Decomposition, problem: &FemProblem) -> Result<PartitionOfUnity> {
    let mesh = &problem.mesh;
    normalized(decomp, PouKind::Sarkis, |s, l| {
        let node = problem.dofs.node_of(s.dofs[l]).0;
        let (i, j) = mesh.node_ij(node);
        let e = &s.extent;
        let mut dist = usize::MAX;
        if e.x0 > 0 {
            dist = dist.min(i - e.x0);
        }
        if e.x1 < mesh.nx {
            dist = dist.min(e.x1 - i);
        }
        if e.y0 > 0 {
            dist = dist.min(j - e.y0);
        }
        if e.y1 < mesh.ny {
            dist = dist.min(e.y1 - j);
        }
        if dist == usize::MAX {
            1.0
        } else {
            dist as f64
        }
    })
}

fn normalized<F>(decomp: &Decomposition, kind: PouKind, raw: F) -> Result<PartitionOfUnity>
where
    F: Fn(&Subdomain, usize) -> f64,
{
    let local: Vec<Vec<f64>> = decomp
        .subdomains
        .iter()
        .map(|s| {
            (0..s.num_dofs())
                .map(|l| {
                    if s.artificial[l] || decomp.constrained[s.dofs[l]] {
                        0.0
                    } else {
                        raw(s, l)
                    }
                })
                .collect()
        })
        .collect();
    // One exchange gives every subdomain the total weight at its dofs.
    let totals = decomp.exchange_sum(|s| local[s.id].clone());
    let mut weights = Vec::with_capacity(decomp.len());
    for (s, (w, tot)) in decomp.subdomains.iter().zip(local.iter().zip(&totals)) {
        let mut mu = Vec::with_capacity(w.len());
        for l in 0..w.len() {
            let g = s.dofs[l];
            if decomp.constrained[g] {
                mu.push(0.0);
            } else if tot[l] > 0.0 {
                mu.push(w[l] / tot[l]);
            } else {
                return Err(GeneoError::PouCoverage(g));
            }
        }
        weights.push(mu);
    }
    Ok(PartitionOfUnity { kind, weights })
}
