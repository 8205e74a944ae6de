use rayon::prelude::*;

use crate::decomposition::Decomposition;
use crate::error::{GeneoError, Result};
use crate::geneo::CoarseSpace;
use crate::linalg::{factorize, Factorization, SparseMatrixCsr};

/// Anything that applies `z = M⁻¹ r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>>;
}

/// `M⁻¹ = I`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(r.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchwarzLevel {
    OneLevel,
    TwoLevel,
    CoarseOnly,
}

#[derive(Debug, Clone)]
struct LocalSolver {
    dofs: Vec<usize>,
    factor: Factorization,
}

/// Additive Schwarz `Σ_j R_jᵀ A_j⁻¹ R_j` with an optional coarse term
/// `R_Hᵀ A_H⁻¹ R_H`. Local matrices are `A_j = R_j A R_jᵀ` over the dofs of
/// Ω_j off its artificial boundary (homogeneous Dirichlet there).
#[derive(Debug, Clone)]
pub struct SchwarzPreconditioner {
    level: SchwarzLevel,
    n: usize,
    locals: Vec<LocalSolver>,
    coarse: Option<CoarseSpace>,
}

impl SchwarzPreconditioner {
    pub fn new(
        a: &SparseMatrixCsr,
        decomp: &Decomposition,
        level: SchwarzLevel,
        coarse: Option<CoarseSpace>,
    ) -> Result<Self> {
        if level != SchwarzLevel::OneLevel && coarse.is_none() {
            return Err(GeneoError::Lifecycle(format!(
                "{level:?} preconditioner needs a coarse space"
            )));
        }
        let locals = if level == SchwarzLevel::CoarseOnly {
            Vec::new()
        } else {
            decomp
                .subdomains
                .par_iter()
                .map(|s| {
                    let dofs: Vec<usize> =
                        s.interior_dofs().into_iter().map(|l| s.dofs[l]).collect();
                    let local = a.principal_submatrix(&dofs);
                    factorize(&local, 0.0)
                        .map(|factor| LocalSolver { dofs, factor })
                        .map_err(|e| e.in_subdomain(s.id))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            level,
            n: a.dim(),
            locals,
            coarse,
        })
    }

    pub fn one_level(a: &SparseMatrixCsr, decomp: &Decomposition) -> Result<Self> {
        Self::new(a, decomp, SchwarzLevel::OneLevel, None)
    }

    pub fn two_level(
        a: &SparseMatrixCsr,
        decomp: &Decomposition,
        coarse: CoarseSpace,
    ) -> Result<Self> {
        Self::new(a, decomp, SchwarzLevel::TwoLevel, Some(coarse))
    }

    pub fn level(&self) -> SchwarzLevel {
        self.level
    }

    pub fn coarse(&self) -> Option<&CoarseSpace> {
        self.coarse.as_ref()
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.as_ref().map_or(0, CoarseSpace::dim)
    }
}

impl Preconditioner for SchwarzPreconditioner {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.n {
            return Err(GeneoError::Shape {
                expected: self.n,
                got: r.len(),
            });
        }
        let local: Vec<Vec<f64>> = self
            .locals
            .par_iter()
            .map(|l| {
                let rl: Vec<f64> = l.dofs.iter().map(|&g| r[g]).collect();
                l.factor.solve(&rl)
            })
            .collect();
        let mut z = vec![0.0; self.n];
        for (l, zl) in self.locals.iter().zip(&local) {
            for (&g, &v) in l.dofs.iter().zip(zl) {
                z[g] += v;
            }
        }
        if let Some(c) = &self.coarse {
            if self.level != SchwarzLevel::OneLevel {
                let zc = c.apply(r)?;
                z.iter_mut().zip(&zc).for_each(|(a, b)| *a += b);
            }
        }
        Ok(z)
    }
}

/// Free-function form of [`Preconditioner::apply`].
pub fn apply_preconditioner<M: Preconditioner + ?Sized>(m: &M, r: &[f64]) -> Result<Vec<f64>> {
    m.apply(r)
}
