//! Coarse operator `A_H = R_H A R_Hᵀ` assembled the way a distributed
//! implementation would: each subdomain sends its basis once to every
//! neighbor, then computes its own rows `φ_iᵀ A φ_j` locally.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::basis::GeneoBasis;
use crate::decomposition::Decomposition;
use crate::error::{GeneoError, Result};
use crate::linalg::{dot, SparseMatrixCsr};

/// Traffic of the basis exchange.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExchangeStats {
    pub messages: usize,
    pub bytes: usize,
}

/// One coarse basis function: a subdomain and its local vector.
#[derive(Debug, Clone)]
pub struct CoarseFunction {
    pub subdomain: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CoarseSpace {
    /// Rows of `R_H`, grouped by subdomain.
    pub functions: Vec<CoarseFunction>,
    /// First coarse index of each subdomain.
    pub offsets: Vec<usize>,
    pub a_h: DMatrix<f64>,
    pub exchange: ExchangeStats,
    factor: Option<Cholesky<f64, Dyn>>,
    n_fine: usize,
    dof_lists: Vec<Vec<usize>>,
}

impl CoarseSpace {
    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn fine_dim(&self) -> usize {
        self.n_fine
    }

    /// `(R_H v)_i = φ_i · v`
    pub fn restrict(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_fine {
            return Err(GeneoError::Shape {
                expected: self.n_fine,
                got: v.len(),
            });
        }
        Ok(self
            .functions
            .iter()
            .map(|f| {
                let dofs = &self.dof_lists[f.subdomain];
                dofs.iter().zip(&f.values).map(|(&g, &x)| x * v[g]).sum()
            })
            .collect())
    }

    /// `R_Hᵀ v_H = Σ_i φ_i (v_H)_i`
    pub fn prolong(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(GeneoError::Shape {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.n_fine];
        for (f, &c) in self.functions.iter().zip(v) {
            for (&g, &x) in self.dof_lists[f.subdomain].iter().zip(&f.values) {
                out[g] += c * x;
            }
        }
        Ok(out)
    }

    /// `A_H⁻¹ w`
    pub fn solve_coarse(&self, w: &[f64]) -> Result<Vec<f64>> {
        let factor = self
            .factor
            .as_ref()
            .ok_or_else(|| GeneoError::Lifecycle("coarse matrix not factorized".into()))?;
        Ok(factor
            .solve(&DVector::from_column_slice(w))
            .as_slice()
            .to_vec())
    }

    /// `R_Hᵀ A_H⁻¹ R_H b`
    pub fn apply(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.dim() == 0 {
            return Ok(vec![0.0; self.n_fine]);
        }
        let w = self.restrict(b)?;
        let y = self.solve_coarse(&w)?;
        self.prolong(&y)
    }

    /// Dense `R_H` (rows are prolonged basis functions); for testing.
    pub fn dense_restriction(&self) -> DMatrix<f64> {
        let mut r = DMatrix::zeros(self.dim(), self.n_fine);
        for (i, f) in self.functions.iter().enumerate() {
            for (&g, &x) in self.dof_lists[f.subdomain].iter().zip(&f.values) {
                r[(i, g)] = x;
            }
        }
        r
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let (ri, rj) = (self.offsets[i], self.offsets[j]);
        let (ni, nj) = (self.offsets[i + 1] - ri, self.offsets[j + 1] - rj);
        self.a_h.view((ri, rj), (ni, nj)).into_owned()
    }
}

/// Builds `A_H` blockwise from owner-computed rows.
///
/// `a` is the global (Dirichlet-eliminated) system matrix; each owner uses
/// only the rows of its own dofs.
pub fn assemble_coarse(
    a: &SparseMatrixCsr,
    decomp: &Decomposition,
    basis: &GeneoBasis,
) -> Result<CoarseSpace> {
    if basis.subdomains.len() != decomp.len() {
        return Err(GeneoError::Shape {
            expected: decomp.len(),
            got: basis.subdomains.len(),
        });
    }
    if a.dim() != decomp.num_dofs() {
        return Err(GeneoError::Shape {
            expected: decomp.num_dofs(),
            got: a.dim(),
        });
    }
    for (s, b) in decomp.subdomains.iter().zip(&basis.subdomains) {
        if let Some(v) = b.vectors.iter().find(|v| v.len() != s.num_dofs()) {
            return Err(GeneoError::Shape {
                expected: s.num_dofs(),
                got: v.len(),
            });
        }
    }

    // Phase 1: every subdomain sends its whole basis to each neighbor in a
    // single message.
    let mut exchange = ExchangeStats::default();
    let mut inbox: Vec<Vec<usize>> = vec![Vec::new(); decomp.len()];
    for s in &decomp.subdomains {
        let payload = basis.subdomains[s.id]
            .vectors
            .iter()
            .map(|v| v.len() * std::mem::size_of::<f64>())
            .sum::<usize>();
        for &n in &s.neighbors {
            inbox[n].push(s.id);
            exchange.messages += 1;
            exchange.bytes += payload;
        }
    }

    let mut offsets = Vec::with_capacity(decomp.len() + 1);
    offsets.push(0);
    for b in &basis.subdomains {
        offsets.push(offsets.last().unwrap() + b.vectors.len());
    }
    let dim = *offsets.last().unwrap();

    // Phase 2: owner i computes rows φ_iᵀ A φ_j for j in {i} ∪ inbox(i).
    let mut a_h = DMatrix::<f64>::zeros(dim, dim);
    for s in &decomp.subdomains {
        let mine = &basis.subdomains[s.id].vectors;
        if mine.is_empty() {
            continue;
        }
        let local_rows: Vec<(&[usize], &[f64])> = s.dofs.iter().map(|&g| a.row(g)).collect();
        let mut sources = vec![s.id];
        sources.extend(&inbox[s.id]);
        for &j in &sources {
            let other = &decomp.subdomains[j];
            for (b, phi_j) in basis.subdomains[j].vectors.iter().enumerate() {
                // (A φ_j) on Ω_i's dofs.
                let y: Vec<f64> = local_rows
                    .iter()
                    .map(|(cols, vals)| {
                        cols.iter()
                            .zip(*vals)
                            .filter_map(|(&c, &v)| other.local_index(c).map(|l| v * phi_j[l]))
                            .sum()
                    })
                    .collect();
                for (ai, phi_i) in mine.iter().enumerate() {
                    a_h[(offsets[s.id] + ai, offsets[j] + b)] = dot(phi_i, &y);
                }
            }
        }
    }

    let mut functions = Vec::with_capacity(dim);
    for (j, b) in basis.subdomains.iter().enumerate() {
        for v in &b.vectors {
            functions.push(CoarseFunction {
                subdomain: j,
                values: v.clone(),
            });
        }
    }

    let mut space = CoarseSpace {
        functions,
        offsets,
        a_h,
        exchange,
        factor: None,
        n_fine: a.dim(),
        dof_lists: decomp.subdomains.iter().map(|s| s.dofs.clone()).collect(),
    };
    space.prune_null_columns();
    space.factorize()?;
    Ok(space)
}

impl CoarseSpace {
    fn prune_null_columns(&mut self) {
        let scale = (0..self.dim())
            .map(|i| self.a_h[(i, i)].abs())
            .fold(0.0, f64::max);
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&i| self.a_h[(i, i)] > 1e-14 * scale)
            .collect();
        if keep.len() == self.dim() {
            return;
        }
        log::warn!(
            "pruning {} coarse basis functions with vanishing energy",
            self.dim() - keep.len()
        );
        let mut a_h = DMatrix::zeros(keep.len(), keep.len());
        for (r, &i) in keep.iter().enumerate() {
            for (c, &j) in keep.iter().enumerate() {
                a_h[(r, c)] = self.a_h[(i, j)];
            }
        }
        let mut offsets = vec![0usize; self.offsets.len()];
        for &i in &keep {
            offsets[self.functions[i].subdomain + 1] += 1;
        }
        for s in 1..offsets.len() {
            offsets[s] += offsets[s - 1];
        }
        self.functions = keep.iter().map(|&i| self.functions[i].clone()).collect();
        self.a_h = a_h;
        self.offsets = offsets;
    }

    fn factorize(&mut self) -> Result<()> {
        if self.dim() == 0 {
            self.factor = None;
            return Ok(());
        }
        let sym = (&self.a_h + self.a_h.transpose()) * 0.5;
        self.factor = Some(Cholesky::new(sym).ok_or_else(|| {
            GeneoError::NotPositiveDefinite("coarse matrix A_H failed Cholesky".into())
        })?);
        Ok(())
    }
}
