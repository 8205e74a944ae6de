use rayon::prelude::*;

use super::pencil::{assemble_geneo_pencil, GeneoPencil};
use crate::decomposition::{Decomposition, PartitionOfUnity};
use crate::error::{GeneoError, Result};
use crate::fem::FemProblem;
use crate::linalg::{
    dense_generalized_eig, norm2, normalize_sign, shift_invert_lanczos, EigenPairs, LanczosOptions,
};

/// How many eigenvectors each subdomain contributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    /// Smallest `m` with `λ_{m+1} > τ·δ_j/H_j`.
    Threshold { tau: f64 },
    /// The same count everywhere.
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub enum EigenSolverKind {
    ShiftInvertLanczos(LanczosOptions),
    /// Dense reference solver; only sensible for small subdomains.
    Dense,
}

#[derive(Debug, Clone)]
pub struct GeneoOptions {
    pub selection: Selection,
    pub eigensolver: EigenSolverKind,
    /// Pairs requested up front in threshold mode.
    pub initial_request: usize,
    /// Cap for the doubling retries when the threshold is not crossed.
    pub max_request: usize,
}

impl Default for GeneoOptions {
    fn default() -> Self {
        Self {
            selection: Selection::Threshold { tau: 1.0 },
            eigensolver: EigenSolverKind::ShiftInvertLanczos(LanczosOptions::default()),
            initial_request: 8,
            max_request: 64,
        }
    }
}

/// Result of [`select_mj`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MjChoice {
    pub m: usize,
    /// No computed eigenvalue exceeded the threshold.
    pub saturated: bool,
}

/// Threshold rule on an ascending eigenvalue list.
pub fn select_mj(eigenvalues: &[f64], delta: f64, diameter: f64, tau: f64) -> Result<MjChoice> {
    if eigenvalues.is_empty() {
        return Err(GeneoError::Domain("empty eigenvalue list".into()));
    }
    if !(delta > 0.0 && diameter > 0.0 && tau > 0.0) {
        return Err(GeneoError::Domain("δ, H and τ must be positive".into()));
    }
    let threshold = tau * delta / diameter;
    Ok(match eigenvalues.iter().position(|&l| l > threshold) {
        Some(m) => MjChoice {
            m,
            saturated: false,
        },
        None => MjChoice {
            m: eigenvalues.len(),
            saturated: true,
        },
    })
}

/// Coarse basis contribution of one subdomain.
#[derive(Debug, Clone, Default)]
pub struct SubdomainBasis {
    /// `X_j p_k`, l²-normalized, over the subdomain's local dofs.
    pub vectors: Vec<Vec<f64>>,
    /// All computed eigenvalues, ascending (includes `λ_{m_j+1}` when it
    /// was computed).
    pub eigenvalues: Vec<f64>,
    pub m: usize,
    pub saturated: bool,
    /// Selected eigenvectors dropped because `X_j p` vanished.
    pub pruned: usize,
    /// Eigenpair index behind each entry of `vectors`.
    pub source: Vec<usize>,
}

impl SubdomainBasis {
    /// `λ_{m_j+1}`, if it was computed.
    pub fn next_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.get(self.m).copied()
    }
}

#[derive(Debug, Clone, Default)]
pub struct GeneoBasis {
    pub subdomains: Vec<SubdomainBasis>,
}

impl GeneoBasis {
    /// `dim(V_H)`.
    pub fn dim(&self) -> usize {
        self.subdomains.iter().map(|s| s.vectors.len()).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.subdomains.iter().map(|s| s.vectors.len()).collect()
    }

    /// The basis that keeps `m` eigenvectors per subdomain, taken from the
    /// already computed pairs. Bases for increasing `m` are nested exactly.
    pub fn truncated(&self, m: usize) -> Result<GeneoBasis> {
        let subdomains = self
            .subdomains
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if m > s.m {
                    return Err(GeneoError::InsufficientData(format!(
                        "subdomain {j} kept {} eigenvectors, {m} requested",
                        s.m
                    )));
                }
                let keep: Vec<usize> = (0..s.source.len()).filter(|&i| s.source[i] < m).collect();
                Ok(SubdomainBasis {
                    vectors: keep.iter().map(|&i| s.vectors[i].clone()).collect(),
                    eigenvalues: s.eigenvalues.clone(),
                    m,
                    saturated: false,
                    pruned: m - keep.len(),
                    source: keep.iter().map(|&i| s.source[i]).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GeneoBasis { subdomains })
    }
}

/// Smallest `count` finite eigenpairs of a pencil.
pub fn solve_pencil(
    pencil: &GeneoPencil,
    count: usize,
    solver: &EigenSolverKind,
) -> Result<EigenPairs> {
    let available = pencil.rank_bound();
    let count = count.min(available);
    if count == 0 {
        return Ok(EigenPairs {
            infinite_count: pencil.a.dim(),
            ..Default::default()
        });
    }
    match solver {
        EigenSolverKind::ShiftInvertLanczos(opts) => {
            shift_invert_lanczos(&pencil.a, &pencil.b, None, count, opts).map(|r| r.pairs)
        }
        EigenSolverKind::Dense => {
            let mut all = dense_generalized_eig(&pencil.a.to_dense(), &pencil.b.to_dense())?;
            all.values.truncate(count);
            all.vectors.truncate(count);
            Ok(all)
        }
    }
}

/// Solves every subdomain's eigenproblem, applies the selection rule and
/// stitches the kept eigenvectors with the partition of unity.
pub fn build_geneo_basis(
    problem: &FemProblem,
    decomp: &Decomposition,
    pou: &PartitionOfUnity,
    options: &GeneoOptions,
) -> Result<GeneoBasis> {
    let subdomains = (0..decomp.len())
        .into_par_iter()
        .map(|j| subdomain_basis(problem, decomp, pou, options, j).map_err(|e| e.in_subdomain(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneoBasis { subdomains })
}

fn subdomain_basis(
    problem: &FemProblem,
    decomp: &Decomposition,
    pou: &PartitionOfUnity,
    options: &GeneoOptions,
    j: usize,
) -> Result<SubdomainBasis> {
    let pencil = assemble_geneo_pencil(problem, decomp, pou, j)?;
    let s = &decomp.subdomains[j];
    let available = pencil.rank_bound();

    let (pairs, m, saturated) = match options.selection {
        Selection::Fixed(k) => {
            let pairs = solve_pencil(&pencil, k + 1, &options.eigensolver)?;
            let m = k.min(pairs.len());
            (pairs, m, false)
        }
        Selection::Threshold { tau } => {
            let mut request = options.initial_request.max(1);
            loop {
                let pairs = solve_pencil(&pencil, request, &options.eigensolver)?;
                if pairs.is_empty() {
                    break (pairs, 0, false);
                }
                let choice = select_mj(&pairs.values, s.overlap_width, s.diameter, tau)?;
                let can_grow = request < options.max_request && pairs.len() < available;
                if !choice.saturated || !can_grow {
                    if choice.saturated {
                        log::warn!(
                            "subdomain {j}: all {} computed eigenvalues below threshold",
                            pairs.len()
                        );
                    }
                    break (pairs, choice.m, choice.saturated);
                }
                request = (2 * request).min(options.max_request);
            }
        }
    };

    let mut vectors = Vec::with_capacity(m);
    let mut source = Vec::with_capacity(m);
    let mut pruned = 0;
    for (k, p) in pairs.vectors.iter().take(m).enumerate() {
        let mut v: Vec<f64> = p.iter().zip(&pou.weights[j]).map(|(a, b)| a * b).collect();
        let norm = norm2(&v);
        if norm <= 1e-14 * norm2(p) {
            log::warn!("subdomain {j}: eigenvector annihilated by the partition of unity, pruned");
            pruned += 1;
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        normalize_sign(&mut v);
        vectors.push(v);
        source.push(k);
    }
    Ok(SubdomainBasis {
        vectors,
        eigenvalues: pairs.values,
        m,
        saturated,
        pruned,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_rule() {
        let c = select_mj(&[0.001, 0.002, 0.5], 0.25, 1.0, 1.0).unwrap();
        assert_eq!(
            c,
            MjChoice {
                m: 2,
                saturated: false
            }
        );
        let c = select_mj(&[0.3, 0.4], 0.25, 1.0, 1.0).unwrap();
        assert_eq!(c.m, 0);
        let c = select_mj(&[0.01, 0.02], 0.25, 1.0, 1.0).unwrap();
        assert_eq!(
            c,
            MjChoice {
                m: 2,
                saturated: true
            }
        );
        // Scaling τ moves the cut.
        let c = select_mj(&[0.001, 0.002, 0.5], 0.25, 1.0, 4.0).unwrap();
        assert_eq!(c.m, 3);
    }

    #[test]
    fn threshold_rule_rejects_bad_input() {
        assert!(select_mj(&[], 0.1, 1.0, 1.0).is_err());
        assert!(select_mj(&[1.0], 0.0, 1.0, 1.0).is_err());
    }
}
