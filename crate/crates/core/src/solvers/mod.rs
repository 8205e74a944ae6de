//! Schwarz preconditioners, PCG, the coarse-only (multiscale) solve and the
//! a-priori bounds that go with them.

mod pcg;
mod schwarz;

pub use pcg::{pcg, PhaseTimings, SolveReport, MIN_ITERATIONS_FOR_KAPPA};
pub use schwarz::{
    apply_preconditioner, IdentityPreconditioner, Preconditioner, SchwarzLevel,
    SchwarzPreconditioner,
};

use crate::error::{GeneoError, Result};
use crate::geneo::CoarseSpace;
use crate::linalg::{energy_norm, SparseMatrixCsr};

/// Single Galerkin solve in the coarse space, `R_Hᵀ A_H⁻¹ R_H b`.
pub fn coarse_solve(coarse: &CoarseSpace, b: &[f64]) -> Result<Vec<f64>> {
    coarse.apply(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `‖v − v_H‖_a`
    pub error: f64,
    /// `|v|_a`
    pub seminorm: f64,
    /// `k₀ (1 + 1/min_j λ_{m_j+1})^{1/2} |v|_a`
    pub bound: f64,
    pub ratio: f64,
    pub violated: bool,
}

impl BoundReport {
    pub fn relative_error(&self) -> f64 {
        if self.seminorm == 0.0 {
            0.0
        } else {
            self.error / self.seminorm
        }
    }
}

/// Checks the coarse approximation estimate for `v_H = coarse_solve(A v)`.
///
/// `exact` is the solution restricted to free dofs (zero on Dirichlet dofs)
/// and `next_eigenvalues` holds `λ_{m_j+1}` for every subdomain.
pub fn check_error_bound(
    coarse: &CoarseSpace,
    a: &SparseMatrixCsr,
    exact: &[f64],
    coverage: usize,
    next_eigenvalues: &[Option<f64>],
) -> Result<BoundReport> {
    let lambda_min = next_eigenvalues
        .iter()
        .map(|l| {
            l.ok_or_else(|| {
                GeneoError::InsufficientData("λ_{m_j+1} missing for a subdomain".into())
            })
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !(lambda_min > 0.0) {
        return Err(GeneoError::InsufficientData(format!(
            "min λ_(m_j+1) = {lambda_min:e} is not positive"
        )));
    }
    let rhs = a.mul_vec(exact);
    let approx = coarse_solve(coarse, &rhs)?;
    let diff: Vec<f64> = exact.iter().zip(&approx).map(|(u, v)| u - v).collect();
    let error = energy_norm(a, &diff)?;
    let seminorm = energy_norm(a, exact)?;
    let bound = coverage as f64 * (1.0 + 1.0 / lambda_min).sqrt() * seminorm;
    let ratio = if bound > 0.0 { error / bound } else { 0.0 };
    Ok(BoundReport {
        error,
        seminorm,
        bound,
        ratio,
        violated: ratio > 1.0,
    })
}

/// `(1 + k₀) [2 + k₀ (2k₀ + 1) max_j (1 + H_j/δ_j)]`
pub fn theoretical_condition_bound(coverage: usize, diameters: &[f64], widths: &[f64]) -> f64 {
    let k0 = coverage as f64;
    let worst = diameters
        .iter()
        .zip(widths)
        .map(|(h, d)| 1.0 + h / d)
        .fold(0.0, f64::max);
    (1.0 + k0) * (2.0 + k0 * (2.0 * k0 + 1.0) * worst)
}
