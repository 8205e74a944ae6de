use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{GeneoError, Result};

/// Extreme eigenvalues of the Lanczos tridiagonal matrix implied by CG step
/// lengths `α_k` and direction updates `β_k`:
///
/// ```text
/// T[k][k]   = 1/α_k + β_{k-1}/α_{k-1}
/// T[k][k+1] = sqrt(β_k)/α_k
/// ```
///
/// The `β` of the final pair is not used.
pub fn estimate_extreme_ritz(coefficients: &[(f64, f64)]) -> Result<(f64, f64)> {
    let k = coefficients.len();
    if k < 2 {
        return Err(GeneoError::InsufficientData(format!(
            "need at least 2 CG iterations for a Ritz estimate, got {k}"
        )));
    }
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let (alpha, _) = coefficients[i];
        let mut diag = 1.0 / alpha;
        if i > 0 {
            let (alpha_prev, beta_prev) = coefficients[i - 1];
            diag += beta_prev / alpha_prev;
            let off = beta_prev.max(0.0).sqrt() / alpha_prev;
            t[(i, i - 1)] = off;
            t[(i - 1, i)] = off;
        }
        t[(i, i)] = diag;
    }
    let eig = SymmetricEigen::new(t);
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    Ok((lo, hi))
}
