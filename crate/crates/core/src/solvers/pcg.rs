use std::time::Instant;

use super::Preconditioner;
use crate::error::{GeneoError, Result};
use crate::linalg::{axpy, dot, estimate_extreme_ritz, SparseMatrixCsr};

/// Iterations below which the Ritz-based condition estimate is reported as
/// a lower bound only.
pub const MIN_ITERATIONS_FOR_KAPPA: usize = 10;

#[derive(Debug, Clone, Default)]
pub struct PhaseTimings {
    pub eigen_s: f64,
    pub coarse_assembly_s: f64,
    pub setup_s: f64,
    pub cg_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// `sqrt(rᵀ M⁻¹ r)` relative to its initial value, one entry per
    /// iteration plus the initial 1.
    pub residual_history: Vec<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub kappa_estimate: Option<f64>,
    /// Fewer than [`MIN_ITERATIONS_FOR_KAPPA`] iterations were available.
    pub kappa_is_lower_bound: bool,
    pub dim_coarse: usize,
    pub timings: PhaseTimings,
}

/// Preconditioned conjugate gradients from a zero initial guess. Stops when
/// the preconditioned residual norm has dropped by `tol`.
pub fn pcg<M: Preconditioner + ?Sized>(
    a: &SparseMatrixCsr,
    b: &[f64],
    m: &M,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = a.dim();
    if b.len() != n {
        return Err(GeneoError::Shape {
            expected: n,
            got: b.len(),
        });
    }
    let mut report = SolveReport::default();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = m.apply(&r)?;
    let mut rz = dot(&r, &z);
    if rz < 0.0 {
        return Err(GeneoError::NotPositiveDefinite(
            "preconditioner produced rᵀM⁻¹r < 0".into(),
        ));
    }
    let initial = rz.sqrt();
    report.residual_history.push(1.0);
    if initial == 0.0 {
        report.converged = true;
        report.timings.cg_s = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }

    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut coeffs: Vec<(f64, f64)> = Vec::new();
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(GeneoError::NotPositiveDefinite(format!(
                "pᵀAp = {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        z = m.apply(&r)?;
        let rz_new = dot(&r, &z);
        let rel = rz_new.max(0.0).sqrt() / initial;
        report.residual_history.push(rel);
        report.iterations = it;
        let beta = rz_new / rz;
        coeffs.push((alpha, beta));
        if rel <= tol {
            report.converged = true;
            break;
        }
        p.iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
        rz = rz_new;
    }

    if coeffs.len() >= 2 {
        let (lo, hi) = estimate_extreme_ritz(&coeffs)?;
        report.lambda_min = Some(lo);
        report.lambda_max = Some(hi);
        report.kappa_estimate = Some(hi / lo);
    }
    report.kappa_is_lower_bound = report.iterations < MIN_ITERATIONS_FOR_KAPPA;
    report.timings.cg_s = start.elapsed().as_secs_f64();
    Ok((x, report))
}
