//! Sparse and dense linear algebra: CSR storage, `LDLᵀ` factorization,
//! generalized symmetric eigensolvers and CG-based spectrum estimates.

mod csr;
mod dense_eig;
mod lanczos;
mod ldlt;
pub mod matrix_market;
mod ordering;
mod ritz;

pub use csr::{SparseMatrixCsr, TripletBuilder};
pub use dense_eig::dense_generalized_eig;
pub use lanczos::{default_shift, shift_invert_lanczos, LanczosOptions, ShiftInvertResult};
pub use ldlt::{factorize, Factorization, PivotPolicy};
pub use ordering::reverse_cuthill_mckee;
pub use ritz::estimate_extreme_ritz;

use nalgebra::DMatrix;

/// Generalized eigenpairs `A p = λ B p`, eigenvalues ascending and vectors
/// B-orthonormal.
#[derive(Debug, Clone, Default)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Directions in `null(B)` outside `null(A)`, excluded from `values`.
    pub infinite_count: usize,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest relative residual `‖A p − λ B p‖ / (‖A‖_F + |λ| ‖B‖_F)`.
    pub fn max_relative_residual(&self, a: &SparseMatrixCsr, b: &SparseMatrixCsr) -> f64 {
        let (na, nb) = (a.frobenius_norm(), b.frobenius_norm());
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&lam, p)| {
                let ap = a.mul_vec(p);
                let bp = b.mul_vec(p);
                let r: f64 = ap
                    .iter()
                    .zip(&bp)
                    .map(|(x, y)| (x - lam * y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                r / (na + lam.abs() * nb)
            })
            .fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Flips `v` so that its entry of largest magnitude is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Computes `sqrt(vᵀ A v)`, rejecting a clearly negative quadratic form.
pub fn energy_norm(a: &SparseMatrixCsr, v: &[f64]) -> crate::Result<f64> {
    if a.dim() != v.len() {
        return Err(crate::GeneoError::Shape {
            expected: a.dim(),
            got: v.len(),
        });
    }
    let q = a.quad_form(v);
    let tol = 1e-12 * a.frobenius_norm() * dot(v, v);
    if q < -tol {
        return Err(crate::GeneoError::NotPositiveDefinite(format!(
            "vᵀAv = {q:e}"
        )));
    }
    Ok(q.max(0.0).sqrt())
}

pub(crate) fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_norm_of_zero_and_identity() {
        let i = SparseMatrixCsr::identity(3);
        assert_eq!(energy_norm(&i, &[0.0; 3]).unwrap(), 0.0);
        assert!((energy_norm(&i, &[3.0, 0.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn energy_norm_rejects_negative_form() {
        let a = SparseMatrixCsr::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(
            energy_norm(&a, &[0.0, 1.0]),
            Err(crate::GeneoError::NotPositiveDefinite(_))
        ));
        assert!(energy_norm(&a, &[1.0]).is_err());
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        normalize_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
    }
}
