//! Dense generalized symmetric eigensolver for PSD pencils. Serves as the
//! reference for the sparse shift-and-invert solver.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use super::{max_asymmetry, normalize_sign, EigenPairs};
use crate::error::{GeneoError, Result};

/// Eigenpairs of `A p = λ B p` with `A`, `B` symmetric PSD.
///
/// The pencil is shifted to `C = A + sB` (SPD when `null(A) ∩ null(B) = {0}`)
/// and the reversed problem `B x = μ C x` is solved through the Cholesky
/// factor of `C`; finite eigenvalues are `λ = 1/μ − s`. Directions with
/// `μ` below `1e-12·max μ` have vanishing B-seminorm and are counted as
/// infinite.
pub fn dense_generalized_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(GeneoError::Shape {
            expected: n,
            got: b.nrows(),
        });
    }
    let asym = max_asymmetry(a).max(max_asymmetry(b));
    if asym > 1e-12 {
        return Err(GeneoError::Symmetry(asym));
    }
    let nb = b.norm();
    if nb == 0.0 {
        return Ok(EigenPairs {
            infinite_count: n,
            ..Default::default()
        });
    }
    let na = a.norm();
    let s = if na > 0.0 { na / nb } else { 1.0 };
    let c = a + b * s;
    let chol = Cholesky::new(c).ok_or_else(|| {
        GeneoError::Singular("A + sB is not positive definite; pencil is singular".into())
    })?;
    let l = chol.l();
    // M = L⁻¹ B L⁻ᵀ
    let linv_b = l
        .solve_lower_triangular(b)
        .expect("Cholesky factor has a nonzero diagonal");
    let m = l
        .solve_lower_triangular(&linv_b.transpose())
        .expect("Cholesky factor has a nonzero diagonal");
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);

    let mu_max = eig.eigenvalues.amax();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let lt = l.transpose();
    let mut out = EigenPairs::default();
    for &i in &order {
        let mu = eig.eigenvalues[i];
        if mu <= 1e-12 * mu_max {
            out.infinite_count += 1;
            continue;
        }
        let y = eig.eigenvectors.column(i).into_owned();
        // x is C-orthonormal, so xᵀBx = μ.
        let x = lt
            .solve_upper_triangular(&y)
            .expect("Cholesky factor has a nonzero diagonal");
        let mut v: Vec<f64> = x.iter().map(|xi| xi / mu.sqrt()).collect();
        normalize_sign(&mut v);
        out.values.push(1.0 / mu - s);
        out.vectors.push(v);
    }
    Ok(out)
}
