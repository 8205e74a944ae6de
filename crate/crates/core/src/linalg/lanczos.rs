//! Shift-and-invert Lanczos for the generalized problem `A p = λ B p` with
//! symmetric `A` and symmetric PSD `B`.
//!
//! The iteration runs on `OP = (A − σB)⁻¹ B`, which is self-adjoint in the
//! B-inner product. Eigenvalues of `OP` are `ν = 1/(λ − σ)`, so the pairs
//! closest to `σ` become the dominant ones. Every new Krylov vector is
//! B-orthogonalized twice against the whole basis and the basis is thick
//! restarted from the wanted Ritz vectors when it reaches `subspace` columns.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, normalize_sign, EigenPairs, Factorization, PivotPolicy, SparseMatrixCsr};
use crate::error::{GeneoError, Result};

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Relative residual tolerance on `OP y − ν y` in the B-norm.
    pub tol: f64,
    /// Krylov subspace size before a restart; `None` means `3m + 10`.
    pub subspace: Option<usize>,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            subspace: None,
            max_restarts: 200,
            seed: 0x6e0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShiftInvertResult {
    pub pairs: EigenPairs,
    /// Converged eigenvalues of `OP`, aligned with `pairs.values`.
    pub transformed: Vec<f64>,
    pub shift: f64,
    pub restarts: usize,
    pub operator_applications: usize,
}

/// `1e-8 · ‖A‖_F / ‖B‖_F`.
pub fn default_shift(a: &SparseMatrixCsr, b: &SparseMatrixCsr) -> f64 {
    let nb = b.frobenius_norm();
    if nb == 0.0 {
        0.0
    } else {
        1e-8 * a.frobenius_norm() / nb
    }
}

/// The `m` finite eigenpairs of `(A, B)` closest to `sigma`, ascending.
///
/// When `sigma` is `None` the default shift is used, with a single retry at
/// ten times the shift if `A − σB` hits a zero pivot.
pub fn shift_invert_lanczos(
    a: &SparseMatrixCsr,
    b: &SparseMatrixCsr,
    sigma: Option<f64>,
    m: usize,
    opts: &LanczosOptions,
) -> Result<ShiftInvertResult> {
    let n = a.dim();
    if b.dim() != n {
        return Err(GeneoError::Shape {
            expected: n,
            got: b.dim(),
        });
    }
    if m == 0 {
        return Err(GeneoError::Domain("requested zero eigenpairs".into()));
    }
    if b.frobenius_norm() == 0.0 {
        return Ok(ShiftInvertResult {
            pairs: EigenPairs {
                infinite_count: n,
                ..Default::default()
            },
            transformed: Vec::new(),
            shift: sigma.unwrap_or(0.0),
            restarts: 0,
            operator_applications: 0,
        });
    }

    let (shift, factor) = match sigma {
        Some(s) => (s, factor_pencil(a, b, s)?),
        None => {
            let s = default_shift(a, b);
            match factor_pencil(a, b, s) {
                Ok(f) => (s, f),
                Err(GeneoError::SingularMatrix { .. }) => {
                    log::debug!("shift {s:e} hit a zero pivot, retrying at {:e}", 10.0 * s);
                    (10.0 * s, factor_pencil(a, b, 10.0 * s)?)
                }
                Err(e) => return Err(e),
            }
        }
    };

    let mut solver = Solver {
        b,
        factor: &factor,
        applications: 0,
    };
    let ncv = opts.subspace.unwrap_or(3 * m + 10).max(m + 2).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // Basis Q (B-orthonormal) with cached B·Q and OP·Q columns.
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(ncv);
    let mut bq: Vec<Vec<f64>> = Vec::with_capacity(ncv);
    let mut opq: Vec<Vec<f64>> = Vec::with_capacity(ncv);

    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut candidate = solver.apply(&start);
    let mut restarts = 0;
    let mut exhausted = false;

    loop {
        while q.len() < ncv && !exhausted {
            match solver.orthonormalize(&mut candidate, &q, &bq) {
                Some(bv) => {
                    let w = solver.factor.solve(&bv);
                    solver.applications += 1;
                    q.push(std::mem::take(&mut candidate));
                    bq.push(bv);
                    candidate = w.clone();
                    opq.push(w);
                }
                None => {
                    // Invariant subspace: try a fresh direction, otherwise stop.
                    let fresh: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let mut c = solver.apply(&fresh);
                    if solver.orthonormalize(&mut c, &q, &bq).is_some() {
                        candidate = c;
                    } else {
                        exhausted = true;
                    }
                }
            }
        }

        let k = q.len();
        let mut h = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v = 0.5 * (dot(&bq[i], &opq[j]) + dot(&bq[j], &opq[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .abs()
                .total_cmp(&eig.eigenvalues[i].abs())
        });
        let theta_max = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);

        let combine = |basis: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut y = vec![0.0; n];
            for (i, v) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(i, col)], v, &mut y);
            }
            y
        };

        let want = m.min(k);
        let mut converged = 0;
        for &c in order.iter().take(want) {
            let theta = eig.eigenvalues[c];
            let y = combine(&q, c);
            let mut r = combine(&opq, c);
            axpy(-theta, &y, &mut r);
            let rb = b.quad_form(&r).max(0.0).sqrt();
            if rb <= opts.tol * theta.abs().max(1e-3 * theta_max) {
                converged += 1;
            } else {
                break;
            }
        }

        if converged >= m || exhausted || restarts >= opts.max_restarts {
            if converged < m {
                return Err(GeneoError::PartialConvergence {
                    converged,
                    requested: m,
                });
            }
            let mut selected: Vec<(f64, Vec<f64>, f64)> = order
                .iter()
                .take(m)
                .map(|&c| {
                    let theta = eig.eigenvalues[c];
                    // One more application of OP purifies the Ritz vector.
                    let mut x = combine(&opq, c);
                    let scale = b.quad_form(&x).max(0.0).sqrt();
                    x.iter_mut().for_each(|v| *v /= scale);
                    normalize_sign(&mut x);
                    (shift + 1.0 / theta, x, theta)
                })
                .collect();
            selected.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut pairs = EigenPairs::default();
            let mut transformed = Vec::with_capacity(m);
            for (lam, v, nu) in selected {
                pairs.values.push(lam);
                pairs.vectors.push(v);
                transformed.push(nu);
            }
            return Ok(ShiftInvertResult {
                pairs,
                transformed,
                shift,
                restarts,
                operator_applications: solver.applications,
            });
        }

        // Thick restart: keep the leading Ritz vectors and continue from the
        // Lanczos residual, i.e. OP q_k with the whole old basis projected
        // out (not just the kept part).
        restarts += 1;
        let keep = (m + (ncv - m) / 2).min(k - 1).max(m.min(k));
        let cols: Vec<usize> = order.iter().take(keep).copied().collect();
        let new_q: Vec<Vec<f64>> = cols.iter().map(|&c| combine(&q, c)).collect();
        let new_bq: Vec<Vec<f64>> = cols.iter().map(|&c| combine(&bq, c)).collect();
        let new_opq: Vec<Vec<f64>> = cols.iter().map(|&c| combine(&opq, c)).collect();
        candidate = opq.last().cloned().unwrap_or_default();
        for _ in 0..2 {
            let coeffs: Vec<f64> = bq.iter().map(|bqi| dot(bqi, &candidate)).collect();
            for (c, qi) in coeffs.iter().zip(&q) {
                axpy(-c, qi, &mut candidate);
            }
        }
        q = new_q;
        bq = new_bq;
        opq = new_opq;
    }
}

fn factor_pencil(a: &SparseMatrixCsr, b: &SparseMatrixCsr, sigma: f64) -> Result<Factorization> {
    let k = a.add_scaled(-sigma, b)?;
    Factorization::new(&k, PivotPolicy::Nonzero)
}

struct Solver<'a> {
    b: &'a SparseMatrixCsr,
    factor: &'a Factorization,
    applications: usize,
}

impl Solver<'_> {
    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        self.applications += 1;
        self.factor.solve(&self.b.mul_vec(x))
    }

    /// Two passes of classical Gram-Schmidt in the B-inner product. Returns
    /// `B v` of the normalized vector, or `None` when `v` lies in the span.
    fn orthonormalize(&self, v: &mut [f64], q: &[Vec<f64>], bq: &[Vec<f64>]) -> Option<Vec<f64>> {
        let initial = self.b.quad_form(v).max(0.0).sqrt();
        if initial == 0.0 || !initial.is_finite() {
            return None;
        }
        for _ in 0..2 {
            let coeffs: Vec<f64> = bq.iter().map(|bqi| dot(bqi, v)).collect();
            for (c, qi) in coeffs.iter().zip(q) {
                axpy(-c, qi, v);
            }
        }
        let mut bv = self.b.mul_vec(v);
        let norm = dot(v, &bv).max(0.0).sqrt();
        if norm <= 1e-10 * initial {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        bv.iter_mut().for_each(|x| *x /= norm);
        Some(bv)
    }
}
