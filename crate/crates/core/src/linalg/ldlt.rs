//! Sparse `L D Lᵀ` factorization without pivoting, after a fill-reducing
//! symmetric permutation. Up-looking numeric phase driven by the
//! elimination tree.

use super::{ordering::reverse_cuthill_mckee, SparseMatrixCsr};
use crate::error::{GeneoError, Result};

const NONE: usize = usize::MAX;

/// Which pivot signs are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotPolicy {
    /// Every pivot must be positive (SPD input).
    Positive,
    /// Nonzero pivots of either sign are accepted (symmetric indefinite
    /// input that admits an `LDLᵀ` in the chosen ordering).
    Nonzero,
}

/// Reusable solver handle for `A x = b`.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    l_offsets: Vec<usize>,
    l_rows: Vec<usize>,
    l_values: Vec<f64>,
    d: Vec<f64>,
}

/// Factorizes `A - shift·I` as SPD.
pub fn factorize(a: &SparseMatrixCsr, shift: f64) -> Result<Factorization> {
    if shift == 0.0 {
        Factorization::new(a, PivotPolicy::Positive)
    } else {
        let shifted = a.add_scaled(-shift, &SparseMatrixCsr::identity(a.dim()))?;
        Factorization::new(&shifted, PivotPolicy::Positive)
    }
}

impl Factorization {
    pub fn new(a: &SparseMatrixCsr, policy: PivotPolicy) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        // Upper triangle of P A Pᵀ stored by columns: column k holds rows i ≤ k.
        let mut col_ptr = vec![0usize; n + 1];
        for (k, &old) in perm.iter().enumerate() {
            col_ptr[k + 1] = a.row(old).0.iter().filter(|&&c| inv[c] <= k).count();
        }
        for k in 0..n {
            col_ptr[k + 1] += col_ptr[k];
        }
        let mut row_idx = vec![0usize; col_ptr[n]];
        let mut vals = vec![0.0; col_ptr[n]];
        for (k, &old) in perm.iter().enumerate() {
            let mut p = col_ptr[k];
            let (cols, v) = a.row(old);
            for (&c, &x) in cols.iter().zip(v) {
                let i = inv[c];
                if i <= k {
                    row_idx[p] = i;
                    vals[p] = x;
                    p += 1;
                }
            }
        }

        // Symbolic: elimination tree and column counts.
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
                let mut i = i0;
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut l_offsets = vec![0usize; n + 1];
        for k in 0..n {
            l_offsets[k + 1] = l_offsets[k] + lnz[k];
        }

        // Numeric.
        let total = l_offsets[n];
        let mut l_rows = vec![0usize; total];
        let mut l_values = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        lnz.iter_mut().for_each(|c| *c = 0);
        flag.iter_mut().for_each(|f| *f = NONE);

        let scale = a
            .diagonal()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let pivot_tol = 1e-14 * scale;

        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            for p in col_ptr[k]..col_ptr[k + 1] {
                let mut i = row_idx[p];
                y[i] += vals[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let start = l_offsets[i];
                let end = start + lnz[i];
                for p in start..end {
                    y[l_rows[p]] -= l_values[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                l_rows[end] = k;
                l_values[end] = l_ki;
                lnz[i] += 1;
            }
            let bad = match policy {
                PivotPolicy::Positive => !(d[k] > pivot_tol),
                PivotPolicy::Nonzero => !(d[k].abs() > pivot_tol),
            };
            if bad {
                return Err(GeneoError::SingularMatrix {
                    index: perm[k],
                    pivot: d[k],
                });
            }
        }

        Ok(Self {
            n,
            perm,
            l_offsets,
            l_rows,
            l_values,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_values.len()
    }

    /// Number of negative pivots, i.e. the inertia's negative count.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.l_offsets[j]..self.l_offsets[j + 1] {
                    x[self.l_rows[p]] -= self.l_values[p] * xj;
                }
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in self.l_offsets[j]..self.l_offsets[j + 1] {
                s -= self.l_values[p] * x[self.l_rows[p]];
            }
            x[j] = s;
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }
}
