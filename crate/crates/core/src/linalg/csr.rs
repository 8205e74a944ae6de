//! Compressed sparse row storage for the (structurally) symmetric system
//! matrices produced by assembly.

use nalgebra::DMatrix;

use crate::error::{GeneoError, Result};

/// Square sparse matrix in CSR layout with sorted, duplicate-free column
/// indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrixCsr {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed on
/// conversion.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Sums duplicates. Explicit zeros that result from summation are kept so
    /// that the pattern of symmetric contributions stays symmetric.
    pub fn build(mut self) -> SparseMatrixCsr {
        self.entries.sort_by_key(|e| (e.0, e.1));
        let mut offsets = vec![0usize; self.n + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            offsets[i + 1] += offsets[i];
        }
        SparseMatrixCsr {
            n: self.n,
            offsets,
            indices,
            values,
        }
    }
}

impl SparseMatrixCsr {
    pub fn from_raw(
        n: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != n + 1 {
            return Err(GeneoError::Shape {
                expected: n + 1,
                got: offsets.len(),
            });
        }
        if indices.len() != values.len() || *offsets.last().unwrap() != indices.len() {
            return Err(GeneoError::Domain("inconsistent CSR arrays".into()));
        }
        for r in 0..n {
            if offsets[r] > offsets[r + 1] {
                return Err(GeneoError::Domain("row offsets not monotone".into()));
            }
            let row = &indices[offsets[r]..offsets[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c >= n) {
                return Err(GeneoError::Domain(format!(
                    "row {r}: column indices must be strictly increasing and < {n}"
                )));
            }
        }
        Ok(Self {
            n,
            offsets,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::identity(diag.len());
        m.values.copy_from_slice(diag);
        m
    }

    /// Keeps entries with `|a_ij| > drop_tol`.
    pub fn from_dense(a: &DMatrix<f64>, drop_tol: f64) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            for j in 0..n {
                let v = a[(i, j)];
                if v.abs() > drop_tol {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        super::dot(x, &ax)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `self + s * other` on the union pattern.
    pub fn add_scaled(&self, s: f64, other: &SparseMatrixCsr) -> Result<Self> {
        if self.n != other.n {
            return Err(GeneoError::Shape {
                expected: self.n,
                got: other.n,
            });
        }
        let mut offsets = Vec::with_capacity(self.n + 1);
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        offsets.push(0);
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let a_col = ca.get(p).copied().unwrap_or(usize::MAX);
                let b_col = cb.get(q).copied().unwrap_or(usize::MAX);
                if a_col == b_col {
                    indices.push(a_col);
                    values.push(va[p] + s * vb[q]);
                    p += 1;
                    q += 1;
                } else if a_col < b_col {
                    indices.push(a_col);
                    values.push(va[p]);
                    p += 1;
                } else {
                    indices.push(b_col);
                    values.push(s * vb[q]);
                    q += 1;
                }
            }
            offsets.push(indices.len());
        }
        Ok(Self {
            n: self.n,
            offsets,
            indices,
            values,
        })
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                b.push(c, i, v);
            }
        }
        b.build()
    }

    /// Bit-exact symmetry of pattern and values.
    pub fn is_exactly_symmetric(&self) -> bool {
        let t = self.transpose();
        t.offsets == self.offsets
            && t.indices == self.indices
            && t.values
                .iter()
                .zip(&self.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, i)).abs());
            }
        }
        worst / scale
    }

    /// Principal submatrix on the listed (sorted or unsorted) indices; the
    /// result is numbered by position in `idx`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.n];
        for (l, &g) in idx.iter().enumerate() {
            local[g] = l;
        }
        let mut b = TripletBuilder::new(idx.len());
        for (l, &g) in idx.iter().enumerate() {
            let (cols, vals) = self.row(g);
            for (&c, &v) in cols.iter().zip(vals) {
                let lc = local[c];
                if lc != usize::MAX {
                    b.push(l, lc, v);
                }
            }
        }
        b.build()
    }

    /// Scales rows and columns by the diagonal `d`: `D A D`.
    pub fn diag_scaled(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n);
        let mut m = self.clone();
        for i in 0..self.n {
            let (s, e) = (m.offsets[i], m.offsets[i + 1]);
            for p in s..e {
                m.values[p] *= d[i] * d[m.indices[p]];
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                a[(i, c)] = v;
            }
        }
        a
    }
}
