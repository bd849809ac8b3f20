//! Dense symmetric matrices and the symmetric (svec) vectorization.

use nalgebra::{DMatrix, DVector};

/// A dense real symmetric matrix. Symmetry is exact by construction:
/// `entries[(i, j)] == entries[(j, i)]` bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    entries: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrizes `m` as `(m + m') / 2` and wraps it.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "symmetric matrix must be square");
        let n = m.nrows();
        let mut entries = DMatrix::zeros(n, n);
        for i in 0..n {
            entries[(i, i)] = m[(i, i)];
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Self { entries }
    }

    /// Wraps a matrix that is already symmetric to machine precision.
    /// Mirrors the upper triangle so the stored form is exactly symmetric.
    pub fn from_symmetric(m: DMatrix<f64>) -> Self {
        Self::from_matrix(&m)
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: DMatrix::identity(n, n) }
    }

    pub fn from_diagonal(d: &DVector<f64>) -> Self {
        Self { entries: DMatrix::from_diagonal(d) }
    }

    /// Scaled identity `c * I`.
    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self { entries: DMatrix::identity(n, n) * c }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Sets the `(i, j)` and `(j, i)` entries.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[(i, j)] = v;
        self.entries[(j, i)] = v;
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |a, &v| a.max(v.abs()))
    }

    /// Max-norm distance to another matrix of the same dimension.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(other.entries.iter())
            .fold(0.0_f64, |a, (&x, &y)| a.max((x - y).abs()))
    }

    /// `A * 1` as a vector; zero for any Laplacian.
    pub fn row_sums(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(n, |i, _| self.entries.row(i).sum())
    }

    /// Symmetric vectorization with `sqrt(2)`-scaled off-diagonals, so the
    /// Euclidean inner product of svecs equals the Frobenius inner product
    /// of the matrices. Order: upper triangle, row by row (`i <= j`).
    pub fn svec(&self) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(svec_len(n));
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                out[k] = if i == j {
                    self.entries[(i, j)]
                } else {
                    self.entries[(i, j)] * std::f64::consts::SQRT_2
                };
                k += 1;
            }
        }
        out
    }

    /// Inverse of [`SymMatrix::svec`].
    pub fn from_svec(v: &DVector<f64>) -> Self {
        let n = dim_from_svec_len(v.len());
        let mut entries = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let val = if i == j { v[k] } else { v[k] / std::f64::consts::SQRT_2 };
                entries[(i, j)] = val;
                entries[(j, i)] = val;
                k += 1;
            }
        }
        Self { entries }
    }
}

/// Length of the svec of an `n x n` symmetric matrix.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Matrix dimension whose svec has length `len`. Panics if `len` is not
/// triangular.
pub fn dim_from_svec_len(len: usize) -> usize {
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    assert_eq!(svec_len(n), len, "svec length {len} is not triangular");
    n
}

/// Position of entry `(i, j)` (with `i <= j`) inside the svec of an
/// `n x n` matrix.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    // Entries before row i: n + (n-1) + ... + (n-i+1) = i*n - i*(i-1)/2.
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn symmetrizes_on_construction() {
        let m = dmatrix![1.0, 2.0; 4.0, 3.0];
        let s = SymMatrix::from_matrix(&m);
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
    }

    #[test]
    fn svec_round_trip_preserves_frobenius() {
        let m = dmatrix![1.0, 2.0, -0.5; 2.0, 0.0, 3.0; -0.5, 3.0, 4.0];
        let s = SymMatrix::from_matrix(&m);
        let v = s.svec();
        // Frobenius norm squared equals Euclidean norm squared of the svec.
        let frob2: f64 = m.iter().map(|x| x * x).sum();
        assert!((v.norm_squared() - frob2).abs() < 1e-12);
        let back = SymMatrix::from_svec(&v);
        assert!(s.max_abs_diff(&back) < 1e-15);
    }

    #[test]
    fn svec_index_matches_order() {
        let n = 4;
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                assert_eq!(svec_index(n, i, j), k);
                k += 1;
            }
        }
        assert_eq!(k, svec_len(n));
    }
}
