//! Compressed sparse row matrices for the incidence, coupling and system
//! operators. Factorizations are delegated to `faer` (see `solver::linear`).

use crate::Real;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![T::one(); n])
    }

    pub fn diag(d: &[T]) -> Self {
        Self {
            nrows: d.len(),
            ncols: d.len(),
            indptr: (0..=d.len()).collect(),
            indices: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    /// Builds a matrix from sparse rows. Duplicate columns within a row are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = indices.len();
            for (c, v) in row {
                assert!(c < ncols, "column {c} out of range {ncols}");
                if indices.len() > start && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    /// Builds a matrix from coordinate triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; nrows];
        for &(r, _, _) in triplets {
            assert!(r < nrows, "row {r} out of range {nrows}");
            counts[r] += 1;
        }
        let mut rows: Vec<Vec<(usize, T)>> = counts.iter().map(|&c| Vec::with_capacity(c)).collect();
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        Self::from_rows(ncols, rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out.push((i, j, v));
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let mut s = T::zero();
                for (j, v) in self.row(i) {
                    s += v * x[j];
                }
                s
            })
            .collect()
    }

    /// Computes `selfᵀ x` without forming the transpose.
    pub fn tmatvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for i in 0..self.nrows {
            let xi = x[i];
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let p = next[j];
                indices[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, indptr, indices, values }
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut acc = vec![T::zero(); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let start = indices.len();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = T::zero();
                        indices.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            indices[start..].sort_unstable();
            for &j in &indices[start..] {
                values.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        Self { nrows: self.nrows, ncols: other.ncols, indptr, indices, values }
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|i| {
                self.row(i)
                    .map(|(j, v)| (j, a * v))
                    .chain(other.row(i).map(|(j, v)| (j, b * v)))
                    .collect()
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpby(T::one(), other, T::one())
    }

    pub fn scale(&self, s: T) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `diag(d) · self`.
    pub fn scale_rows(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.nrows);
        let mut m = self.clone();
        for i in 0..self.nrows {
            for p in m.indptr[i]..m.indptr[i + 1] {
                m.values[p] *= d[i];
            }
        }
        m
    }

    /// `self · diag(d)`.
    pub fn scale_cols(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.ncols);
        let mut m = self.clone();
        for p in 0..m.values.len() {
            m.values[p] *= d[m.indices[p]];
        }
        m
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Selects the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_rows(self.ncols, rows.iter().map(|&i| self.row(i).collect()).collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[i][j] += v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|self − selfᵀ|`.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.nrows, self.ncols);
        self.axpby(T::one(), &self.transpose(), -T::one()).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_faer(&self) -> faer::sparse::SparseColMat<usize, T> {
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| faer::sparse::Triplet::new(i, j, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .expect("valid triplets")
    }

    /// Coordinate-triplet text dump (one `row col value` line per entry).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{i} {j} {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let m = b[0].len();
        let k = b.len();
        let mut c = vec![vec![0.0; m]; n];
        for i in 0..n {
            for j in 0..m {
                for p in 0..k {
                    c[i][j] += a[i][p] * b[p][j];
                }
            }
        }
        c
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 2), 0.0);
    }

    #[test]
    fn product_and_transpose_match_dense() {
        let a = SparseMatrix::from_triplets(3, 4, &[(0, 0, 1.0), (0, 3, 2.0), (1, 1, -1.5), (2, 0, 4.0), (2, 2, 0.5)]);
        let b = SparseMatrix::from_triplets(4, 2, &[(0, 0, 1.0), (1, 1, 3.0), (2, 0, -2.0), (3, 1, 1.0), (3, 0, 0.25)]);
        let c = a.matmul(&b);
        assert_eq!(c.to_dense(), dense_mul(&a.to_dense(), &b.to_dense()));
        let at = a.transpose();
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), at.get(j, i));
            }
        }
        let x = [1.0, -2.0, 0.5];
        let y1 = a.tmatvec(&x);
        let y2 = at.matvec(&x);
        assert_eq!(y1, y2);
    }

    #[test]
    fn scaling_and_sums() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]);
        assert_eq!(a.scale_rows(&[2.0, 1.0]).row_sums(), vec![6.0, 3.0]);
        assert_eq!(a.scale_cols(&[1.0, 0.5]).row_sums(), vec![2.0, 1.5]);
        assert_eq!(a.asymmetry(), 2.0);
        assert_eq!(a.add(&a.transpose()).asymmetry(), 0.0);
    }
}
