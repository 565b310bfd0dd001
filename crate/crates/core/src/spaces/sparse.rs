//! Compressed sparse row matrices with deterministic assembly.

use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

/// How repeated `(row, col)` entries are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Sum,
    /// Keep the last entry in insertion order.
    Overwrite,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds the matrix from `(row, col, value)` triplets. Duplicates are
    /// combined in insertion order, so the result does not depend on thread
    /// scheduling as long as the triplet order is fixed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)], combine: Combine) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&i| (triplets[i].0, triplets[i].1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for i in order {
            let (r, c, v) = triplets[i];
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                let slot = values.last_mut().unwrap();
                match combine {
                    Combine::Sum => *slot += v,
                    Combine::Overwrite => *slot = v,
                }
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Sparsity pattern (zero values) covering every `(row, col)` pair of
    /// each cell block. `None` entries are skipped.
    pub fn from_cell_pattern<'a>(
        nrows: usize,
        ncols: usize,
        cells: impl Iterator<Item = (&'a [Option<usize>], &'a [Option<usize>])>,
    ) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nrows];
        for (rs, cs) in cells {
            for r in rs.iter().flatten() {
                rows[*r].extend(cs.iter().flatten());
            }
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len());
            *row = Vec::new();
        }
        let values = vec![0.0; indices.len()];
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    fn slot(&self, r: usize, c: usize) -> usize {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        a + self.indices[a..b]
            .binary_search(&c)
            .unwrap_or_else(|_| panic!("({r}, {c}) outside the sparsity pattern"))
    }

    /// Adds (or with [`Combine::Overwrite`] sets) `block(i, j)` at
    /// `(rows[i], cols[j])` for every pair of present indices.
    pub fn scatter_block(
        &mut self,
        rows: &[Option<usize>],
        cols: &[Option<usize>],
        combine: Combine,
        block: impl Fn(usize, usize) -> f64,
    ) {
        for (i, r) in rows.iter().enumerate() {
            let Some(r) = r else { continue };
            for (j, c) in cols.iter().enumerate() {
                let Some(c) = c else { continue };
                let s = self.slot(*r, *c);
                match combine {
                    Combine::Sum => self.values[s] += block(i, j),
                    Combine::Overwrite => self.values[s] = block(i, j),
                }
            }
        }
    }

    /// Drops stored entries with `|v| <= tol`.
    pub fn prune(&mut self, tol: f64) {
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                if v.abs() > tol {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[a..b].binary_search(&c) {
            Ok(i) => self.values[a + i],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `|A| |x|`, entrywise absolute values.
    pub fn abs_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| (v * x[c]).abs()).sum()).collect()
    }

    /// `A^T x`
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push((c, r, v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &t, Combine::Sum)
    }

    /// `alpha A + beta B`
    pub fn add(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            t.extend(self.row(r).map(|(c, v)| (r, c, alpha * v)));
            t.extend(other.row(r).map(|(c, v)| (r, c, beta * v)));
        }
        Self::from_triplets(self.nrows, self.ncols, &t, Combine::Sum)
    }

    /// Sparse product `A B`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut touched = Vec::new();
        let mut mark = vec![false; other.ncols];
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                t.push((r, c, acc[c]));
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, &t, Combine::Sum)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let t = self.transpose();
        self.add(1.0, &t, -1.0).max_abs()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            t.extend(self.row(r).map(|(c, v)| Triplet::new(r, c, v)));
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t).map_err(|e| Error::Factorization {
            context: "sparse conversion".into(),
            reason: format!("{e:?}"),
        })
    }

    /// Coordinate text format: a `rows cols nnz` header, then one
    /// zero-based `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(w, "{r} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_and_overwrite() {
        let t = [(0, 1, 1.0), (1, 0, 2.0), (0, 1, 3.0), (1, 1, -1.0)];
        let a = CsrMatrix::from_triplets(2, 2, &t, Combine::Sum);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.nnz(), 3);
        let b = CsrMatrix::from_triplets(2, 2, &t, Combine::Overwrite);
        assert_eq!(b.get(0, 1), 3.0);
        assert_eq!(a.matvec(&[1.0, 2.0]), vec![8.0, 0.0]);
        assert_eq!(a.matvec_t(&[1.0, 2.0]), vec![4.0, 2.0]);
        assert_eq!(a.transpose().get(1, 0), 4.0);
        assert_eq!(a.symmetry_defect(), 2.0);
    }

    #[test]
    fn cell_pattern_scatter() {
        let a: Vec<Option<usize>> = vec![Some(0), None, Some(2)];
        let b: Vec<Option<usize>> = vec![Some(2), Some(1)];
        let mut m = CsrMatrix::from_cell_pattern(3, 3, [(&a[..], &a[..]), (&b[..], &b[..])].into_iter());
        assert_eq!(m.nnz(), 4 + 4 - 1);
        m.scatter_block(&a, &a, Combine::Sum, |i, j| (i + j) as f64);
        m.scatter_block(&b, &b, Combine::Sum, |_, _| 1.0);
        assert_eq!(m.get(2, 2), 5.0);
        assert_eq!(m.get(0, 2), 2.0);
        m.scatter_block(&b, &b, Combine::Overwrite, |_, _| 7.0);
        assert_eq!(m.get(2, 2), 7.0);
        m.prune(6.5);
        assert_eq!(m.nnz(), 4);
    }

    #[test]
    fn product_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)], Combine::Sum);
        let b = CsrMatrix::from_triplets(3, 2, &[(0, 1, 1.0), (2, 0, -1.0), (1, 0, 4.0)], Combine::Sum);
        let p = a.matmul(&b).to_dense();
        let q = a.to_dense() * b.to_dense();
        assert_eq!(p, q);
    }

    #[test]
    fn coo_export() {
        let a = CsrMatrix::from_triplets(2, 2, &[(1, 0, 0.5)], Combine::Sum);
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("2 2 1\n1 0 5.0"));
    }
}
