//! Compressed sparse row matrices.
//!
//! Column indices within a row are strictly increasing. Products are
//! parallel over rows; each row is summed sequentially, so results do not
//! depend on the thread count.

use std::io::Write;

use rayon::prelude::*;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from raw CSR arrays, checking their structure.
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 || row_ptr[nrows] != col_idx.len() {
            return Err(Error::InvalidArgument("inconsistent CSR row pointers".into()));
        }
        if values.len() != col_idx.len() || ncols > u32::MAX as usize {
            return Err(Error::InvalidArgument("inconsistent CSR arrays".into()));
        }
        for i in 0..nrows {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c as usize >= ncols) {
                return Err(Error::InvalidArgument(format!("row {i} has unsorted or out-of-range columns")));
            }
        }
        Ok(CsrMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Sums duplicate `(row, col, value)` entries.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        if let Some(&(i, j, _)) = sorted.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::InvalidArgument(format!("entry ({i}, {j}) out of range")));
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx: Vec<u32> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(j as u32);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::from_parts(nrows, ncols, row_ptr, col_idx, values)
    }

    pub fn from_dense(a: &nalgebra::DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    triplets.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &triplets).expect("dense indices are in range")
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row pointers together with mutable values, for in-place scatter.
    pub(crate) fn structure_and_values_mut(&mut self) -> (&[usize], &mut [f64]) {
        (&self.row_ptr, &mut self.values)
    }

    /// Position of `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&(j as u32)).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].iter().map(|&c| c as usize).zip(self.values[lo..hi].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_chunks_mut(512).enumerate().for_each(|(chunk, out)| {
            let base = chunk * 512;
            for (r, yi) in out.iter_mut().enumerate() {
                let i = base + r;
                let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
                let mut s = 0.0;
                for k in lo..hi {
                    s += self.values[k] * x[self.col_idx[k] as usize];
                }
                *yi = s;
            }
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.spmv(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// Largest `|a_ij − a_ji|` with its location. Entries missing from the
    /// transpose pattern count as zero.
    pub fn symmetry_defect(&self) -> (usize, usize, f64) {
        (0..self.nrows)
            .into_par_iter()
            .map(|i| {
                let mut worst = (i, i, 0.0);
                for (j, v) in self.row(i) {
                    let t = if j < self.nrows { self.get(j, i) } else { 0.0 };
                    let d = (v - t).abs();
                    if d > worst.2 {
                        worst = (i, j, d);
                    }
                }
                worst
            })
            .reduce(|| (0, 0, 0.0), |a, b| if b.2 > a.2 || (b.2 == a.2 && (b.0, b.1) < (a.0, a.1)) { b } else { a })
    }

    /// Fails with [`Error::Asymmetric`] if any entry differs from its
    /// transpose by more than `rel_tol · max |a_ij|`.
    pub fn check_symmetric(&self, rel_tol: f64) -> Result<()> {
        if self.nrows != self.ncols {
            return Err(Error::InvalidArgument("matrix is not square".into()));
        }
        let (row, col, defect) = self.symmetry_defect();
        if defect > rel_tol * self.max_abs() {
            return Err(Error::Asymmetric { row, col, defect });
        }
        Ok(())
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut a = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// One `row col value` line per stored entry, zero-based.
    pub fn write_coordinate(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "% {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Sequential dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
