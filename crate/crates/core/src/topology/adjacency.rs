//! Normalized propagation operator `Â`.
//!
//! Undirected graphs use `D^{-1/2} (A + I) D^{-1/2}`. Directed graphs use
//! row normalization over in-neighbors plus the node itself, so row `i`
//! averages `i` and its sources. Stored in compressed sparse row form.

use ndarray::{Array2, ArrayView2};

use super::edges::EdgeSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency<T> {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn from_edges(edges: &EdgeSet, num_nodes: usize) -> Result<Self> {
        if edges.min_nodes() > num_nodes {
            return Err(Error::input(format!(
                "edge references node {} but graph has {num_nodes} nodes",
                edges.min_nodes() - 1
            )));
        }
        // rows[i] lists the nodes i aggregates from
        let mut rows: Vec<Vec<usize>> = (0..num_nodes).map(|i| vec![i]).collect();
        for (s, t) in edges.iter() {
            rows[t].push(s);
            if edges.is_undirected() {
                rows[s].push(t);
            }
        }
        let mut indptr = Vec::with_capacity(num_nodes + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        if edges.is_undirected() {
            let inv_sqrt: Vec<f64> = rows.iter().map(|r| 1.0 / (r.len() as f64).sqrt()).collect();
            for (i, r) in rows.iter_mut().enumerate() {
                r.sort_unstable();
                for &j in r.iter() {
                    indices.push(j);
                    values.push(T::from_f64_lossy(inv_sqrt[i] * inv_sqrt[j]));
                }
                indptr.push(indices.len());
            }
        } else {
            for r in rows.iter_mut() {
                r.sort_unstable();
                let w = T::from_f64_lossy(1.0 / r.len() as f64);
                for &j in r.iter() {
                    indices.push(j);
                    values.push(w);
                }
                indptr.push(indices.len());
            }
        }
        Ok(Self {
            n: num_nodes,
            indptr,
            indices,
            values,
        })
    }

    /// Identity operator (self-loops only).
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut d = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[[i, j]] = v;
            }
        }
        d
    }

    /// Disjoint union: each operator becomes one diagonal block.
    pub fn block_diagonal<'a, I>(parts: I) -> Self
    where
        I: IntoIterator<Item = &'a Self>,
        T: 'a,
    {
        let mut out = Self {
            n: 0,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        };
        for p in parts {
            let offset = out.n;
            let base = out.indices.len();
            out.indices.extend(p.indices.iter().map(|j| j + offset));
            out.values.extend_from_slice(&p.values);
            out.indptr.extend(p.indptr[1..].iter().map(|k| k + base));
            out.n += p.n;
        }
        out
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.n {
            return Err(Error::shape(format!(
                "adjacency is {0}x{0} but operand has {rows} rows",
                self.n
            )));
        }
        Ok(())
    }

    /// `Â · m`.
    pub fn propagate(&self, m: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.check_rows(m.nrows())?;
        let m = m.as_standard_layout();
        let cols = m.ncols();
        let src = m.as_slice().expect("standard layout");
        let mut out = Array2::<T>::zeros((self.n, cols));
        let dst = out.as_slice_mut().expect("fresh array");
        for i in 0..self.n {
            let row_out = &mut dst[i * cols..(i + 1) * cols];
            for k in self.indptr[i]..self.indptr[i + 1] {
                let (j, v) = (self.indices[k], self.values[k]);
                let row_in = &src[j * cols..(j + 1) * cols];
                for (o, x) in row_out.iter_mut().zip(row_in) {
                    *o = *o + v * *x;
                }
            }
        }
        Ok(out)
    }

    /// `Âᵀ · m`.
    pub fn propagate_transpose(&self, m: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.check_rows(m.nrows())?;
        let m = m.as_standard_layout();
        let cols = m.ncols();
        let src = m.as_slice().expect("standard layout");
        let mut out = Array2::<T>::zeros((self.n, cols));
        let dst = out.as_slice_mut().expect("fresh array");
        for i in 0..self.n {
            let row_in = &src[i * cols..(i + 1) * cols];
            for k in self.indptr[i]..self.indptr[i + 1] {
                let (j, v) = (self.indices[k], self.values[k]);
                let row_out = &mut dst[j * cols..(j + 1) * cols];
                for (o, x) in row_out.iter_mut().zip(row_in) {
                    *o = *o + v * *x;
                }
            }
        }
        Ok(out)
    }
}

pub fn normalize_adjacency<T: Scalar>(edges: &EdgeSet, num_nodes: usize) -> Result<NormalizedAdjacency<T>> {
    NormalizedAdjacency::from_edges(edges, num_nodes)
}
