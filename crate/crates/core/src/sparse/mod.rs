//! Compressed sparse row matrices and the local kernels the samplers are
//! built from.
//!
//! A single canonical format is used everywhere: CSR with strictly
//! increasing column indices inside each row and finite values. Every
//! constructor validates these invariants, and a [`SparseMatrix`] is
//! immutable once built.

mod extract;
mod ops;

use std::ops::Range;

pub use extract::{
    block_diag, build_column_extraction, compact_columns, expand_row_extraction,
    spgemm_block_diag_chunked, vstack,
};
pub use ops::{add, norm_rows_ladies, norm_rows_sage, spgemm, spmm, DROP_TOLERANCE};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, checking every invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row_offsets has length {} for {} rows",
                row_offsets.len(),
                n_rows
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidMatrix("row_offsets[0] != 0".into()));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidMatrix(format!(
                "{} column indices but {} values",
                col_indices.len(),
                values.len()
            )));
        }
        if row_offsets[n_rows] != col_indices.len() {
            return Err(Error::InvalidMatrix(format!(
                "row_offsets ends at {} but nnz is {}",
                row_offsets[n_rows],
                col_indices.len()
            )));
        }
        for r in 0..n_rows {
            let (start, end) = (row_offsets[r], row_offsets[r + 1]);
            if start > end {
                return Err(Error::InvalidMatrix(format!(
                    "row_offsets decreases at row {r}"
                )));
            }
            let cols = &col_indices[start..end];
            for (i, &c) in cols.iter().enumerate() {
                if c >= n_cols {
                    return Err(Error::InvalidMatrix(format!(
                        "column {c} out of range in row {r} ({n_cols} columns)"
                    )));
                }
                if i > 0 && cols[i - 1] >= c {
                    return Err(Error::InvalidMatrix(format!(
                        "row {r} columns not strictly increasing"
                    )));
                }
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite value {v}")));
        }
        Ok(Self::from_parts(
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        ))
    }

    /// Internal constructor for kernels that produce canonical output by
    /// construction.
    pub(crate) fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_offsets.len(), n_rows + 1);
        debug_assert_eq!(col_indices.len(), values.len());
        Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_parts(n_rows, n_cols, vec![0; n_rows + 1], Vec::new(), Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts(n, n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Duplicate coordinates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= n_rows {
                return Err(Error::IndexOutOfRange {
                    op: "from_triplets",
                    index: r,
                    bound: n_rows,
                });
            }
            if c >= n_cols {
                return Err(Error::IndexOutOfRange {
                    op: "from_triplets",
                    index: c,
                    bound: n_cols,
                });
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0; n_rows + 1];
        let mut col_indices: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Builds a matrix from a row-major dense slice, keeping exact nonzeros.
    pub fn from_dense(n_rows: usize, n_cols: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n_rows * n_cols {
            return Err(Error::InvalidMatrix(format!(
                "dense buffer of {} entries for {n_rows}x{n_cols}",
                dense.len()
            )));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in dense.chunks(n_cols.max(1)).take(n_rows) {
            for (c, &v) in row.iter().enumerate().take(n_cols) {
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        if n_cols == 0 {
            row_offsets.resize(n_rows + 1, 0);
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows * self.n_cols];
        for (r, c, v) in self.iter() {
            out[r * self.n_cols + c] = v;
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_offsets[r + 1] - self.row_offsets[r]
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Value at `(r, c)`, zero when structurally absent.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|i| vals[i]).unwrap_or(0.0)
    }

    /// Iterates over `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Contiguous block of rows.
    pub fn slice_rows(&self, rows: Range<usize>) -> SparseMatrix {
        assert!(rows.start <= rows.end && rows.end <= self.n_rows);
        let base = self.row_offsets[rows.start];
        let end = self.row_offsets[rows.end];
        let row_offsets = self.row_offsets[rows.start..=rows.end]
            .iter()
            .map(|o| o - base)
            .collect();
        SparseMatrix::from_parts(
            rows.len(),
            self.n_cols,
            row_offsets,
            self.col_indices[base..end].to_vec(),
            self.values[base..end].to_vec(),
        )
    }

    /// Keeps only the columns in `cols`, renumbered to start at zero.
    pub fn restrict_columns(&self, cols: Range<usize>) -> SparseMatrix {
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for r in 0..self.n_rows {
            let (rc, rv) = self.row(r);
            let lo = rc.partition_point(|&c| c < cols.start);
            let hi = rc.partition_point(|&c| c < cols.end);
            col_indices.extend(rc[lo..hi].iter().map(|c| c - cols.start));
            values.extend_from_slice(&rv[lo..hi]);
            row_offsets.push(col_indices.len());
        }
        SparseMatrix::from_parts(self.n_rows, cols.len(), row_offsets, col_indices, values)
    }

    /// Distinct columns holding at least one stored entry, ascending.
    pub fn nonzero_columns(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_cols];
        for &c in &self.col_indices {
            seen[c] = true;
        }
        seen.iter()
            .enumerate()
            .filter_map(|(c, &s)| s.then_some(c))
            .collect()
    }

    /// Same sparsity pattern with every stored value replaced by `value`.
    pub fn with_pattern_value(&self, value: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = value);
        out
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> SparseMatrix {
        let mut out = self.clone();
        for r in 0..self.n_rows {
            for i in self.row_offsets[r]..self.row_offsets[r + 1] {
                out.values[i] = f(r, self.values[i]);
            }
        }
        out
    }
}

/// An unweighted graph stored as its 0/1 adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: SparseMatrix,
}

impl Graph {
    pub fn new(adjacency: SparseMatrix) -> Result<Self> {
        if adjacency.n_rows() != adjacency.n_cols() {
            return Err(Error::InvalidMatrix(format!(
                "adjacency must be square, got {}x{}",
                adjacency.n_rows(),
                adjacency.n_cols()
            )));
        }
        if adjacency.values().iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidMatrix(
                "adjacency values must all equal 1.0".into(),
            ));
        }
        Ok(Self { adjacency })
    }

    /// Builds a graph on `n` vertices from directed `(src, dst)` pairs.
    /// Duplicates collapse; `symmetrize` adds the reverse of every edge.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], symmetrize: bool) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::IndexOutOfRange {
                        op: "Graph::from_edges",
                        index: x,
                        bound: n,
                    });
                }
            }
            pairs.push((u, v));
            if symmetrize {
                pairs.push((v, u));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut row_offsets = vec![0; n + 1];
        for &(u, _) in &pairs {
            row_offsets[u + 1] += 1;
        }
        for r in 0..n {
            row_offsets[r + 1] += row_offsets[r];
        }
        let col_indices = pairs.iter().map(|&(_, v)| v).collect();
        let values = vec![1.0; pairs.len()];
        Ok(Self {
            adjacency: SparseMatrix::from_parts(n, n, row_offsets, col_indices, values),
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n_rows()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz()
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adjacency.row(v).0
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.row_nnz(v)
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Directed `(src, dst)` pairs in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().map(|(u, v, _)| (u, v))
    }
}
