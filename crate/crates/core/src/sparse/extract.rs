use super::{spgemm, SparseMatrix};
use crate::error::{Error, Result};

/// Stacks `blocks` vertically in order. `n_cols` fixes the width, which
/// matters when `blocks` is empty.
pub fn vstack(blocks: &[SparseMatrix], n_cols: usize) -> Result<SparseMatrix> {
    if let Some(b) = blocks.iter().find(|b| b.n_cols() != n_cols) {
        return Err(Error::dims("vstack", (b.n_rows(), b.n_cols()), (0, n_cols)));
    }
    let n_rows = blocks.iter().map(|b| b.n_rows()).sum();
    let nnz = blocks.iter().map(|b| b.nnz()).sum();
    let mut row_offsets = Vec::with_capacity(n_rows + 1);
    let mut col_indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_offsets.push(0);
    for b in blocks {
        let base = col_indices.len();
        row_offsets.extend(b.row_offsets()[1..].iter().map(|o| o + base));
        col_indices.extend_from_slice(b.col_indices());
        values.extend_from_slice(b.values());
    }
    Ok(SparseMatrix::from_parts(
        n_rows,
        n_cols,
        row_offsets,
        col_indices,
        values,
    ))
}

/// Places each block on the diagonal of a larger matrix.
pub fn block_diag(blocks: &[SparseMatrix]) -> SparseMatrix {
    let n_rows = blocks.iter().map(|b| b.n_rows()).sum();
    let n_cols = blocks.iter().map(|b| b.n_cols()).sum();
    let nnz = blocks.iter().map(|b| b.nnz()).sum();
    let mut row_offsets = Vec::with_capacity(n_rows + 1);
    let mut col_indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_offsets.push(0);
    let mut col_base = 0;
    for b in blocks {
        let base = col_indices.len();
        row_offsets.extend(b.row_offsets()[1..].iter().map(|o| o + base));
        col_indices.extend(b.col_indices().iter().map(|c| c + col_base));
        values.extend_from_slice(b.values());
        col_base += b.n_cols();
    }
    SparseMatrix::from_parts(n_rows, n_cols, row_offsets, col_indices, values)
}

/// Drops empty columns. Returns the compacted matrix together with the
/// original column id of every kept column.
pub fn compact_columns(m: &SparseMatrix) -> (SparseMatrix, Vec<usize>) {
    let column_map = m.nonzero_columns();
    let mut new_id = vec![usize::MAX; m.n_cols()];
    for (j, &c) in column_map.iter().enumerate() {
        new_id[c] = j;
    }
    // The map is monotone, so rows stay sorted.
    let col_indices = m.col_indices().iter().map(|&c| new_id[c]).collect();
    let out = SparseMatrix::from_parts(
        m.n_rows(),
        column_map.len(),
        m.row_offsets().to_vec(),
        col_indices,
        m.values().to_vec(),
    );
    (out, column_map)
}

/// Turns every stored entry of `q` into its own one-hot row, keeping the
/// column. Rows come out in row-major order of the entries.
pub fn expand_row_extraction(q: &SparseMatrix) -> SparseMatrix {
    let nnz = q.nnz();
    SparseMatrix::from_parts(
        nnz,
        q.n_cols(),
        (0..=nnz).collect(),
        q.col_indices().to_vec(),
        vec![1.0; nnz],
    )
}

/// `n x s` selector whose column `j` holds a single one at row
/// `sampled[j]`.
pub fn build_column_extraction(sampled: &[usize], n: usize) -> Result<SparseMatrix> {
    let mut seen = vec![false; n];
    let mut triplets = Vec::with_capacity(sampled.len());
    for (j, &v) in sampled.iter().enumerate() {
        if v >= n {
            return Err(Error::IndexOutOfRange {
                op: "build_column_extraction",
                index: v,
                bound: n,
            });
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::DuplicateIndex {
                op: "build_column_extraction",
                index: v,
            });
        }
        triplets.push((v, j, 1.0));
    }
    SparseMatrix::from_triplets(n, sampled.len(), &triplets)
}

/// Computes `block_diag(lefts) * vstack(rights)` as a series of smaller
/// products, each covering consecutive blocks whose right operands hold at
/// most `max_rows_per_chunk` rows in total (a single oversized block still
/// gets its own chunk). Returns the product and the number of chunk
/// products performed.
pub fn spgemm_block_diag_chunked(
    lefts: &[SparseMatrix],
    rights: &[SparseMatrix],
    n_cols: usize,
    max_rows_per_chunk: usize,
) -> Result<(SparseMatrix, usize)> {
    if lefts.len() != rights.len() {
        return Err(Error::InvalidMatrix(format!(
            "{} left blocks but {} right blocks",
            lefts.len(),
            rights.len()
        )));
    }
    for (l, r) in lefts.iter().zip(rights) {
        if l.n_cols() != r.n_rows() || r.n_cols() != n_cols {
            return Err(Error::dims(
                "spgemm_block_diag_chunked",
                l.shape(),
                r.shape(),
            ));
        }
    }

    let mut parts = Vec::new();
    let mut start = 0;
    while start < lefts.len() {
        let mut end = start + 1;
        let mut rows = rights[start].n_rows();
        while end < lefts.len() && rows + rights[end].n_rows() <= max_rows_per_chunk {
            rows += rights[end].n_rows();
            end += 1;
        }
        let left = block_diag(&lefts[start..end]);
        let right = vstack(&rights[start..end], n_cols)?;
        parts.push(spgemm(&left, &right)?);
        start = end;
    }
    let chunks = parts.len();
    Ok((vstack(&parts, n_cols)?, chunks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, dense: &[f64]) -> SparseMatrix {
        SparseMatrix::from_dense(rows, cols, dense).unwrap()
    }

    #[test]
    fn vstack_keeps_order() {
        let a = m(1, 3, &[1.0, 0.0, 0.0]);
        let b = m(1, 3, &[0.0, 0.0, 2.0]);
        let s = vstack(&[a.clone(), b.clone()], 3).unwrap();
        assert_eq!(s.slice_rows(0..1), a);
        assert_eq!(s.slice_rows(1..2), b);
    }

    #[test]
    fn vstack_empty_uses_given_width() {
        assert_eq!(vstack(&[], 6).unwrap().shape(), (0, 6));
    }

    #[test]
    fn vstack_rejects_width_mismatch() {
        assert!(vstack(&[SparseMatrix::zeros(1, 2)], 3).is_err());
    }

    #[test]
    fn block_diag_offsets_second_block() {
        let a = m(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let b = m(1, 2, &[0.0, 3.0]);
        let d = block_diag(&[a.clone(), b]);
        assert_eq!(d.shape(), (3, 5));
        assert_eq!(d.get(2, 4), 3.0);
        assert_eq!(d.nnz(), 3);
        assert_eq!(block_diag(std::slice::from_ref(&a)), a);
    }

    #[test]
    fn compact_columns_forced_case() {
        let q = m(
            2,
            6,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        );
        let (c, map) = compact_columns(&q);
        assert_eq!(map, vec![1, 4]);
        assert_eq!(c.to_dense(), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn compact_columns_no_empty_columns_is_identity() {
        let q = m(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let (c, map) = compact_columns(&q);
        assert_eq!(c, q);
        assert_eq!(map, vec![0, 1]);
    }

    #[test]
    fn expand_row_extraction_one_per_row() {
        let q = m(1, 6, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let r = expand_row_extraction(&q);
        assert_eq!(r.shape(), (2, 6));
        assert_eq!(r.row(0).0, &[1]);
        assert_eq!(r.row(1).0, &[5]);
    }

    #[test]
    fn column_extraction_errors() {
        assert!(matches!(
            build_column_extraction(&[1, 1], 3),
            Err(Error::DuplicateIndex { .. })
        ));
        assert!(matches!(
            build_column_extraction(&[3], 3),
            Err(Error::IndexOutOfRange { .. })
        ));
        let c = build_column_extraction(&[0, 4], 6).unwrap();
        assert_eq!(c.shape(), (6, 2));
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(4, 1), 1.0);
        assert_eq!(c.nnz(), 2);
    }

    #[test]
    fn chunked_block_product_matches_full() {
        let lefts = vec![m(1, 3, &[1.0, 2.0, 0.0]), m(2, 2, &[0.0, 1.0, 1.0, 1.0])];
        let rights = vec![
            m(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
            m(2, 2, &[2.0, 0.0, 0.0, 3.0]),
        ];
        let full = spgemm(&block_diag(&lefts), &vstack(&rights, 2).unwrap()).unwrap();
        for cap in [1, 3, 5, 100] {
            let (chunked, _) = spgemm_block_diag_chunked(&lefts, &rights, 2, cap).unwrap();
            assert_eq!(chunked, full, "cap {cap}");
        }
        assert_eq!(
            spgemm_block_diag_chunked(&lefts, &rights, 2, 1).unwrap().1,
            2
        );
        assert_eq!(
            spgemm_block_diag_chunked(&lefts, &rights, 2, 5).unwrap().1,
            1
        );
    }
}
