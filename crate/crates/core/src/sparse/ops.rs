use ndarray::Array2;

use super::SparseMatrix;
use crate::error::{Error, Result};

/// Products whose magnitude falls below this are dropped from the output
/// pattern.
pub const DROP_TOLERANCE: f64 = 1e-12;

/// Row-by-row (Gustavson) sparse product `left * right`.
///
/// For every output entry the partial products are accumulated in
/// ascending order of `left`'s column index, which is also the order a
/// dense triple loop uses.
pub fn spgemm(left: &SparseMatrix, right: &SparseMatrix) -> Result<SparseMatrix> {
    if left.n_cols() != right.n_rows() {
        return Err(Error::dims("spgemm", left.shape(), right.shape()));
    }
    let n_cols = right.n_cols();
    let mut acc = vec![0.0f64; n_cols];
    let mut occupied = vec![false; n_cols];
    let mut touched: Vec<usize> = Vec::new();

    let mut row_offsets = Vec::with_capacity(left.n_rows() + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);

    for r in 0..left.n_rows() {
        let (lcols, lvals) = left.row(r);
        for (&k, &lv) in lcols.iter().zip(lvals) {
            let (rcols, rvals) = right.row(k);
            for (&c, &rv) in rcols.iter().zip(rvals) {
                if !occupied[c] {
                    occupied[c] = true;
                    touched.push(c);
                }
                acc[c] += lv * rv;
            }
        }
        touched.sort_unstable();
        for &c in &touched {
            let v = acc[c];
            if v.abs() >= DROP_TOLERANCE {
                col_indices.push(c);
                values.push(v);
            }
            acc[c] = 0.0;
            occupied[c] = false;
        }
        touched.clear();
        row_offsets.push(col_indices.len());
    }

    Ok(SparseMatrix::from_parts(
        left.n_rows(),
        n_cols,
        row_offsets,
        col_indices,
        values,
    ))
}

/// Elementwise sum `a + b`.
pub fn add(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::dims("add", a.shape(), b.shape()));
    }
    let mut row_offsets = Vec::with_capacity(a.n_rows() + 1);
    let mut col_indices = Vec::with_capacity(a.nnz() + b.nnz());
    let mut values = Vec::with_capacity(a.nnz() + b.nnz());
    row_offsets.push(0);
    for r in 0..a.n_rows() {
        let mut push = |c: usize, v: f64| {
            if v.abs() >= DROP_TOLERANCE {
                col_indices.push(c);
                values.push(v);
            }
        };
        let (ac, av) = a.row(r);
        let (bc, bv) = b.row(r);
        let (mut i, mut j) = (0, 0);
        while i < ac.len() || j < bc.len() {
            match (ac.get(i), bc.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    push(x, av[i] + bv[j]);
                    i += 1;
                    j += 1;
                }
                (Some(&x), Some(&y)) if x < y => {
                    push(x, av[i]);
                    i += 1;
                }
                (Some(&x), None) => {
                    push(x, av[i]);
                    i += 1;
                }
                (_, Some(&y)) => {
                    push(y, bv[j]);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        row_offsets.push(col_indices.len());
    }
    Ok(SparseMatrix::from_parts(
        a.n_rows(),
        a.n_cols(),
        row_offsets,
        col_indices,
        values,
    ))
}

fn check_non_negative(op: &'static str, m: &SparseMatrix) -> Result<()> {
    match m.iter().find(|&(_, _, v)| v < 0.0) {
        Some((row, col, value)) => Err(Error::NegativeValue {
            op,
            row,
            col,
            value,
        }),
        None => Ok(()),
    }
}

/// Divides every stored value by its row sum. Empty rows stay empty.
pub fn norm_rows_sage(p: &SparseMatrix) -> Result<SparseMatrix> {
    check_non_negative("norm_rows_sage", p)?;
    let sums: Vec<f64> = (0..p.n_rows()).map(|r| p.row(r).1.iter().sum()).collect();
    Ok(p.map_values(|r, v| v / sums[r]))
}

/// Replaces each stored count `e` by `e^2 / sum(e^2)` over its row.
pub fn norm_rows_ladies(p: &SparseMatrix) -> Result<SparseMatrix> {
    check_non_negative("norm_rows_ladies", p)?;
    let sums: Vec<f64> = (0..p.n_rows())
        .map(|r| p.row(r).1.iter().map(|v| v * v).sum())
        .collect();
    Ok(p.map_values(|r, v| v * v / sums[r]))
}

/// Sparse times dense: `a * h`.
pub fn spmm(a: &SparseMatrix, h: &Array2<f64>) -> Result<Array2<f64>> {
    let (h_rows, f) = h.dim();
    if a.n_cols() != h_rows {
        return Err(Error::dims("spmm", a.shape(), (h_rows, f)));
    }
    let mut out = Array2::<f64>::zeros((a.n_rows(), f));
    for r in 0..a.n_rows() {
        let (cols, vals) = a.row(r);
        let mut out_row = out.row_mut(r);
        for (&c, &v) in cols.iter().zip(vals) {
            out_row.scaled_add(v, &h.row(c));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_product(a: &SparseMatrix, b: &SparseMatrix) -> Vec<f64> {
        let (m, k, n) = (a.n_rows(), a.n_cols(), b.n_cols());
        let (ad, bd) = (a.to_dense(), b.to_dense());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut s = 0.0;
                for t in 0..k {
                    s += ad[i * k + t] * bd[t * n + j];
                }
                out[i * n + j] = s;
            }
        }
        out
    }

    fn sample_adjacency() -> SparseMatrix {
        SparseMatrix::from_dense(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn identity_times_a_is_a() {
        let a = sample_adjacency();
        assert_eq!(spgemm(&SparseMatrix::identity(3), &a).unwrap(), a);
    }

    #[test]
    fn one_hot_selects_row() {
        let a = sample_adjacency();
        let e2 = SparseMatrix::from_triplets(1, 3, &[(0, 2, 1.0)]).unwrap();
        let row = spgemm(&e2, &a).unwrap();
        assert_eq!(row, a.slice_rows(2..3));
    }

    #[test]
    fn random_8x8_matches_dense_oracle() {
        // Integer-valued entries so every partial sum is exact.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let mut gen = || {
            let dense: Vec<f64> = (0..64)
                .map(|_| {
                    if next() % 10 < 3 {
                        (next() % 9 + 1) as f64
                    } else {
                        0.0
                    }
                })
                .collect();
            SparseMatrix::from_dense(8, 8, &dense).unwrap()
        };
        let (a, b) = (gen(), gen());
        assert_eq!(spgemm(&a, &b).unwrap().to_dense(), dense_product(&a, &b));
    }

    #[test]
    fn spgemm_rejects_mismatch() {
        let a = SparseMatrix::zeros(2, 3);
        let b = SparseMatrix::zeros(2, 3);
        assert!(matches!(
            spgemm(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cancellation_is_dropped() {
        let a = SparseMatrix::from_dense(1, 2, &[1.0, 1.0]).unwrap();
        let b = SparseMatrix::from_dense(2, 1, &[2.0, -2.0]).unwrap();
        let c = spgemm(&a, &b).unwrap();
        assert_eq!(c.nnz(), 0);
    }

    #[test]
    fn sage_norm_examples() {
        let p =
            SparseMatrix::from_dense(3, 3, &[1.0, 1.0, 1.0, 2.0, 0.0, 6.0, 0.0, 0.0, 0.0]).unwrap();
        let n = norm_rows_sage(&p).unwrap();
        for c in 0..3 {
            assert!((n.get(0, c) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(n.row(1).1, &[0.25, 0.75]);
        assert_eq!(n.row_nnz(2), 0);
    }

    #[test]
    fn ladies_norm_examples() {
        let counts = SparseMatrix::from_dense(1, 6, &[1.0, 0.0, 1.0, 1.0, 2.0, 0.0]).unwrap();
        let p = norm_rows_ladies(&counts).unwrap();
        let expect = [1.0 / 7.0, 0.0, 1.0 / 7.0, 1.0 / 7.0, 4.0 / 7.0, 0.0];
        for (c, e) in expect.iter().enumerate() {
            assert!((p.get(0, c) - e).abs() < 1e-12);
        }
        let single = SparseMatrix::from_dense(1, 3, &[0.0, 5.0, 0.0]).unwrap();
        assert_eq!(norm_rows_ladies(&single).unwrap().row(0).1, &[1.0]);
        let pair = SparseMatrix::from_dense(1, 2, &[3.0, 4.0]).unwrap();
        let q = norm_rows_ladies(&pair).unwrap();
        assert_eq!(q.row(0).1, &[9.0 / 25.0, 16.0 / 25.0]);
    }

    #[test]
    fn norms_reject_negative_values() {
        let p = SparseMatrix::from_dense(1, 2, &[1.0, -1.0]).unwrap();
        assert!(matches!(
            norm_rows_sage(&p),
            Err(Error::NegativeValue { .. })
        ));
        assert!(matches!(
            norm_rows_ladies(&p),
            Err(Error::NegativeValue { .. })
        ));
    }

    #[test]
    fn add_unions_patterns() {
        let a = SparseMatrix::from_dense(1, 4, &[1.0, 0.0, 2.0, 0.0]).unwrap();
        let b = SparseMatrix::from_dense(1, 4, &[0.0, 3.0, 0.0, 4.0]).unwrap();
        assert_eq!(add(&a, &b).unwrap().to_dense(), vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn spmm_identity_and_gather() {
        let h = Array2::from_shape_fn((3, 2), |(i, j)| (i * 2 + j) as f64);
        assert_eq!(spmm(&SparseMatrix::identity(3), &h).unwrap(), h);
        let pick = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (1, 0, 1.0)]).unwrap();
        let g = spmm(&pick, &h).unwrap();
        assert_eq!(g.row(0), h.row(2));
        assert_eq!(g.row(1), h.row(0));
    }
}
