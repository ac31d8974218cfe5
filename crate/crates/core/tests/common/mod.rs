#![allow(dead_code)]

use bulksample::sparse::SparseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Triple-loop product on dense copies.
pub fn dense_product(a: &SparseMatrix, b: &SparseMatrix) -> Vec<f64> {
    let (m, k) = a.shape();
    let n = b.n_cols();
    let (da, db) = (a.to_dense(), b.to_dense());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for t in 0..k {
            for j in 0..n {
                out[i * n + j] += da[i * k + t] * db[t * n + j];
            }
        }
    }
    out
}

/// Random matrix with small nonzero integer values, so sums are exact in
/// any order.
pub fn random_int_matrix(
    rows: usize,
    cols: usize,
    density: f64,
    rng: &mut ChaCha8Rng,
) -> SparseMatrix {
    let mut dense = vec![0.0; rows * cols];
    for x in dense.iter_mut() {
        if rng.random::<f64>() < density {
            let v: i32 = rng.random_range(1..=4);
            *x = if rng.random::<bool>() {
                v as f64
            } else {
                -(v as f64)
            };
        }
    }
    SparseMatrix::from_dense(rows, cols, &dense).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
