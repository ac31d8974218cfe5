use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::sparse::SparseMatrix;

/// Identity of a sampled row that does not depend on how rows are stacked
/// or distributed: the batch it belongs to and its position inside that
/// batch's block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowId {
    pub batch: u64,
    pub row: u64,
}

impl RowId {
    pub fn new(batch: usize, row: usize) -> Self {
        Self {
            batch: batch as u64,
            row: row as u64,
        }
    }

    /// Row `r` of an unbatched matrix.
    pub fn flat(r: usize) -> Self {
        Self::new(0, r)
    }
}

/// The `(seed, epoch, layer)` part of a row's random stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub epoch: u64,
    pub layer: u64,
}

/// Independent random stream for one row. Identical keys always give
/// identical streams.
pub struct RowRng(ChaCha8Rng);

impl RowRng {
    pub fn new(key: StreamKey, row: RowId) -> Self {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&key.seed.to_le_bytes());
        seed[8..16].copy_from_slice(&key.epoch.to_le_bytes());
        seed[16..24].copy_from_slice(&key.layer.to_le_bytes());
        seed[24..32].copy_from_slice(&row.batch.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(row.row);
        Self(rng)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.0.random::<f64>()
    }
}

/// Draws up to `s` distinct indices in draw order, without replacement.
///
/// Each draw binary-searches a fresh prefix sum of the remaining weights:
/// `u` selects index `i` with `cdf[i-1] <= u < cdf[i]`. The drawn weight is
/// then zeroed, which renormalizes the rest. When `s >= m` every index is
/// returned without consuming randomness.
pub fn its_draws(probabilities: &[f64], s: usize, rng: &mut RowRng) -> Vec<usize> {
    let m = probabilities.len();
    if s >= m {
        return (0..m).collect();
    }
    let mut weights = probabilities.to_vec();
    let mut cdf = vec![0.0; m];
    let mut draws = Vec::with_capacity(s);
    for _ in 0..s {
        let mut acc = 0.0;
        for (c, &w) in cdf.iter_mut().zip(&weights) {
            acc += w;
            *c = acc;
        }
        let u = rng.next_unit() * acc;
        let mut i = cdf.partition_point(|&c| c <= u);
        if i == m {
            // u rounded up to the total; take the last live index.
            i = weights
                .iter()
                .rposition(|&w| w > 0.0)
                .expect("no live weight");
        }
        draws.push(i);
        weights[i] = 0.0;
    }
    draws
}

/// Draws `min(s, m)` distinct indices from a probability row and returns
/// them in ascending order.
pub fn its_sample_row(probabilities: &[f64], s: usize, rng: &mut RowRng) -> Vec<usize> {
    let mut picked = its_draws(probabilities, s, rng);
    picked.sort_unstable();
    picked
}

/// Samples `min(s, nnz)` columns from every row of a row-normalized `p`.
/// Row `r` uses the stream keyed by `rows[r]`. The result has the shape of
/// `p` with value 1 at each sampled position.
pub fn sample_frontier(p: &SparseMatrix, s: usize, key: StreamKey, rows: &[RowId]) -> SparseMatrix {
    assert_eq!(rows.len(), p.n_rows(), "one RowId per row");
    let picked: Vec<Vec<usize>> = (0..p.n_rows())
        .into_par_iter()
        .map(|r| {
            let (cols, probs) = p.row(r);
            let mut rng = RowRng::new(key, rows[r]);
            its_sample_row(probs, s, &mut rng)
                .into_iter()
                .map(|i| cols[i])
                .collect()
        })
        .collect();

    let mut row_offsets = Vec::with_capacity(p.n_rows() + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::new();
    for cols in picked {
        col_indices.extend(cols);
        row_offsets.push(col_indices.len());
    }
    let nnz = col_indices.len();
    SparseMatrix::from_parts(
        p.n_rows(),
        p.n_cols(),
        row_offsets,
        col_indices,
        vec![1.0; nnz],
    )
}
