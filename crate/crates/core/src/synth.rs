//! Seeded synthetic graphs for tests, examples and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::Graph;

/// The six-vertex graph used throughout the docs: batch `{1, 5}` has
/// neighbor counts `[1, 0, 1, 1, 2, 0]`.
pub fn figure1_graph() -> Graph {
    let edges = [(0, 1), (1, 4), (2, 5), (3, 5), (4, 5), (0, 2), (3, 4)];
    Graph::from_edges(6, &edges, true).expect("valid edges")
}

/// Undirected graph where each vertex draws `avg_degree / 2` random
/// partners; the result averages close to `avg_degree`.
pub fn random_graph(n: usize, avg_degree: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidConfig(
            "random graphs need two vertices".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_vertex = avg_degree.div_ceil(2);
    let mut edges = Vec::with_capacity(n * per_vertex);
    for u in 0..n {
        for _ in 0..per_vertex {
            let v = rng.random_range(0..n - 1);
            edges.push((u, if v >= u { v + 1 } else { v }));
        }
    }
    Graph::from_edges(n, &edges, true)
}

/// Undirected `d`-regular graph: a circulant with offsets `1..=d/2` under a
/// random vertex relabeling, so neighborhoods are spread over all block
/// rows. Requires even `d < n`.
pub fn regular_graph(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if !d.is_multiple_of(2) || d >= n {
        return Err(Error::InvalidConfig(format!(
            "need even d < n, got d={d}, n={n}"
        )));
    }
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|v| (1..=d / 2).map(move |o| (v, (v + o) % n)))
        .map(|(u, v)| (label[u], label[v]))
        .collect();
    Graph::from_edges(n, &edges, true)
}

/// `count` batches of `b` distinct vertices drawn uniformly from `0..n`.
pub fn uniform_batches(n: usize, b: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<usize> = (0..n).collect();
    (0..count)
        .map(|_| {
            let (picked, _) = all.partial_shuffle(&mut rng, b.min(n));
            picked.to_vec()
        })
        .collect()
}
