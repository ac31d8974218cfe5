//! Matrix-based minibatch sampling for GraphSAGE and LADIES.
//!
//! Every layer runs the same four steps on a stack of `k` minibatches:
//! multiply the frontier matrix with the adjacency matrix, normalize each
//! row into a distribution, sample each row with inverse transform
//! sampling, and extract the sampled adjacency. Only the matrix
//! constructions differ between the two samplers.
//!
//! Randomness is keyed per row by [`RowId`], so sampling `k` batches at
//! once yields exactly the same output as sampling them one at a time, on
//! any number of simulated processes.

mod its;

pub use its::{its_draws, its_sample_row, sample_frontier, RowId, RowRng, StreamKey};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{
    self, build_column_extraction, compact_columns, expand_row_extraction, Graph, SparseMatrix,
};

/// Upper bound on the stacked rows of the column-extraction selectors
/// multiplied in one product. The selectors have `n` rows per batch and
/// are almost all empty, so the block product is split into pieces.
pub const COLUMN_EXTRACTION_CHUNK_ROWS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[value(name = "graphsage")]
    #[serde(rename = "graphsage")]
    GraphSage,
    #[value(name = "ladies")]
    Ladies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Samples per row for each layer, nearest the batch first. Its length
    /// is the number of layers.
    pub fanouts: Vec<usize>,
    pub batch_size: usize,
    /// Minibatches sampled together in one bulk round.
    pub bulk_count: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn graphsage(fanouts: Vec<usize>, batch_size: usize, bulk_count: usize, seed: u64) -> Self {
        Self {
            kind: SamplerKind::GraphSage,
            fanouts,
            batch_size,
            bulk_count,
            seed,
        }
    }

    /// LADIES with the same sample count `s` on every one of `layers`.
    pub fn ladies(
        s: usize,
        layers: usize,
        batch_size: usize,
        bulk_count: usize,
        seed: u64,
    ) -> Self {
        Self {
            kind: SamplerKind::Ladies,
            fanouts: vec![s; layers],
            batch_size,
            bulk_count,
            seed,
        }
    }

    pub fn layers(&self) -> usize {
        self.fanouts.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.fanouts.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one layer is required".into(),
            ));
        }
        if self.fanouts.contains(&0) {
            return Err(Error::InvalidConfig(
                "sample counts must be positive".into(),
            ));
        }
        if self.batch_size == 0 || self.bulk_count == 0 {
            return Err(Error::InvalidConfig(
                "batch size and bulk count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A minibatch and its position in the epoch's batch order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub id: usize,
    pub vertices: Vec<usize>,
}

impl Batch {
    pub fn new(id: usize, vertices: Vec<usize>) -> Self {
        Self { id, vertices }
    }

    /// Numbers plain vertex lists `0..k`.
    pub fn enumerate(lists: &[Vec<usize>]) -> Vec<Batch> {
        lists
            .iter()
            .enumerate()
            .map(|(i, v)| Batch::new(i, v.clone()))
            .collect()
    }
}

/// Computes `q * A` for the sampler. Implemented by the serial kernel and
/// by the simulated distributed algorithms.
pub trait AdjacencyProduct {
    fn multiply_adjacency(&mut self, q: &SparseMatrix) -> Result<SparseMatrix>;
}

/// Single-process backend.
pub struct SerialProduct<'a> {
    adjacency: &'a SparseMatrix,
}

impl<'a> SerialProduct<'a> {
    pub fn new(graph: &'a Graph) -> Self {
        Self {
            adjacency: graph.adjacency(),
        }
    }
}

impl AdjacencyProduct for SerialProduct<'_> {
    fn multiply_adjacency(&mut self, q: &SparseMatrix) -> Result<SparseMatrix> {
        sparse::spgemm(q, self.adjacency)
    }
}

fn check_ids(batches: &[Vec<usize>], n: usize, op: &'static str) -> Result<()> {
    for &v in batches.iter().flatten() {
        if v >= n {
            return Err(Error::IndexOutOfRange {
                op,
                index: v,
                bound: n,
            });
        }
    }
    Ok(())
}

/// One row per batch vertex, batches stacked in order: row `i*b + j` has a
/// single one at column `batches[i][j]`.
pub fn sage_seed_matrix(batches: &[Vec<usize>], n: usize) -> Result<SparseMatrix> {
    check_ids(batches, n, "sage_seed_matrix")?;
    let cols: Vec<usize> = batches.iter().flatten().copied().collect();
    let rows = cols.len();
    Ok(SparseMatrix::from_parts(
        rows,
        n,
        (0..=rows).collect(),
        cols,
        vec![1.0; rows],
    ))
}

/// One row per batch with a one at every batch vertex.
pub fn ladies_seed_matrix(batches: &[Vec<usize>], n: usize) -> Result<SparseMatrix> {
    check_ids(batches, n, "ladies_seed_matrix")?;
    let triplets: Vec<(usize, usize, f64)> = batches
        .iter()
        .enumerate()
        .flat_map(|(i, b)| b.iter().map(move |&v| (i, v, 1.0)))
        .collect();
    let m = SparseMatrix::from_triplets(batches.len(), n, &triplets)?;
    if let Some((i, b)) = batches
        .iter()
        .enumerate()
        .find(|(i, b)| m.row_nnz(*i) != b.len())
    {
        let dup = (0..b.len())
            .find(|&x| b[x + 1..].contains(&b[x]))
            .map(|x| b[x])
            .unwrap_or(i);
        return Err(Error::DuplicateIndex {
            op: "ladies_seed_matrix",
            index: dup,
        });
    }
    Ok(m)
}

/// Sampled output of one layer for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLayer {
    /// Vertex of each row of `adjacency` (the previous frontier).
    pub row_vertices: Vec<usize>,
    /// This batch's rows of the sampled frontier matrix (width `n`).
    pub frontier: SparseMatrix,
    /// Sampled adjacency: rows are `row_vertices`, columns are
    /// `column_map`.
    pub adjacency: SparseMatrix,
    /// Vertex id of each adjacency column.
    pub column_map: Vec<usize>,
}

/// One layer of a bulk sampling round.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSample {
    /// Hops from the batch vertices; 0 is the layer that samples their
    /// neighbors.
    pub depth: usize,
    /// Row count of the input frontier matrix at this depth.
    pub input_rows: usize,
    /// Row offsets of each batch inside the stacked input frontier and the
    /// stacked sampled frontier.
    pub batch_offsets: Vec<usize>,
    /// Stacked sampled frontier matrix, same shape as the probabilities.
    pub frontier: SparseMatrix,
    pub batches: Vec<BatchLayer>,
    /// LADIES only: the stacked `kb x s` extraction output.
    pub stacked_adjacency: Option<SparseMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledEpoch {
    pub kind: SamplerKind,
    pub epoch: u64,
    pub batches: Vec<Batch>,
    pub layers: Vec<LayerSample>,
    /// Sparse products performed, including extraction.
    pub spgemm_calls: usize,
}

/// Everything sampled for a single batch, across layers.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSample {
    pub batch: Batch,
    pub layers: Vec<BatchLayer>,
}

impl BatchSample {
    /// Vertices whose input features the deepest layer aggregates.
    pub fn input_vertices(&self) -> &[usize] {
        &self.layers.last().expect("at least one layer").column_map
    }
}

impl SampledEpoch {
    pub fn batch_samples(&self) -> Vec<BatchSample> {
        self.batches
            .iter()
            .enumerate()
            .map(|(i, b)| BatchSample {
                batch: b.clone(),
                layers: self.layers.iter().map(|l| l.batches[i].clone()).collect(),
            })
            .collect()
    }

    /// Rows in the frontier matrix at `depth`, for `depth` in `0..=L`. The
    /// last one is the frontier produced by the final layer.
    pub fn frontier_rows(&self, depth: usize) -> usize {
        if depth < self.layers.len() {
            self.layers[depth].input_rows
        } else {
            let last = self.layers.last().expect("at least one layer");
            match self.kind {
                SamplerKind::GraphSage => last.frontier.nnz(),
                SamplerKind::Ladies => last.frontier.n_rows(),
            }
        }
    }
}

/// Samples every batch in `batches` together on the serial backend.
pub fn sample_epoch_bulk(
    graph: &Graph,
    cfg: &SamplerConfig,
    batches: &[Batch],
    epoch: u64,
) -> Result<SampledEpoch> {
    sample_epoch_bulk_with(graph, cfg, batches, epoch, &mut SerialProduct::new(graph))
}

/// Samples every batch in `batches` together, computing `Q * A` with
/// `backend`.
pub fn sample_epoch_bulk_with(
    graph: &Graph,
    cfg: &SamplerConfig,
    batches: &[Batch],
    epoch: u64,
    backend: &mut dyn AdjacencyProduct,
) -> Result<SampledEpoch> {
    cfg.validate()?;
    if let Some(b) = batches
        .iter()
        .find(|b| b.vertices.is_empty() || b.vertices.len() > cfg.batch_size)
    {
        return Err(Error::InvalidConfig(format!(
            "batch {} has {} vertices, expected 1..={}",
            b.id,
            b.vertices.len(),
            cfg.batch_size
        )));
    }
    match cfg.kind {
        SamplerKind::GraphSage => sample_graphsage(graph, cfg, batches, epoch, backend),
        SamplerKind::Ladies => sample_ladies(graph, cfg, batches, epoch, backend),
    }
}

fn key(cfg: &SamplerConfig, epoch: u64, depth: usize) -> StreamKey {
    StreamKey {
        seed: cfg.seed,
        epoch,
        layer: depth as u64,
    }
}

fn vertex_lists(batches: &[Batch]) -> Vec<Vec<usize>> {
    batches.iter().map(|b| b.vertices.clone()).collect()
}

fn sample_graphsage(
    graph: &Graph,
    cfg: &SamplerConfig,
    batches: &[Batch],
    epoch: u64,
    backend: &mut dyn AdjacencyProduct,
) -> Result<SampledEpoch> {
    let n = graph.n();
    let mut q = sage_seed_matrix(&vertex_lists(batches), n)?;
    let mut offsets: Vec<usize> = std::iter::once(0)
        .chain(batches.iter().scan(0, |acc, b| {
            *acc += b.vertices.len();
            Some(*acc)
        }))
        .collect();
    let mut layers = Vec::with_capacity(cfg.layers());
    let mut calls = 0;

    for (depth, &fanout) in cfg.fanouts.iter().enumerate() {
        let p = sparse::norm_rows_sage(&backend.multiply_adjacency(&q)?)?;
        calls += 1;

        let row_ids: Vec<RowId> = batches
            .iter()
            .enumerate()
            .flat_map(|(i, b)| (0..offsets[i + 1] - offsets[i]).map(move |r| RowId::new(b.id, r)))
            .collect();
        let sampled = sample_frontier(&p, fanout, key(cfg, epoch, depth), &row_ids);

        let per_batch = (0..batches.len())
            .map(|i| {
                let rows = offsets[i]..offsets[i + 1];
                let block = sampled.slice_rows(rows.clone());
                let (adjacency, column_map) = compact_columns(&block);
                BatchLayer {
                    row_vertices: rows.map(|r| q.row(r).0[0]).collect(),
                    frontier: block,
                    adjacency,
                    column_map,
                }
            })
            .collect();

        // Every sampled entry becomes its own row of the next frontier.
        let next_offsets = offsets.iter().map(|&o| sampled.row_offsets()[o]).collect();
        let next_q = expand_row_extraction(&sampled);
        layers.push(LayerSample {
            depth,
            input_rows: q.n_rows(),
            batch_offsets: offsets,
            frontier: sampled,
            batches: per_batch,
            stacked_adjacency: None,
        });
        q = next_q;
        offsets = next_offsets;
    }

    Ok(SampledEpoch {
        kind: SamplerKind::GraphSage,
        epoch,
        batches: batches.to_vec(),
        layers,
        spgemm_calls: calls,
    })
}

fn sample_ladies(
    graph: &Graph,
    cfg: &SamplerConfig,
    batches: &[Batch],
    epoch: u64,
    backend: &mut dyn AdjacencyProduct,
) -> Result<SampledEpoch> {
    let n = graph.n();
    let k = batches.len();
    let mut q = ladies_seed_matrix(&vertex_lists(batches), n)?;
    let mut layers = Vec::with_capacity(cfg.layers());
    let mut calls = 0;

    for (depth, &s) in cfg.fanouts.iter().enumerate() {
        let p = sparse::norm_rows_ladies(&backend.multiply_adjacency(&q)?)?;
        calls += 1;
        let row_ids: Vec<RowId> = batches.iter().map(|b| RowId::new(b.id, 0)).collect();
        let sampled = sample_frontier(&p, s, key(cfg, epoch, depth), &row_ids);

        // Row extraction: one row of A per current frontier vertex.
        let a_rows = backend.multiply_adjacency(&expand_row_extraction(&q))?;
        calls += 1;
        let row_blocks: Vec<SparseMatrix> = (0..k)
            .map(|i| a_rows.slice_rows(q.row_offsets()[i]..q.row_offsets()[i + 1]))
            .collect();

        // Column extraction against each batch's own selector, padded to
        // width s when the neighborhood held fewer than s vertices.
        let selectors = (0..k)
            .map(|i| {
                let picked = sampled.row(i).0;
                let sel = build_column_extraction(picked, n)?;
                Ok(if picked.len() == s {
                    sel
                } else {
                    SparseMatrix::from_parts(
                        n,
                        s,
                        sel.row_offsets().to_vec(),
                        sel.col_indices().to_vec(),
                        sel.values().to_vec(),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (stacked, chunks) = sparse::spgemm_block_diag_chunked(
            &row_blocks,
            &selectors,
            s,
            COLUMN_EXTRACTION_CHUNK_ROWS,
        )?;
        calls += chunks;

        let offsets = q.row_offsets().to_vec();
        let per_batch = (0..k)
            .map(|i| {
                let column_map = sampled.row(i).0.to_vec();
                BatchLayer {
                    row_vertices: q.row(i).0.to_vec(),
                    frontier: sampled.slice_rows(i..i + 1),
                    adjacency: stacked
                        .slice_rows(offsets[i]..offsets[i + 1])
                        .restrict_columns(0..column_map.len()),
                    column_map,
                }
            })
            .collect();

        layers.push(LayerSample {
            depth,
            input_rows: q.n_rows(),
            batch_offsets: (0..=k).collect(),
            frontier: sampled.clone(),
            batches: per_batch,
            stacked_adjacency: Some(stacked),
        });
        q = sampled;
    }

    Ok(SampledEpoch {
        kind: SamplerKind::Ladies,
        epoch,
        batches: batches.to_vec(),
        layers,
        spgemm_calls: calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sage_seed_examples() {
        let q = sage_seed_matrix(&[vec![1, 5]], 6).unwrap();
        assert_eq!(q.shape(), (2, 6));
        assert_eq!(q.get(0, 1), 1.0);
        assert_eq!(q.get(1, 5), 1.0);
        let q2 = sage_seed_matrix(&[vec![1, 5], vec![0, 2]], 6).unwrap();
        assert_eq!(q2.shape(), (4, 6));
        assert_eq!(q2.row(2).0, &[0]);
        assert_eq!(sage_seed_matrix(&[], 6).unwrap().shape(), (0, 6));
        assert!(sage_seed_matrix(&[vec![6]], 6).is_err());
    }

    #[test]
    fn ladies_seed_examples() {
        let q = ladies_seed_matrix(&[vec![1, 5]], 6).unwrap();
        assert_eq!(q.shape(), (1, 6));
        assert_eq!(q.row(0).0, &[1, 5]);
        let single = vec![vec![3], vec![0]];
        assert_eq!(
            ladies_seed_matrix(&single, 6).unwrap(),
            sage_seed_matrix(&single, 6).unwrap()
        );
        let q3 = ladies_seed_matrix(&[vec![0, 1], vec![2, 3], vec![4, 5]], 6).unwrap();
        assert_eq!(q3.shape(), (3, 6));
        assert!((0..3).all(|r| q3.row_nnz(r) == 2));
        assert!(ladies_seed_matrix(&[vec![9]], 6).is_err());
        assert!(matches!(
            ladies_seed_matrix(&[vec![2, 2]], 6),
            Err(Error::DuplicateIndex { index: 2, .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::graphsage(vec![], 2, 1, 0)
            .validate()
            .is_err());
        assert!(SamplerConfig::graphsage(vec![2, 0], 2, 1, 0)
            .validate()
            .is_err());
        assert!(SamplerConfig::ladies(2, 1, 0, 1, 0).validate().is_err());
        assert!(SamplerConfig::ladies(2, 1, 2, 1, 0).validate().is_ok());
    }
}
