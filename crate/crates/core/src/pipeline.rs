//! Epoch driver: bulk sampling in chunks of `k` minibatches, feature
//! fetching with an all-to-allv inside each process column, and an
//! aggregation-only forward pass per minibatch.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::ops::Range;
use std::time::Instant;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dist::{
    alltoallv, balanced_ranges, CommLedger, PartitionedProduct, ProcessGrid, ReplicatedProduct,
};
use crate::error::{Error, Result};
use crate::sampler::{sample_epoch_bulk_with, AdjacencyProduct, Batch, BatchSample, SamplerConfig};
use crate::sparse::{spmm, Graph, SparseMatrix};

/// How the adjacency products of sampling are distributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every process holds all of `A`; no communication while sampling.
    Replicated,
    /// `A` is split over the grid and multiplied with the 1.5D algorithm.
    Partitioned,
}

/// The feature matrix split into `p/c` block rows. Block `i` is held by
/// every process of process row `i`, so each process column holds all of
/// `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePartition {
    grid: ProcessGrid,
    n: usize,
    f: usize,
    row_ranges: Vec<Range<usize>>,
    blocks: Vec<Array2<f64>>,
}

impl FeaturePartition {
    pub fn new(h: &Array2<f64>, grid: ProcessGrid) -> Result<Self> {
        let (n, f) = h.dim();
        if f == 0 {
            return Err(Error::InvalidConfig(
                "feature dimension must be positive".into(),
            ));
        }
        let row_ranges = balanced_ranges(n, grid.rows());
        let blocks = row_ranges
            .iter()
            .map(|r| h.slice(ndarray::s![r.clone(), ..]).to_owned())
            .collect();
        Ok(Self {
            grid,
            n,
            f,
            row_ranges,
            blocks,
        })
    }

    pub fn grid(&self) -> ProcessGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.f
    }

    pub fn row_ranges(&self) -> &[Range<usize>] {
        &self.row_ranges
    }

    /// Block row holding vertex `v`.
    pub fn block_of(&self, v: usize) -> usize {
        self.row_ranges.partition_point(|r| r.end <= v)
    }

    /// The block held by `rank`.
    pub fn local(&self, rank: usize) -> &Array2<f64> {
        &self.blocks[self.grid.coords(rank).0]
    }

    fn row(&self, v: usize) -> ArrayView1<'_, f64> {
        let b = self.block_of(v);
        self.blocks[b].row(v - self.row_ranges[b].start)
    }

    /// Concatenation of all blocks.
    pub fn assemble(&self) -> Array2<f64> {
        let views: Vec<_> = self.blocks.iter().map(|b| b.view()).collect();
        ndarray::concatenate(ndarray::Axis(0), &views).expect("blocks share a width")
    }
}

/// Gathers the rows of `H` listed in `vertices` for the process `requester`.
pub fn fetch_features(
    vertices: &[usize],
    requester: usize,
    store: &FeaturePartition,
    ledger: &mut CommLedger,
) -> Result<Array2<f64>> {
    let p = store.grid().p();
    if requester >= p {
        return Err(Error::IndexOutOfRange {
            op: "fetch_features",
            index: requester,
            bound: p,
        });
    }
    let mut requests = vec![Vec::new(); p];
    requests[requester] = vertices.to_vec();
    let mut out = fetch_features_round(&requests, store, ledger)?;
    Ok(out.swap_remove(requester))
}

/// One fetch round in which every process `r` requests `requests[r]`.
///
/// Each process column runs one all-to-allv: a row of block `i` is served
/// by process `(i, j)` of the requester's column `j`, so rows in the
/// requester's own block never leave the process. Rows arrive in request
/// order, duplicates included.
pub fn fetch_features_round(
    requests: &[Vec<usize>],
    store: &FeaturePartition,
    ledger: &mut CommLedger,
) -> Result<Vec<Array2<f64>>> {
    let grid = store.grid();
    if requests.len() != grid.p() {
        return Err(Error::InvalidConfig(format!(
            "{} request lists for {} processes",
            requests.len(),
            grid.p()
        )));
    }
    if let Some(&v) = requests.iter().flatten().find(|&&v| v >= store.n()) {
        return Err(Error::IndexOutOfRange {
            op: "fetch_features",
            index: v,
            bound: store.n(),
        });
    }
    let f = store.dim();
    let rows = grid.rows();
    let mut out: Vec<Array2<f64>> = requests
        .iter()
        .map(|r| Array2::zeros((r.len(), f)))
        .collect();

    for j in 0..grid.c() {
        let group = grid.process_column(j);
        // send[owner][requester]: feature rows, flattened.
        let mut send = vec![vec![Vec::<f64>::new(); rows]; rows];
        for (i, &rank) in group.iter().enumerate() {
            for &v in &requests[rank] {
                send[store.block_of(v)][i].extend(store.row(v).iter());
            }
        }
        let recv = alltoallv(&send, &group, ledger);
        for (i, &rank) in group.iter().enumerate() {
            let mut cursor = vec![0usize; rows];
            for (t, &v) in requests[rank].iter().enumerate() {
                let ob = store.block_of(v);
                let at = cursor[ob];
                out[rank]
                    .row_mut(t)
                    .assign(&ArrayView1::from(&recv[i][ob][at..at + f]));
                cursor[ob] += f;
            }
        }
    }
    Ok(out)
}

/// Neighborhood aggregation `a * h`.
pub fn forward_aggregate(a: &SparseMatrix, h: &Array2<f64>) -> Result<Array2<f64>> {
    spmm(a, h)
}

/// Maps rows labelled `from` onto the vertices `to`, averaging rows that
/// share a vertex.
fn merge_rows(from: &[usize], to: &[usize], h: &Array2<f64>) -> Result<Array2<f64>> {
    let slot: HashMap<usize, usize> = to.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut counts = vec![0usize; to.len()];
    for v in from {
        if let Some(&i) = slot.get(v) {
            counts[i] += 1;
        }
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidMatrix(format!(
            "vertex {} has no aggregated row",
            to[i]
        )));
    }
    let triplets: Vec<(usize, usize, f64)> = from
        .iter()
        .enumerate()
        .filter_map(|(r, v)| slot.get(v).map(|&i| (i, r, 1.0 / counts[i] as f64)))
        .collect();
    let m = SparseMatrix::from_triplets(to.len(), from.len(), &triplets)?;
    spmm(&m, h)
}

/// Runs the aggregation of every layer of one batch, deepest first.
/// `h_in` holds the features of `sample.input_vertices()`.
pub fn propagate(sample: &BatchSample, h_in: Array2<f64>) -> Result<Array2<f64>> {
    let mut h = h_in;
    for t in (0..sample.layers.len()).rev() {
        let layer = &sample.layers[t];
        h = forward_aggregate(&layer.adjacency, &h)?;
        if t > 0 {
            h = merge_rows(&layer.row_vertices, &sample.layers[t - 1].column_map, &h)?;
        }
    }
    Ok(h)
}

/// Splits the training vertices, in order, into batches of `b`.
pub fn make_batches(train: &[usize], b: usize) -> Vec<Batch> {
    train
        .chunks(b.max(1))
        .enumerate()
        .map(|(i, c)| Batch::new(i, c.to_vec()))
        .collect()
}

/// Chunk schedule: `ceil(batches / k)` bulk rounds of consecutive batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochPlan {
    pub total_batches: usize,
    pub bulk: usize,
    pub chunks: Vec<Range<usize>>,
}

impl EpochPlan {
    pub fn new(total_batches: usize, bulk: usize) -> Result<Self> {
        if bulk == 0 {
            return Err(Error::InvalidConfig("bulk count must be positive".into()));
        }
        let chunks = (0..total_batches)
            .step_by(bulk)
            .map(|s| s..(s + bulk).min(total_batches))
            .collect();
        Ok(Self {
            total_batches,
            bulk,
            chunks,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sampler: SamplerConfig,
    pub grid: ProcessGrid,
    pub mode: Mode,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: u64,
    pub mode: Mode,
    pub grid: ProcessGrid,
    pub batches_trained: usize,
    pub chunks: usize,
    pub sample_secs: f64,
    pub fetch_secs: f64,
    pub propagate_secs: f64,
    /// Sampling and feature-fetch traffic, per process and phase.
    pub ledger: CommLedger,
    pub spgemm_calls: usize,
    /// Distributed `Q * A` products performed while sampling.
    pub adjacency_products: usize,
    /// Row-data words moved through each process's stage exchanges,
    /// partitioned mode only.
    pub row_data_words: Vec<u64>,
    pub sparsity_violations: usize,
    /// `(batch id, hash of everything sampled for it)`, by batch id.
    pub batch_fingerprints: Vec<(usize, u64)>,
    /// Sum of all forward outputs, in batch order.
    pub output_checksum: f64,
}

/// Stable hash of a batch's sampled layers, for comparing runs.
pub fn fingerprint(sample: &BatchSample) -> u64 {
    let mut h = DefaultHasher::new();
    sample.batch.vertices.hash(&mut h);
    for layer in &sample.layers {
        layer.row_vertices.hash(&mut h);
        layer.column_map.hash(&mut h);
        layer.adjacency.shape().hash(&mut h);
        for (r, c, v) in layer.adjacency.iter() {
            (r, c, v.to_bits()).hash(&mut h);
        }
    }
    h.finish()
}

enum Backend<'a> {
    Replicated(ReplicatedProduct<'a>),
    Partitioned(PartitionedProduct),
}

impl Backend<'_> {
    fn product(&mut self) -> &mut dyn AdjacencyProduct {
        match self {
            Backend::Replicated(b) => b,
            Backend::Partitioned(b) => b,
        }
    }
}

/// Trains (aggregates) every batch of `train` once.
///
/// Within a chunk, batch `m` is handled by process `m % p`; fetching runs
/// in rounds where every process works on one of its batches.
pub fn run_epoch(
    graph: &Graph,
    features: &FeaturePartition,
    cfg: &PipelineConfig,
    train: &[usize],
    epoch: u64,
) -> Result<EpochReport> {
    cfg.sampler.validate()?;
    let grid = cfg.grid;
    if features.grid() != grid {
        return Err(Error::InvalidGrid(
            "feature partition uses a different grid".into(),
        ));
    }
    if features.n() != graph.n() {
        return Err(Error::InvalidConfig(format!(
            "features cover {} vertices, graph has {}",
            features.n(),
            graph.n()
        )));
    }
    let p = grid.p();
    let batches = make_batches(train, cfg.sampler.batch_size);
    let plan = EpochPlan::new(batches.len(), cfg.sampler.bulk_count)?;

    let mut backend = match cfg.mode {
        Mode::Replicated => {
            Backend::Replicated(ReplicatedProduct::new(graph, p, cfg.alpha, cfg.beta)?)
        }
        Mode::Partitioned => {
            Backend::Partitioned(PartitionedProduct::new(graph, grid, cfg.alpha, cfg.beta))
        }
    };
    let mut fetch_ledger = CommLedger::new(p, cfg.alpha, cfg.beta);
    let (mut sample_secs, mut fetch_secs, mut propagate_secs) = (0.0, 0.0, 0.0);
    let mut spgemm_calls = 0;
    let mut trained = 0;
    let mut fingerprints = Vec::with_capacity(batches.len());
    let mut checksum = 0.0;

    for chunk in &plan.chunks {
        let t = Instant::now();
        let sampled = sample_epoch_bulk_with(
            graph,
            &cfg.sampler,
            &batches[chunk.clone()],
            epoch,
            backend.product(),
        )?;
        sample_secs += t.elapsed().as_secs_f64();
        spgemm_calls += sampled.spgemm_calls;
        let samples = sampled.batch_samples();

        for round in samples.chunks(p) {
            let t = Instant::now();
            let mut requests = vec![Vec::new(); p];
            for (rank, s) in round.iter().enumerate() {
                requests[rank] = s.input_vertices().to_vec();
            }
            let fetched = fetch_features_round(&requests, features, &mut fetch_ledger)?;
            fetch_secs += t.elapsed().as_secs_f64();

            let t = Instant::now();
            for (s, h) in round.iter().zip(fetched) {
                let out = propagate(s, h)?;
                checksum += out.sum();
                fingerprints.push((s.batch.id, fingerprint(s)));
                trained += 1;
            }
            propagate_secs += t.elapsed().as_secs_f64();
        }
    }
    fingerprints.sort_unstable();

    let mut ledger = fetch_ledger;
    let (adjacency_products, row_data_words, sparsity_violations) = match &backend {
        Backend::Replicated(b) => {
            ledger.absorb(&b.ledger);
            (b.calls, vec![0; p], 0)
        }
        Backend::Partitioned(b) => {
            ledger.absorb(&b.ledger);
            (b.calls, b.row_data_words.clone(), b.sparsity_violations)
        }
    };

    Ok(EpochReport {
        epoch,
        mode: cfg.mode,
        grid,
        batches_trained: trained,
        chunks: plan.chunks.len(),
        sample_secs,
        fetch_secs,
        propagate_secs,
        ledger,
        spgemm_calls,
        adjacency_products,
        row_data_words,
        sparsity_violations,
        batch_fingerprints: fingerprints,
        output_checksum: checksum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Phase;
    use ndarray::array;

    fn h(n: usize, f: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, f), |(i, j)| (i * f + j) as f64)
    }

    #[test]
    fn partition_reassembles() {
        let m = h(7, 3);
        let part = FeaturePartition::new(&m, ProcessGrid::new(4, 2).unwrap()).unwrap();
        assert_eq!(part.assemble(), m);
        assert_eq!(part.block_of(6), 1);
        assert_eq!(part.local(3), part.local(2));
    }

    #[test]
    fn local_fetch_is_free() {
        let m = h(8, 2);
        let part = FeaturePartition::new(&m, ProcessGrid::new(2, 1).unwrap()).unwrap();
        let mut l = CommLedger::new(2, 1.0, 1.0);
        let got = fetch_features(&[0, 3, 3], 0, &part, &mut l).unwrap();
        assert_eq!(got, array![[0.0, 1.0], [6.0, 7.0], [6.0, 7.0]]);
        assert!(l.is_zero());
    }

    #[test]
    fn one_remote_row() {
        let n = 10;
        let m = h(n, 4);
        let part = FeaturePartition::new(&m, ProcessGrid::new(2, 1).unwrap()).unwrap();
        let mut l = CommLedger::new(2, 1.0, 1.0);
        let got = fetch_features(&[0, n - 1], 0, &part, &mut l).unwrap();
        assert_eq!(got.row(1), m.row(n - 1));
        let t = l.total(Phase::AllToAllv);
        assert_eq!((t.messages, t.words), (1, 4));
    }

    #[test]
    fn fetch_rejects_out_of_range() {
        let part = FeaturePartition::new(&h(4, 1), ProcessGrid::serial()).unwrap();
        let mut l = CommLedger::new(1, 1.0, 1.0);
        assert!(matches!(
            fetch_features(&[4], 0, &part, &mut l),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn aggregate_identity_and_gather() {
        let m = h(3, 2);
        assert_eq!(
            forward_aggregate(&SparseMatrix::identity(3), &m).unwrap(),
            m
        );
        let sel = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(
            forward_aggregate(&sel, &m).unwrap(),
            array![[4.0, 5.0], [0.0, 1.0]]
        );
        assert!(forward_aggregate(&SparseMatrix::identity(2), &m).is_err());
    }

    #[test]
    fn merge_averages_duplicates() {
        let m = array![[1.0], [3.0], [10.0]];
        let out = merge_rows(&[5, 5, 2], &[2, 5], &m).unwrap();
        assert_eq!(out, array![[10.0], [2.0]]);
        assert!(merge_rows(&[5], &[2, 5], &array![[1.0]]).is_err());
    }

    #[test]
    fn plan_covers_every_batch_once() {
        let plan = EpochPlan::new(7, 3).unwrap();
        assert_eq!(plan.chunks, vec![0..3, 3..6, 6..7]);
        assert_eq!(EpochPlan::new(4, 10).unwrap().chunks, vec![0..4]);
        assert!(EpochPlan::new(0, 2).unwrap().chunks.is_empty());
    }
}
