//! Bulk minibatch sampling for graph neural networks, expressed as sparse
//! matrix products.
//!
//! - [`sparse`]: CSR matrices, SpGEMM, normalization and the extraction
//!   matrices used by the samplers.
//! - [`sampler`]: GraphSAGE and LADIES sampling of `k` minibatches at once,
//!   with per-row seeded randomness.
//! - [`dist`]: a deterministic simulator of `p` processes on a 1.5D grid,
//!   the graph-replicated and sparsity-aware 1.5D products, a communication
//!   ledger and the alpha-beta cost model.
//! - [`pipeline`]: the epoch driver (bulk sampling, feature fetching,
//!   aggregation).
//! - [`io`]: graph files, synthetic features, run configuration and the
//!   stats output.
//! - [`synth`]: seeded synthetic graphs.
//!
//! ```
//! use bulksample::sampler::{sample_epoch_bulk, Batch, SamplerConfig};
//! use bulksample::synth::figure1_graph;
//!
//! let g = figure1_graph();
//! let cfg = SamplerConfig::ladies(2, 1, 2, 1, 7);
//! let out = sample_epoch_bulk(&g, &cfg, &[Batch::new(0, vec![1, 5])], 0).unwrap();
//! assert_eq!(out.layers[0].stacked_adjacency.as_ref().unwrap().shape(), (2, 2));
//! ```

pub mod dist;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod sampler;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
