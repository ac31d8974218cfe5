// Bulk LADIES: one probability product per layer for all batches, and the
// block-diagonal extraction that yields a stacked kb x s matrix.

use bulksample::sampler::{sample_epoch_bulk, Batch, SamplerConfig};
use bulksample::synth::{regular_graph, uniform_batches};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = regular_graph(8_192, 16, 3)?;
    let (k, b, s) = (6, 64, 128);
    let batches = Batch::enumerate(&uniform_batches(g.n(), b, k, 4));
    let cfg = SamplerConfig::ladies(s, 3, b, k, 7);
    let out = sample_epoch_bulk(&g, &cfg, &batches, 0)?;

    for layer in &out.layers {
        let stacked = layer.stacked_adjacency.as_ref().expect("LADIES layer");
        println!(
            "depth {}: {} input rows, stacked extraction {} x {}, {} edges",
            layer.depth,
            layer.input_rows,
            stacked.n_rows(),
            stacked.n_cols(),
            stacked.nnz()
        );
    }
    println!("{} sparse products for {k} batches", out.spgemm_calls);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
