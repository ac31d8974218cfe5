// Samples several GraphSAGE minibatches in one pass and shows that the
// result matches sampling them one at a time.

use bulksample::sampler::{sample_epoch_bulk, Batch, SamplerConfig};
use bulksample::synth::{random_graph, uniform_batches};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = random_graph(5_000, 12, 1)?;
    let (k, b) = (8, 32);
    let fanouts = vec![10, 5];
    let batches = Batch::enumerate(&uniform_batches(g.n(), b, k, 2));

    let cfg = SamplerConfig::graphsage(fanouts.clone(), b, k, 42);
    let bulk = sample_epoch_bulk(&g, &cfg, &batches, 0)?;
    for t in 0..=fanouts.len() {
        println!("depth {t}: {} frontier rows", bulk.frontier_rows(t));
    }

    let single = SamplerConfig::graphsage(fanouts, b, 1, 42);
    let mut calls = 0;
    let mut samples = Vec::new();
    for batch in &batches {
        let one = sample_epoch_bulk(&g, &single, std::slice::from_ref(batch), 0)?;
        calls += one.spgemm_calls;
        samples.extend(one.batch_samples());
    }
    println!(
        "bulk: {} products, one at a time: {calls}, identical output: {}",
        bulk.spgemm_calls,
        bulk.batch_samples() == samples
    );

    let first = &bulk.batch_samples()[0];
    for (t, layer) in first.layers.iter().enumerate() {
        println!(
            "batch 0 layer {t}: {} x {} sampled adjacency, {} edges",
            layer.adjacency.n_rows(),
            layer.adjacency.n_cols(),
            layer.adjacency.nnz()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
