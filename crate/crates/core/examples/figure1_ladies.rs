// LADIES on the six-vertex example graph: probabilities for batch {1, 5}
// and a few seeded samples.

use bulksample::sampler::{ladies_seed_matrix, sample_epoch_bulk, Batch, SamplerConfig};
use bulksample::sparse::{norm_rows_ladies, spgemm};
use bulksample::synth::figure1_graph;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = figure1_graph();
    let batch = vec![1, 5];

    let q = ladies_seed_matrix(std::slice::from_ref(&batch), g.n())?;
    let counts = spgemm(&q, g.adjacency())?;
    let probs = norm_rows_ladies(&counts)?;
    println!("neighbor counts: {:?}", counts.to_dense());
    println!("probabilities:   {:.4?}", probs.to_dense());

    for seed in 0..4 {
        let cfg = SamplerConfig::ladies(2, 1, batch.len(), 1, seed);
        let out = sample_epoch_bulk(&g, &cfg, &[Batch::new(0, batch.clone())], 0)?;
        let layer = &out.layers[0].batches[0];
        println!(
            "seed {seed}: sampled {:?}, adjacency rows {:?} x cols {:?} = {:?}",
            layer.column_map,
            layer.row_vertices,
            layer.column_map,
            layer.adjacency.to_dense()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
