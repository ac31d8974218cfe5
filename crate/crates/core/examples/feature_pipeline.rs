// One training epoch: bulk sampling in chunks, feature fetching inside
// process columns, and aggregation.

use bulksample::dist::{Phase, ProcessGrid};
use bulksample::io::{synthesize_features, training_vertices};
use bulksample::pipeline::{run_epoch, FeaturePartition, Mode, PipelineConfig};
use bulksample::sampler::SamplerConfig;
use bulksample::synth::random_graph;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = random_graph(3_000, 10, 8)?;
    let grid = ProcessGrid::new(8, 2)?;
    let features = FeaturePartition::new(&synthesize_features(g.n(), 32, 1)?, grid)?;
    let train = training_vertices(g.n(), 1, None)?[..1_000].to_vec();

    for mode in [Mode::Replicated, Mode::Partitioned] {
        let cfg = PipelineConfig {
            sampler: SamplerConfig::graphsage(vec![10, 5], 64, 4, 3),
            grid,
            mode,
            alpha: 1.0,
            beta: 1.0,
        };
        let r = run_epoch(&g, &features, &cfg, &train, 0)?;
        println!(
            "{mode:?}: {} batches in {} chunks, checksum {:.6}",
            r.batches_trained, r.chunks, r.output_checksum
        );
        for phase in Phase::ALL {
            println!(
                "    {:<12} {:>8} words",
                phase.name(),
                r.ledger.total(phase).words
            );
        }
        println!(
            "    sample {:.3}s, fetch {:.3}s, propagate {:.3}s",
            r.sample_secs, r.fetch_secs, r.propagate_secs
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
