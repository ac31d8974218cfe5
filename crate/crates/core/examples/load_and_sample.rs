// Loads an edge list, runs two epochs through the same entry point as the
// command-line tool and prints the stats it appended.

use std::fs;

use bulksample::io::{run, write_matrix_market, Format, RunConfig};
use bulksample::pipeline::Mode;
use bulksample::synth::random_graph;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let graph = dir.path().join("graph.mtx");
    write_matrix_market(&random_graph(500, 8, 2)?, &graph)?;

    let mut cfg = RunConfig::new(&graph);
    cfg.format = Format::MatrixMarket;
    cfg.batch_size = 32;
    cfg.fanouts = vec![5, 5];
    cfg.bulk = 4;
    cfg.processes = 4;
    cfg.replication = 2;
    cfg.mode = Mode::Partitioned;
    cfg.epochs = 2;
    cfg.stats = Some(dir.path().join("stats.jsonl"));

    for r in run(&cfg)? {
        println!("epoch {}: {} batches", r.epoch, r.batches_trained);
    }
    let stats = fs::read_to_string(cfg.stats.as_ref().expect("stats path"))?;
    for line in stats.lines().filter(|l| !l.contains("\"kind\":\"comm\"")) {
        println!("{line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
