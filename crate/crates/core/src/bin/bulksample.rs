use std::process::ExitCode;

use bulksample::io::{run, RunConfig};
use clap::Parser;

/// Bulk-sample minibatches, fetch features and aggregate, for every epoch.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.run) {
        Ok(reports) => {
            for r in &reports {
                println!(
                    "epoch {}: {} batches in {} chunks, {} words moved, sample {:.3}s fetch {:.3}s propagate {:.3}s",
                    r.epoch,
                    r.batches_trained,
                    r.chunks,
                    r.ledger.total_words(),
                    r.sample_secs,
                    r.fetch_secs,
                    r.propagate_secs
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
