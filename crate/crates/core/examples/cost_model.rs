// Alpha-beta predictions for the probability product next to the words
// the simulator measures on a regular graph.

use bulksample::dist::{
    predict_costs, spgemm_15d_sparsity_aware, CommLedger, CostModelParams, Partition1_5D, Phase,
    ProcessGrid,
};
use bulksample::sampler::sage_seed_matrix;
use bulksample::synth::{regular_graph, uniform_batches};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (n, d, p, k, b) = (1 << 14, 16, 16, 16, 64);
    let g = regular_graph(n, d, 1)?;
    let q = sage_seed_matrix(&uniform_batches(n, b, k, 2), n)?;

    println!("  c  model rowdata  measured  model allreduce  measured  T_prob");
    for c in [1, 2, 4] {
        let grid = ProcessGrid::new(p, c)?;
        let pred = predict_costs(&CostModelParams {
            p: p as f64,
            c: c as f64,
            k: k as f64,
            b: b as f64,
            s: 1.0,
            d: d as f64,
            alpha: 1.0,
            beta: 1.0,
        })?;
        let mut ledger = CommLedger::new(p, 1.0, 1.0);
        let (_, trace) = spgemm_15d_sparsity_aware(
            &Partition1_5D::split(&q, grid),
            &Partition1_5D::split(g.adjacency(), grid),
            &mut ledger,
        )?;
        let rowdata = trace.row_data_words_per_process().iter().sum::<u64>() as f64 / p as f64;
        let allreduce = (0..p)
            .map(|r| ledger.received(r, Phase::AllReduce).words)
            .sum::<u64>() as f64
            / p as f64;
        println!(
            "{c:>3}  {:>13.0}  {rowdata:>8.0}  {:>15.0}  {allreduce:>8.0}  {:>6.0}",
            pred.rowdata_bandwidth, pred.allreduce_bandwidth, pred.t_prob
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
