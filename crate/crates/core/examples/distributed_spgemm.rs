// The two distributed products on a simulated grid, with the traffic each
// one records.

use bulksample::dist::{
    replicated_spgemm, spgemm_15d_sparsity_aware, CommLedger, Partition1_5D, Phase, ProcessGrid,
};
use bulksample::sampler::sage_seed_matrix;
use bulksample::sparse::spgemm;
use bulksample::synth::{random_graph, uniform_batches};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = random_graph(4_096, 10, 5)?;
    let q = sage_seed_matrix(&uniform_batches(g.n(), 64, 8, 6), g.n())?;
    let serial = spgemm(&q, g.adjacency())?;

    let rep = replicated_spgemm(
        &Partition1_5D::split(&q, ProcessGrid::new(8, 1)?),
        g.adjacency(),
    )?;
    println!(
        "replicated, p=8: equal = {}, no traffic",
        rep.assemble() == serial
    );

    for c in [1, 2, 4] {
        let grid = ProcessGrid::new(16, c)?;
        let mut ledger = CommLedger::new(grid.p(), 1.0, 1.0);
        let (out, trace) = spgemm_15d_sparsity_aware(
            &Partition1_5D::split(&q, grid),
            &Partition1_5D::split(g.adjacency(), grid),
            &mut ledger,
        )?;
        println!(
            "1.5D p=16 c={c}: equal = {}, {} stages, sparsity-aware = {}",
            out.assemble() == serial,
            grid.stages(),
            trace.is_sparsity_aware()
        );
        for phase in Phase::ALL {
            let t = ledger.total(phase);
            println!(
                "    {:<12} {:>6} messages {:>8} words",
                phase.name(),
                t.messages,
                t.words
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
