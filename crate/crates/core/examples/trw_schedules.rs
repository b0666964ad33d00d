//! Same TRW messages, two schedules. Sequential forward-backward updates
//! (TRW-S) lower the log-partition bound every sweep; updating all outgoing
//! messages on a forward scan does not.
//!
//! cargo run --release --example trw_schedules

use tcbo::model::gen_spin_glass;
use tcbo::region_graph::build_grid_chain_decomposition;
use tcbo::solvers::{run_trw_forward, run_trws, SolverConfig};
use tcbo::Mode;

fn main() -> tcbo::Result<()> {
    let model = gen_spin_glass(10, 10, 9.0, 1.0, 42)?;
    let chains = build_grid_chain_decomposition(&model, 10, 10)?;
    let config = SolverConfig::new(Mode::Sum).with_max_iters(60);

    let seq = run_trws(&model, &chains, &config)?;
    let fwd = run_trw_forward(&model, &chains, &config)?;

    println!("sweep {:>14} {:>14}", "trws", "trw-forward");
    for (a, b) in seq.records.iter().zip(&fwd.records).step_by(5) {
        println!("{:>5} {:>14.6} {:>14.6}", a.sweep, a.bound, b.bound);
    }
    println!("trws rises at {:?}", seq.increases(1e-9));
    println!("trw-forward rises at {:?}", fwd.increases(1e-9));
    Ok(())
}
