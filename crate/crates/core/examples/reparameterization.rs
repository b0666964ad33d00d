//! Messages move potential between regions without changing the total
//! energy. Any message values keep `Σ θ̃_α(x_α) = θ(x)`; solvers only pick
//! values that tighten the bound.
//!
//! cargo run --example reparameterization

use tcbo::model::gen_spin_glass;
use tcbo::region_graph::build_pair_singleton;
use tcbo::reparam::random_probes;
use tcbo::solvers::MsdSolver;
use tcbo::{MessageLedger, Mode, SolverConfig};

fn main() -> tcbo::Result<()> {
    let model = gen_spin_glass(3, 3, 9.0, 1.0, 1)?;
    let graph = build_pair_singleton(&model, 1.0, 1.0)?;
    let probes = random_probes(&model, 32, 0);

    let mut ledger = MessageLedger::new(&graph);
    println!("zero messages: bound_max {:.4}, bound_sum {:.4}", ledger.bound_max(), ledger.bound_sum());
    for e in 0..graph.edges().len() {
        let len = graph.region(graph.edge(e).child).table_len();
        ledger.set_message(e, (0..len).map(|k| (e + 3 * k) as f64 % 5.0 - 2.0).collect())?;
    }
    println!(
        "arbitrary messages: bound_max {:.4}, admissibility residual {:.1e}",
        ledger.bound_max(),
        ledger.admissibility_residual(&model, &probes)
    );

    let mut msd = MsdSolver::new(&graph, &model, &SolverConfig::new(Mode::Max))?;
    for sweep in 1..=3 {
        for e in 0..graph.edges().len() {
            msd.update_edge(e);
        }
        let l = msd.ledger();
        println!(
            "msd sweep {sweep}: bound_max {:.4}, max-consistency residual {:.2e}, admissibility residual {:.1e}",
            l.bound_max(),
            l.consistency_residual(Mode::Max),
            l.admissibility_residual(&model, &probes)
        );
    }
    Ok(())
}
