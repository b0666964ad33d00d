//! MPLP is max-product Heskes on the star/edge region graph. Running both in
//! lockstep and mapping the Heskes messages through the transform gives the
//! MPLP messages back.
//!
//! cargo run --example mplp_as_heskes

use tcbo::model::gen_spin_glass;
use tcbo::region_graph::build_star_edge;
use tcbo::solvers::{heskes_to_mplp_transform, HeskesSolver, MplpSolver, SolverConfig};
use tcbo::Mode;

fn main() -> tcbo::Result<()> {
    let model = gen_spin_glass(2, 2, 9.0, 1.0, 7)?;
    let config = SolverConfig::new(Mode::Max);
    let graph = build_star_edge(&model)?;
    let mut heskes = HeskesSolver::new(&graph, &model, &config)?;
    let mut mplp = MplpSolver::new(&model, &config)?;

    for sweep in 1..=5 {
        for beta in graph.intersections() {
            heskes.update_region(beta);
        }
        for e in 0..model.pairwise()?.edges.len() {
            mplp.update_edge(e);
        }
        println!(
            "sweep {sweep}: heskes bound {:.9}, mplp bound {:.9}",
            heskes.ledger().bound_max(),
            mplp.ledger().bound_max()
        );
    }

    let theta = [2.0, 0.0, 0.0, 2.0];
    println!("transform of zero messages on [[2,0],[0,2]]: {:?}", heskes_to_mplp_transform(&[0.0; 4], &theta, 2));
    Ok(())
}
