//! Runs MSD, MPLP and max-product Heskes on one spin glass. All three descend
//! the same MAP bound and settle on the same value.
//!
//! cargo run --release --example map_bounds

use tcbo::model::gen_spin_glass;
use tcbo::region_graph::build_pair_singleton;
use tcbo::solvers::{run_heskes, run_mplp, run_msd, SolverConfig};
use tcbo::Mode;

fn main() -> tcbo::Result<()> {
    let model = gen_spin_glass(10, 10, 9.0, 1.0, 42)?;
    let config = SolverConfig::new(Mode::Max).with_max_iters(500);

    let msd_graph = build_pair_singleton(&model, 1.0, 1.0)?;
    let heskes_graph = build_pair_singleton(&model, 1.0, 0.0)?;
    let traces = [
        run_msd(&msd_graph, &model, &config)?,
        run_mplp(&model, &config)?,
        run_heskes(&heskes_graph, &model, &config)?,
    ];

    for t in &traces {
        let decoded = t.decoded.as_ref().map_or(f64::NAN, |d| d.energy);
        println!(
            "{:>6}: bound {:.6} after {} sweeps ({}), decoded energy {:.4}, rises {}",
            t.algorithm.name(),
            t.final_bound(),
            t.records.len() - 1,
            t.termination,
            decoded,
            t.increases(1e-9).len()
        );
    }
    Ok(())
}
