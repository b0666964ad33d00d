//! Exact answers for small models: enumeration for anything up to 2^20
//! states, dynamic programming for trees of any size.
//!
//! cargo run --example tree_oracle

use tcbo::model::gen_spin_glass;
use tcbo::oracle::{brute_force, tree_dp};
use tcbo::Mode;

fn main() -> tcbo::Result<()> {
    let grid = gen_spin_glass(4, 4, 9.0, 1.0, 3)?;
    let exact = brute_force(&grid)?;
    println!("4x4 glass: log Z {:.6}, MAP {:.6} at {:?}", exact.log_partition, exact.map_value, exact.map_assignment.values());

    // A 1x12 glass is a chain, so the tree DP handles it directly.
    let chain = gen_spin_glass(1, 12, 9.0, 1.0, 3)?.pairwise()?;
    let sum = tree_dp(&chain.unary, &chain.edges, Mode::Sum)?;
    let max = tree_dp(&chain.unary, &chain.edges, Mode::Max)?;
    println!("1x12 chain: log Z {:.6}, MAP {:.6}", sum.value, max.value);
    Ok(())
}
