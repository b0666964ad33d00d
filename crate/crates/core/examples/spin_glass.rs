//! Generates the 10x10 spin glass used in the experiments and scores a few
//! assignments.
//!
//! cargo run --example spin_glass -- [seed]

use tcbo::model::SpinGlassParams;
use tcbo::Assignment;

fn main() -> tcbo::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let params = SpinGlassParams { rows: 10, cols: 10, coupling_half_width: 9.0, field_half_width: 1.0, seed };
    let model = params.generate()?;
    println!("seed {seed}: {} vars, {} factors", model.var_count(), model.factors().len());

    let n = model.var_count();
    let all_down = Assignment(vec![0; n]);
    let all_up = Assignment(vec![1; n]);
    let checker = Assignment((0..n).map(|v| (v / 10 + v % 10) % 2).collect());
    for (name, x) in [("all down", all_down), ("all up", all_up), ("checkerboard", checker)] {
        println!("{name:>12}: energy {:.4}", model.energy(&x)?);
    }
    Ok(())
}
