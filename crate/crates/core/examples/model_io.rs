//! Writes a model in the plain-text format, reads it back and checks the
//! round trip.
//!
//! cargo run --example model_io

use tcbo::model::{gen_spin_glass, read_model, write_model};
use tcbo::{DiscreteModel, Factor};

fn main() -> tcbo::Result<()> {
    let small = DiscreteModel::new(
        vec![2, 3],
        vec![Factor::new(vec![0, 1], vec![0.5, -1.0, 0.0, 2.0, 0.25, -0.5]), Factor::new(vec![1], vec![0.1, 0.2, 0.3])],
    )?;
    let mut text = Vec::new();
    write_model(&small, &mut text)?;
    print!("{}", String::from_utf8_lossy(&text));

    let glass = gen_spin_glass(5, 5, 9.0, 1.0, 11)?;
    let mut buf = Vec::new();
    write_model(&glass, &mut buf)?;
    let back = read_model(buf.as_slice())?;
    println!("5x5 glass: {} bytes, round trip exact: {}", buf.len(), back == glass);
    Ok(())
}
