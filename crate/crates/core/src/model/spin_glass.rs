//! Random Ising spin glasses on a 4-neighbor grid.
//!
//! Spins are `s(0) = -1`, `s(1) = +1`. Each grid edge gets
//! `θ_ij(x_i, x_j) = J_ij s(x_i) s(x_j)` and each node gets
//! `θ_i(x_i) = h_i s(x_i)`.
//!
//! Random numbers come from `ChaCha8Rng::seed_from_u64(seed)`. Each uniform
//! draw consumes one `next_u64` and maps its top 53 bits to `[0, 1)`, then
//! scales to `[-w, w)`. The stream is consumed in a fixed order: all couplings
//! in [`grid_edges`] order, then all fields in variable order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DiscreteModel, Factor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinGlassParams {
    pub rows: usize,
    pub cols: usize,
    pub coupling_half_width: f64,
    pub field_half_width: f64,
    pub seed: u64,
}

/// Grid edges in row-major order: for each node `(r, c)`, its right neighbor
/// then its lower neighbor. Variables are numbered `r * cols + c`.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    edges
}

fn uniform(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    half_width * (2.0 * u - 1.0)
}

fn spin(x: usize) -> f64 {
    if x == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Pairwise factors come first (grid edge order), then one unary factor per
/// variable.
pub fn gen_spin_glass(
    rows: usize,
    cols: usize,
    coupling_half_width: f64,
    field_half_width: f64,
    seed: u64,
) -> Result<DiscreteModel> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput(format!("grid must be at least 1x1, got {rows}x{cols}")));
    }
    if !(coupling_half_width >= 0.0 && field_half_width >= 0.0)
        || !coupling_half_width.is_finite()
        || !field_half_width.is_finite()
    {
        return Err(Error::InvalidInput("half widths must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows * cols;
    let mut factors = Vec::new();
    for (i, j) in grid_edges(rows, cols) {
        let coupling = uniform(&mut rng, coupling_half_width);
        let mut table = Vec::with_capacity(4);
        for xi in 0..2 {
            for xj in 0..2 {
                table.push(coupling * spin(xi) * spin(xj));
            }
        }
        factors.push(Factor::new(vec![i, j], table));
    }
    for v in 0..n {
        let field = uniform(&mut rng, field_half_width);
        factors.push(Factor::new(vec![v], vec![-field, field]));
    }
    DiscreteModel::new(vec![2; n], factors)
}

impl SpinGlassParams {
    pub fn generate(&self) -> Result<DiscreteModel> {
        gen_spin_glass(self.rows, self.cols, self.coupling_half_width, self.field_half_width, self.seed)
    }
}
