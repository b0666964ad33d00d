//! Helpers shared by the integration tests: random tree-shaped models and an
//! enumeration written independently of the library's oracle.

#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcbo::{DiscreteModel, Factor};

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn random_table(rng: &mut ChaCha8Rng, len: usize, width: f64) -> Vec<f64> {
    (0..len).map(|_| uniform(rng, -width, width)).collect()
}

/// Chain `0 - 1 - ... - (len-1)` with cardinalities in {2, 3}, random unary
/// and pairwise tables; every other pairwise factor is stored reversed.
pub fn random_chain(len: usize, seed: u64) -> DiscreteModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = (0..len).map(|_| 2 + (rng.next_u64() % 2) as usize).collect();
    let mut factors = Vec::new();
    for v in 0..len.saturating_sub(1) {
        let scope = if v % 2 == 0 { vec![v, v + 1] } else { vec![v + 1, v] };
        let n = cards[v] * cards[v + 1];
        factors.push(Factor::new(scope, random_table(&mut rng, n, 2.0)));
    }
    for (v, &c) in cards.iter().enumerate() {
        factors.push(Factor::new(vec![v], random_table(&mut rng, c, 1.0)));
    }
    DiscreteModel::new(cards, factors).unwrap()
}

/// Random forest: each node after the first attaches to an earlier node with
/// probability `attach`, otherwise starts a new component.
pub fn random_forest(n: usize, max_card: usize, attach: f64, seed: u64) -> DiscreteModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = (0..n).map(|_| 2 + (rng.next_u64() % (max_card as u64 - 1)) as usize).collect();
    let mut factors = Vec::new();
    for v in 1..n {
        if uniform(&mut rng, 0.0, 1.0) < attach {
            let u = (rng.next_u64() % v as u64) as usize;
            let scope = if rng.next_u64() % 2 == 0 { vec![u, v] } else { vec![v, u] };
            factors.push(Factor::new(scope, random_table(&mut rng, cards[u] * cards[v], 2.0)));
        }
    }
    for (v, &c) in cards.iter().enumerate() {
        factors.push(Factor::new(vec![v], random_table(&mut rng, c, 1.0)));
    }
    DiscreteModel::new(cards, factors).unwrap()
}

/// Exact `(log Z, max energy)` by walking every assignment and reading each
/// factor's table directly.
pub fn enumerate(model: &DiscreteModel) -> (f64, f64) {
    let cards = model.cardinalities();
    let total: usize = cards.iter().product();
    let mut energies = Vec::with_capacity(total);
    for code in 0..total {
        let mut x = vec![0; cards.len()];
        let mut rest = code;
        for v in (0..cards.len()).rev() {
            x[v] = rest % cards[v];
            rest /= cards[v];
        }
        let e: f64 = model
            .factors()
            .iter()
            .map(|f| {
                let mut idx = 0;
                for &v in &f.scope {
                    idx = idx * cards[v] + x[v];
                }
                f.table[idx]
            })
            .sum();
        energies.push(e);
    }
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + energies.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
    (log_z, max)
}
