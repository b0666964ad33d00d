//! Discrete factor models in log-potential (energy) form.
//!
//! A model is a list of variables with finite domains and a list of factors.
//! Each factor carries a dense table `θ_α(x_α)` indexed row-major with the
//! last scope variable fastest. The energy of a full assignment is the sum of
//! the factor entries it selects; the unnormalized probability is
//! `exp(energy)`.

mod io;
mod spin_glass;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::strides;

pub use io::{load_model, read_model, save_model, write_model, MODEL_HEADER};
pub use spin_glass::{gen_spin_glass, grid_edges, SpinGlassParams};

/// One factor: an ordered scope and its log-potential table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, table: Vec<f64>) -> Self {
        Self { scope, table }
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }
}

/// A full assignment, one state per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Assignment {
    fn from(values: Vec<usize>) -> Self {
        Assignment(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    cardinalities: Vec<usize>,
    factors: Vec<Factor>,
}

impl DiscreteModel {
    /// Validates scopes and table sizes. Factors over the same variable set
    /// are merged into the first one (tables permuted into its scope order
    /// and added).
    pub fn new(cardinalities: Vec<usize>, factors: Vec<Factor>) -> Result<Self> {
        if let Some(k) = cardinalities.iter().position(|&c| c < 2) {
            return Err(Error::InvalidInput(format!(
                "variable {k} has cardinality {} (must be at least 2)",
                cardinalities[k]
            )));
        }
        let n = cardinalities.len();
        let mut merged: Vec<Factor> = Vec::with_capacity(factors.len());
        let mut by_set: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (fi, factor) in factors.into_iter().enumerate() {
            if factor.scope.is_empty() {
                return Err(Error::InvalidInput(format!("factor {fi} has an empty scope")));
            }
            if let Some(&v) = factor.scope.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidInput(format!(
                    "factor {fi} references variable {v} but the model has {n} variables"
                )));
            }
            let mut set = factor.scope.clone();
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!("factor {fi} repeats a variable in its scope")));
            }
            let expected: usize = factor.scope.iter().map(|&v| cardinalities[v]).product();
            if factor.table.len() != expected {
                return Err(Error::DimensionMismatch(format!(
                    "factor {fi} table has {} entries, scope cardinalities require {expected}",
                    factor.table.len()
                )));
            }
            if factor.table.iter().any(|t| !t.is_finite()) {
                return Err(Error::InvalidInput(format!("factor {fi} has a non-finite entry")));
            }
            match by_set.get(&set) {
                Some(&target) => {
                    let permuted = permute_table(&factor, &merged[target].scope, &cardinalities);
                    for (a, b) in merged[target].table.iter_mut().zip(permuted) {
                        *a += b;
                    }
                }
                None => {
                    by_set.insert(set, merged.len());
                    merged.push(factor);
                }
            }
        }
        Ok(Self { cardinalities, factors: merged })
    }

    pub fn var_count(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// `Σ_α θ_α(x_α)`.
    pub fn energy(&self, x: &Assignment) -> Result<f64> {
        self.check_assignment(x)?;
        Ok(self.energy_unchecked(x.values()))
    }

    pub(crate) fn energy_unchecked(&self, x: &[usize]) -> f64 {
        self.factors
            .iter()
            .map(|f| f.table[self.factor_index(f, x)])
            .sum()
    }

    pub fn check_assignment(&self, x: &Assignment) -> Result<()> {
        if x.0.len() != self.var_count() {
            return Err(Error::InvalidInput(format!(
                "assignment has {} values, model has {} variables",
                x.0.len(),
                self.var_count()
            )));
        }
        if let Some(v) = (0..x.0.len()).find(|&v| x.0[v] >= self.cardinalities[v]) {
            return Err(Error::InvalidInput(format!(
                "variable {v} set to {} but its cardinality is {}",
                x.0[v], self.cardinalities[v]
            )));
        }
        Ok(())
    }

    /// Flat table index of `factor` at the restriction of `x` to its scope.
    pub fn factor_index(&self, factor: &Factor, x: &[usize]) -> usize {
        factor
            .scope
            .iter()
            .fold(0, |acc, &v| acc * self.cardinalities[v] + x[v])
    }

    /// Number of joint assignments, as a float so huge models do not overflow.
    pub fn state_space_size(&self) -> f64 {
        self.cardinalities.iter().map(|&c| c as f64).product()
    }

    pub fn max_arity(&self) -> usize {
        self.factors.iter().map(Factor::arity).max().unwrap_or(0)
    }

    /// Unary and pairwise view of the model; fails for higher-order factors.
    pub fn pairwise(&self) -> Result<PairwiseModel> {
        PairwiseModel::from_model(self)
    }
}

/// Reorders `factor.table` to follow `target_scope` (same variable set).
fn permute_table(factor: &Factor, target_scope: &[usize], cards: &[usize]) -> Vec<f64> {
    let target_cards: Vec<usize> = target_scope.iter().map(|&v| cards[v]).collect();
    let src_cards: Vec<usize> = factor.scope.iter().map(|&v| cards[v]).collect();
    let src_strides = strides(&src_cards);
    // position of each target variable in the source scope
    let pos: Vec<usize> = target_scope
        .iter()
        .map(|v| factor.scope.iter().position(|s| s == v).expect("same variable set"))
        .collect();
    let mut out = Vec::with_capacity(factor.table.len());
    let mut x = vec![0; target_scope.len()];
    loop {
        let src: usize = x.iter().enumerate().map(|(k, &s)| s * src_strides[pos[k]]).sum();
        out.push(factor.table[src]);
        if !crate::math::next_assignment(&mut x, &target_cards) {
            break;
        }
    }
    out
}

/// A model edge `(i, j)` with its table oriented `(x_i, x_j)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEdge {
    pub i: usize,
    pub j: usize,
    pub table: Vec<f64>,
}

impl PairEdge {
    pub fn at(&self, xi: usize, xj: usize, card_j: usize) -> f64 {
        self.table[xi * card_j + xj]
    }
}

/// Unary/pairwise view: node potentials, edges in factor order and adjacency
/// lists of `(neighbor, edge index)`.
#[derive(Debug, Clone)]
pub struct PairwiseModel {
    pub cards: Vec<usize>,
    pub unary: Vec<Vec<f64>>,
    pub edges: Vec<PairEdge>,
    pub adjacency: Vec<Vec<(usize, usize)>>,
}

impl PairwiseModel {
    pub fn from_model(model: &DiscreteModel) -> Result<Self> {
        let cards = model.cardinalities().to_vec();
        let mut unary: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); cards.len()];
        for factor in model.factors() {
            match factor.scope.as_slice() {
                [v] => {
                    for (u, t) in unary[*v].iter_mut().zip(&factor.table) {
                        *u += t;
                    }
                }
                [i, j] => {
                    let e = edges.len();
                    adjacency[*i].push((*j, e));
                    adjacency[*j].push((*i, e));
                    edges.push(PairEdge { i: *i, j: *j, table: factor.table.clone() });
                }
                _ => {
                    return Err(Error::UnsupportedStructure(format!(
                        "factor over {:?} has arity {} (only unary and pairwise factors are supported)",
                        factor.scope,
                        factor.arity()
                    )))
                }
            }
        }
        Ok(Self { cards, unary, edges, adjacency })
    }

    pub fn var_count(&self) -> usize {
        self.cards.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Edge index for the unordered pair, if the model has that edge.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|(n, _)| *n == b).map(|&(_, e)| e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unary(v: usize, t: Vec<f64>) -> Factor {
        Factor::new(vec![v], t)
    }

    #[test]
    fn energy_reads_tables() {
        let m = DiscreteModel::new(vec![2], vec![unary(0, vec![0.0, 0.0])]).unwrap();
        assert_eq!(m.energy(&Assignment(vec![0])).unwrap(), 0.0);
        let m = DiscreteModel::new(vec![2], vec![unary(0, vec![1.5, -2.0])]).unwrap();
        assert_eq!(m.energy(&Assignment(vec![1])).unwrap(), -2.0);
    }

    #[test]
    fn energy_rejects_bad_assignments() {
        let m = DiscreteModel::new(vec![2, 3], vec![]).unwrap();
        assert!(matches!(m.energy(&Assignment(vec![0, 3])), Err(Error::InvalidInput(_))));
        assert!(matches!(m.energy(&Assignment(vec![0])), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn construction_validates_factors() {
        let bad_len = DiscreteModel::new(vec![2, 2], vec![Factor::new(vec![0, 1], vec![0.0; 3])]);
        assert!(matches!(bad_len, Err(Error::DimensionMismatch(_))));
        let dup = DiscreteModel::new(vec![2, 2], vec![Factor::new(vec![1, 1], vec![0.0; 4])]);
        assert!(matches!(dup, Err(Error::InvalidInput(_))));
        let range = DiscreteModel::new(vec![2], vec![unary(3, vec![0.0, 0.0])]);
        assert!(matches!(range, Err(Error::InvalidInput(_))));
        let nan = DiscreteModel::new(vec![2], vec![unary(0, vec![f64::NAN, 0.0])]);
        assert!(matches!(nan, Err(Error::InvalidInput(_))));
        let card = DiscreteModel::new(vec![1], vec![]);
        assert!(matches!(card, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn duplicate_scopes_merge_with_permutation() {
        // θ(x0, x1) on cards (2, 3) and a second factor over (x1, x0)
        let a = Factor::new(vec![0, 1], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = Factor::new(vec![1, 0], vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0]);
        let m = DiscreteModel::new(vec![2, 3], vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(m.factors().len(), 1);
        let separate = DiscreteModel::new(vec![2, 3], vec![a]).unwrap();
        let other = DiscreteModel::new(vec![2, 3], vec![b]).unwrap();
        for x0 in 0..2 {
            for x1 in 0..3 {
                let x = Assignment(vec![x0, x1]);
                let want = separate.energy(&x).unwrap() + other.energy(&x).unwrap();
                assert_eq!(m.energy(&x).unwrap(), want);
            }
        }
    }

    #[test]
    fn pairwise_view_rejects_triples() {
        let m = DiscreteModel::new(vec![2, 2, 2], vec![Factor::new(vec![0, 1, 2], vec![0.0; 8])]).unwrap();
        assert!(matches!(m.pairwise(), Err(Error::UnsupportedStructure(_))));
    }
}
