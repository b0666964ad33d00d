//! Reparameterizations held as messages on region-graph edges.
//!
//! The ledger stores one log-domain table `m_e(x_β)` per edge `e = (α, β)`
//! and derives every region's potential as
//!
//! ```text
//! θ̃_β(x_β) = theta0_β(x_β) + Σ_{α ⊃ β} m_{α→β}(x_β) − Σ_{γ ⊂ β} m_{β→γ}(x_γ)
//! ```
//!
//! Each message is added once and subtracted once, so `Σ_α θ̃_α(x_α)` equals
//! `Σ_α theta0_α(x_α) = θ(x)` for any message values. Solvers only ever edit
//! messages, never `θ̃` directly.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{max_value, normalize_log, shift_max_to_zero, soft_max};
use crate::model::{Assignment, DiscreteModel, PairEdge};
use crate::oracle::tree_dp;
use crate::region_graph::{RegionGraph, TreeDecomposition};
use crate::Mode;

/// Probe count for [`trw_bound`]'s constant.
pub const TRW_PROBES: usize = 32;
/// Largest allowed spread of the probe differences in [`trw_bound`].
pub const TRW_PROBE_TOLERANCE: f64 = 1e-6;

/// A region's belief `b_α ∝ exp(θ̃_α / c_α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub region: usize,
    pub probs: Vec<f64>,
}

/// `exp(θ̃ / c)` normalized, computed with a max shift. At `c = 0` this is
/// the uniform distribution over the maximizers of `θ̃`.
pub fn belief(theta: &[f64], c: f64) -> Vec<f64> {
    if c > 0.0 {
        let scaled: Vec<f64> = theta.iter().map(|t| t / c).collect();
        normalize_log(&scaled)
    } else {
        let max = max_value(theta);
        let count = theta.iter().filter(|&&t| t == max).count() as f64;
        theta.iter().map(|&t| if t == max { 1.0 / count } else { 0.0 }).collect()
    }
}

/// Projects a parent potential onto a child: `c · ln Σ exp(θ/c)` over the
/// eliminated variables in sum mode with `c > 0`, plain max otherwise.
pub(crate) fn project_potential(table: &[f64], map: &[usize], child_len: usize, mode: Mode, c: f64) -> Vec<f64> {
    let mut max = vec![f64::NEG_INFINITY; child_len];
    for (&t, &k) in table.iter().zip(map) {
        if t > max[k] {
            max[k] = t;
        }
    }
    if mode == Mode::Max || c <= 0.0 {
        return max;
    }
    let mut sum = vec![0.0; child_len];
    for (&t, &k) in table.iter().zip(map) {
        sum[k] += ((t - max[k]) / c).exp();
    }
    max.iter().zip(&sum).map(|(m, s)| m + c * s.ln()).collect()
}

/// Projects a probability table: marginal sum in sum mode, max followed by
/// renormalization in max mode.
pub(crate) fn project_probs(probs: &[f64], map: &[usize], child_len: usize, mode: Mode) -> Vec<f64> {
    let mut out = vec![0.0; child_len];
    match mode {
        Mode::Sum => {
            for (&p, &k) in probs.iter().zip(map) {
                out[k] += p;
            }
        }
        Mode::Max => {
            for (&p, &k) in probs.iter().zip(map) {
                out[k] = f64::max(out[k], p);
            }
            let total: f64 = out.iter().sum();
            out.iter_mut().for_each(|p| *p /= total);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MessageLedger<'g> {
    graph: &'g RegionGraph,
    messages: Vec<Vec<f64>>,
}

impl<'g> MessageLedger<'g> {
    /// All messages zero, so `θ̃ = theta0`.
    pub fn new(graph: &'g RegionGraph) -> Self {
        let messages = graph
            .edges()
            .iter()
            .map(|e| vec![0.0; graph.region(e.child).table_len()])
            .collect();
        Self { graph, messages }
    }

    pub fn graph(&self) -> &'g RegionGraph {
        self.graph
    }

    pub fn message(&self, e: usize) -> &[f64] {
        &self.messages[e]
    }

    pub fn set_message(&mut self, e: usize, table: Vec<f64>) -> Result<()> {
        if table.len() != self.messages[e].len() {
            return Err(Error::DimensionMismatch(format!(
                "message {e} needs {} entries, got {}",
                self.messages[e].len(),
                table.len()
            )));
        }
        if table.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(format!("message {e} has a non-finite entry")));
        }
        self.messages[e] = table;
        Ok(())
    }

    /// Adds `delta` to message `e`, then shifts the message so its largest
    /// entry is zero. The shift moves a constant between the two regions of
    /// the edge, which changes neither the total energy nor either bound.
    pub(crate) fn add_and_normalize(&mut self, e: usize, delta: &[f64]) {
        let m = &mut self.messages[e];
        m.iter_mut().zip(delta).for_each(|(a, d)| *a += d);
        shift_max_to_zero(m);
    }

    pub fn theta_tilde(&self, r: usize) -> Vec<f64> {
        let region = self.graph.region(r);
        let mut t = region.theta0.clone();
        for &e in self.graph.parent_edges(r) {
            t.iter_mut().zip(&self.messages[e]).for_each(|(a, m)| *a += m);
        }
        for &e in self.graph.child_edges(r) {
            let msg = &self.messages[e];
            let map = &self.graph.edge(e).child_index;
            t.iter_mut().zip(map).for_each(|(a, &k)| *a -= msg[k]);
        }
        t
    }

    pub fn reconstruct_theta_tilde(&self) -> Vec<Vec<f64>> {
        (0..self.graph.regions().len()).map(|r| self.theta_tilde(r)).collect()
    }

    pub fn region_belief(&self, r: usize) -> Belief {
        Belief { region: r, probs: belief(&self.theta_tilde(r), self.graph.region(r).counting) }
    }

    /// `Σ_α c_α ln Σ exp(θ̃_α / c_α)`, with the `c_α = 0` terms taken as
    /// `max θ̃_α`.
    pub fn bound_sum(&self) -> f64 {
        (0..self.graph.regions().len())
            .map(|r| soft_max(&self.theta_tilde(r), self.graph.region(r).counting))
            .sum()
    }

    /// `Σ_α max θ̃_α`.
    pub fn bound_max(&self) -> f64 {
        (0..self.graph.regions().len()).map(|r| max_value(&self.theta_tilde(r))).sum()
    }

    pub fn bound(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Sum => self.bound_sum(),
            Mode::Max => self.bound_max(),
        }
    }

    /// `max_x |Σ_α θ̃_α(x_α) − θ(x)|` over the probes.
    pub fn admissibility_residual(&self, model: &DiscreteModel, probes: &[Assignment]) -> f64 {
        let tables = self.reconstruct_theta_tilde();
        probes
            .iter()
            .map(|x| {
                let total: f64 = self
                    .graph
                    .regions()
                    .iter()
                    .zip(&tables)
                    .map(|(region, t)| t[region.index_of(x.values())])
                    .sum();
                (total - model.energy_unchecked(x.values())).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise gap between a parent's projected belief and its
    /// child's belief, over all edges.
    ///
    /// A child with `c = 0` has no belief of its own beyond the argmax
    /// indicator, so for those children the target is the mean of all its
    /// parents' projections; the residual then measures parent agreement.
    pub fn consistency_residual(&self, mode: Mode) -> f64 {
        let graph = self.graph;
        let beliefs: Vec<Vec<f64>> = (0..graph.regions().len()).map(|r| self.region_belief(r).probs).collect();
        let projections: Vec<Vec<f64>> = graph
            .edges()
            .iter()
            .map(|e| project_probs(&beliefs[e.parent], &e.child_index, graph.region(e.child).table_len(), mode))
            .collect();
        let mut worst: f64 = 0.0;
        for r in graph.intersections() {
            let parents = graph.parent_edges(r);
            let target: Vec<f64> = if graph.region(r).counting > 0.0 {
                beliefs[r].clone()
            } else {
                let k = parents.len() as f64;
                let mut mean = vec![0.0; graph.region(r).table_len()];
                for &e in parents {
                    mean.iter_mut().zip(&projections[e]).for_each(|(m, p)| *m += p / k);
                }
                mean
            };
            for &e in parents {
                for (p, t) in projections[e].iter().zip(&target) {
                    worst = worst.max((p - t).abs());
                }
            }
        }
        worst
    }
}

/// Uniformly random assignments from a seeded ChaCha8 stream (one
/// `next_u64` per variable, reduced modulo the cardinality).
pub fn random_probes(model: &DiscreteModel, count: usize, seed: u64) -> Vec<Assignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Assignment(
                model
                    .cardinalities()
                    .iter()
                    .map(|&c| (rng.next_u64() % c as u64) as usize)
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrwBound {
    pub value: f64,
    /// The additive constant `C` estimated from the probes.
    pub constant: f64,
    /// Largest deviation of a probe difference from `C`.
    pub probe_deviation: f64,
}

/// Tree-reweighted bound from node and edge log-beliefs.
///
/// Each tree gets `θ̃_τ = Σ_i ln b_i + Σ_(ij)∈τ [ln b_ij − ln b_i − ln b_j]`.
/// The constant `C` is the mean of `θ(x) − Σ_τ ρ_τ θ̃_τ(x)` over the probes,
/// and the bound is `C + Σ_τ ρ_τ V_τ` where `V_τ` is the exact tree
/// log-partition (sum) or maximum (max). `edge_log_beliefs` follows the
/// model's pairwise factor order and orientation.
pub fn trw_bound(
    node_log_beliefs: &[Vec<f64>],
    edge_log_beliefs: &[Vec<f64>],
    decomp: &TreeDecomposition,
    model: &DiscreteModel,
    mode: Mode,
    probes: &[Assignment],
) -> Result<TrwBound> {
    let pw = model.pairwise()?;
    if node_log_beliefs.len() != pw.var_count() || edge_log_beliefs.len() != pw.edges.len() {
        return Err(Error::DimensionMismatch("belief tables do not match the model".into()));
    }
    if probes.is_empty() {
        return Err(Error::InvalidInput("trw_bound needs at least one probe".into()));
    }
    if node_log_beliefs.iter().chain(edge_log_beliefs).flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("beliefs must be strictly positive".into()));
    }
    let mut tree_edges: Vec<Vec<PairEdge>> = Vec::with_capacity(decomp.trees().len());
    for tree in decomp.trees() {
        let mut edges = Vec::with_capacity(tree.edges.len());
        for &(a, b) in &tree.edges {
            let e = pw.edge_between(a, b).ok_or_else(|| {
                Error::UnsupportedStructure(format!("tree edge ({a}, {b}) is not a model edge"))
            })?;
            let edge = &pw.edges[e];
            let cj = pw.cards[edge.j];
            let table = edge_log_beliefs[e]
                .iter()
                .enumerate()
                .map(|(k, lb)| lb - node_log_beliefs[edge.i][k / cj] - node_log_beliefs[edge.j][k % cj])
                .collect();
            edges.push(PairEdge { i: edge.i, j: edge.j, table });
        }
        tree_edges.push(edges);
    }
    let weighted = |x: &[usize]| -> f64 {
        let nodes: f64 = node_log_beliefs.iter().zip(x).map(|(b, &s)| b[s]).sum();
        decomp
            .trees()
            .iter()
            .zip(&tree_edges)
            .map(|(tree, edges)| {
                let pair: f64 = edges
                    .iter()
                    .map(|e| e.table[x[e.i] * pw.cards[e.j] + x[e.j]])
                    .sum();
                tree.weight * (nodes + pair)
            })
            .sum()
    };
    let diffs: Vec<f64> = probes
        .iter()
        .map(|x| model.energy_unchecked(x.values()) - weighted(x.values()))
        .collect();
    let constant = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let probe_deviation = diffs.iter().map(|d| (d - constant).abs()).fold(0.0, f64::max);
    if probe_deviation > TRW_PROBE_TOLERANCE {
        return Err(Error::NotAReparameterization { deviation: probe_deviation, tolerance: TRW_PROBE_TOLERANCE });
    }
    let mut value = constant;
    for (tree, edges) in decomp.trees().iter().zip(&tree_edges) {
        value += tree.weight * tree_dp(node_log_beliefs, edges, mode)?.value;
    }
    Ok(TrwBound { value, constant, probe_deviation })
}

/// Plain `ln` of a probability table, for callers holding beliefs rather than
/// log-beliefs.
pub fn ln_table(probs: &[f64]) -> Vec<f64> {
    probs.iter().map(|p| p.ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_spin_glass, Factor};
    use crate::oracle::brute_force;
    use crate::region_graph::{build_grid_chain_decomposition, build_pair_singleton, build_star_edge, RegionSpec};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn belief_examples() {
        assert!(close(&belief(&[0.0, 0.0], 1.0), &[0.5, 0.5], 1e-15));
        assert!(close(&belief(&[3f64.ln(), 0.0], 1.0), &[0.75, 0.25], 1e-15));
        assert_eq!(belief(&[2.0, 5.0, 5.0], 0.0), vec![0.0, 0.5, 0.5]);
    }

    fn single_region(theta: Vec<f64>, c: f64) -> RegionGraph {
        let cards = vec![theta.len()];
        RegionGraph::new(&cards, vec![RegionSpec { scope: vec![0], counting: c, theta0: theta }], vec![]).unwrap()
    }

    #[test]
    fn bound_examples() {
        let g = single_region(vec![0.0; 4], 1.0);
        assert!((MessageLedger::new(&g).bound_sum() - 4f64.ln()).abs() < 1e-15);
        let g = single_region(vec![1.0, -1.0], 0.0);
        assert_eq!(MessageLedger::new(&g).bound_sum(), 1.0);
        let g = single_region(vec![0.0; 3], 1.0);
        assert_eq!(MessageLedger::new(&g).bound_max(), 0.0);
    }

    #[test]
    fn single_edge_star_bound_max() {
        let table = vec![0.0, 1.0, 3.0, -2.0];
        let m = DiscreteModel::new(vec![2, 2], vec![Factor::new(vec![0, 1], table)]).unwrap();
        let g = build_star_edge(&m).unwrap();
        // each star holds half the table; the edge region is zero
        assert_eq!(MessageLedger::new(&g).bound_max(), 1.5 + 1.5);
    }

    #[test]
    fn zero_messages_reconstruct_theta0() {
        let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
        let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
        let ledger = MessageLedger::new(&g);
        for (r, t) in ledger.reconstruct_theta_tilde().iter().enumerate() {
            assert_eq!(t, &g.region(r).theta0);
        }
    }

    #[test]
    fn one_message_moves_mass_between_regions() {
        let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
        let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
        let mut ledger = MessageLedger::new(&g);
        let e = 3;
        let (p, c) = (g.edge(e).parent, g.edge(e).child);
        ledger.set_message(e, vec![0.7, -1.3]).unwrap();
        let child = ledger.theta_tilde(c);
        assert!(close(&child, &[0.7, -1.3], 0.0));
        let parent = ledger.theta_tilde(p);
        for (k, &t) in parent.iter().enumerate() {
            let want = g.region(p).theta0[k] - [0.7, -1.3][g.edge(e).child_index[k]];
            assert_eq!(t, want);
        }
        let probes = random_probes(&m, 5, 3);
        assert!(ledger.admissibility_residual(&m, &probes) <= 1e-12);
    }

    #[test]
    fn set_message_checks_shape() {
        let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
        let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
        let mut ledger = MessageLedger::new(&g);
        assert!(ledger.set_message(0, vec![0.0; 3]).is_err());
        assert!(ledger.set_message(0, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn consistency_zero_on_symmetric_single_edge() {
        // single edge with symmetric potentials: pair beliefs already project
        // onto uniform singletons
        let m = DiscreteModel::new(vec![2, 2], vec![Factor::new(vec![0, 1], vec![0.0, 1.0, 1.0, 0.0])]).unwrap();
        let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
        let ledger = MessageLedger::new(&g);
        assert!(ledger.consistency_residual(Mode::Sum) < 1e-12);
        assert!(ledger.consistency_residual(Mode::Max) < 1e-12);
    }

    #[test]
    fn bound_sum_at_zero_messages_exceeds_log_z() {
        let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
        let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
        let bound = MessageLedger::new(&g).bound_sum();
        let exact = brute_force(&m).unwrap();
        assert!(bound > exact.log_partition);
    }

    #[test]
    fn trw_bound_uniform_beliefs_on_zero_model() {
        let m = gen_spin_glass(3, 3, 0.0, 0.0, 1).unwrap();
        let d = build_grid_chain_decomposition(&m, 3, 3).unwrap();
        let pw = m.pairwise().unwrap();
        let nodes = vec![vec![0.5f64.ln(); 2]; 9];
        let edges = vec![vec![0.25f64.ln(); 4]; pw.edges.len()];
        let probes = random_probes(&m, TRW_PROBES, 0);
        let b = trw_bound(&nodes, &edges, &d, &m, Mode::Sum, &probes).unwrap();
        assert!((b.value - 9.0 * 2f64.ln()).abs() < 1e-12);
        // θ ≡ 0 while the trees carry 9 ln ½, so the constant holds 9 ln 2
        assert!((b.constant - 9.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn trw_bound_rejects_non_reparameterizations() {
        let m = gen_spin_glass(2, 2, 9.0, 1.0, 2).unwrap();
        let d = build_grid_chain_decomposition(&m, 2, 2).unwrap();
        let pw = m.pairwise().unwrap();
        let nodes = vec![vec![0.5f64.ln(); 2]; 4];
        let edges = vec![vec![0.25f64.ln(); 4]; pw.edges.len()];
        let probes = random_probes(&m, TRW_PROBES, 0);
        let r = trw_bound(&nodes, &edges, &d, &m, Mode::Sum, &probes);
        assert!(matches!(r, Err(Error::NotAReparameterization { .. })));
    }
}
