//! Tree-reweighted message passing: sequential TRW-S and the forward-only
//! baseline.
//!
//! Both share one message equation, in log domain,
//!
//! ```text
//! m_{i→j}(x_j) = ⊕_{x_i} [ θ_i + Σ_{k≠j} ρ_ik m_{k→i} − (1 − ρ_ij) m_{j→i} + θ_ij / ρ_ij ]
//! ```
//!
//! and differ only in the order messages are sent.

use super::msd::max_abs_diff;
use super::{
    drive, probes_for, Algorithm, Diagnostics, RunInfo, Schedule, ScheduleKind, SolverConfig, SolverTrace, StopRule,
    SweepSolver,
};
use crate::error::{Error, Result};
use crate::math::{log_sum_exp, shift_max_to_zero};
use crate::model::{Assignment, DiscreteModel, PairwiseModel};
use crate::region_graph::{check_monotonic, TreeDecomposition};
use crate::reparam::{project_probs, trw_bound};
use crate::Mode;

pub struct TrwSolver<'a> {
    model: &'a DiscreteModel,
    decomp: &'a TreeDecomposition,
    pw: PairwiseModel,
    mode: Mode,
    kind: ScheduleKind,
    rho: Vec<f64>,
    positions: Vec<usize>,
    /// Message into `edge.j` per model edge.
    to_j: Vec<Vec<f64>>,
    /// Message into `edge.i` per model edge.
    to_i: Vec<Vec<f64>>,
    probes: Vec<Assignment>,
    last_change: f64,
}

impl<'a> TrwSolver<'a> {
    /// `kind` is [`ScheduleKind::ForwardBackward`] for TRW-S or
    /// [`ScheduleKind::ForwardOnly`] for the baseline.
    pub fn new(
        model: &'a DiscreteModel,
        decomp: &'a TreeDecomposition,
        config: &SolverConfig,
        kind: ScheduleKind,
    ) -> Result<Self> {
        config.validate()?;
        if !matches!(kind, ScheduleKind::ForwardBackward | ScheduleKind::ForwardOnly) {
            return Err(Error::ScheduleInvalid(format!("{kind:?} is not a node-scan schedule")));
        }
        let pw = model.pairwise()?;
        decomp.check_covers(model)?;
        if !check_monotonic(decomp)? {
            return Err(Error::ScheduleInvalid("chains do not follow the node order monotonically".into()));
        }
        let rho = pw.edges.iter().map(|e| decomp.rho(e.i, e.j).expect("covered")).collect();
        let to_j = pw.edges.iter().map(|e| vec![0.0; pw.cards[e.j]]).collect();
        let to_i = pw.edges.iter().map(|e| vec![0.0; pw.cards[e.i]]).collect();
        Ok(Self {
            model,
            decomp,
            mode: config.mode,
            kind,
            rho,
            positions: decomp.positions(),
            to_j,
            to_i,
            probes: probes_for(model, config),
            last_change: f64::INFINITY,
            pw,
        })
    }

    fn incoming(&self, v: usize, e: usize) -> &[f64] {
        if self.pw.edges[e].i == v {
            &self.to_i[e]
        } else {
            &self.to_j[e]
        }
    }

    /// `θ_v + Σ_k ρ_vk m_{k→v}`, the unnormalized node log-belief.
    fn node_log_belief(&self, v: usize) -> Vec<f64> {
        let mut out = self.pw.unary[v].clone();
        for &(_, e) in &self.pw.adjacency[v] {
            let rho = self.rho[e];
            out.iter_mut().zip(self.incoming(v, e)).for_each(|(a, m)| *a += rho * m);
        }
        out
    }

    /// Node term of the message from `v` along edge `e`:
    /// `θ_v + Σ_k ρ_vk m_{k→v} − m_{u→v}` with `u` the other endpoint.
    fn cavity(&self, v: usize, e: usize) -> Vec<f64> {
        let mut out = self.node_log_belief(v);
        out.iter_mut().zip(self.incoming(v, e)).for_each(|(a, m)| *a -= m);
        out
    }

    /// Sends the message from `from` along model edge `e`; returns its change.
    pub fn send(&mut self, from: usize, e: usize) -> f64 {
        let edge = &self.pw.edges[e];
        let (ci, cj) = (self.pw.cards[edge.i], self.pw.cards[edge.j]);
        let inv_rho = 1.0 / self.rho[e];
        let base = self.cavity(from, e);
        let from_is_i = edge.i == from;
        let out_len = if from_is_i { cj } else { ci };
        let mut scratch = vec![0.0; base.len()];
        let mut msg: Vec<f64> = (0..out_len)
            .map(|xt| {
                for (xf, s) in scratch.iter_mut().enumerate() {
                    let k = if from_is_i { xf * cj + xt } else { xt * cj + xf };
                    *s = base[xf] + edge.table[k] * inv_rho;
                }
                self.mode.reduce(&scratch)
            })
            .collect();
        shift_max_to_zero(&mut msg);
        let slot = if from_is_i { &mut self.to_j[e] } else { &mut self.to_i[e] };
        let change = max_abs_diff(slot, &msg);
        *slot = msg;
        change
    }

    /// Normalized node log-beliefs.
    pub fn node_log_beliefs(&self) -> Vec<Vec<f64>> {
        (0..self.pw.var_count()).map(|v| normalized(self.node_log_belief(v))).collect()
    }

    /// Normalized edge log-beliefs in model edge order and orientation:
    /// `θ_ij/ρ_ij` plus both endpoints' cavities.
    pub fn edge_log_beliefs(&self) -> Vec<Vec<f64>> {
        self.pw
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let cj = self.pw.cards[edge.j];
                let inv_rho = 1.0 / self.rho[e];
                let ci = self.cavity(edge.i, e);
                let cjv = self.cavity(edge.j, e);
                let table = edge
                    .table
                    .iter()
                    .enumerate()
                    .map(|(k, t)| t * inv_rho + ci[k / cj] + cjv[k % cj])
                    .collect();
                normalized(table)
            })
            .collect()
    }

    fn neighbours_in_scan(&self, v: usize, forward: bool) -> Vec<(usize, usize)> {
        let pos = self.positions[v];
        self.pw.adjacency[v]
            .iter()
            .copied()
            .filter(|&(u, _)| match self.kind {
                ScheduleKind::ForwardOnly => true,
                _ if forward => self.positions[u] > pos,
                _ => self.positions[u] < pos,
            })
            .collect()
    }

    fn consistency_residual(&self, nodes: &[Vec<f64>], edges: &[Vec<f64>]) -> f64 {
        let node_probs: Vec<Vec<f64>> = nodes.iter().map(|b| b.iter().map(|l| l.exp()).collect()).collect();
        let mut worst: f64 = 0.0;
        for (edge, log_b) in self.pw.edges.iter().zip(edges) {
            let cj = self.pw.cards[edge.j];
            let b: Vec<f64> = log_b.iter().map(|l| l.exp()).collect();
            let rows: Vec<usize> = (0..b.len()).map(|k| k / cj).collect();
            let cols: Vec<usize> = (0..b.len()).map(|k| k % cj).collect();
            for (map, v, len) in [(&rows, edge.i, self.pw.cards[edge.i]), (&cols, edge.j, cj)] {
                let p = project_probs(&b, map, len, self.mode);
                worst = worst.max(max_abs_diff(&p, &node_probs[v]));
            }
        }
        worst
    }
}

fn normalized(mut log_b: Vec<f64>) -> Vec<f64> {
    let z = log_sum_exp(&log_b);
    log_b.iter_mut().for_each(|l| *l -= z);
    log_b
}

impl SweepSolver for TrwSolver<'_> {
    fn sweep(&mut self) -> Result<()> {
        let order = self.decomp.node_order().to_vec();
        let mut change: f64 = 0.0;
        for &v in &order {
            for (_, e) in self.neighbours_in_scan(v, true) {
                change = change.max(self.send(v, e));
            }
        }
        if self.kind == ScheduleKind::ForwardBackward {
            for &v in order.iter().rev() {
                for (_, e) in self.neighbours_in_scan(v, false) {
                    change = change.max(self.send(v, e));
                }
            }
        }
        self.last_change = change;
        Ok(())
    }

    fn diagnostics(&self) -> Result<Diagnostics> {
        let nodes = self.node_log_beliefs();
        let edges = self.edge_log_beliefs();
        let bound = trw_bound(&nodes, &edges, self.decomp, self.model, self.mode, &self.probes)?;
        Ok(Diagnostics {
            bound: bound.value,
            admissibility_residual: bound.probe_deviation,
            consistency_residual: self.consistency_residual(&nodes, &edges),
        })
    }

    fn variable_beliefs(&self) -> Vec<Vec<f64>> {
        self.node_log_beliefs().into_iter().map(|b| b.iter().map(|l| l.exp()).collect()).collect()
    }

    fn last_message_change(&self) -> f64 {
        self.last_change
    }
}

fn decomposition_label(decomp: &TreeDecomposition) -> String {
    let weights: Vec<String> = decomp.trees().iter().map(|t| format!("{}", t.weight)).collect();
    format!("trw({} trees,rho=[{}])", decomp.trees().len(), weights.join(";"))
}

fn run(
    model: &DiscreteModel,
    decomp: &TreeDecomposition,
    config: &SolverConfig,
    kind: ScheduleKind,
) -> Result<SolverTrace> {
    let mut solver = TrwSolver::new(model, decomp, config, kind)?;
    let (algorithm, stop) = match kind {
        ScheduleKind::ForwardOnly => (Algorithm::TrwForward, StopRule::MessageChange),
        _ => (Algorithm::Trws, StopRule::BoundDescent),
    };
    let info = RunInfo {
        algorithm,
        bound_label: decomposition_label(decomp),
        schedule: Schedule { kind, order: decomp.node_order().to_vec() },
        stop,
    };
    drive(&mut solver, model, config, info)
}

/// TRW-S: forward scan sending only to later nodes, then backward scan
/// sending only to earlier nodes.
pub fn run_trws(model: &DiscreteModel, decomp: &TreeDecomposition, config: &SolverConfig) -> Result<SolverTrace> {
    run(model, decomp, config, ScheduleKind::ForwardBackward)
}

/// Forward-only TRW: each node visit sends to every neighbor. No
/// monotonicity guarantee; stops at `max_iters` or when messages stall.
pub fn run_trw_forward(model: &DiscreteModel, decomp: &TreeDecomposition, config: &SolverConfig) -> Result<SolverTrace> {
    run(model, decomp, config, ScheduleKind::ForwardOnly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_spin_glass, Factor};
    use crate::oracle::brute_force;
    use crate::region_graph::{build_grid_chain_decomposition, WeightedTree};

    #[test]
    fn single_edge_is_exact_with_unit_weights() {
        let m = gen_spin_glass(1, 2, 2.0, 1.0, 11).unwrap();
        let d = TreeDecomposition::spanning_forest(&m).unwrap();
        let exact = brute_force(&m).unwrap();
        for (mode, want) in [(Mode::Sum, exact.log_partition), (Mode::Max, exact.map_value)] {
            for run in [run_trws, run_trw_forward] {
                let t = run(&m, &d, &SolverConfig::new(mode).with_max_iters(1)).unwrap();
                assert!((t.final_bound() - want).abs() < 1e-9, "{mode}: {} vs {want}", t.final_bound());
            }
        }
    }

    #[test]
    fn grid_chains_on_a_single_edge_still_bound() {
        let m = gen_spin_glass(1, 2, 2.0, 1.0, 11).unwrap();
        let d = build_grid_chain_decomposition(&m, 1, 2).unwrap();
        let exact = brute_force(&m).unwrap();
        let t = run_trws(&m, &d, &SolverConfig::new(Mode::Sum).with_max_iters(20)).unwrap();
        assert!(t.final_bound() >= exact.log_partition - 1e-9);
    }

    #[test]
    fn single_node_traces_match() {
        let m = DiscreteModel::new(vec![3], vec![Factor::new(vec![0], vec![0.1, 0.7, -0.2])]).unwrap();
        let d = TreeDecomposition::new(1, vec![WeightedTree { edges: vec![], weight: 1.0 }], vec![0]).unwrap();
        let cfg = SolverConfig::new(Mode::Sum).with_max_iters(1);
        let a = run_trws(&m, &d, &cfg).unwrap();
        let b = run_trw_forward(&m, &d, &cfg).unwrap();
        assert_eq!(a.bounds(), b.bounds());
        assert!((a.final_bound() - log_sum_exp(&[0.1, 0.7, -0.2])).abs() < 1e-12);
    }

    #[test]
    fn non_monotonic_chains_are_rejected() {
        let m = gen_spin_glass(1, 3, 1.0, 1.0, 1).unwrap();
        let chain = TreeDecomposition::spanning_forest(&m).unwrap();
        let scrambled = TreeDecomposition::new(3, chain.trees().to_vec(), vec![0, 2, 1]).unwrap();
        let r = run_trws(&m, &scrambled, &SolverConfig::default());
        assert!(matches!(r, Err(Error::ScheduleInvalid(_))));
    }
}
