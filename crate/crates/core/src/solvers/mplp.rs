//! MPLP edge updates and their star/edge ledger equivalent.
//!
//! MPLP keeps, per model edge `(i, j)`, unary messages `m_{ij→i}` and
//! `m_{ij→j}`. Writing `λ_i^{-j} = θ_i + Σ_{k≠j} m_{ik→i}`, one edge update is
//!
//! ```text
//! μ(x_i, x_j)   = ½ (λ_j^{-i}(x_j) − λ_i^{-j}(x_i))
//! m_{ij→i}(x_i) = ⊕_{x_j} (½ θ_ij + μ)
//! m_{ij→j}(x_j) = ⊕_{x_i} (½ θ_ij − μ)
//! ```
//!
//! with `⊕` = max (or log-sum-exp in sum mode). The table `μ` is the message
//! from the edge region to the star of `i` on the star/edge region graph, and
//! `−μ` goes to the star of `j`. Recording it lets the bound and the
//! admissibility residual be read from an ordinary [`MessageLedger`].

use super::msd::max_abs_diff;
use super::{
    drive, probes_for, Algorithm, Diagnostics, RunInfo, Schedule, ScheduleKind, SolverConfig, SolverTrace, StopRule,
    SweepSolver,
};
use crate::error::Result;
use crate::math::{max_value, normalize_log};
use crate::model::{Assignment, DiscreteModel, PairwiseModel};
use crate::region_graph::{build_star_edge, RegionGraph};
use crate::reparam::{project_probs, MessageLedger};
use crate::Mode;

/// `m(x_i) = max_{x_j} (½ θ_ij(x_i, x_j) + μ(x_i, x_j))`, both tables over
/// `(x_i, x_j)` with `x_j` fastest.
///
/// `mu` is a star-to-edge message of the star/edge region graph taken with
/// the edge-to-star sign, i.e. the negated ledger entry.
pub fn heskes_to_mplp_transform(mu: &[f64], theta_ij: &[f64], card_j: usize) -> Vec<f64> {
    reduce_rows(mu, theta_ij, card_j, 1.0, Mode::Max)
}

/// `⊕_{x_j} (½ θ_ij + sign · μ)` per row `x_i`.
fn reduce_rows(mu: &[f64], theta: &[f64], card_j: usize, sign: f64, mode: Mode) -> Vec<f64> {
    theta
        .chunks(card_j)
        .zip(mu.chunks(card_j))
        .map(|(t, m)| {
            let row: Vec<f64> = t.iter().zip(m).map(|(t, m)| 0.5 * t + sign * m).collect();
            mode.reduce(&row)
        })
        .collect()
}

/// `⊕_{x_i} (½ θ_ij + sign · μ)` per column `x_j`.
fn reduce_cols(mu: &[f64], theta: &[f64], card_j: usize, sign: f64, mode: Mode) -> Vec<f64> {
    let card_i = theta.len() / card_j;
    (0..card_j)
        .map(|xj| {
            let col: Vec<f64> = (0..card_i).map(|xi| 0.5 * theta[xi * card_j + xj] + sign * mu[xi * card_j + xj]).collect();
            mode.reduce(&col)
        })
        .collect()
}

pub struct MplpSolver<'m> {
    model: &'m DiscreteModel,
    pw: PairwiseModel,
    graph: RegionGraph,
    mode: Mode,
    /// Edge-to-star-of-`i` message per model edge, over `(x_i, x_j)`.
    mu: Vec<Vec<f64>>,
    to_i: Vec<Vec<f64>>,
    to_j: Vec<Vec<f64>>,
    probes: Vec<Assignment>,
    last_change: f64,
}

impl<'m> MplpSolver<'m> {
    pub fn new(model: &'m DiscreteModel, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let pw = model.pairwise()?;
        let graph = build_star_edge(model)?;
        let mode = config.mode;
        let mu: Vec<Vec<f64>> = pw.edges.iter().map(|e| vec![0.0; e.table.len()]).collect();
        let mut to_i = Vec::with_capacity(pw.edges.len());
        let mut to_j = Vec::with_capacity(pw.edges.len());
        for (e, edge) in pw.edges.iter().enumerate() {
            let cj = pw.cards[edge.j];
            to_i.push(reduce_rows(&mu[e], &edge.table, cj, 1.0, mode));
            to_j.push(reduce_cols(&mu[e], &edge.table, cj, -1.0, mode));
        }
        Ok(Self {
            model,
            pw,
            graph,
            mode,
            mu,
            to_i,
            to_j,
            probes: probes_for(model, config),
            last_change: f64::INFINITY,
        })
    }

    /// `θ_v + Σ_{f ∋ v, f ≠ skip} m_{f→v}`.
    fn lambda(&self, v: usize, skip: Option<usize>) -> Vec<f64> {
        let mut out = self.pw.unary[v].clone();
        for &(_, f) in &self.pw.adjacency[v] {
            if Some(f) == skip {
                continue;
            }
            let m = if self.pw.edges[f].i == v { &self.to_i[f] } else { &self.to_j[f] };
            out.iter_mut().zip(m).for_each(|(a, b)| *a += b);
        }
        out
    }

    /// Applies one edge update and returns the largest message change.
    pub fn update_edge(&mut self, e: usize) -> f64 {
        let edge = &self.pw.edges[e];
        let cj = self.pw.cards[edge.j];
        let lam_i = self.lambda(edge.i, Some(e));
        let lam_j = self.lambda(edge.j, Some(e));
        let mut mu: Vec<f64> =
            (0..edge.table.len()).map(|k| 0.5 * (lam_j[k % cj] - lam_i[k / cj])).collect();
        let mut to_i = reduce_rows(&mu, &edge.table, cj, 1.0, self.mode);
        let mut to_j = reduce_cols(&mu, &edge.table, cj, -1.0, self.mode);
        // move a constant between the two sides so both messages peak at the
        // same height; μ keeps matching them
        let shift = 0.5 * (max_value(&to_j) - max_value(&to_i));
        mu.iter_mut().for_each(|m| *m += shift);
        to_i.iter_mut().for_each(|m| *m += shift);
        to_j.iter_mut().for_each(|m| *m -= shift);
        let change = max_abs_diff(&self.to_i[e], &to_i).max(max_abs_diff(&self.to_j[e], &to_j));
        self.mu[e] = mu;
        self.to_i[e] = to_i;
        self.to_j[e] = to_j;
        change
    }

    /// Unary messages `(m_{ij→i}, m_{ij→j})` of model edge `e`.
    pub fn messages(&self, e: usize) -> (&[f64], &[f64]) {
        (&self.to_i[e], &self.to_j[e])
    }

    /// Star/edge ledger holding the same reparameterization.
    pub fn ledger(&self) -> MessageLedger<'_> {
        let mut ledger = MessageLedger::new(&self.graph);
        for (e, mu) in self.mu.iter().enumerate() {
            for (k, sign) in [(2 * e, -1.0), (2 * e + 1, 1.0)] {
                debug_assert_eq!(self.graph.edge(k).child, self.pw.var_count() + e);
                let table = mu.iter().map(|m| sign * m).collect();
                ledger.set_message(k, table).expect("messages stay finite");
            }
        }
        ledger
    }

    /// `b_i ∝ exp(θ_i + Σ_f m_{f→i})`.
    pub fn node_beliefs(&self) -> Vec<Vec<f64>> {
        (0..self.pw.var_count()).map(|v| normalize_log(&self.lambda(v, None))).collect()
    }

    /// `b_ij ∝ exp(½ (θ_ij + λ_i^{-j} + λ_j^{-i}))`, in model edge order.
    pub fn edge_beliefs(&self) -> Vec<Vec<f64>> {
        self.pw
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let cj = self.pw.cards[edge.j];
                let lam_i = self.lambda(edge.i, Some(e));
                let lam_j = self.lambda(edge.j, Some(e));
                let log_b: Vec<f64> = edge
                    .table
                    .iter()
                    .enumerate()
                    .map(|(k, t)| 0.5 * (t + lam_i[k / cj] + lam_j[k % cj]))
                    .collect();
                normalize_log(&log_b)
            })
            .collect()
    }

    /// Largest gap between an edge belief's projection and the node beliefs.
    pub fn consistency_residual(&self) -> f64 {
        let nodes = self.node_beliefs();
        let mut worst: f64 = 0.0;
        for (edge, b) in self.pw.edges.iter().zip(self.edge_beliefs()) {
            let cj = self.pw.cards[edge.j];
            let rows: Vec<usize> = (0..b.len()).map(|k| k / cj).collect();
            let cols: Vec<usize> = (0..b.len()).map(|k| k % cj).collect();
            for (map, v, len) in [(&rows, edge.i, self.pw.cards[edge.i]), (&cols, edge.j, cj)] {
                let p = project_probs(&b, map, len, self.mode);
                worst = worst.max(max_abs_diff(&p, &nodes[v]));
            }
        }
        worst
    }
}

impl SweepSolver for MplpSolver<'_> {
    fn sweep(&mut self) -> Result<()> {
        let mut change: f64 = 0.0;
        for e in 0..self.pw.edges.len() {
            change = change.max(self.update_edge(e));
        }
        self.last_change = change;
        Ok(())
    }

    fn diagnostics(&self) -> Result<Diagnostics> {
        let ledger = self.ledger();
        Ok(Diagnostics {
            bound: ledger.bound(self.mode),
            admissibility_residual: ledger.admissibility_residual(self.model, &self.probes),
            consistency_residual: self.consistency_residual(),
        })
    }

    fn variable_beliefs(&self) -> Vec<Vec<f64>> {
        self.node_beliefs()
    }

    fn last_message_change(&self) -> f64 {
        self.last_change
    }
}

/// Runs MPLP sweeping the model's pairwise edges in factor order.
pub fn run_mplp(model: &DiscreteModel, config: &SolverConfig) -> Result<SolverTrace> {
    let mut solver = MplpSolver::new(model, config)?;
    let info = RunInfo {
        algorithm: Algorithm::Mplp,
        bound_label: "star-edge".into(),
        schedule: Schedule { kind: ScheduleKind::EdgeSweep, order: (0..solver.pw.edges.len()).collect() },
        stop: StopRule::BoundDescent,
    };
    drive(&mut solver, model, config, info)
}
