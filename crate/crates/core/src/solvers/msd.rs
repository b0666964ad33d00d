//! Max-sum diffusion and its sum-product counterpart on a pair/singleton
//! region graph.

use super::{
    drive, ledger_diagnostics, ledger_variable_beliefs, probes_for, Algorithm, Diagnostics, RunInfo, Schedule,
    ScheduleKind, SolverConfig, SolverTrace, StopRule, SweepSolver,
};
use crate::error::{Error, Result};
use crate::model::{Assignment, DiscreteModel};
use crate::region_graph::RegionGraph;
use crate::reparam::{project_potential, MessageLedger};
use crate::Mode;

/// Updates one region-graph edge at a time so that the child's belief equals
/// the projection of the parent's belief on that edge.
///
/// In max mode the step is the classic half-step
/// `δ = ½ (max_{x_α∖β} θ̃_α − θ̃_β)`. In sum mode the two counting numbers
/// weight the step, `δ = (c_β L − c_α θ̃_β) / (c_α + c_β)` with
/// `L = c_α ln Σ exp(θ̃_α / c_α)`, which makes `b_β` exactly the marginal of
/// `b_α`.
pub struct MsdSolver<'g> {
    ledger: MessageLedger<'g>,
    model: &'g DiscreteModel,
    mode: Mode,
    probes: Vec<Assignment>,
    last_change: f64,
}

impl<'g> MsdSolver<'g> {
    pub fn new(graph: &'g RegionGraph, model: &'g DiscreteModel, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if !graph.is_pair_singleton() {
            return Err(Error::UnsupportedStructure("MSD needs a pair/singleton region graph".into()));
        }
        if config.mode == Mode::Sum && graph.edges().iter().any(|e| graph.region(e.child).counting + graph.region(e.parent).counting <= 0.0) {
            return Err(Error::InvalidCountingNumbers("sum-mode MSD needs c_α + c_β > 0 on every edge".into()));
        }
        Ok(Self {
            ledger: MessageLedger::new(graph),
            model,
            mode: config.mode,
            probes: probes_for(model, config),
            last_change: f64::INFINITY,
        })
    }

    pub fn ledger(&self) -> &MessageLedger<'g> {
        &self.ledger
    }

    /// Applies the update to region-graph edge `e`.
    pub fn update_edge(&mut self, e: usize) -> f64 {
        let graph = self.ledger.graph();
        let edge = graph.edge(e);
        let (alpha, beta) = (graph.region(edge.parent), graph.region(edge.child));
        let theta_alpha = self.ledger.theta_tilde(edge.parent);
        let theta_beta = self.ledger.theta_tilde(edge.child);
        let projected = project_potential(&theta_alpha, &edge.child_index, beta.table_len(), self.mode, alpha.counting);
        let w = match self.mode {
            Mode::Max => 0.5,
            Mode::Sum => beta.counting / (alpha.counting + beta.counting),
        };
        let delta: Vec<f64> = projected.iter().zip(&theta_beta).map(|(l, t)| w * l - (1.0 - w) * t).collect();
        let before = self.ledger.message(e).to_vec();
        self.ledger.add_and_normalize(e, &delta);
        max_abs_diff(&before, self.ledger.message(e))
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl SweepSolver for MsdSolver<'_> {
    fn sweep(&mut self) -> Result<()> {
        let mut change: f64 = 0.0;
        for e in 0..self.ledger.graph().edges().len() {
            change = change.max(self.update_edge(e));
        }
        self.last_change = change;
        Ok(())
    }

    fn diagnostics(&self) -> Result<Diagnostics> {
        Ok(ledger_diagnostics(&self.ledger, self.model, &self.probes, self.mode))
    }

    fn variable_beliefs(&self) -> Vec<Vec<f64>> {
        ledger_variable_beliefs(&self.ledger, self.model.var_count(), self.mode)
    }

    fn last_message_change(&self) -> f64 {
        self.last_change
    }
}

pub(crate) fn graph_label(graph: &RegionGraph) -> String {
    let n_pairs = graph.regions().iter().filter(|r| r.scope.len() == 2).count();
    if graph.is_pair_singleton() {
        let c = |len: usize| graph.regions().iter().find(|r| r.scope.len() == len).map(|r| r.counting);
        match (c(2), c(1)) {
            (Some(p), Some(s)) => format!("pair-singleton(c_pair={p},c_singleton={s})"),
            _ => format!("pair-singleton({n_pairs} pairs)"),
        }
    } else {
        format!("region-graph({} regions,{} edges)", graph.regions().len(), graph.edges().len())
    }
}

/// Runs MSD on a pair/singleton graph until the bound stalls or
/// `config.max_iters` sweeps.
pub fn run_msd(graph: &RegionGraph, model: &DiscreteModel, config: &SolverConfig) -> Result<SolverTrace> {
    let mut solver = MsdSolver::new(graph, model, config)?;
    let info = RunInfo {
        algorithm: Algorithm::Msd,
        bound_label: graph_label(graph),
        schedule: Schedule { kind: ScheduleKind::EdgeSweep, order: (0..graph.edges().len()).collect() },
        stop: StopRule::BoundDescent,
    };
    drive(&mut solver, model, config, info)
}
