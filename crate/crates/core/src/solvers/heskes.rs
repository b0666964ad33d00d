//! Heskes' intersection-region updates, sum and max.

use super::msd::{graph_label, max_abs_diff};
use super::{
    drive, ledger_diagnostics, ledger_variable_beliefs, probes_for, Algorithm, Diagnostics, RunInfo, Schedule,
    ScheduleKind, SolverConfig, SolverTrace, StopRule, SweepSolver,
};
use crate::error::{Error, Result};
use crate::model::{Assignment, DiscreteModel};
use crate::region_graph::RegionGraph;
use crate::reparam::{project_potential, MessageLedger};
use crate::Mode;

/// Visits each intersection region `β` and makes every parent agree with it
/// at once.
///
/// With `L_α` the projection of `θ̃_α` onto `β`, `S = θ̃_β + Σ_α L_α` and
/// `ĉ = c_β + Σ_α c_α`, each parent message moves by `L_α − (c_α/ĉ) S`.
/// Afterwards `θ̃_β = (c_β/ĉ) S` and every parent projects to `(c_α/ĉ) S`,
/// so all beliefs on the star agree and the star's share of the bound is
/// minimized.
pub struct HeskesSolver<'g> {
    ledger: MessageLedger<'g>,
    model: &'g DiscreteModel,
    mode: Mode,
    order: Vec<usize>,
    probes: Vec<Assignment>,
    last_change: f64,
}

impl<'g> HeskesSolver<'g> {
    pub fn new(graph: &'g RegionGraph, model: &'g DiscreteModel, config: &SolverConfig) -> Result<Self> {
        Self::with_order(graph, model, config, graph.intersections())
    }

    /// `order` must be a permutation of the graph's intersection regions.
    pub fn with_order(
        graph: &'g RegionGraph,
        model: &'g DiscreteModel,
        config: &SolverConfig,
        order: Vec<usize>,
    ) -> Result<Self> {
        config.validate()?;
        let mut expected = graph.intersections();
        let mut given = order.clone();
        expected.sort_unstable();
        given.sort_unstable();
        if expected != given {
            return Err(Error::ScheduleInvalid("order must list every intersection region exactly once".into()));
        }
        for &r in &order {
            let c_hat: f64 = graph.region(r).counting
                + graph.parent_edges(r).iter().map(|&e| graph.region(graph.edge(e).parent).counting).sum::<f64>();
            if c_hat <= 0.0 {
                return Err(Error::InvalidCountingNumbers(format!(
                    "region {r} and its parents all have counting number zero"
                )));
            }
        }
        Ok(Self {
            ledger: MessageLedger::new(graph),
            model,
            mode: config.mode,
            order,
            probes: probes_for(model, config),
            last_change: f64::INFINITY,
        })
    }

    pub fn ledger(&self) -> &MessageLedger<'g> {
        &self.ledger
    }

    /// Applies the update at intersection region `beta`.
    pub fn update_region(&mut self, beta: usize) -> f64 {
        let graph = self.ledger.graph();
        let region = graph.region(beta);
        let len = region.table_len();
        let parents = graph.parent_edges(beta);
        let projections: Vec<Vec<f64>> = parents
            .iter()
            .map(|&e| {
                let edge = graph.edge(e);
                let c = graph.region(edge.parent).counting;
                project_potential(&self.ledger.theta_tilde(edge.parent), &edge.child_index, len, self.mode, c)
            })
            .collect();
        let mut total = self.ledger.theta_tilde(beta);
        for p in &projections {
            total.iter_mut().zip(p).for_each(|(s, l)| *s += l);
        }
        let c_hat = region.counting
            + parents.iter().map(|&e| graph.region(graph.edge(e).parent).counting).sum::<f64>();
        let mut change: f64 = 0.0;
        for (&e, projected) in parents.iter().zip(&projections) {
            let share = graph.region(graph.edge(e).parent).counting / c_hat;
            let delta: Vec<f64> = projected.iter().zip(&total).map(|(l, s)| l - share * s).collect();
            let before = self.ledger.message(e).to_vec();
            self.ledger.add_and_normalize(e, &delta);
            change = change.max(max_abs_diff(&before, self.ledger.message(e)));
        }
        change
    }
}

impl SweepSolver for HeskesSolver<'_> {
    fn sweep(&mut self) -> Result<()> {
        let mut change: f64 = 0.0;
        for k in 0..self.order.len() {
            change = change.max(self.update_region(self.order[k]));
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

fn heskes_label(graph: &RegionGraph) -> String {
    let star_edge = !graph.is_pair_singleton()
        && graph.edges().iter().all(|e| {
            let (parent, child) = (graph.region(e.parent), graph.region(e.child));
            parent.counting == 1.0 && child.counting == 0.0 && child.scope.len() == 2
        });
    if star_edge {
        "star-edge".into()
    } else {
        graph_label(graph)
    }
}

/// Runs Heskes' algorithm sweeping intersections in index order.
pub fn run_heskes(graph: &RegionGraph, model: &DiscreteModel, config: &SolverConfig) -> Result<SolverTrace> {
    run_heskes_ordered(graph, model, config, graph.intersections())
}

/// Runs Heskes' algorithm with an explicit intersection order.
pub fn run_heskes_ordered(
    graph: &RegionGraph,
    model: &DiscreteModel,
    config: &SolverConfig,
    order: Vec<usize>,
) -> Result<SolverTrace> {
    let mut solver = HeskesSolver::with_order(graph, model, config, order.clone())?;
    let info = RunInfo {
        algorithm: Algorithm::Heskes,
        bound_label: heskes_label(graph),
        schedule: Schedule { kind: ScheduleKind::IntersectionSweep, order },
        stop: StopRule::BoundDescent,
    };
    drive(&mut solver, model, config, info)
}
