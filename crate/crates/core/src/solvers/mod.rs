//! The convergent message-passing solvers and their per-sweep traces.
//!
//! Every solver implements [`SweepSolver`]: one call to `sweep` performs a
//! full pass of its schedule, and `diagnostics` reports the current bound,
//! admissibility residual and consistency residual. The `run_*` functions
//! drive a solver to termination and collect a [`SolverTrace`] with one
//! record per sweep, starting with the untouched initial state as sweep 0.

mod heskes;
mod msd;
mod mplp;
mod trws;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::argmax;
use crate::model::{Assignment, DiscreteModel};
use crate::region_graph::RegionGraph;
use crate::reparam::{belief, project_probs, random_probes, MessageLedger, TRW_PROBES};
use crate::Mode;

pub use heskes::{run_heskes, run_heskes_ordered, HeskesSolver};
pub use mplp::{heskes_to_mplp_transform, run_mplp, MplpSolver};
pub use msd::{run_msd, MsdSolver};
pub use trws::{run_trw_forward, run_trws, TrwSolver};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: Mode,
    pub max_iters: usize,
    /// Converged once a sweep lowers the bound by less than this (and the
    /// consistency residual is below `consistency_tol`).
    pub bound_tol: f64,
    pub consistency_tol: f64,
    /// Seeds the probe assignments used for residuals and the TRW constant.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { mode: Mode::Max, max_iters: 1000, bound_tol: 1e-8, consistency_tol: 1e-6, seed: 0 }
    }
}

impl SolverConfig {
    pub fn new(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.bound_tol > 0.0) || !(self.consistency_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Msd,
    Heskes,
    Mplp,
    Trws,
    TrwForward,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Msd, Algorithm::Heskes, Algorithm::Mplp, Algorithm::Trws, Algorithm::TrwForward];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Msd => "msd",
            Algorithm::Heskes => "heskes",
            Algorithm::Mplp => "mplp",
            Algorithm::Trws => "trws",
            Algorithm::TrwForward => "trw-forward",
        }
    }

    /// Whether the algorithm guarantees a non-increasing bound.
    pub fn is_monotone(self) -> bool {
        self != Algorithm::TrwForward
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    ForwardBackward,
    ForwardOnly,
    EdgeSweep,
    IntersectionSweep,
}

/// Update order. For the node scans `order` is a node order; for edge and
/// intersection sweeps it lists region-graph edges or regions (MPLP: model
/// edges).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub bound: f64,
    pub admissibility_residual: f64,
    pub consistency_residual: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Bound decrease below `bound_tol` with consistency below
    /// `consistency_tol`.
    Converged,
    /// Largest message change in a sweep fell below the stall threshold
    /// (forward-only TRW).
    MessagesStalled,
    MaxIters,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MessagesStalled => "messages-stalled",
            Termination::MaxIters => "max-iters",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedMap {
    pub assignment: Assignment,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub algorithm: Algorithm,
    pub mode: Mode,
    /// Names the bound being tracked, e.g. `pair-singleton(c_pair=1,c_singleton=1)`.
    pub bound_label: String,
    pub schedule: Schedule,
    pub records: Vec<SweepRecord>,
    /// Final per-variable beliefs.
    pub beliefs: Vec<Vec<f64>>,
    /// Max mode only.
    pub decoded: Option<DecodedMap>,
    pub termination: Termination,
}

impl SolverTrace {
    pub fn final_bound(&self) -> f64 {
        self.records.last().map(|r| r.bound).unwrap_or(f64::NAN)
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.bound).collect()
    }

    /// Sweep indices where the bound rose by more than `tol`.
    pub fn increases(&self, tol: f64) -> Vec<usize> {
        self.records
            .windows(2)
            .filter(|w| w[1].bound > w[0].bound + tol)
            .map(|w| w[1].sweep)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub bound: f64,
    pub admissibility_residual: f64,
    pub consistency_residual: f64,
}

pub trait SweepSolver {
    fn sweep(&mut self) -> Result<()>;
    fn diagnostics(&self) -> Result<Diagnostics>;
    /// One probability table per model variable.
    fn variable_beliefs(&self) -> Vec<Vec<f64>>;
    /// Largest absolute message change during the last sweep.
    fn last_message_change(&self) -> f64;
}

/// Per-variable argmax, ties to the lowest state.
pub fn decode_map(beliefs: &[Vec<f64>]) -> Assignment {
    Assignment(beliefs.iter().map(|b| argmax(b)).collect())
}

/// Message change below which forward-only TRW is considered stalled.
pub const MESSAGE_STALL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StopRule {
    BoundDescent,
    MessageChange,
}

pub(crate) struct RunInfo {
    pub algorithm: Algorithm,
    pub bound_label: String,
    pub schedule: Schedule,
    pub stop: StopRule,
}

pub(crate) fn drive<S: SweepSolver>(
    solver: &mut S,
    model: &DiscreteModel,
    config: &SolverConfig,
    info: RunInfo,
) -> Result<SolverTrace> {
    let start = Instant::now();
    let record = |sweep: usize, d: Diagnostics| SweepRecord {
        sweep,
        bound: d.bound,
        admissibility_residual: d.admissibility_residual,
        consistency_residual: d.consistency_residual,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let mut records = vec![record(0, solver.diagnostics()?)];
    let mut termination = Termination::MaxIters;
    for sweep in 1..=config.max_iters {
        solver.sweep()?;
        let d = solver.diagnostics()?;
        if !d.bound.is_finite() {
            return Err(Error::InvalidInput(format!("bound became non-finite at sweep {sweep}")));
        }
        let previous = records.last().expect("sweep 0 recorded").bound;
        records.push(record(sweep, d));
        let done = match info.stop {
            StopRule::BoundDescent => {
                previous - d.bound < config.bound_tol && d.consistency_residual <= config.consistency_tol
            }
            StopRule::MessageChange => solver.last_message_change() < MESSAGE_STALL_TOL,
        };
        if done {
            termination = match info.stop {
                StopRule::BoundDescent => Termination::Converged,
                StopRule::MessageChange => Termination::MessagesStalled,
            };
            break;
        }
    }
    let beliefs = solver.variable_beliefs();
    let decoded = (config.mode == Mode::Max).then(|| {
        let assignment = decode_map(&beliefs);
        let energy = model.energy_unchecked(assignment.values());
        DecodedMap { assignment, energy }
    });
    Ok(SolverTrace {
        algorithm: info.algorithm,
        mode: config.mode,
        bound_label: info.bound_label,
        schedule: info.schedule,
        records,
        beliefs,
        decoded,
        termination,
    })
}

pub(crate) fn probes_for(model: &DiscreteModel, config: &SolverConfig) -> Vec<Assignment> {
    random_probes(model, TRW_PROBES, config.seed)
}

pub(crate) fn ledger_diagnostics(
    ledger: &MessageLedger<'_>,
    model: &DiscreteModel,
    probes: &[Assignment],
    mode: Mode,
) -> Diagnostics {
    Diagnostics {
        bound: ledger.bound(mode),
        admissibility_residual: ledger.admissibility_residual(model, probes),
        consistency_residual: ledger.consistency_residual(mode),
    }
}

/// Per-variable beliefs read off a ledger.
///
/// A singleton region with `c > 0` gives its own belief; a `c = 0` singleton
/// with parents gives the mean of its parents' projections; a variable with no
/// singleton region takes the projection of the region whose scope starts with
/// it (the star centered on it).
pub(crate) fn ledger_variable_beliefs(ledger: &MessageLedger<'_>, var_count: usize, mode: Mode) -> Vec<Vec<f64>> {
    let graph: &RegionGraph = ledger.graph();
    (0..var_count)
        .map(|v| {
            let singleton = graph.regions().iter().position(|r| r.scope == [v]);
            match singleton {
                Some(r) if graph.region(r).counting > 0.0 || graph.parent_edges(r).is_empty() => {
                    ledger.region_belief(r).probs
                }
                Some(r) => {
                    let parents = graph.parent_edges(r);
                    let len = graph.region(r).table_len();
                    let mut mean = vec![0.0; len];
                    for &e in parents {
                        let edge = graph.edge(e);
                        let b = ledger.region_belief(edge.parent).probs;
                        let p = project_probs(&b, &edge.child_index, len, mode);
                        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x / parents.len() as f64);
                    }
                    mean
                }
                None => {
                    let r = graph
                        .regions()
                        .iter()
                        .position(|r| r.scope.first() == Some(&v))
                        .expect("every variable leads some region");
                    let region = graph.region(r);
                    let b = belief(&ledger.theta_tilde(r), region.counting);
                    let stride: usize = region.cards[1..].iter().product();
                    let map: Vec<usize> = (0..region.table_len()).map(|k| k / stride).collect();
                    project_probs(&b, &map, region.cards[0], mode)
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_examples() {
        assert_eq!(decode_map(&[vec![0.9, 0.1], vec![0.2, 0.8]]), Assignment(vec![0, 1]));
        assert_eq!(decode_map(&[vec![0.5, 0.5]]), Assignment(vec![0]));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { max_iters: 0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { bound_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { consistency_tol: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("bp".parse::<Algorithm>().is_err());
    }
}
