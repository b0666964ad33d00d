//! Convergent message passing for discrete graphical models.
//!
//! Every solver in this crate keeps a reparameterization of the model energy
//! and enforces sum- or max-consistency on a star-shaped subtree of a region
//! graph at each update. That makes each update a block coordinate step on an
//! upper bound: the log-partition bound `Σ c_α ln Z(θ̃_α)` in sum mode and
//! the MAP bound `Σ max θ̃_α` in max mode. The recorded bound therefore never
//! increases, which the traces produced here let you check sweep by sweep.
//!
//! Module map:
//!
//! - [`model`]: factor models in log-potential form, the spin-glass generator
//!   and the `tcbo-model v1` text format.
//! - [`region_graph`]: pair/singleton and star/edge region graphs plus chain
//!   decompositions for tree-reweighted solvers.
//! - [`reparam`]: the message ledger, beliefs, bounds and residuals.
//! - [`solvers`]: MSD, Heskes, MPLP, TRW-S and the forward-only TRW baseline.
//! - [`oracle`]: brute-force enumeration and exact tree dynamic programming.
//! - [`cli`]: the `tcbo` command-line harness (`gen`, `solve`, `compare`).

pub mod cli;
mod error;
pub mod math;
pub mod model;
pub mod oracle;
pub mod region_graph;
pub mod reparam;
pub mod solvers;
pub mod trace;

pub use error::{Error, Result};
pub use model::{Assignment, DiscreteModel, Factor, PairwiseModel};
pub use region_graph::{RegionGraph, TreeDecomposition};
pub use reparam::MessageLedger;
pub use solvers::{SolverConfig, SolverTrace};

use serde::{Deserialize, Serialize};

/// Which bound and which consistency a computation targets: `Sum` for the
/// log-partition (marginals) and `Max` for the MAP value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sum,
    Max,
}

impl Mode {
    /// `⊕` over a slice: log-sum-exp in sum mode, max in max mode.
    pub fn reduce(self, values: &[f64]) -> f64 {
        match self {
            Mode::Sum => math::log_sum_exp(values),
            Mode::Max => math::max_value(values),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Sum => "sum",
            Mode::Max => "max",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Mode::Sum),
            "max" => Ok(Mode::Max),
            other => Err(Error::InvalidInput(format!("unknown mode `{other}` (expected sum or max)"))),
        }
    }
}
