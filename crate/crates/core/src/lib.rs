//! Distributed submodular coordination with learned neighbor selection.
//!
//! Agents alternate between picking actions with a multiplicative-weights
//! learner and picking which neighbors to listen to with EXP3-IX learners.
//! A sequential-greedy baseline, a simulated decision-time model and a
//! Monte-Carlo area-coverage harness are included for comparison.

pub mod agent;
pub mod bandit;
pub mod baseline;
pub mod clock;
pub mod error;
pub mod harness;
pub mod objective;
pub mod orchestrator;
pub mod rng;
pub mod trace_io;
pub mod verify;

pub use agent::{Agent, AgentConfig};
pub use baseline::{build_graph, run_dfssg, DfsPlan, DirectedCommGraph};
pub use clock::{worst_case_time, TimeModel};
pub use error::{Error, Result};
pub use harness::{run_sweep, AggregateCurve, ExperimentConfig, SweepResult};
pub use objective::{ActionId, CoverageObjective, CoverageWorld, JointActionSet, SubmodularObjective};
pub use orchestrator::{regret_diagnostics, RoundSnapshot, SimTrace, Simulation};
pub use trace_io::TraceRow;
