//! The distributed filter.
//!
//! Every time step runs, for all nodes in lock-step:
//!
//! 1. [`predict`] with the shared `(F, Q)`;
//! 2. `L` rounds of [`state_correction_round`], where each node broadcasts
//!    its primal iterate `ξ` and keeps its transformed dual `λ̃` local;
//! 3. one [`covariance_consensus_step`] on the half-vectorized
//!    information-rate estimates `θ`, with the dual `ν̃` again local;
//! 4. [`assemble_posterior`].
//!
//! [`DkfEngine`] drives the sequence and owns the [`CommLedger`].

mod engine;
mod node;
mod params;
mod wire;

pub use engine::{DkfEngine, EngineOptions, StepReport};
pub use node::{
    assemble_posterior, compute_gain, covariance_consensus_step, local_rhs, predict, state_correction_round, Execution,
    LocalGain, NodeState,
};
pub use params::{DkfParams, ParamCheck, ValidatedParams};
pub use wire::{CommLedger, CommRecord, Message, Payload, Phase, Wire};
