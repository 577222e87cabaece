//! Deterministic discrete-event simulation of the dead-drop transfer protocol.
//!
//! One logical thread drives a priority queue ordered by `(tick, insertion)`.
//! Every delivery costs one tick. Actors are state machines that own their
//! state; the Factory tombstones ephemerals on request.

mod actors;
pub mod audit;
pub mod bench;
pub mod ids;
pub mod ledger;
pub mod msg;
pub mod noticeboard;
pub mod session;
pub mod spawn;
pub mod trace;
pub mod tuple;
pub mod wire;
pub mod world;

pub use actors::WitnessEvent;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("decode: {0}")]
    Decode(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("bench: {0}")]
    Bench(String),
    #[error(transparent)]
    Math(#[from] deaddrop_core::math::MathError),
}
