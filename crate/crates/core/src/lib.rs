//! Peer-to-peer content distribution with a random linear fountain code at
//! the server.
//!
//! The crate simulates a slotted swarm in which peers download greedily from
//! random contacts and leave as soon as they can decode. Four server
//! policies are available: plain pieces or coded chunks, pushed to a random
//! peer or to the newest arrival.

pub mod adaptive;
pub mod codec;
pub mod error;
pub mod experiment;
pub mod gf256;
pub mod metrics;
pub mod rng;
pub mod swarm;

pub use adaptive::{ControllerState, EpochBump};
pub use codec::{CodePool, CodedChunk, CoeffVector, Decoder, SourceFile};
pub use error::{
    CodecError, ConfigError, ExperimentError, FieldError, InvariantViolation, MetricsError,
};
pub use experiment::{ExperimentSpec, RunOptions, RunSpec, RunSummary};
pub use gf256::Gf256;
pub use metrics::MetricsRecord;
pub use swarm::{PolicyConfig, RunOutput, SimConfig, Swarm, Verdict};
