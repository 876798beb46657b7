//! Slotted peer-to-peer swarm with a rate-1 server.

mod config;
mod peer;
mod sim;

pub use config::{
    Coding, LambdaStep, PolicyConfig, ServerPiece, ServerTarget, SimConfig, MAX_UNCODED_K,
};
pub use peer::{Holdings, Offer, PeerState};
pub use sim::{run, sample_arrivals, RunOutput, Sender, SlotReport, Swarm, TransferEvent, Verdict};
