//! Online choice of `k` from the observed arrival rate.
//!
//! Arrivals are counted over consecutive windows of `tau` slots. At each
//! window boundary the rate estimate `a / tau` is compared with `k - 1`;
//! if it is larger, `k` is raised to the next power of two above the
//! estimate and a new coding epoch starts. Peers only exchange within their
//! own epoch.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerState {
    pub tau: u64,
    /// Completed windows.
    pub window_index: u64,
    /// Arrivals seen in the current window.
    pub arrival_count: u64,
    pub current_k: usize,
    pub epoch: u32,
}

/// Emitted when a window boundary raises `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochBump {
    pub slot: u64,
    pub epoch: u32,
    pub new_k: usize,
    /// Arrivals counted in the window that triggered the bump.
    pub window_arrivals: u64,
}

impl ControllerState {
    pub fn new(tau: u64, k: usize) -> Self {
        assert!(tau > 0, "tau must be positive");
        ControllerState {
            tau,
            window_index: 0,
            arrival_count: 0,
            current_k: k,
            epoch: 0,
        }
    }

    pub fn observe_arrival(&mut self) {
        self.arrival_count += 1;
    }

    /// Slot at which the current window closes.
    pub fn next_boundary(&self) -> u64 {
        (self.window_index + 1) * self.tau
    }

    /// Close the current window. Returns the new `k` if it changed.
    pub fn window_tick(&mut self) -> Option<usize> {
        let a = self.arrival_count;
        self.arrival_count = 0;
        self.window_index += 1;
        // a / tau > k - 1, in integers
        if a > (self.current_k as u64 - 1) * self.tau {
            self.current_k = raised_k(a, self.tau, self.current_k);
            self.epoch += 1;
            Some(self.current_k)
        } else {
            None
        }
    }
}

/// Smallest power of two that exceeds both `a / tau` and `current_k`.
pub fn raised_k(a: u64, tau: u64, current_k: usize) -> usize {
    let above_rate = (a / tau) as usize + 1;
    above_rate.max(current_k + 1).next_power_of_two()
}

pub fn epoch_of(peer: &crate::swarm::PeerState) -> u32 {
    peer.epoch
}

/// Peers exchange only within one epoch.
pub fn compatible(p: &crate::swarm::PeerState, q: &crate::swarm::PeerState) -> bool {
    p.epoch == q.epoch
}

/// With grouped coefficients, a chunk coded for `sender_k` super-chunks is
/// usable by a decoder over `receiver_k` chunks when the former divides the
/// latter (both powers of two): the sender's coefficients repeat over blocks
/// of `receiver_k / sender_k`.
pub fn grouped_compatible(sender_k: usize, receiver_k: usize) -> bool {
    sender_k.is_power_of_two()
        && receiver_k.is_power_of_two()
        && sender_k <= receiver_k
        && receiver_k.is_multiple_of(sender_k)
}
