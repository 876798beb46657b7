use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::DEFAULT_POOL_SIZE;
use crate::error::ConfigError;

/// What the server hands out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coding {
    /// The `k` plain pieces.
    Uncoded,
    /// Random linear combinations of the `k` pieces.
    Fountain,
}

/// Whom the server serves each slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServerTarget {
    RandomPeer,
    NewestPeer,
}

/// Which plain piece the server sends in an uncoded run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServerPiece {
    /// A uniform piece among those the target lacks. The server behaves like
    /// a contacted peer that holds everything.
    #[default]
    Missing,
    /// A uniform piece out of all `k`, wasted if the target already has it.
    UniformDraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub coding: Coding,
    pub server_target: ServerTarget,
}

impl PolicyConfig {
    pub const BASELINE: PolicyConfig = PolicyConfig {
        coding: Coding::Uncoded,
        server_target: ServerTarget::RandomPeer,
    };
    pub const FOUNTAIN_ONLY: PolicyConfig = PolicyConfig {
        coding: Coding::Fountain,
        server_target: ServerTarget::RandomPeer,
    };
    pub const PRIORITIZE_ONLY: PolicyConfig = PolicyConfig {
        coding: Coding::Uncoded,
        server_target: ServerTarget::NewestPeer,
    };
    pub const PROPOSED: PolicyConfig = PolicyConfig {
        coding: Coding::Fountain,
        server_target: ServerTarget::NewestPeer,
    };

    pub const ALL: [PolicyConfig; 4] = [
        Self::BASELINE,
        Self::FOUNTAIN_ONLY,
        Self::PRIORITIZE_ONLY,
        Self::PROPOSED,
    ];

    pub fn name(&self) -> &'static str {
        match (self.coding, self.server_target) {
            (Coding::Uncoded, ServerTarget::RandomPeer) => "baseline",
            (Coding::Fountain, ServerTarget::RandomPeer) => "fountain-only",
            (Coding::Uncoded, ServerTarget::NewestPeer) => "prioritize-only",
            (Coding::Fountain, ServerTarget::NewestPeer) => "proposed",
        }
    }
}

impl fmt::Display for PolicyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| {
                ConfigError::invalid(
                    "policy",
                    format!(
                        "`{s}` is not one of baseline, fountain-only, prioritize-only, proposed"
                    ),
                )
            })
    }
}

/// Switch the mean arrival rate at a given slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaStep {
    pub at_slot: u64,
    pub lambda: f64,
}

/// Everything that determines a run, together with the RNG stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of source chunks (the initial value when `tau` is set).
    pub k: usize,
    /// Size of the server's coefficient pool; `None` draws a fresh vector
    /// for every server transfer.
    pub pool_size: Option<usize>,
    pub lambda: f64,
    pub lambda_step: Option<LambdaStep>,
    /// Upper bound on arrivals per slot; defaults to `max(20, ceil(10 λ))`.
    pub max_arrivals: Option<u32>,
    pub max_slots: u64,
    /// The run is declared diverged once the population exceeds this.
    pub pop_threshold: usize,
    pub seed: u64,
    /// Index of the RNG stream under `seed`.
    pub replicate: u64,
    pub policy: PolicyConfig,
    pub server_piece: ServerPiece,
    pub file_len: usize,
    /// Adaptive-k timer window; `None` keeps `k` fixed.
    pub tau: Option<u64>,
    /// Fraction of peers that must share one (k-1)-set to flag a one-club.
    pub one_club_fraction: f64,
    /// Recheck every contact that produced no download.
    pub audit: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            k: 5,
            pool_size: Some(DEFAULT_POOL_SIZE),
            lambda: 2.0,
            lambda_step: None,
            max_arrivals: None,
            max_slots: 10_000,
            pop_threshold: 1_000,
            seed: 1,
            replicate: 0,
            policy: PolicyConfig::PROPOSED,
            server_piece: ServerPiece::Missing,
            file_len: 1_000,
            tau: None,
            one_club_fraction: 0.9,
            audit: false,
        }
    }
}

/// Largest `k` a plain-piece run supports (holdings are a 64-bit mask).
pub const MAX_UNCODED_K: usize = 64;

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::invalid("k", "must be at least 1"));
        }
        if self.policy.coding == Coding::Uncoded && self.k > MAX_UNCODED_K {
            return Err(ConfigError::invalid(
                "k",
                format!("uncoded runs support k <= {MAX_UNCODED_K}"),
            ));
        }
        if self.policy.coding == Coding::Uncoded && self.tau.is_some() {
            return Err(ConfigError::invalid(
                "tau",
                "adaptive k needs fountain coding",
            ));
        }
        if let Some(pool) = self.pool_size {
            if pool < self.k {
                return Err(ConfigError::invalid(
                    "K",
                    format!("pool of {pool} is smaller than k"),
                ));
            }
        }
        for l in std::iter::once(self.lambda).chain(self.lambda_step.map(|s| s.lambda)) {
            if !l.is_finite() || l < 1.0 {
                return Err(ConfigError::invalid("lambda", format!("{l} is below 1")));
            }
        }
        if let Some(a) = self.max_arrivals {
            if a == 0 {
                return Err(ConfigError::invalid("max_arrivals", "must be at least 1"));
            }
        }
        if self.pop_threshold == 0 {
            return Err(ConfigError::invalid("threshold", "must be positive"));
        }
        if self.file_len == 0 {
            return Err(ConfigError::invalid("file_len", "must be positive"));
        }
        if self.tau == Some(0) {
            return Err(ConfigError::invalid("tau", "must be positive"));
        }
        if !(self.one_club_fraction > 0.0 && self.one_club_fraction <= 1.0) {
            return Err(ConfigError::invalid("one_club", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn lambda_at(&self, slot: u64) -> f64 {
        match self.lambda_step {
            Some(step) if slot >= step.at_slot => step.lambda,
            _ => self.lambda,
        }
    }

    pub fn arrival_cap(&self) -> u32 {
        self.max_arrivals.unwrap_or_else(|| {
            let peak = self
                .lambda_step
                .map_or(self.lambda, |s| s.lambda.max(self.lambda));
            20u32.max((10.0 * peak).ceil() as u32)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyConfig::ALL {
            assert_eq!(p.name().parse::<PolicyConfig>().unwrap(), p);
        }
        assert!("rarest-first".parse::<PolicyConfig>().is_err());
    }

    #[test]
    fn arrival_cap_default() {
        let mut c = SimConfig::default();
        assert_eq!(c.arrival_cap(), 20);
        c.lambda = 5.5;
        assert_eq!(c.arrival_cap(), 55);
        c.lambda_step = Some(LambdaStep {
            at_slot: 10,
            lambda: 6.0,
        });
        assert_eq!(c.arrival_cap(), 60);
        assert_eq!(c.lambda_at(9), 5.5);
        assert_eq!(c.lambda_at(10), 6.0);
    }

    #[test]
    fn validation() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = [
            SimConfig {
                k: 0,
                ..Default::default()
            },
            SimConfig {
                lambda: 0.5,
                ..Default::default()
            },
            SimConfig {
                pool_size: Some(3),
                ..Default::default()
            },
            SimConfig {
                pop_threshold: 0,
                ..Default::default()
            },
            SimConfig {
                tau: Some(0),
                ..Default::default()
            },
            SimConfig {
                policy: PolicyConfig::BASELINE,
                tau: Some(100),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
