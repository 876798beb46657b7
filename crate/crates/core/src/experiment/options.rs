//! Run options from a config file and from command-line flags.
//!
//! The file format is one `key = value` per line; `#` starts a comment.
//! Keys match the long flag names: `policy`, `lambda`, `k`, `K`, `slots`,
//! `threshold`, `seed`, `replicates`, `tau`, `out`, `scenario`.

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::ConfigError;
use crate::swarm::PolicyConfig;

/// Every field is optional so that a file and a flag set can be layered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub scenario: Option<String>,
    pub policy: Option<PolicyConfig>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    /// Server pool size; 0 draws a fresh vector per transfer.
    pub pool_size: Option<usize>,
    pub slots: Option<u64>,
    pub threshold: Option<usize>,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub tau: Option<u64>,
    pub out: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::invalid(key, format!("cannot parse `{value}`")))
}

impl RunOptions {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut opts = RunOptions::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            opts.set(key, value)?;
        }
        Ok(opts)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "scenario" => self.scenario = Some(value.to_string()),
            "policy" => self.policy = Some(value.parse()?),
            "lambda" => self.lambda = Some(parse_value(key, value)?),
            "k" => self.k = Some(parse_value(key, value)?),
            "K" => self.pool_size = Some(parse_value(key, value)?),
            "slots" => self.slots = Some(parse_value(key, value)?),
            "threshold" => self.threshold = Some(parse_value(key, value)?),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "replicates" => self.replicates = Some(parse_value(key, value)?),
            "tau" => self.tau = Some(parse_value(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: RunOptions) -> RunOptions {
        RunOptions {
            scenario: over.scenario.or(self.scenario),
            policy: over.policy.or(self.policy),
            lambda: over.lambda.or(self.lambda),
            k: over.k.or(self.k),
            pool_size: over.pool_size.or(self.pool_size),
            slots: over.slots.or(self.slots),
            threshold: over.threshold.or(self.threshold),
            seed: over.seed.or(self.seed),
            replicates: over.replicates.or(self.replicates),
            tau: over.tau.or(self.tau),
            out: over.out.or(self.out),
        }
    }
}
