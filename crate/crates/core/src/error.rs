use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("number of source chunks must be at least 1")]
    ZeroChunks,
    #[error("payload is empty")]
    EmptyPayload,
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("pool size {pool} is smaller than k = {k}")]
    PoolTooSmall { k: usize, pool: usize },
    #[error("group size {group} is not a power-of-two divisor of k = {k}")]
    BadGroup { k: usize, group: usize },
    #[error("decoder has rank {rank}, needs {k} to decode")]
    NotReady { rank: usize, k: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

/// A bookkeeping rule was broken during a run. Any of these aborts the run.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvariantViolation {
    #[error(
        "slot {slot}: population {population} != arrivals {arrivals} - departures {departures}"
    )]
    Conservation {
        slot: u64,
        population: usize,
        arrivals: u64,
        departures: u64,
    },
    #[error("slot {slot}: server made {transfers} transfers")]
    ServerRate { slot: u64, transfers: u32 },
    #[error("slot {slot}: deficit moved by {observed}, accounting expects {expected}")]
    DeficitAccounting {
        slot: u64,
        expected: i64,
        observed: i64,
    },
    #[error("slot {slot}: peer {peer} still holds a complete file after departures")]
    CompletePeerRemains { slot: u64, peer: u64 },
    #[error("slot {slot}: peer {peer} received {count} chunks from exchanges")]
    ExchangeRate { slot: u64, peer: u64, count: u32 },
    #[error("slot {slot}: peer {peer} decoded a payload that differs from the file")]
    DecodeMismatch { slot: u64, peer: u64 },
    #[error("slot {slot}: peer {peer} at full rank failed to decode: {source}")]
    DecodeFailed {
        slot: u64,
        peer: u64,
        source: CodecError,
    },
    #[error(
        "slot {slot}: peer {peer} contacted a peer with an innovative chunk but downloaded nothing"
    )]
    Withheld { slot: u64, peer: u64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("window of {window} points is too short, need at least 2")]
    WindowTooShort { window: usize },
    #[error("window {start}..{end} exceeds series of length {len}")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Invariant(#[from] InvariantViolation),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}
