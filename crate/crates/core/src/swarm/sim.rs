//! The slotted swarm.
//!
//! Each slot runs, in order: arrivals (empty peers), one server transfer,
//! the exchange phase (every peer contacts one random peer of its epoch in
//! a random order, downloads apply immediately), departures of complete
//! peers, and a metrics snapshot.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::adaptive::{ControllerState, EpochBump};
use crate::codec::{self, CodedChunk, SourceFile};
use crate::error::{ConfigError, InvariantViolation};
use crate::metrics::{self, MetricsRecord};
use crate::rng::{self, RngStream};

use super::config::{Coding, ServerPiece, ServerTarget, SimConfig};
use super::peer::{pick_bit, Holdings, Offer, PeerState};

/// `1 + X`, `X ~ Poisson(lambda - 1)` resampled until `X <= cap - 1`.
pub fn sample_arrivals(lambda: f64, cap: u32, rng: &mut RngStream) -> u32 {
    debug_assert!(lambda >= 1.0 && cap >= 1);
    let extra = lambda - 1.0;
    if extra <= 0.0 || cap == 1 {
        return 1;
    }
    let poisson = Poisson::new(extra).expect("positive finite rate");
    loop {
        let x: f64 = poisson.sample(rng);
        if x <= (cap - 1) as f64 {
            return 1 + x as u32;
        }
    }
}

/// Who sent a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sender {
    Server,
    Peer(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferEvent {
    pub from: Sender,
    pub to: u64,
}

/// Per-slot counters used by the invariant checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotReport {
    pub arrivals: u32,
    pub server_transfers: u32,
    pub exchange_transfers: u32,
    pub departed: Vec<u64>,
    pub served_new: bool,
}

/// Coding state for one value of `k`.
#[derive(Debug, Clone)]
struct EpochCode {
    k: usize,
    source: SourceFile,
    pool: Option<Vec<Arc<CodedChunk>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Diverged { slot: u64 },
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }

    pub fn divergence_slot(&self) -> Option<u64> {
        match self {
            Verdict::Stable => None,
            Verdict::Diverged { slot } => Some(*slot),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<MetricsRecord>,
    pub verdict: Verdict,
    pub events: Vec<EpochBump>,
}

/// Full simulation state.
#[derive(Debug, Clone)]
pub struct Swarm {
    cfg: SimConfig,
    slot: u64,
    peers: Vec<PeerState>,
    next_id: u64,
    rng: RngStream,
    payload: Vec<u8>,
    epochs: Vec<EpochCode>,
    controller: Option<ControllerState>,
    events: Vec<EpochBump>,
    arrivals_cum: u64,
    departures_cum: u64,
    deficit: u64,
    last: SlotReport,
    arrival_cap: u32,
}

impl Swarm {
    pub fn new(cfg: SimConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let mut rng = rng::stream(cfg.seed, cfg.replicate);
        let mut payload = vec![0u8; cfg.file_len];
        rng.fill(&mut payload[..]);
        let controller = cfg.tau.map(|tau| ControllerState::new(tau, cfg.k));
        let arrival_cap = cfg.arrival_cap();
        let mut swarm = Swarm {
            cfg,
            slot: 0,
            peers: Vec::new(),
            next_id: 1,
            rng,
            payload,
            epochs: Vec::new(),
            controller,
            events: Vec::new(),
            arrivals_cum: 0,
            departures_cum: 0,
            deficit: 0,
            last: SlotReport::default(),
            arrival_cap,
        };
        let k = swarm.cfg.k;
        swarm.push_epoch(k)?;
        Ok(swarm)
    }

    fn push_epoch(&mut self, k: usize) -> Result<(), ConfigError> {
        let source = codec::split_file(&self.payload, k)?;
        let pool = match (self.cfg.policy.coding, self.cfg.pool_size) {
            (Coding::Fountain, Some(size)) => {
                let pool = codec::build_pool(k, size, &mut self.rng)?;
                Some(pool.materialize(&source)?)
            }
            _ => None,
        };
        self.epochs.push(EpochCode { k, source, pool });
        Ok(())
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Completed slots.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn peers(&self) -> &[PeerState] {
        &self.peers
    }

    pub fn population(&self) -> usize {
        self.peers.len()
    }

    pub fn arrivals_cum(&self) -> u64 {
        self.arrivals_cum
    }

    pub fn departures_cum(&self) -> u64 {
        self.departures_cum
    }

    pub fn events(&self) -> &[EpochBump] {
        &self.events
    }

    pub fn controller(&self) -> Option<&ControllerState> {
        self.controller.as_ref()
    }

    pub fn current_epoch(&self) -> u32 {
        (self.epochs.len() - 1) as u32
    }

    pub fn current_k(&self) -> usize {
        self.epochs.last().expect("at least one epoch").k
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn last_report(&self) -> &SlotReport {
        &self.last
    }

    /// Σ over peers of chunks still needed.
    pub fn deficit(&self) -> u64 {
        self.peers.iter().map(|p| p.holdings.deficit() as u64).sum()
    }

    /// Insert a peer directly, bypassing arrivals. For building synthetic
    /// states in tests and experiments.
    pub fn insert_peer(&mut self, holdings: Holdings, epoch: u32) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.deficit += holdings.deficit() as u64;
        self.arrivals_cum += 1;
        self.peers.push(PeerState {
            id,
            arrival_slot: self.slot,
            epoch,
            holdings,
        });
        id
    }

    fn empty_holdings(&self, epoch: u32) -> Holdings {
        let code = &self.epochs[epoch as usize];
        match self.cfg.policy.coding {
            Coding::Uncoded => Holdings::empty_plain(code.k),
            Coding::Fountain => Holdings::empty_coded(code.k, code.source.chunk_len()),
        }
    }

    /// Coded chunk for `epoch` as the server would hand it out.
    pub fn server_chunk(&mut self, epoch: u32) -> Arc<CodedChunk> {
        let code = &self.epochs[epoch as usize];
        match &code.pool {
            Some(pool) => {
                let i = self.rng.random_range(0..pool.len());
                Arc::clone(&pool[i])
            }
            None => {
                let coeffs = codec::draw_coefficients(code.k, &mut self.rng);
                Arc::new(codec::encode(&code.source, &coeffs).expect("k matches"))
            }
        }
    }

    fn add_arrivals(&mut self, n: u32) {
        let epoch = self.current_epoch();
        for _ in 0..n {
            let holdings = self.empty_holdings(epoch);
            self.insert_peer(holdings, epoch);
            if let Some(c) = self.controller.as_mut() {
                c.observe_arrival();
            }
        }
    }

    /// One server transfer. `new_from` is the index of the first peer that
    /// arrived this slot.
    pub fn server_action(&mut self, new_from: usize) -> Option<TransferEvent> {
        if self.peers.is_empty() {
            return None;
        }
        let n = self.peers.len();
        let target = match self.cfg.policy.server_target {
            ServerTarget::RandomPeer => self.rng.random_range(0..n),
            ServerTarget::NewestPeer => {
                if new_from < n {
                    self.rng.random_range(new_from..n)
                } else if let Some(old) = self.oldest_stale_peer() {
                    old
                } else {
                    self.rng.random_range(0..n)
                }
            }
        };
        self.last.served_new = target >= new_from;
        let offer = match self.cfg.policy.coding {
            Coding::Uncoded => {
                let Holdings::Plain { k, mask } = self.peers[target].holdings else {
                    unreachable!("uncoded policy holds plain pieces")
                };
                match self.cfg.server_piece {
                    ServerPiece::Missing => Offer::Piece(missing_piece(mask, k, &mut self.rng)?),
                    ServerPiece::UniformDraw => Offer::Piece(self.rng.random_range(0..k)),
                }
            }
            Coding::Fountain => {
                let epoch = self.peers[target].epoch;
                Offer::Coded(self.server_chunk(epoch))
            }
        };
        if self.peers[target].receive(offer) {
            Some(TransferEvent {
                from: Sender::Server,
                to: self.peers[target].id,
            })
        } else {
            None
        }
    }

    /// Oldest incomplete peer from an epoch before the current one.
    fn oldest_stale_peer(&self) -> Option<usize> {
        let current = self.current_epoch();
        self.peers
            .iter()
            .enumerate()
            .filter(|(_, p)| p.epoch < current && !p.is_complete())
            .min_by_key(|(_, p)| (p.arrival_slot, p.id))
            .map(|(i, _)| i)
    }

    /// Every peer contacts one other peer of its epoch, in a uniformly random
    /// order, and downloads at most one innovative chunk from it.
    pub fn exchange_phase(&mut self) -> Result<Vec<TransferEvent>, InvariantViolation> {
        let n = self.peers.len();
        let mut transfers = Vec::new();
        if n < 2 {
            return Ok(transfers);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);

        let groups = if self.epochs.len() > 1 {
            let mut g: HashMap<u32, Vec<usize>> = HashMap::new();
            for (i, p) in self.peers.iter().enumerate() {
                g.entry(p.epoch).or_default().push(i);
            }
            Some(g)
        } else {
            None
        };
        let mut received = vec![0u32; n];

        // Complete peers leave at once: they neither contact nor get contacted.
        let mut active = vec![true; n];
        let mut active_in: HashMap<u32, usize> = HashMap::new();
        for (i, peer) in self.peers.iter().enumerate() {
            active[i] = !peer.is_complete();
            if active[i] {
                *active_in.entry(peer.epoch).or_default() += 1;
            }
        }

        for p in order {
            if !active[p] {
                continue;
            }
            let epoch = self.peers[p].epoch;
            if active_in[&epoch] < 2 {
                continue;
            }
            let q = loop {
                let q = match &groups {
                    None => {
                        let r = self.rng.random_range(0..n - 1);
                        if r >= p {
                            r + 1
                        } else {
                            r
                        }
                    }
                    Some(g) => {
                        let members = &g[&epoch];
                        members[self.rng.random_range(0..members.len())]
                    }
                };
                if q != p && active[q] {
                    break q;
                }
            };
            match self.peers[p].pick_innovative(&self.peers[q], &mut self.rng) {
                Some(offer) => {
                    let gained = self.peers[p].receive(offer);
                    debug_assert!(gained);
                    received[p] += 1;
                    if self.peers[p].is_complete() {
                        active[p] = false;
                        *active_in.get_mut(&epoch).expect("counted") -= 1;
                    }
                    transfers.push(TransferEvent {
                        from: Sender::Peer(self.peers[q].id),
                        to: self.peers[p].id,
                    });
                }
                None if self.cfg.audit && audit_has_innovative(&self.peers[p], &self.peers[q]) => {
                    return Err(InvariantViolation::Withheld {
                        slot: self.slot + 1,
                        peer: self.peers[p].id,
                    });
                }
                None => {}
            }
        }
        if let Some((i, &c)) = received.iter().enumerate().find(|(_, &c)| c > 1) {
            return Err(InvariantViolation::ExchangeRate {
                slot: self.slot + 1,
                peer: self.peers[i].id,
                count: c,
            });
        }
        Ok(transfers)
    }

    /// Remove complete peers. Coded peers must decode to the file.
    pub fn departures(&mut self) -> Result<Vec<u64>, InvariantViolation> {
        let slot = self.slot + 1;
        let mut gone = Vec::new();
        for peer in self.peers.iter().filter(|p| p.is_complete()) {
            if let Holdings::Coded { decoder, .. } = &peer.holdings {
                let code = &self.epochs[peer.epoch as usize];
                let decoded =
                    decoder
                        .decode()
                        .map_err(|source| InvariantViolation::DecodeFailed {
                            slot,
                            peer: peer.id,
                            source,
                        })?;
                if decoded != code.source.padded() {
                    return Err(InvariantViolation::DecodeMismatch {
                        slot,
                        peer: peer.id,
                    });
                }
            }
            gone.push(peer.id);
        }
        self.peers.retain(|p| !p.is_complete());
        self.departures_cum += gone.len() as u64;
        Ok(gone)
    }

    /// Run one slot and return its snapshot.
    pub fn step(&mut self) -> Result<MetricsRecord, InvariantViolation> {
        self.last = SlotReport::default();
        let deficit_before = self.deficit;
        let lambda = self.cfg.lambda_at(self.slot);

        let n = sample_arrivals(lambda, self.arrival_cap, &mut self.rng);
        let new_from = self.peers.len();
        self.add_arrivals(n);
        self.last.arrivals = n;
        let added: u64 = self.peers[new_from..]
            .iter()
            .map(|p| p.holdings.deficit() as u64)
            .sum();

        let server = self.server_action(new_from);
        self.last.server_transfers = u32::from(server.is_some());
        let exchanged = self.exchange_phase()?;
        self.last.exchange_transfers = exchanged.len() as u32;
        self.last.departed = self.departures()?;

        self.slot += 1;
        self.check_invariants(deficit_before + added)?;

        let record = metrics::snapshot(self);

        if let Some(ctrl) = self.controller.as_mut() {
            if self.slot == ctrl.next_boundary() {
                let window_arrivals = ctrl.arrival_count;
                if let Some(new_k) = ctrl.window_tick() {
                    let epoch = ctrl.epoch;
                    self.push_epoch(new_k).expect("validated config");
                    self.events.push(EpochBump {
                        slot: self.slot,
                        epoch,
                        new_k,
                        window_arrivals,
                    });
                }
            }
        }
        Ok(record)
    }

    fn check_invariants(&mut self, deficit_in: u64) -> Result<(), InvariantViolation> {
        let slot = self.slot;
        let r = &self.last;
        if r.server_transfers > 1 {
            return Err(InvariantViolation::ServerRate {
                slot,
                transfers: r.server_transfers,
            });
        }
        let population = self.peers.len();
        if population as u64 != self.arrivals_cum - self.departures_cum {
            return Err(InvariantViolation::Conservation {
                slot,
                population,
                arrivals: self.arrivals_cum,
                departures: self.departures_cum,
            });
        }
        if let Some(p) = self.peers.iter().find(|p| p.is_complete()) {
            return Err(InvariantViolation::CompletePeerRemains { slot, peer: p.id });
        }
        let expected = deficit_in as i64 - (r.server_transfers + r.exchange_transfers) as i64;
        let observed = self.deficit() as i64;
        if expected != observed {
            return Err(InvariantViolation::DeficitAccounting {
                slot,
                expected,
                observed,
            });
        }
        self.deficit = observed as u64;
        Ok(())
    }

    /// Step until `max_slots` or until the population passes the threshold.
    pub fn run(mut self) -> Result<RunOutput, InvariantViolation> {
        let mut records = Vec::with_capacity(self.cfg.max_slots.min(1 << 20) as usize);
        let mut verdict = Verdict::Stable;
        while self.slot < self.cfg.max_slots {
            let rec = self.step()?;
            let over = rec.population > self.cfg.pop_threshold;
            records.push(rec);
            if over {
                verdict = Verdict::Diverged { slot: self.slot };
                break;
            }
        }
        Ok(RunOutput {
            records,
            verdict,
            events: self.events,
        })
    }
}

/// Independent recheck of "q has something innovative for p": plain masks
/// compared bit by bit, coded chunks absorbed into a scratch decoder.
fn audit_has_innovative(p: &PeerState, q: &PeerState) -> bool {
    match (&p.holdings, &q.holdings) {
        (Holdings::Plain { k, mask: mine }, Holdings::Plain { mask: theirs, .. }) => {
            (0..*k).any(|j| theirs >> j & 1 == 1 && mine >> j & 1 == 0)
        }
        (Holdings::Coded { decoder, .. }, Holdings::Coded { chunks, .. }) => {
            chunks.iter().any(|c| {
                let mut scratch = decoder.clone();
                let before = scratch.rank();
                scratch.absorb(c).map(|r| r > before).unwrap_or(false)
            })
        }
        _ => false,
    }
}

/// Build and run.
pub fn run(cfg: SimConfig) -> Result<RunOutput, crate::error::ExperimentError> {
    Ok(Swarm::new(cfg)?.run()?)
}

/// Uniformly chosen piece index in `0..k` not set in `mask`.
fn missing_piece(mask: u64, k: usize, rng: &mut RngStream) -> Option<usize> {
    let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    pick_bit(full & !mask, rng)
}
