use std::sync::Arc;

use rand::Rng;

use crate::codec::{CodedChunk, Decoder};
use crate::rng::RngStream;

/// What a peer has collected so far.
#[derive(Debug, Clone)]
pub enum Holdings {
    /// Bit `j` set when plain piece `j` is held.
    Plain { k: usize, mask: u64 },
    /// Decoder state plus the verbatim chunks, which the peer forwards.
    Coded {
        decoder: Decoder,
        chunks: Vec<Arc<CodedChunk>>,
    },
}

impl Holdings {
    pub fn empty_plain(k: usize) -> Self {
        Holdings::Plain { k, mask: 0 }
    }

    pub fn empty_coded(k: usize, chunk_len: usize) -> Self {
        Holdings::Coded {
            decoder: Decoder::new(k, chunk_len),
            chunks: Vec::with_capacity(k),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Holdings::Plain { k, .. } => *k,
            Holdings::Coded { decoder, .. } => decoder.k(),
        }
    }

    /// Pieces held (plain) or decoder rank (coded).
    pub fn count(&self) -> usize {
        match self {
            Holdings::Plain { mask, .. } => mask.count_ones() as usize,
            Holdings::Coded { decoder, .. } => decoder.rank(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.count() == self.k()
    }

    /// Chunks still needed to decode.
    pub fn deficit(&self) -> usize {
        self.k() - self.count()
    }
}

/// One chunk a peer can hand to another.
#[derive(Debug, Clone)]
pub enum Offer {
    Piece(usize),
    Coded(Arc<CodedChunk>),
}

#[derive(Debug, Clone)]
pub struct PeerState {
    pub id: u64,
    pub arrival_slot: u64,
    pub epoch: u32,
    pub holdings: Holdings,
}

impl PeerState {
    pub fn count(&self) -> usize {
        self.holdings.count()
    }

    pub fn k(&self) -> usize {
        self.holdings.k()
    }

    pub fn is_complete(&self) -> bool {
        self.holdings.is_complete()
    }

    /// Whether `from` holds at least one chunk that is innovative for `self`.
    pub fn has_innovative_from(&self, from: &PeerState) -> bool {
        match (&self.holdings, &from.holdings) {
            (Holdings::Plain { mask: mine, .. }, Holdings::Plain { mask: theirs, .. }) => {
                theirs & !mine != 0
            }
            (Holdings::Coded { decoder, .. }, Holdings::Coded { chunks, .. }) => chunks
                .iter()
                .any(|c| c.coeffs.len() == decoder.k() && decoder.is_innovative_coeffs(&c.coeffs)),
            _ => false,
        }
    }

    /// Pick uniformly among the chunks of `from` that are innovative for
    /// `self`.
    pub fn pick_innovative(&self, from: &PeerState, rng: &mut RngStream) -> Option<Offer> {
        match (&self.holdings, &from.holdings) {
            (Holdings::Plain { mask: mine, .. }, Holdings::Plain { mask: theirs, .. }) => {
                pick_bit(theirs & !mine, rng).map(Offer::Piece)
            }
            (Holdings::Coded { decoder, .. }, Holdings::Coded { chunks, .. }) => {
                if decoder.is_complete() {
                    return None;
                }
                let useful: Vec<usize> = chunks
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| {
                        c.coeffs.len() == decoder.k() && decoder.is_innovative_coeffs(&c.coeffs)
                    })
                    .map(|(i, _)| i)
                    .collect();
                if useful.is_empty() {
                    return None;
                }
                let idx = useful[rng.random_range(0..useful.len())];
                Some(Offer::Coded(Arc::clone(&chunks[idx])))
            }
            _ => None,
        }
    }

    /// Take a chunk. Returns true when it raised the count.
    pub fn receive(&mut self, offer: Offer) -> bool {
        match (&mut self.holdings, offer) {
            (Holdings::Plain { k, mask }, Offer::Piece(j)) => {
                debug_assert!(j < *k);
                let before = *mask;
                *mask |= 1 << j;
                *mask != before
            }
            (Holdings::Coded { decoder, chunks }, Offer::Coded(chunk)) => {
                let before = decoder.rank();
                match decoder.absorb(&chunk) {
                    Ok(r) if r > before => {
                        chunks.push(chunk);
                        true
                    }
                    _ => false,
                }
            }
            _ => false,
        }
    }
}

/// Uniformly chosen set bit of `mask`.
pub(crate) fn pick_bit(mask: u64, rng: &mut RngStream) -> Option<usize> {
    let n = mask.count_ones();
    if n == 0 {
        return None;
    }
    let mut nth = rng.random_range(0..n);
    let mut m = mask;
    loop {
        let j = m.trailing_zeros();
        if nth == 0 {
            return Some(j as usize);
        }
        nth -= 1;
        m &= m - 1;
    }
}
