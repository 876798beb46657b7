//! Per-slot instrumentation.
//!
//! `M` is stored as the extensive deficit `Σ_i count_i · (k - i)`: the
//! number of chunk downloads still needed to let every peer present leave.
//! With `S` peers it satisfies `S <= M <= kS`.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::swarm::{Holdings, PeerState, Swarm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub slot: u64,
    pub population: usize,
    /// Peers holding exactly `i` chunks, `i < k`.
    pub counts: Vec<u64>,
    /// `counts / population`; all zero for an empty system.
    pub alpha: Vec<f64>,
    #[serde(rename = "M")]
    pub deficit: u64,
    pub arrivals_cum: u64,
    pub departures_cum: u64,
    pub one_club: bool,
    pub server_served_new: bool,
}

pub fn snapshot(swarm: &Swarm) -> MetricsRecord {
    let k = swarm.current_k();
    let peers = swarm.peers();
    let mut counts = vec![0u64; k];
    let mut deficit = 0u64;
    for p in peers {
        let c = p.count();
        // k only grows, so older peers always fit the current histogram
        counts[c.min(k - 1)] += 1;
        deficit += p.holdings.deficit() as u64;
    }
    MetricsRecord {
        slot: swarm.slot(),
        population: peers.len(),
        alpha: alpha_from_counts(&counts),
        counts,
        deficit,
        arrivals_cum: swarm.arrivals_cum(),
        departures_cum: swarm.departures_cum(),
        one_club: detect_one_club(peers, swarm.config().one_club_fraction),
        server_served_new: swarm.last_report().served_new,
    }
}

pub fn alpha_from_counts(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// `Σ_i counts[i] · (k - i)` with `k = counts.len()`.
pub fn deficit_from_counts(counts: &[u64]) -> u64 {
    let k = counts.len() as u64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (k - i as u64))
        .sum()
}

/// True when at least `fraction` of the peers hold the same `k - 1`
/// chunks: an identical piece set for plain holdings, an identical row
/// space for coded ones.
pub fn detect_one_club(peers: &[PeerState], fraction: f64) -> bool {
    if peers.is_empty() {
        return false;
    }
    let needed = (fraction * peers.len() as f64).ceil() as usize;
    let mut plain: HashMap<(u32, u64), usize> = HashMap::new();
    let mut coded: HashMap<(u32, &[u8]), usize> = HashMap::new();
    for p in peers {
        if p.count() + 1 != p.k() {
            continue;
        }
        match &p.holdings {
            Holdings::Plain { mask, .. } => *plain.entry((p.epoch, *mask)).or_default() += 1,
            // reduced row-echelon form is canonical for a subspace
            Holdings::Coded { decoder, .. } => {
                *coded.entry((p.epoch, decoder.row_space())).or_default() += 1
            }
        }
    }
    let best = plain
        .values()
        .chain(coded.values())
        .copied()
        .max()
        .unwrap_or(0);
    best >= needed
}

fn check_window(len: usize, window: &Range<usize>) -> Result<(), MetricsError> {
    if window.end > len || window.start > window.end {
        return Err(MetricsError::WindowOutOfRange {
            start: window.start,
            end: window.end,
            len,
        });
    }
    if window.len() < 2 {
        return Err(MetricsError::WindowTooShort {
            window: window.len(),
        });
    }
    Ok(())
}

/// Least-squares slope of population against slot over `window` (indices
/// into `series`).
pub fn growth_slope(series: &[MetricsRecord], window: Range<usize>) -> Result<f64, MetricsError> {
    check_window(series.len(), &window)?;
    let points: Vec<(f64, f64)> = series[window]
        .iter()
        .map(|r| (r.slot as f64, r.population as f64))
        .collect();
    Ok(least_squares_slope(&points))
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Mean of `M(t+1) - M(t)` over consecutive records in `window`.
pub fn empirical_drift(
    series: &[MetricsRecord],
    window: Range<usize>,
) -> Result<f64, MetricsError> {
    check_window(series.len(), &window)?;
    let w = &series[window];
    let first = w[0].deficit as f64;
    let last = w[w.len() - 1].deficit as f64;
    Ok((last - first) / (w.len() - 1) as f64)
}

/// Index range of the last quarter of a series of length `len`.
pub fn last_quarter(len: usize) -> Range<usize> {
    len - len / 4..len
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{self, CoeffVector};
    use crate::rng::stream;

    fn record(slot: u64, population: usize, deficit: u64) -> MetricsRecord {
        MetricsRecord {
            slot,
            population,
            counts: vec![],
            alpha: vec![],
            deficit,
            arrivals_cum: 0,
            departures_cum: 0,
            one_club: false,
            server_served_new: false,
        }
    }

    fn plain(mask: u64, k: usize) -> PeerState {
        PeerState {
            id: mask,
            arrival_slot: 0,
            epoch: 0,
            holdings: Holdings::Plain { k, mask },
        }
    }

    #[test]
    fn deficit_example() {
        // ranks {0, 0, 2} with k = 5
        assert_eq!(deficit_from_counts(&[2, 0, 1, 0, 0]), 13);
        assert_eq!(alpha_from_counts(&[0, 0, 0]), vec![0.0; 3]);
        let a = alpha_from_counts(&[1, 0, 3]);
        assert_eq!(a, vec![0.25, 0.0, 0.75]);
    }

    #[test]
    fn one_club_plain() {
        assert!(!detect_one_club(&[], 0.9));
        let club: Vec<_> = (0..10).map(|_| plain(0b01111, 5)).collect();
        assert!(detect_one_club(&club, 0.9));
        let mixed: Vec<_> = (0..10).map(|i| plain((1u64 << (i % 5)) - 1, 5)).collect();
        assert!(!detect_one_club(&mixed, 0.9));
        // all at k-1 but different missing pieces
        let spread: Vec<_> = (0..10)
            .map(|i| plain(0b11111 & !(1 << (i % 5)), 5))
            .collect();
        assert!(!detect_one_club(&spread, 0.9));
        let mut mostly = club.clone();
        mostly.push(plain(0, 5));
        assert!(detect_one_club(&mostly, 0.9));
        mostly.push(plain(0, 5));
        assert!(!detect_one_club(&mostly, 0.9));
    }

    #[test]
    fn one_club_coded_uses_row_space() {
        let mut rng = stream(21, 0);
        let k = 5;
        let f = codec::split_file(&[9u8; 50], k).unwrap();
        let pool = codec::build_pool(k, 100, &mut rng).unwrap();
        let basis: Vec<CoeffVector> = pool.vectors()[..k - 1].to_vec();
        let mut peers = Vec::new();
        for i in 0..20u64 {
            let mut h = Holdings::empty_coded(k, f.chunk_len());
            if let Holdings::Coded { decoder, .. } = &mut h {
                // 19 peers span the shared subspace through different
                // combinations; one peer has a different subspace.
                let vs: Vec<CoeffVector> = if i == 0 {
                    pool.vectors()[10..10 + k - 1].to_vec()
                } else {
                    (0..k - 1)
                        .map(|j| {
                            basis[j].combine(
                                crate::gf256::Gf256(1 + i as u8),
                                &basis[(j + 1) % (k - 1)],
                                crate::gf256::Gf256(1),
                            )
                        })
                        .collect()
                };
                for v in vs {
                    decoder.absorb(&codec::encode(&f, &v).unwrap()).unwrap();
                }
                assert_eq!(decoder.rank(), k - 1);
            }
            peers.push(PeerState {
                id: i,
                arrival_slot: 0,
                epoch: 0,
                holdings: h,
            });
        }
        assert!(detect_one_club(&peers, 0.9));
        assert!(!detect_one_club(&peers, 0.99));
    }

    #[test]
    fn slope_and_drift() {
        let flat: Vec<_> = (0..50).map(|t| record(t, 7, 30)).collect();
        assert_eq!(growth_slope(&flat, 0..50).unwrap(), 0.0);
        assert_eq!(empirical_drift(&flat, 10..50).unwrap(), 0.0);
        let line: Vec<_> = (0..50).map(|t| record(t, t as usize, 3 * t)).collect();
        assert!((growth_slope(&line, 0..50).unwrap() - 1.0).abs() < 1e-12);
        assert!((empirical_drift(&line, 25..50).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(
            growth_slope(&line, 3..4),
            Err(MetricsError::WindowTooShort { window: 1 })
        );
        assert!(matches!(
            empirical_drift(&line, 40..60),
            Err(MetricsError::WindowOutOfRange { .. })
        ));
        assert_eq!(last_quarter(100), 75..100);
    }
}
