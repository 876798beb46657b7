//! Reference implementations used as test oracles. None of them touch the
//! crate's field tables or decoder.
#![allow(dead_code)]

use std::collections::HashSet;

/// Carry-less multiply then reduce by x^8 + x^4 + x^3 + x + 1.
pub fn slow_mul(a: u8, b: u8) -> u8 {
    let mut acc: u16 = 0;
    for i in 0..8 {
        if b >> i & 1 == 1 {
            acc ^= (a as u16) << i;
        }
    }
    for deg in (8..16).rev() {
        if acc >> deg & 1 == 1 {
            acc ^= 0x11B << (deg - 8);
        }
    }
    acc as u8
}

/// Inverse by search.
pub fn slow_inv(a: u8) -> u8 {
    (1..=255u8)
        .find(|&b| slow_mul(a, b) == 1)
        .expect("nonzero element")
}

/// Rank by textbook Gaussian elimination on a copy of the rows.
pub fn brute_rank(rows: &[Vec<u8>]) -> usize {
    let mut m: Vec<Vec<u8>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, p);
        let inv = slow_inv(m[rank][c]);
        for x in m[rank].iter_mut() {
            *x = slow_mul(*x, inv);
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c];
                let pivot_row = m[rank].clone();
                for (x, &p) in m[r].iter_mut().zip(&pivot_row) {
                    *x ^= slow_mul(f, p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of a 0/1 matrix from the size of its GF(2) span: every subset of
/// rows is summed and the distinct results counted. The rank over GF(2) and
/// over any extension field agree.
pub fn gf2_span_rank(rows: &[Vec<u8>]) -> usize {
    let mut span = HashSet::new();
    for subset in 0u32..(1 << rows.len()) {
        let mut v = vec![0u8; rows.first().map_or(0, |r| r.len())];
        for (i, row) in rows.iter().enumerate() {
            if subset >> i & 1 == 1 {
                for (x, y) in v.iter_mut().zip(row) {
                    *x ^= y;
                }
            }
        }
        span.insert(v);
    }
    span.len().trailing_zeros() as usize
}

/// Probability that `k` i.i.d. uniform nonzero vectors of GF(q)^k are
/// linearly independent: vector `i` must avoid the `q^i` points already
/// spanned, out of `q^k - 1` choices.
pub fn full_rank_probability(k: u32, q: f64) -> f64 {
    (0..k)
        .map(|i| (q.powi(k as i32) - q.powi(i as i32)) / (q.powi(k as i32) - 1.0))
        .product()
}

// Checks shared by the codec tests and the acceptance run. Each returns a
// description of the first mismatch.

use fountain_swarm::codec::{self, CodedChunk, CoeffVector, Decoder};
use fountain_swarm::rng::stream;
use rand::Rng;

/// Absorb random coded chunks until full rank, then decode.
pub fn roundtrip_suite(ks: &[usize], payloads: usize, seed: u64) -> Result<(), String> {
    let mut rng = stream(seed, 0);
    for &k in ks {
        for n in 0..payloads {
            let len = rng.random_range(1..=300);
            let mut payload = vec![0u8; len];
            rng.fill(&mut payload[..]);
            let source = codec::split_file(&payload, k).map_err(|e| e.to_string())?;
            let mut dec = Decoder::new(k, source.chunk_len());
            let mut absorbed = 0;
            while !dec.is_complete() {
                let chunk = codec::encode(&source, &codec::draw_coefficients(k, &mut rng)).unwrap();
                let before = dec.rank();
                if dec.is_innovative(&chunk).unwrap() {
                    absorbed += 1;
                    if dec.absorb(&chunk).unwrap() != before + 1 {
                        return Err(format!(
                            "k={k} payload {n}: innovative chunk did not raise rank"
                        ));
                    }
                } else if dec.absorb(&chunk).unwrap() != before {
                    return Err(format!("k={k} payload {n}: redundant chunk raised rank"));
                }
            }
            let decoded = dec.decode().map_err(|e| e.to_string())?;
            if absorbed != k || decoded != source.padded() || decoded[..len] != payload[..] {
                return Err(format!("k={k} payload {n}: decode mismatch"));
            }
        }
    }
    Ok(())
}

fn coded_row(coeffs: &[u8]) -> CodedChunk {
    CodedChunk {
        coeffs: CoeffVector::new(coeffs.to_vec()),
        data: vec![0u8; 4],
        pool_index: None,
    }
}

/// Rank after absorbing the rows one by one.
pub fn incremental_rank(rows: &[Vec<u8>]) -> usize {
    let k = rows[0].len();
    let mut dec = Decoder::new(k, 4);
    for r in rows {
        dec.absorb(&coded_row(r)).unwrap();
    }
    dec.rank()
}

/// Random matrix with a tendency to be rank deficient: some rows are
/// combinations of earlier ones and some entries come from a tiny alphabet.
pub fn random_matrix(rng: &mut impl Rng, max_dim: usize) -> Vec<Vec<u8>> {
    let rows = rng.random_range(1..=max_dim);
    let cols = rng.random_range(1..=max_dim);
    let small = rng.random_bool(0.3);
    let mut m: Vec<Vec<u8>> = Vec::with_capacity(rows);
    for _ in 0..rows {
        let row = if !m.is_empty() && rng.random_bool(0.3) {
            let a = &m[rng.random_range(0..m.len())];
            let b = &m[rng.random_range(0..m.len())];
            let (x, y) = (rng.random::<u8>(), rng.random::<u8>());
            a.iter()
                .zip(b)
                .map(|(&p, &q)| slow_mul(x, p) ^ slow_mul(y, q))
                .collect()
        } else if small {
            (0..cols).map(|_| rng.random_range(0..3)).collect()
        } else {
            (0..cols).map(|_| rng.random()).collect()
        };
        m.push(row);
    }
    m
}

pub fn rank_suite(matrices: usize, seed: u64) -> Result<(), String> {
    let mut rng = stream(seed, 1);
    for i in 0..matrices {
        let m = random_matrix(&mut rng, 8);
        let (inc, brute) = (incremental_rank(&m), brute_rank(&m));
        if inc != brute {
            return Err(format!(
                "matrix {i}: incremental {inc}, brute force {brute}: {m:?}"
            ));
        }
    }
    Ok(())
}

/// Every 0/1 matrix up to 3x3, plus random 0/1 matrices up to 5x5.
pub fn gf2_suite(random: usize, seed: u64) -> Result<(), String> {
    let mut all = Vec::new();
    for rows in 1..=3 {
        for cols in 1..=3 {
            for bits in 0u32..(1 << (rows * cols)) {
                let m: Vec<Vec<u8>> = (0..rows)
                    .map(|r| {
                        (0..cols)
                            .map(|c| (bits >> (r * cols + c) & 1) as u8)
                            .collect()
                    })
                    .collect();
                all.push(m);
            }
        }
    }
    let mut rng = stream(seed, 2);
    for _ in 0..random {
        let rows = rng.random_range(1..=5);
        let cols = rng.random_range(1..=5);
        all.push(
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(0..2)).collect())
                .collect(),
        );
    }
    for m in &all {
        let (inc, span) = (incremental_rank(m), gf2_span_rank(m));
        if inc != span {
            return Err(format!("incremental {inc}, GF(2) span {span}: {m:?}"));
        }
    }
    Ok(())
}
