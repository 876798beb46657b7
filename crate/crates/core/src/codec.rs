//! Random linear fountain code over GF(2^8).
//!
//! A file is cut into `k` equal source chunks. A coded chunk carries a
//! coefficient vector and the matching linear combination of the source
//! chunks; any `k` chunks with independent coefficient vectors decode the
//! file. [`Decoder`] keeps its rows in reduced row-echelon form so that
//! innovation tests are a single reduction pass and decoding needs no second
//! elimination.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::CodecError;
use crate::gf256::{self, Gf256};
use crate::rng::RngStream;

/// Default size of the server's pool of coefficient vectors.
pub const DEFAULT_POOL_SIZE: usize = 10_000;

/// A file zero-padded to `k * chunk_len` bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct SourceFile {
    padded: Vec<u8>,
    original_len: usize,
    k: usize,
    chunk_len: usize,
}

impl fmt::Debug for SourceFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceFile")
            .field("k", &self.k)
            .field("chunk_len", &self.chunk_len)
            .field("original_len", &self.original_len)
            .finish()
    }
}

/// Split `payload` into `k` chunks of `ceil(len / k)` bytes, zero-padding the tail.
pub fn split_file(payload: &[u8], k: usize) -> Result<SourceFile, CodecError> {
    if k == 0 {
        return Err(CodecError::ZeroChunks);
    }
    if payload.is_empty() {
        return Err(CodecError::EmptyPayload);
    }
    let chunk_len = payload.len().div_ceil(k);
    let mut padded = payload.to_vec();
    padded.resize(k * chunk_len, 0);
    Ok(SourceFile {
        padded,
        original_len: payload.len(),
        k,
        chunk_len,
    })
}

impl SourceFile {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn chunk_len(&self) -> usize {
        self.chunk_len
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    pub fn padded(&self) -> &[u8] {
        &self.padded
    }

    pub fn pad_len(&self) -> usize {
        self.padded.len() - self.original_len
    }

    pub fn chunk(&self, j: usize) -> &[u8] {
        &self.padded[j * self.chunk_len..(j + 1) * self.chunk_len]
    }

    pub fn chunks(&self) -> impl Iterator<Item = &[u8]> {
        self.padded.chunks_exact(self.chunk_len)
    }

    /// The file seen at a coarser granularity: super-chunk `b` is the sum of
    /// source chunks `b*group .. (b+1)*group`. Coded chunks built with
    /// [`grouped_coefficients`] are ordinary coded chunks of this view.
    pub fn merged(&self, group: usize) -> Result<SourceFile, CodecError> {
        check_group(self.k, group)?;
        let k = self.k / group;
        let mut padded = vec![0u8; k * self.chunk_len];
        for (j, chunk) in self.chunks().enumerate() {
            let b = j / group;
            let dst = &mut padded[b * self.chunk_len..(b + 1) * self.chunk_len];
            gf256::mul_add_slice(dst, chunk, 1);
        }
        Ok(SourceFile {
            original_len: padded.len(),
            padded,
            k,
            chunk_len: self.chunk_len,
        })
    }
}

/// Coefficients of one linear combination, one per source chunk.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CoeffVector(Vec<u8>);

impl fmt::Debug for CoeffVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoeffVector(")?;
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

impl CoeffVector {
    pub fn new(coeffs: Vec<u8>) -> Self {
        CoeffVector(coeffs)
    }

    /// Unit vector `e_j` of length `k`.
    pub fn unit(k: usize, j: usize) -> Self {
        let mut v = vec![0u8; k];
        v[j] = 1;
        CoeffVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> Gf256 {
        Gf256(self.0[j])
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `a*self + b*other`.
    pub fn combine(&self, a: Gf256, other: &CoeffVector, b: Gf256) -> CoeffVector {
        let mut out = self.0.clone();
        gf256::scale_slice(&mut out, a.0);
        gf256::mul_add_slice(&mut out, &other.0, b.0);
        CoeffVector(out)
    }

    /// Collapse a grouped vector into its super-chunk coefficients (one
    /// value per block of `group`). Fails if any block is not constant.
    pub fn merge_groups(&self, group: usize) -> Result<CoeffVector, CodecError> {
        check_group(self.len(), group)?;
        let mut out = Vec::with_capacity(self.len() / group);
        for block in self.0.chunks_exact(group) {
            if block.iter().any(|&c| c != block[0]) {
                return Err(CodecError::BadGroup {
                    k: self.len(),
                    group,
                });
            }
            out.push(block[0]);
        }
        Ok(CoeffVector(out))
    }
}

/// Uniform i.i.d. coefficients; the all-zero vector is redrawn.
pub fn draw_coefficients(k: usize, rng: &mut RngStream) -> CoeffVector {
    assert!(k >= 1, "k must be positive");
    let mut v = vec![0u8; k];
    loop {
        rng.fill(&mut v[..]);
        if v.iter().any(|&c| c != 0) {
            return CoeffVector(v);
        }
    }
}

fn check_group(k: usize, group: usize) -> Result<(), CodecError> {
    if group == 0 || !group.is_power_of_two() || !k.is_multiple_of(group) {
        return Err(CodecError::BadGroup { k, group });
    }
    Ok(())
}

/// A length-`2^m` vector whose coefficients are constant on consecutive
/// blocks of `group`.
pub fn grouped_coefficients(
    m: u32,
    group: usize,
    rng: &mut RngStream,
) -> Result<CoeffVector, CodecError> {
    let k = 1usize << m;
    check_group(k, group)?;
    let coarse = draw_coefficients(k / group, rng);
    let v = coarse
        .0
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, group))
        .collect();
    Ok(CoeffVector(v))
}

/// One coded chunk as exchanged between peers.
#[derive(Clone, PartialEq, Eq)]
pub struct CodedChunk {
    pub coeffs: CoeffVector,
    pub data: Vec<u8>,
    pub pool_index: Option<u32>,
}

impl fmt::Debug for CodedChunk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CodedChunk")
            .field("coeffs", &self.coeffs)
            .field("len", &self.data.len())
            .field("pool_index", &self.pool_index)
            .finish()
    }
}

/// `data = Σ_j coeffs[j] · chunk_j`.
pub fn encode(source: &SourceFile, coeffs: &CoeffVector) -> Result<CodedChunk, CodecError> {
    if coeffs.len() != source.k {
        return Err(CodecError::LengthMismatch {
            expected: source.k,
            got: coeffs.len(),
        });
    }
    let mut data = vec![0u8; source.chunk_len];
    for (j, chunk) in source.chunks().enumerate() {
        gf256::mul_add_slice(&mut data, chunk, coeffs.0[j]);
    }
    Ok(CodedChunk {
        coeffs: coeffs.clone(),
        data,
        pool_index: None,
    })
}

/// The server's fixed set of `K` coefficient vectors.
#[derive(Debug, Clone)]
pub struct CodePool {
    k: usize,
    vectors: Vec<CoeffVector>,
}

pub fn build_pool(k: usize, size: usize, rng: &mut RngStream) -> Result<CodePool, CodecError> {
    if k == 0 {
        return Err(CodecError::ZeroChunks);
    }
    if size < k {
        return Err(CodecError::PoolTooSmall { k, pool: size });
    }
    let vectors = (0..size).map(|_| draw_coefficients(k, rng)).collect();
    Ok(CodePool { k, vectors })
}

impl CodePool {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, index: usize) -> &CoeffVector {
        &self.vectors[index]
    }

    pub fn vectors(&self) -> &[CoeffVector] {
        &self.vectors
    }

    pub fn sample_index(&self, rng: &mut RngStream) -> usize {
        rng.random_range(0..self.vectors.len())
    }

    /// Encode every pool vector against `source` once, tagging each chunk
    /// with its pool index.
    pub fn materialize(&self, source: &SourceFile) -> Result<Vec<Arc<CodedChunk>>, CodecError> {
        self.vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut c = encode(source, v)?;
                c.pool_index = Some(i as u32);
                Ok(Arc::new(c))
            })
            .collect()
    }
}

/// Incremental Gaussian elimination over received chunks.
///
/// Rows are kept sorted by pivot column, each pivot is 1, and every pivot
/// column is zero in all other rows.
#[derive(Clone, PartialEq, Eq)]
pub struct Decoder {
    k: usize,
    chunk_len: usize,
    /// `rank * k` coefficient bytes.
    coeffs: Vec<u8>,
    /// `rank * chunk_len` data bytes.
    data: Vec<u8>,
    pivots: Vec<usize>,
}

impl fmt::Debug for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Decoder")
            .field("k", &self.k)
            .field("rank", &self.rank())
            .field("pivots", &self.pivots)
            .finish()
    }
}

impl Decoder {
    pub fn new(k: usize, chunk_len: usize) -> Self {
        Decoder {
            k,
            chunk_len,
            coeffs: Vec::with_capacity(k * k),
            data: Vec::with_capacity(k * chunk_len),
            pivots: Vec::with_capacity(k),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn chunk_len(&self) -> usize {
        self.chunk_len
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_complete(&self) -> bool {
        self.rank() == self.k
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    fn coeff_row(&self, i: usize) -> &[u8] {
        &self.coeffs[i * self.k..(i + 1) * self.k]
    }

    /// The RREF coefficient rows. Equal for two decoders iff they span the
    /// same subspace.
    pub fn row_space(&self) -> &[u8] {
        &self.coeffs
    }

    /// Residual of `v` after elimination against the stored rows.
    fn reduce(&self, v: &mut [u8]) {
        for (i, &p) in self.pivots.iter().enumerate() {
            let c = v[p];
            if c != 0 {
                gf256::mul_add_slice(v, self.coeff_row(i), c);
            }
        }
    }

    /// Whether `coeffs` lies outside the span of the stored rows.
    pub fn is_innovative_coeffs(&self, coeffs: &CoeffVector) -> bool {
        debug_assert_eq!(coeffs.len(), self.k);
        if self.is_complete() {
            return false;
        }
        let mut v = [0u8; 64];
        if self.k <= v.len() {
            let v = &mut v[..self.k];
            v.copy_from_slice(&coeffs.0);
            self.reduce(v);
            v.iter().any(|&c| c != 0)
        } else {
            let mut v = coeffs.0.clone();
            self.reduce(&mut v);
            v.iter().any(|&c| c != 0)
        }
    }

    pub fn is_innovative(&self, chunk: &CodedChunk) -> Result<bool, CodecError> {
        self.check_len(&chunk.coeffs)?;
        Ok(self.is_innovative_coeffs(&chunk.coeffs))
    }

    fn check_len(&self, coeffs: &CoeffVector) -> Result<(), CodecError> {
        if coeffs.len() != self.k {
            return Err(CodecError::LengthMismatch {
                expected: self.k,
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Eliminate `chunk` against the stored rows and keep it if anything is
    /// left. Returns the rank afterwards.
    pub fn absorb(&mut self, chunk: &CodedChunk) -> Result<usize, CodecError> {
        self.check_len(&chunk.coeffs)?;
        if chunk.data.len() != self.chunk_len {
            return Err(CodecError::LengthMismatch {
                expected: self.chunk_len,
                got: chunk.data.len(),
            });
        }
        let k = self.k;
        let len = self.chunk_len;
        let mut v = chunk.coeffs.0.clone();
        let mut d = chunk.data.clone();
        for (i, &p) in self.pivots.iter().enumerate() {
            let c = v[p];
            if c != 0 {
                gf256::mul_add_slice(&mut v, &self.coeffs[i * k..(i + 1) * k], c);
                gf256::mul_add_slice(&mut d, &self.data[i * len..(i + 1) * len], c);
            }
        }
        let Some(pivot) = v.iter().position(|&c| c != 0) else {
            return Ok(self.rank());
        };
        let inv = Gf256(v[pivot]).inv().expect("pivot is nonzero").0;
        gf256::scale_slice(&mut v, inv);
        gf256::scale_slice(&mut d, inv);

        // Clear the new pivot column from the existing rows.
        for i in 0..self.pivots.len() {
            let c = self.coeffs[i * k + pivot];
            if c != 0 {
                gf256::mul_add_slice(&mut self.coeffs[i * k..(i + 1) * k], &v, c);
                gf256::mul_add_slice(&mut self.data[i * len..(i + 1) * len], &d, c);
            }
        }

        let at = self.pivots.partition_point(|&p| p < pivot);
        self.pivots.insert(at, pivot);
        self.coeffs.splice(at * k..at * k, v);
        self.data.splice(at * len..at * len, d);
        Ok(self.rank())
    }

    /// The padded payload. Only valid at full rank, where the rows are the
    /// identity and the data rows are the source chunks in order.
    pub fn decode(&self) -> Result<Vec<u8>, CodecError> {
        if !self.is_complete() {
            return Err(CodecError::NotReady {
                rank: self.rank(),
                k: self.k,
            });
        }
        Ok(self.data.clone())
    }
}
