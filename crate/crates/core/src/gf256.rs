//! Arithmetic over GF(2^8).
//!
//! Elements are bytes read as polynomials over GF(2) reduced modulo
//! x^8 + x^4 + x^3 + x + 1 (0x11B). Addition is XOR. Multiplication goes
//! through log/antilog tables built at compile time from the generator 0x03
//! (0x02 is not primitive for this modulus).

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign};

use crate::error::FieldError;

/// The reduction polynomial, including the x^8 term.
pub const MODULUS: u16 = 0x11B;

static EXP: [u8; 512] = build_exp();
static LOG: [u8; 256] = build_log();

/// Multiply by x and reduce.
const fn xtime(a: u8) -> u8 {
    let shifted = (a as u16) << 1;
    if shifted & 0x100 != 0 {
        (shifted ^ MODULUS) as u8
    } else {
        shifted as u8
    }
}

/// Multiply by the generator: 3·a = x·a + a.
const fn times_generator(a: u8) -> u8 {
    xtime(a) ^ a
}

const fn build_exp() -> [u8; 512] {
    let mut table = [0u8; 512];
    let mut val = 1u8;
    let mut i = 0;
    while i < 255 {
        table[i] = val;
        table[i + 255] = val;
        val = times_generator(val);
        i += 1;
    }
    // 510 and 511 are never indexed (max log sum is 254 + 254).
    table
}

const fn build_log() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut val = 1u8;
    let mut i = 0;
    while i < 255 {
        table[val as usize] = i as u8;
        val = times_generator(val);
        i += 1;
    }
    table
}

/// An element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub const fn new(value: u8) -> Self {
        Gf256(value)
    }

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse. Zero has none.
    pub fn inv(self) -> Result<Gf256, FieldError> {
        if self.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(Gf256(EXP[255 - LOG[self.0 as usize] as usize]))
    }

    /// `self^n` by repeated table lookup.
    pub fn pow(self, n: u32) -> Gf256 {
        if n == 0 {
            return Gf256::ONE;
        }
        if self.0 == 0 {
            return Gf256::ZERO;
        }
        let e = (LOG[self.0 as usize] as u64 * n as u64) % 255;
        Gf256(EXP[e as usize])
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

/// Characteristic-2 addition (XOR). Subtraction is the same operation.
#[inline]
pub fn gf_add(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(a.0 ^ b.0)
}

#[inline]
pub fn gf_mul(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(mul_u8(a.0, b.0))
}

pub fn gf_inv(a: Gf256) -> Result<Gf256, FieldError> {
    a.inv()
}

/// Raw byte multiply, used by the bulk row operations.
#[inline]
pub fn mul_u8(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        0
    } else {
        EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
    }
}

/// `dst[i] ^= scalar * src[i]` for every byte.
#[inline]
pub fn mul_add_slice(dst: &mut [u8], src: &[u8], scalar: u8) {
    debug_assert_eq!(dst.len(), src.len());
    match scalar {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let log_c = LOG[scalar as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= EXP[log_c + LOG[s as usize] as usize];
                }
            }
        }
    }
}

/// `buf[i] *= scalar` for every byte.
#[inline]
pub fn scale_slice(buf: &mut [u8], scalar: u8) {
    match scalar {
        0 => buf.fill(0),
        1 => {}
        _ => {
            let log_c = LOG[scalar as usize] as usize;
            for b in buf.iter_mut() {
                if *b != 0 {
                    *b = EXP[log_c + LOG[*b as usize] as usize];
                }
            }
        }
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    fn add(self, rhs: Gf256) -> Gf256 {
        gf_add(self, rhs)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Gf256) {
        *self = gf_add(*self, rhs);
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        gf_mul(self, rhs)
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = gf_mul(*self, rhs);
    }
}
