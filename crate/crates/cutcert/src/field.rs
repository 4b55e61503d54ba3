//! Prime fields GF(q) with scalar arithmetic on canonical representatives.
//!
//! Elements are `u64` values in `0..q`. Every operation keeps results
//! canonical, so matrices never hold out-of-range entries.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A prime field of order `q`, identified by its modulus.
///
/// Primality is established by trial division at construction; the moduli in
/// play here are tiny (2, 3, 5, ...), so nothing cleverer is warranted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeField {
    modulus: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldError {
    NotPrime(u64),
    NotAnElement { value: u64, modulus: u64 },
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::NotPrime(q) => write!(f, "{q} is not a prime modulus"),
            FieldError::NotAnElement { value, modulus } => {
                write!(f, "{value} is not a canonical element of GF({modulus})")
            }
        }
    }
}

impl std::error::Error for FieldError {}

impl PrimeField {
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        if modulus < 2 {
            return Err(FieldError::NotPrime(modulus));
        }
        let mut d = 2u64;
        while d * d <= modulus {
            if modulus.is_multiple_of(d) {
                return Err(FieldError::NotPrime(modulus));
            }
            d += 1;
        }
        Ok(PrimeField { modulus })
    }

    /// GF(2), the default field everywhere a caller does not pick one.
    pub fn gf2() -> Self {
        PrimeField { modulus: 2 }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_element(&self, x: u64) -> bool {
        x < self.modulus
    }

    pub fn check_element(&self, x: u64) -> Result<u64, FieldError> {
        if self.is_element(x) {
            Ok(x)
        } else {
            Err(FieldError::NotAnElement {
                value: x,
                modulus: self.modulus,
            })
        }
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.is_element(a) && self.is_element(b));
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        debug_assert!(self.is_element(a));
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.is_element(a) && self.is_element(b));
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    ///
    /// # Panics
    ///
    /// Panics on zero, which has no inverse.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(a != 0, "zero has no inverse in GF({})", self.modulus);
        debug_assert!(self.is_element(a));
        let (mut r0, mut r1) = (self.modulus as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        t0.rem_euclid(self.modulus as i128) as u64
    }

    pub fn div(&self, a: u64, b: u64) -> u64 {
        self.mul(a, self.inv(b))
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.modulus)
    }
}

impl TryFrom<u64> for PrimeField {
    type Error = FieldError;
    fn try_from(q: u64) -> Result<Self, FieldError> {
        PrimeField::new(q)
    }
}

impl From<PrimeField> for u64 {
    fn from(f: PrimeField) -> u64 {
        f.modulus
    }
}
