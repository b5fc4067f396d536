//! Exact fixed-point fractions on the unit circle.
//!
//! A [`Frac128`] is an unsigned 128-bit numerator over an implicit
//! denominator of 2^128, representing a point of `[0, 1)`. Rotation models
//! do all circle arithmetic in this type: addition mod 1 is wrapping
//! addition, so orbits and interval intersections are exact and
//! reproducible across platforms. Decimal conversion goes through big
//! integers and only happens at the model-file boundary.

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Golden-ratio conjugate (sqrt(5)-1)/2, 50 significant digits.
pub const GOLDEN_CONJUGATE_DECIMAL: &str =
    "0.61803398874989484820458683436563811772030917980576";
/// sqrt(2)-1, 50 significant digits.
pub const SQRT2_MINUS_1_DECIMAL: &str =
    "0.41421356237309504880168872420969807856967187537694";
/// pi-3, 50 significant digits.
pub const PI_MINUS_3_DECIMAL: &str =
    "0.14159265358979323846264338327950288419716939937510";

/// A point of `[0, 1)` with resolution 2^-128.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frac128(u128);

impl Frac128 {
    pub const ZERO: Frac128 = Frac128(0);

    pub fn from_raw(raw: u128) -> Self {
        Frac128(raw)
    }

    pub fn raw(self) -> u128 {
        self.0
    }

    /// Parses a decimal fraction in `[0, 1)`, truncating toward zero at
    /// 2^-128.
    pub fn parse_decimal(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |msg: &str| Error::InvalidModel(format!("bad fraction {text:?}: {msg}"));
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part != "0" && !int_part.is_empty() {
            return Err(bad("value must lie in [0, 1)"));
        }
        if !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad("fractional part must be decimal digits"));
        }
        if frac_part.is_empty() {
            return Ok(Frac128(0));
        }
        let digits = BigUint::parse_bytes(frac_part.as_bytes(), 10)
            .ok_or_else(|| bad("unparseable digits"))?;
        // floor(digits * 2^128 / 10^k)
        let scaled = (digits << 128u32) / BigUint::from(10u32).pow(frac_part.len() as u32);
        let bytes = scaled.to_bytes_le();
        if bytes.len() > 16 {
            return Err(bad("value must lie in [0, 1)"));
        }
        let mut raw = [0u8; 16];
        raw[..bytes.len()].copy_from_slice(&bytes);
        Ok(Frac128(u128::from_le_bytes(raw)))
    }

    /// Decimal rendering with `digits` places, rounded up (clamped below
    /// 1). With 39 or more digits the grid is finer than 2^-128, so
    /// rounding up guarantees [`Frac128::parse_decimal`] (which truncates)
    /// recovers the exact raw value; model files use 40 digits.
    pub fn to_decimal_string(self, digits: usize) -> String {
        let pow = BigUint::from(10u32).pow(digits as u32);
        let half_open_top = &pow - 1u8;
        let numerator = BigUint::from(self.0) * &pow + ((BigUint::from(1u8) << 128u32) - 1u8);
        let mut scaled = numerator >> 128u32;
        if scaled > half_open_top {
            scaled = half_open_top;
        }
        let mut s = scaled.to_str_radix(10);
        while s.len() < digits {
            s.insert(0, '0');
        }
        format!("0.{s}")
    }

    /// Addition mod 1.
    pub fn add(self, other: Frac128) -> Frac128 {
        Frac128(self.0.wrapping_add(other.0))
    }

    /// Subtraction mod 1.
    pub fn sub(self, other: Frac128) -> Frac128 {
        Frac128(self.0.wrapping_sub(other.0))
    }

    pub fn to_f64(self) -> f64 {
        const HI: f64 = 1.0 / (1u128 << 64) as f64;
        (self.0 >> 64) as f64 * HI + (self.0 & u64::MAX as u128) as f64 * HI * HI
    }

    /// Checks that this value keeps distance at least 2^-100 from every
    /// rational with denominator at most `max_den`.
    ///
    /// Uses the continued-fraction expansion: over each denominator range
    /// `[q_k, q_{k+1})` the distance `||q alpha||` is minimized at the
    /// convergent denominator `q_k`, so it suffices to bound
    /// `||q_k alpha|| / q_range` for the convergents.
    pub fn check_rational_distance(self, max_den: u64) -> Result<()> {
        let zero = BigUint::from(0u8);
        let den = BigUint::from(1u8) << 128u32;
        let num = BigUint::from(self.0);
        let max_den_big = BigUint::from(max_den);

        // Euclid remainders drive the partial quotients; (q_prev, q) walk
        // the convergent denominators starting from q_0 = 1.
        let mut r_prev = den.clone();
        let mut r = num.clone();
        let mut q_prev = zero.clone();
        let mut q = BigUint::from(1u8);

        while q <= max_den_big {
            // ||q * alpha|| as a numerator over 2^128.
            let prod = (&q * &num) % &den;
            let dist = std::cmp::min(prod.clone(), &den - &prod);

            let q_next = if r == zero {
                None
            } else {
                Some((&r_prev / &r) * &q + &q_prev)
            };
            let range_top = match &q_next {
                Some(qn) => std::cmp::min(qn - 1u8, max_den_big.clone()),
                None => max_den_big.clone(),
            };
            // All denominators in [q, range_top] satisfy
            // |alpha - p/q'| >= dist / (2^128 * range_top); require that
            // to be at least 2^-100.
            if (dist << 100u32) < (&range_top * &den) {
                return Err(Error::InvalidModel(format!(
                    "rotation angle is within 2^-100 of a rational with \
                     denominator <= {max_den}"
                )));
            }
            match q_next {
                None => break,
                Some(qn) => {
                    let rem = &r_prev % &r;
                    r_prev = std::mem::replace(&mut r, rem);
                    q_prev = std::mem::replace(&mut q, qn);
                }
            }
        }
        Ok(())
    }
}
