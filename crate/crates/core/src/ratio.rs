//! Exact arithmetic helpers: big rationals for scores and power-of-two
//! thresholds for stopping rules.

use crate::error::Error;
use crate::Result;
use alloc::format;
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

/// Exact rational used for scores and expected costs.
pub type Frac = BigRational;

/// Small exact rational for user-facing parameters.
pub type Ratio64 = Ratio<u64>;

pub fn frac(num: u64, den: u64) -> Frac {
    Frac::new(BigInt::from(num), BigInt::from(den))
}

pub fn frac_zero() -> Frac {
    Frac::zero()
}

pub fn frac_one() -> Frac {
    Frac::one()
}

pub fn ratio64_to_frac(r: Ratio64) -> Frac {
    frac(*r.numer(), *r.denom())
}

pub fn frac_to_f64(x: &Frac) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// A fraction of the form `2^-exp`, used for the thresholds that drive
/// stopping rules. Keeping thresholds as powers of two makes every
/// comparison an exact integer shift, so stopping decisions never depend on
/// floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pow2 {
    exp: u32,
}

impl Pow2 {
    pub const ONE: Pow2 = Pow2 { exp: 0 };

    pub fn from_exp(exp: u32) -> Pow2 {
        Pow2 { exp }
    }

    pub fn exp(self) -> u32 {
        self.exp
    }

    /// Largest `2^-e` that does not exceed `num/den`.
    ///
    /// The requested value is rounded down, never up, so a guarantee proved
    /// for the requested threshold still holds for the effective one.
    pub fn floor_of_ratio(delta: Ratio64) -> Result<Pow2> {
        let (num, den) = (*delta.numer(), *delta.denom());
        if num == 0 || den == 0 || num > den {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1], got {num}/{den}"
            )));
        }
        // smallest e with num * 2^e >= den
        let mut e = 0u32;
        let mut scaled = num as u128;
        while scaled < den as u128 {
            scaled <<= 1;
            e += 1;
        }
        Ok(Pow2 { exp: e })
    }

    /// Largest `2^-e` with `2^-e <= x^{-1/r}`, i.e. the smallest `e` such
    /// that `2^{e*r} >= x`. Pure integer arithmetic; no roots are taken.
    pub fn floor_of_inverse_root(x: u64, r: u32) -> Result<Pow2> {
        if x == 0 || r == 0 {
            return Err(Error::InvalidParameter(format!(
                "inverse root needs x >= 1 and r >= 1, got x={x}, r={r}"
            )));
        }
        let mut e = 0u32;
        loop {
            let bits = (e as u64) * (r as u64);
            if bits >= 64 || (1u128 << bits) >= x as u128 {
                return Ok(Pow2 { exp: e });
            }
            e += 1;
        }
    }

    /// Exact test of `count >= self * scale` (i.e. `count >= scale / 2^exp`).
    pub fn times_le(self, scale: u64, count: u64) -> bool {
        let c = count as u128;
        if self.exp >= c.leading_zeros() && c != 0 {
            return true; // count * 2^exp overflows u128, certainly >= scale
        }
        (c << self.exp.min(127)) >= scale as u128
    }

    pub fn as_frac(self) -> Frac {
        Frac::new(BigInt::one(), BigInt::one() << self.exp)
    }

    pub fn as_f64(self) -> f64 {
        libm::exp2(-(self.exp as f64))
    }
}

/// Partial-cover threshold: probing continues while `f(R) <= Q(1 - delta)`.
///
/// With `delta = 2^-e` the test `f <= Q(1 - 2^-e)` is equivalent to
/// `(Q - f) * 2^e >= Q`, evaluated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverThreshold {
    pub max_value: u64,
    pub delta: Pow2,
}

impl CoverThreshold {
    pub fn new(max_value: u64, delta: Pow2) -> CoverThreshold {
        CoverThreshold { max_value, delta }
    }

    /// True while the partial-cover target has not been reached, i.e.
    /// `value <= Q(1 - delta)`. A zero target counts as reached.
    pub fn below(&self, value: u64) -> bool {
        debug_assert!(value <= self.max_value);
        if self.max_value == 0 {
            return false;
        }
        let deficit = self.max_value - value;
        self.delta.times_le(self.max_value, deficit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_of_ratio_rounds_down() {
        assert_eq!(Pow2::floor_of_ratio(Ratio64::new(1, 1)).unwrap().exp(), 0);
        assert_eq!(Pow2::floor_of_ratio(Ratio64::new(1, 2)).unwrap().exp(), 1);
        assert_eq!(Pow2::floor_of_ratio(Ratio64::new(1, 3)).unwrap().exp(), 2);
        assert_eq!(Pow2::floor_of_ratio(Ratio64::new(2, 3)).unwrap().exp(), 1);
        assert_eq!(Pow2::floor_of_ratio(Ratio64::new(1, 1024)).unwrap().exp(), 10);
        assert!(Pow2::floor_of_ratio(Ratio64::new(3, 2)).is_err());
    }

    #[test]
    fn floor_of_inverse_root_matches_definition() {
        // delta = 2^-e is the largest power of two with 2^{e*r} >= x
        for x in 1u64..200 {
            for r in 1u32..6 {
                let e = Pow2::floor_of_inverse_root(x, r).unwrap().exp();
                assert!(1u128 << (e as u64 * r as u64).min(127) >= x as u128);
                if e > 0 {
                    assert!(1u128 << ((e - 1) as u64 * r as u64) < x as u128);
                }
            }
        }
        assert_eq!(Pow2::floor_of_inverse_root(16, 1).unwrap().exp(), 4);
        assert_eq!(Pow2::floor_of_inverse_root(16, 2).unwrap().exp(), 2);
        assert_eq!(Pow2::floor_of_inverse_root(17, 2).unwrap().exp(), 3);
        assert_eq!(Pow2::floor_of_inverse_root(1, 3).unwrap().exp(), 0);
    }

    #[test]
    fn threshold_comparisons_are_exact() {
        // Q = 3, delta = 1/4: continue while f <= 2.25
        let t = CoverThreshold::new(3, Pow2::from_exp(2));
        assert!(t.below(0) && t.below(1) && t.below(2));
        assert!(!t.below(3));
        // Q = 4, delta = 1/4: continue while f <= 3
        let t = CoverThreshold::new(4, Pow2::from_exp(2));
        assert!(t.below(3));
        assert!(!t.below(4));
        // delta = 1: continue while f <= 0
        let t = CoverThreshold::new(5, Pow2::from_exp(0));
        assert!(t.below(0));
        assert!(!t.below(1));
    }

    #[test]
    fn times_le_cross_multiplies() {
        let d = Pow2::from_exp(3); // 1/8
        // count >= s/8
        assert!(d.times_le(16, 2));
        assert!(!d.times_le(17, 2));
        assert!(d.times_le(1, 1));
        // huge exponent saturates rather than overflowing
        let d = Pow2::from_exp(127);
        assert!(d.times_le(u64::MAX, 1));
    }
}
