//! Arbitrary-precision helpers shared by every module.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

/// Nonnegative arbitrary-precision integer (heights, positions, lags, counts).
pub type Nat = BigUint;

/// Exact rational (widths and measures).
pub type Rat = BigRational;

pub fn nat(v: u64) -> Nat {
    Nat::from(v)
}

pub fn rat_from_nat(n: &Nat) -> Rat {
    Rat::from_integer(BigInt::from_biguint(Sign::Plus, n.clone()))
}

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_bigint(n: &Nat) -> BigInt {
    BigInt::from_biguint(Sign::Plus, n.clone())
}

/// Nearest `f64` to an exact rational. Works for numerators and denominators far
/// beyond the `f64` range by scaling through the bit lengths first.
pub fn rat_to_f64(r: &Rat) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    let num = r.numer();
    let den = r.denom();
    let shift = num.bits() as i64 - den.bits() as i64;
    // scale so the quotient has ~64 significant bits
    let (n, d) = if shift > 0 {
        (num << 64usize, den << (shift as usize))
    } else {
        (num << ((64 - shift) as usize), den.clone())
    };
    let q = (n / d).to_f64().unwrap_or(f64::NAN);
    q * 2f64.powi((shift - 64) as i32)
}

/// Render with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Exact `a / b` for naturals as a rational.
pub fn ratio(a: &Nat, b: &Nat) -> Rat {
    Rat::new(to_bigint(a), to_bigint(b))
}

/// Integer part of a nonnegative rational.
pub fn floor_nat(r: &Rat) -> Nat {
    r.floor().to_integer().to_biguint().unwrap_or_default()
}

pub fn factorial(k: u32) -> Nat {
    (1..=k as u64).fold(Nat::one(), |acc, i| acc * i)
}

/// Uniform draw from `[0, bound)`; `bound` must be positive.
pub fn uniform_below<R: Rng + ?Sized>(rng: &mut R, bound: &Nat) -> Nat {
    debug_assert!(!bound.is_zero());
    if let Some(b) = bound.to_u64() {
        return Nat::from(rng.random_range(0..b));
    }
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_bits = bits - 32 * (words as u64 - 1);
    let mask: u32 = if top_bits == 32 { u32::MAX } else { (1u32 << top_bits) - 1 };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
        if let Some(last) = digits.last_mut() {
            *last &= mask;
        }
        let candidate = BigUint::from_slice(&digits);
        if &candidate < bound {
            return candidate;
        }
    }
}
