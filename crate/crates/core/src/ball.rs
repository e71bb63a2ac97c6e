//! Fixed-point midpoint-radius ("ball") arithmetic on big integers.
//!
//! A [`Ball`] stores an integer midpoint `mid` and an integer radius `rad`,
//! both in units of `2^-frac`. The represented real interval is
//! `[(mid - rad) * 2^-frac, (mid + rad) * 2^-frac]`. Every operation returns
//! a ball that encloses the exact result for all inputs inside the operand
//! balls; rounding is always absorbed into the radius.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ball {
    mid: BigInt,
    rad: BigUint,
    frac: u32,
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Ball({} ± {:e})",
            self.to_decimal(20),
            self.rad_f64()
        )
    }
}

/// `ceil(x / 2^shift)` for a nonnegative integer.
pub(crate) fn shr_ceil(x: &BigUint, shift: u32) -> BigUint {
    let q = x >> shift as usize;
    if (&q << shift as usize) == *x {
        q
    } else {
        q + 1u32
    }
}

/// `ceil(num / den)` for nonnegative integers, `den > 0`.
pub(crate) fn div_ceil(num: &BigUint, den: &BigUint) -> BigUint {
    let (q, r) = num.div_rem(den);
    if r.is_zero() {
        q
    } else {
        q + 1u32
    }
}

/// Multiplies `x` by `2^exp` without overflowing or underflowing early.
pub(crate) fn ldexp(mut x: f64, mut exp: i64) -> f64 {
    while exp > 1000 {
        x *= 2f64.powi(1000);
        exp -= 1000;
    }
    while exp < -1000 {
        x *= 2f64.powi(-1000);
        exp += 1000;
    }
    x * 2f64.powi(exp as i32)
}

/// Converts `x * 2^-frac` to the nearest-ish `f64` (relative error ~1 ulp).
pub(crate) fn scaled_to_f64(x: &BigInt, frac: u32) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let bits = x.bits() as i64;
    // Keep 64 significant bits so the integer-to-float step is exact enough.
    let drop = (bits - 64).max(0);
    let top = (x >> drop as usize).to_f64().unwrap_or(0.0);
    ldexp(top, drop - i64::from(frac))
}

fn abs_u(x: &BigInt) -> BigUint {
    x.magnitude().clone()
}

impl Ball {
    pub fn new(mid: BigInt, rad: BigUint, frac: u32) -> Self {
        Ball { mid, rad, frac }
    }

    pub fn exact(mid: BigInt, frac: u32) -> Self {
        Ball {
            mid,
            rad: BigUint::zero(),
            frac,
        }
    }

    pub fn zero(frac: u32) -> Self {
        Ball::exact(BigInt::zero(), frac)
    }

    pub fn from_int(v: impl Into<BigInt>, frac: u32) -> Self {
        Ball::exact(v.into() << frac as usize, frac)
    }

    /// Encloses a finite `f64`. Exact whenever the value is representable
    /// with `frac` fractional bits.
    pub fn from_f64(v: f64, frac: u32) -> Self {
        assert!(v.is_finite(), "Ball::from_f64 on non-finite value");
        if v == 0.0 {
            return Ball::zero(frac);
        }
        let bits = v.to_bits();
        let negative = bits >> 63 == 1;
        let exp_field = ((bits >> 52) & 0x7ff) as i64;
        let frac_field = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if exp_field == 0 {
            (frac_field, -1074)
        } else {
            (frac_field | (1u64 << 52), exp_field - 1075)
        };
        // v = mant * 2^exp; raw = v * 2^frac = mant * 2^(exp + frac)
        let shift = exp + i64::from(frac);
        let mant = BigInt::from(mant);
        let (raw, rad) = if shift >= 0 {
            (mant << shift as usize, BigUint::zero())
        } else {
            let s = (-shift) as usize;
            let q = &mant >> s;
            let inexact = (&q << s) != mant;
            (q, if inexact { BigUint::one() } else { BigUint::zero() })
        };
        let mid = if negative { -raw } else { raw };
        Ball { mid, rad, frac }
    }

    pub fn mid(&self) -> &BigInt {
        &self.mid
    }

    pub fn rad(&self) -> &BigUint {
        &self.rad
    }

    pub fn frac(&self) -> u32 {
        self.frac
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    /// Raw lower endpoint, in units of `2^-frac`.
    pub fn lo_raw(&self) -> BigInt {
        &self.mid - BigInt::from(self.rad.clone())
    }

    /// Raw upper endpoint, in units of `2^-frac`.
    pub fn hi_raw(&self) -> BigInt {
        &self.mid + BigInt::from(self.rad.clone())
    }

    pub fn to_f64(&self) -> f64 {
        scaled_to_f64(&self.mid, self.frac)
    }

    pub fn rad_f64(&self) -> f64 {
        scaled_to_f64(&BigInt::from(self.rad.clone()), self.frac)
    }

    pub fn lo_f64(&self) -> f64 {
        scaled_to_f64(&self.lo_raw(), self.frac)
    }

    pub fn hi_f64(&self) -> f64 {
        scaled_to_f64(&self.hi_raw(), self.frac)
    }

    /// True when every point of the ball is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.mid.sign() == Sign::Plus && *self.mid.magnitude() > self.rad
    }

    /// True when `rad * 2^shift < |mid|`, i.e. the relative radius is
    /// below `2^-shift`.
    pub fn rel_below(&self, shift: u32) -> bool {
        (&self.rad << shift as usize) < *self.mid.magnitude()
    }

    /// Certified comparison: `Some(Less)` if every point is below every
    /// point of `other`, `Some(Greater)` if every point is above,
    /// `Some(Equal)` only for two identical exact balls, otherwise `None`.
    pub fn cmp_certified(&self, other: &Ball) -> Option<Ordering> {
        assert_eq!(self.frac, other.frac);
        if self.hi_raw() < other.lo_raw() {
            Some(Ordering::Less)
        } else if self.lo_raw() > other.hi_raw() {
            Some(Ordering::Greater)
        } else if self.is_exact() && other.is_exact() && self.mid == other.mid {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Decides `self < other`. `None` when the balls overlap.
    pub fn certainly_lt(&self, other: &Ball) -> Option<bool> {
        assert_eq!(self.frac, other.frac);
        if self.hi_raw() < other.lo_raw() {
            Some(true)
        } else if self.lo_raw() >= other.hi_raw() {
            Some(false)
        } else {
            None
        }
    }

    /// Decides `self <= other`. `None` when the balls overlap.
    pub fn certainly_le(&self, other: &Ball) -> Option<bool> {
        assert_eq!(self.frac, other.frac);
        if self.hi_raw() <= other.lo_raw() {
            Some(true)
        } else if self.lo_raw() > other.hi_raw() {
            Some(false)
        } else {
            None
        }
    }

    /// True unless the balls prove `self > other`.
    pub fn le_within_error(&self, other: &Ball) -> bool {
        self.lo_raw() <= other.hi_raw()
    }

    pub fn add(&self, other: &Ball) -> Ball {
        assert_eq!(self.frac, other.frac);
        Ball {
            mid: &self.mid + &other.mid,
            rad: &self.rad + &other.rad,
            frac: self.frac,
        }
    }

    pub fn sub(&self, other: &Ball) -> Ball {
        assert_eq!(self.frac, other.frac);
        Ball {
            mid: &self.mid - &other.mid,
            rad: &self.rad + &other.rad,
            frac: self.frac,
        }
    }

    pub fn neg(&self) -> Ball {
        Ball {
            mid: -&self.mid,
            rad: self.rad.clone(),
            frac: self.frac,
        }
    }

    pub fn abs(&self) -> Ball {
        Ball {
            mid: self.mid.abs(),
            rad: self.rad.clone(),
            frac: self.frac,
        }
    }

    pub fn mul(&self, other: &Ball) -> Ball {
        assert_eq!(self.frac, other.frac);
        let f = self.frac as usize;
        let product = &self.mid * &other.mid;
        let mid = &product >> f;
        let inexact = (&mid << f) != product;
        let spread = abs_u(&self.mid) * &other.rad
            + abs_u(&other.mid) * &self.rad
            + &self.rad * &other.rad;
        let mut rad = shr_ceil(&spread, self.frac);
        if inexact {
            rad += 1u32;
        }
        Ball {
            mid,
            rad,
            frac: self.frac,
        }
    }

    pub fn square(&self) -> Ball {
        self.mul(self)
    }

    pub fn mul_int(&self, k: &BigInt) -> Ball {
        Ball {
            mid: &self.mid * k,
            rad: &self.rad * k.magnitude(),
            frac: self.frac,
        }
    }

    pub fn mul_u64(&self, k: u64) -> Ball {
        self.mul_int(&BigInt::from(k))
    }

    pub fn div_u64(&self, k: u64) -> Ball {
        assert!(k > 0);
        let kb = BigInt::from(k);
        let (q, r) = self.mid.div_rem(&kb);
        let mut rad = div_ceil(&self.rad, &BigUint::from(k));
        if !r.is_zero() {
            rad += 1u32;
        }
        Ball {
            mid: q,
            rad,
            frac: self.frac,
        }
    }

    /// Multiplies by `2^k` (exact for `k >= 0`).
    pub fn mul_pow2(&self, k: i64) -> Ball {
        if k >= 0 {
            Ball {
                mid: &self.mid << k as usize,
                rad: &self.rad << k as usize,
                frac: self.frac,
            }
        } else {
            let s = (-k) as usize;
            let mid = &self.mid >> s;
            let inexact = (&mid << s) != self.mid;
            let mut rad = shr_ceil(&self.rad, s as u32);
            if inexact {
                rad += 1u32;
            }
            Ball {
                mid,
                rad,
                frac: self.frac,
            }
        }
    }

    /// Quotient ball; `None` when the divisor ball contains zero.
    pub fn checked_div(&self, other: &Ball) -> Option<Ball> {
        assert_eq!(self.frac, other.frac);
        let b = abs_u(&other.mid);
        if b <= other.rad {
            return None;
        }
        let f = self.frac as usize;
        let num = &self.mid << f;
        let (mid, r) = num.div_rem(&other.mid);
        // |A/B - a/b| <= (ra |b| + |a| rb) / (|b| (|b| - rb))
        let spread = &self.rad * &b + abs_u(&self.mid) * &other.rad;
        let den = &b * (&b - &other.rad);
        let mut rad = div_ceil(&(spread << f), &den);
        if !r.is_zero() {
            rad += 1u32;
        }
        Some(Ball {
            mid,
            rad,
            frac: self.frac,
        })
    }

    pub fn checked_recip(&self) -> Option<Ball> {
        Ball::from_int(1, self.frac).checked_div(self)
    }

    /// Rescales to `frac` fractional bits, widening the radius as needed.
    pub fn with_frac(&self, frac: u32) -> Ball {
        match frac.cmp(&self.frac) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let s = (frac - self.frac) as usize;
                Ball {
                    mid: &self.mid << s,
                    rad: &self.rad << s,
                    frac,
                }
            }
            Ordering::Less => {
                let s = self.frac - frac;
                let half = BigInt::one() << (s - 1) as usize;
                let mid = (&self.mid + half) >> s as usize;
                let mut rad = shr_ceil(&self.rad, s);
                if (&mid << s as usize) != self.mid {
                    rad += 1u32;
                }
                Ball { mid, rad, frac }
            }
        }
    }

    /// Integer floor of the ball, if all of it shares one floor.
    pub fn certified_floor(&self) -> Option<BigInt> {
        let f = self.frac as usize;
        let lo = self.lo_raw() >> f;
        let hi = self.hi_raw() >> f;
        (lo == hi).then_some(lo)
    }

    /// Positional decimal with `sig` significant digits (round half up on
    /// the midpoint). Trailing zeros are kept so widths stay stable.
    pub fn to_decimal(&self, sig: usize) -> String {
        decimal_string(&self.mid, self.frac, sig)
    }
}

pub(crate) fn decimal_string(raw: &BigInt, frac: u32, sig: usize) -> String {
    assert!(sig > 0);
    if raw.is_zero() {
        return "0".to_string();
    }
    let negative = raw.sign() == Sign::Minus;
    let mag = BigInt::from(raw.magnitude().clone());
    let approx = scaled_to_f64(&mag, frac);
    let mut e10 = if approx > 0.0 && approx.is_finite() {
        approx.log10().floor() as i64
    } else {
        // Below f64 range: estimate from bit lengths.
        ((mag.bits() as f64 - f64::from(frac)) * std::f64::consts::LOG10_2).floor() as i64
    };
    let ten = BigInt::from(10u32);
    let digits = loop {
        // scaled = round(mag * 10^(sig-1-e10) / 2^frac)
        let p = sig as i64 - 1 - e10;
        let (num, den) = if p >= 0 {
            (&mag * num_traits::pow(ten.clone(), p as usize), BigInt::one() << frac as usize)
        } else {
            (
                mag.clone(),
                (BigInt::one() << frac as usize) * num_traits::pow(ten.clone(), (-p) as usize),
            )
        };
        let scaled: BigInt = (num * 2 + &den) / (den * 2);
        let lower = num_traits::pow(ten.clone(), sig - 1);
        let upper = &lower * &ten;
        if scaled >= upper {
            e10 += 1;
        } else if scaled < lower {
            e10 -= 1;
        } else {
            break scaled.to_string();
        }
    };
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if e10 >= 0 {
        let int_len = e10 as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-e10 - 1) as usize));
        out.push_str(&digits);
    }
    out
}

/// Exact wire form: decimal strings for the raw integers.
#[derive(Serialize, Deserialize)]
struct BallRepr {
    mid: String,
    rad: String,
    frac: u32,
}

impl Serialize for Ball {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BallRepr {
            mid: self.mid.to_string(),
            rad: self.rad.to_string(),
            frac: self.frac,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ball {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = BallRepr::deserialize(d)?;
        let mid = repr
            .mid
            .parse::<BigInt>()
            .map_err(|e| D::Error::custom(format!("bad midpoint: {e}")))?;
        let rad = repr
            .rad
            .parse::<BigUint>()
            .map_err(|e| D::Error::custom(format!("bad radius: {e}")))?;
        Ok(Ball::new(mid, rad, repr.frac))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const F: u32 = 96;

    #[test]
    fn decimal_formatting() {
        let x = Ball::from_f64(1.44, F);
        assert_eq!(Ball::from_int(1, F).to_decimal(5), "1.0000");
        assert_eq!(Ball::from_int(1234, F).to_decimal(2), "1200");
        assert_eq!(Ball::from_f64(0.015625, F).to_decimal(3), "0.0156");
        assert_eq!(x.to_decimal(6), "1.44000");
        assert_eq!(Ball::from_int(-3, F).to_decimal(3), "-3.00");
        assert_eq!(Ball::zero(F).to_decimal(3), "0");
    }

    #[test]
    fn from_f64_exactness() {
        assert!(Ball::from_f64(0.1, 64).is_exact());
        assert!(!Ball::from_f64(1e-30, 64).is_exact());
        assert_eq!(Ball::from_f64(2.5, F).to_f64(), 2.5);
    }

    #[test]
    fn division_by_ball_containing_zero() {
        let z = Ball::new(BigInt::from(1), BigUint::from(2u32), F);
        assert!(Ball::from_int(1, F).checked_div(&z).is_none());
    }

    #[test]
    fn rescale_down_rounds_and_widens() {
        let third = Ball::from_int(1, F).div_u64(3);
        let narrow = third.with_frac(40);
        assert!((narrow.to_f64() - 1.0 / 3.0).abs() < 1e-12);
        assert!(narrow.rad() >= &BigUint::one());
    }

    #[test]
    fn certified_floor_straddle() {
        let x = Ball::new(BigInt::from(1) << F as usize, BigUint::one(), F);
        assert_eq!(x.certified_floor(), None);
        let y = Ball::from_f64(2.5, F);
        assert_eq!(y.certified_floor(), Some(BigInt::from(2)));
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let x = Ball::from_int(22, F).div_u64(7).mul(&Ball::from_f64(-0.375, F));
        let json = serde_json::to_string(&x).unwrap();
        let back: Ball = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<Ball>(r#"{"mid":"1x","rad":"0","frac":3}"#).is_err());
    }

    fn enclose(x: f64, b: &Ball) -> bool {
        let tol = 1e-12 * x.abs().max(1.0);
        b.lo_f64() - tol <= x && x <= b.hi_f64() + tol
    }

    proptest! {
        #[test]
        fn arithmetic_encloses_f64_results(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let (x, y) = (Ball::from_f64(a, F), Ball::from_f64(b, F));
            prop_assert!(enclose(a + b, &x.add(&y)));
            prop_assert!(enclose(a - b, &x.sub(&y)));
            prop_assert!(enclose(a * b, &x.mul(&y)));
            if b.abs() > 1e-6 {
                prop_assert!(enclose(a / b, &x.checked_div(&y).unwrap()));
            }
        }

        #[test]
        fn widened_ball_still_encloses_midpoint(a in -1e6f64..1e6, r in 0u32..1000) {
            let x = Ball::new(Ball::from_f64(a, F).mid().clone(), BigUint::from(r), F);
            let y = x.mul(&x).checked_div(&Ball::from_int(3, F)).unwrap();
            prop_assert!(enclose(a * a / 3.0, &y));
        }
    }
}
