//! Independent reference computations for the integration tests.
//!
//! Everything here works in base 10 with π taken from Gibbons' unbounded
//! spigot, so it shares no code path with the binary ball arithmetic.

#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// First `digits` decimal digits of π (leading 3 included).
pub fn pi_digits(digits: usize) -> String {
    let (mut q, mut r, mut t) = (BigInt::one(), BigInt::zero(), BigInt::one());
    let (mut k, mut n, mut l) = (BigInt::one(), BigInt::from(3), BigInt::from(3));
    let mut out = String::with_capacity(digits);
    while out.len() < digits {
        if &q * 4 + &r - &t < &n * &t {
            out.push_str(&n.to_string());
            let nr = (&r - &n * &t) * 10;
            n = ((&q * 3 + &r) * 10) / &t - &n * 10;
            q *= 10;
            r = nr;
        } else {
            let nr = (&q * 2 + &r) * &l;
            let nn = (&q * (&k * 7 + 2) + &r * &l) / (&t * &l);
            q *= &k;
            t *= &l;
            l += 2;
            k += 1;
            n = nn;
            r = nr;
        }
    }
    out
}

/// Decimal fixed-point arithmetic at `digits` fractional digits.
pub struct Dec {
    pub digits: usize,
    pub scale: BigInt,
    pub pi: BigInt,
}

impl Dec {
    pub fn new(digits: usize) -> Self {
        let s = pi_digits(digits + 1);
        Dec {
            digits,
            scale: num_traits::pow(BigInt::from(10), digits),
            pi: s.parse().unwrap(),
        }
    }

    pub fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b / &self.scale
    }

    pub fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * &self.scale / b
    }

    /// `d(n)` by scanning every multiple index `0..=n`.
    pub fn dist(&self, n: u64) -> (u64, BigInt) {
        let x = BigInt::from(n) * &self.scale;
        let mut best = (0u64, x.clone());
        for m in 1..=n {
            let r = (&x - &self.pi * BigInt::from(m)).abs();
            if r < best.1 {
                best = (m, r);
            }
            if &self.pi * BigInt::from(m) > &x + &self.pi {
                break;
            }
        }
        best
    }

    pub fn sin(&self, x: &BigInt) -> BigInt {
        let x2 = self.mul(x, x);
        let mut term = x.clone();
        let mut sum = x.clone();
        let mut j = 1u64;
        loop {
            term = -self.mul(&term, &x2) / BigInt::from((2 * j) * (2 * j + 1));
            if term.is_zero() {
                return sum;
            }
            sum += &term;
            j += 1;
        }
    }

    /// `1/(n^a x^b)` for small integer exponents.
    pub fn term(&self, n: u64, a: u32, x: &BigInt, b: u32) -> BigInt {
        let mut den = self.scale.clone() * num_traits::pow(BigInt::from(n), a as usize);
        for _ in 0..b {
            den = self.mul(&den, x);
        }
        self.div(&self.scale, &den)
    }

    pub fn b_bound(&self, d: &BigInt) -> BigInt {
        if d <= &self.scale {
            d - self.mul(&self.mul(d, d), d) / 6
        } else {
            self.div(&(d * 2), &self.pi)
        }
    }

    pub fn to_f64(&self, x: &BigInt) -> f64 {
        x.to_f64().unwrap() / 10f64.powi(self.digits as i32)
    }
}

pub struct OracleSums {
    pub s: BigInt,
    pub l: BigInt,
    pub g_sharp: BigInt,
    pub weighted_eta1: BigInt,
    pub general_2_1: BigInt,
}

/// Naive sequential sums over `1..=n_max`.
pub fn oracle_sums(dec: &Dec, n_max: u64) -> OracleSums {
    let mut out = OracleSums {
        s: BigInt::zero(),
        l: BigInt::zero(),
        g_sharp: BigInt::zero(),
        weighted_eta1: BigInt::zero(),
        general_2_1: BigInt::zero(),
    };
    for n in 1..=n_max {
        let (_, d) = dec.dist(n);
        let s = dec.sin(&d);
        out.s += dec.term(n, 3, &s, 2);
        out.l += dec.term(n, 3, &d, 2);
        out.g_sharp += dec.term(n, 3, &dec.b_bound(&d), 2);
        out.weighted_eta1 += dec.term(n, 4, &s, 2);
        out.general_2_1 += dec.term(n, 2, &s, 1);
    }
    out
}

/// Number of agreeing significant digits between `mid·2^-frac` and
/// `oracle·10^-digits`, capped at 60.
pub fn agreeing_digits(mid: &BigInt, frac: u32, dec: &Dec, oracle: &BigInt) -> u32 {
    let lhs = mid * &dec.scale;
    let rhs = oracle << frac as usize;
    let diff = (&lhs - &rhs).abs();
    if diff.is_zero() {
        return 60;
    }
    let mut digits = 0;
    let mut scaled = diff;
    while digits < 60 && scaled.clone() * 10 <= rhs.abs() {
        scaled *= 10;
        digits += 1;
    }
    digits
}

/// Continued-fraction quotients of `num/den`.
pub fn cf_of(mut num: BigUint, mut den: BigUint, count: usize) -> Vec<u64> {
    let mut out = Vec::new();
    while out.len() < count && !den.is_zero() {
        let (a, r) = num.div_rem(&den);
        out.push(a.to_u64().unwrap());
        num = den;
        den = r;
    }
    out
}

/// `|sin n|` and `d(n)` in double precision (enough for brute-force scans
/// far from decision boundaries).
pub fn dist_f64(n: u64) -> f64 {
    let x = n as f64;
    let m = (x / std::f64::consts::PI).round();
    (x - m * std::f64::consts::PI).abs()
}

pub fn term_f64(n: u64) -> f64 {
    let s = (n as f64).sin();
    1.0 / ((n as f64).powi(3) * s * s)
}

/// `|q·π - round(q·π)|` in double precision.
pub fn dist_f64_frac(q: u64) -> f64 {
    let x = q as f64 * std::f64::consts::PI;
    (x - x.round()).abs()
}
