//! Certified π, reduction of integers modulo π, and the elementary functions
//! (sin, exp, ln) evaluated on [`Ball`]s at the context precision.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::ball::{shr_ceil, Ball};
use crate::error::{Error, Result};

/// Extra bits carried by every internal series evaluation.
const GUARD: u32 = 64;

/// Relative certification requirement: radius < value / 2^CERT_SHIFT.
pub const CERT_SHIFT: u32 = 20;

pub const DEFAULT_BITS: u32 = 256;
pub const MIN_BITS: u32 = 64;

/// A value computed at `frac` bits plus an error bound in ulps of `2^-frac`.
struct Wide {
    val: BigInt,
    err: BigUint,
}

/// π and the other constants needed at one working precision.
///
/// Immutable after construction; share freely between threads.
#[derive(Debug, Clone)]
pub struct PrecisionContext {
    bits: u32,
    pi: Ball,
    half_pi: Ball,
    two_over_pi: Ball,
    pi_sq_over_4: Ball,
    ln2_wide: BigInt,
    ln2_wide_err: BigUint,
}

/// One reduced index: `n = m·π ± d` with `0 < d <= π/2`.
#[derive(Debug, Clone)]
pub struct DistSample {
    pub n: u64,
    pub m: u64,
    pub d: Ball,
    pub sin_abs: Ball,
}

impl DistSample {
    pub fn d_f64(&self) -> f64 {
        self.d.to_f64()
    }

    pub fn d_error(&self) -> f64 {
        self.d.rad_f64()
    }

    pub fn sin_abs_f64(&self) -> f64 {
        self.sin_abs.to_f64()
    }

    pub fn sin_error(&self) -> f64 {
        self.sin_abs.rad_f64()
    }
}

/// `ceil(mu_cap · log2(n_max)) + guard`: bits needed so that `d(n)`, which
/// can shrink like `n^(1-mu)`, stays certifiable for every `n <= n_max`.
pub fn required_bits(n_max: u64, mu_cap: f64, guard: u32) -> Result<u32> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    if !(mu_cap >= 2.0 && mu_cap.is_finite()) {
        return Err(Error::invalid(format!("mu_cap must be >= 2, got {mu_cap}")));
    }
    if guard < 16 {
        return Err(Error::invalid(format!("guard must be >= 16, got {guard}")));
    }
    let need = (mu_cap * (n_max as f64).log2()).ceil();
    Ok(need as u32 + guard)
}

/// Σ_{j>=0} (-1)^j / ((2j+1) x^(2j+1)) at `w` fractional bits.
fn arctan_recip(x: u64, w: u32) -> Wide {
    let x2 = BigInt::from(x) * BigInt::from(x);
    let mut power = (BigInt::one() << w as usize) / BigInt::from(x);
    let mut sum = power.clone();
    let mut j: u64 = 0;
    loop {
        j += 1;
        power /= &x2;
        if power.is_zero() {
            break;
        }
        let term = &power / BigInt::from(2 * j + 1);
        if j % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
    }
    // Each step truncates at most one ulp in `power` and one in `term`;
    // the tail after the loop is below one ulp.
    Wide {
        val: sum,
        err: BigUint::from(2 * j + 4),
    }
}

/// Σ_{j>=0} z^(2j+1)/(2j+1) for `0 <= z <= 1/3` at `w` fractional bits.
/// `z_err` is the error of `z` in ulps.
fn atanh_series(z: &BigInt, z_err: &BigUint, w: u32) -> Wide {
    let z2 = (z * z) >> w as usize;
    let mut power = z.clone();
    let mut sum = BigInt::zero();
    let mut j: u64 = 0;
    while !power.is_zero() {
        sum += &power / BigInt::from(2 * j + 1);
        power = (&power * &z2) >> w as usize;
        j += 1;
    }
    // Rounding: <= 3 ulps per retained term; tail <= 9/8 ulps; the series'
    // derivative is 1/(1-z^2) <= 9/8, so z's error contributes <= 2·z_err.
    Wide {
        val: sum,
        err: BigUint::from(3 * j + 4) + z_err * 2u32,
    }
}

fn round_shift(x: &BigInt, s: u32) -> BigInt {
    if s == 0 {
        return x.clone();
    }
    (x + (BigInt::one() << (s - 1) as usize)) >> s as usize
}

impl PrecisionContext {
    /// Builds a context with `bits` fractional bits; π carries a one-ulp
    /// radius, so `|pi_value - π| <= 2^-bits`.
    pub fn new(bits: u32) -> Result<Self> {
        if bits < MIN_BITS {
            return Err(Error::invalid(format!(
                "bits must be at least {MIN_BITS}, got {bits}"
            )));
        }
        let w = bits + 2 * GUARD;
        let a = arctan_recip(5, w);
        let b = arctan_recip(239, w);
        let pi_w = a.val * 16 - b.val * 4;
        // Machin error: 16·err_a + 4·err_b ulps at w, far below 2^(2·GUARD - 1).
        debug_assert!(a.err * 16u32 + b.err * 4u32 < BigUint::one() << (2 * GUARD - 2) as usize);
        let pi = Ball::new(round_shift(&pi_w, 2 * GUARD), BigUint::one(), bits);

        let ln2_bits = bits + GUARD;
        let third = (BigInt::one() << ln2_bits as usize) / 3;
        let s = atanh_series(&third, &BigUint::one(), ln2_bits);
        let ln2_wide = s.val * 2;
        let ln2_wide_err = s.err * 2u32;

        let two = Ball::from_int(2, bits);
        let two_over_pi = two.checked_div(&pi).expect("pi is positive");
        let half_pi = pi.div_u64(2);
        let pi_sq_over_4 = pi.square().div_u64(4);
        Ok(PrecisionContext {
            bits,
            pi,
            half_pi,
            two_over_pi,
            pi_sq_over_4,
            ln2_wide,
            ln2_wide_err,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn pi(&self) -> &Ball {
        &self.pi
    }

    /// Certified bound on `|pi_value - π|`.
    pub fn pi_error(&self) -> f64 {
        self.pi.rad_f64()
    }

    pub fn half_pi(&self) -> &Ball {
        &self.half_pi
    }

    pub fn two_over_pi(&self) -> &Ball {
        &self.two_over_pi
    }

    /// π²/4, the factor between `L(N)` and `G(N)`.
    pub fn pi_sq_over_4(&self) -> &Ball {
        &self.pi_sq_over_4
    }

    pub fn ln2(&self) -> Ball {
        self.narrow(Wide {
            val: self.ln2_wide.clone(),
            err: self.ln2_wide_err.clone(),
        })
    }

    pub fn int(&self, v: impl Into<BigInt>) -> Ball {
        Ball::from_int(v, self.bits)
    }

    pub fn real(&self, v: f64) -> Ball {
        Ball::from_f64(v, self.bits)
    }

    fn narrow(&self, w: Wide) -> Ball {
        let mid = round_shift(&w.val, GUARD);
        let rad = shr_ceil(&w.err, GUARD) + 1u32;
        Ball::new(mid, rad, self.bits)
    }

    /// Candidates `floor(n/π̃) - 1 ..= floor(n/π̃) + 1`, returns
    /// `(m, n - m·π̃ in raw units)` for the best and runner-up.
    fn reduce_raw(&self, n: u64) -> Result<(u64, BigInt)> {
        if n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        let n_raw = BigInt::from(n) << self.bits as usize;
        let pi_raw = self.pi.mid();
        let q = (&n_raw / pi_raw).to_u64().expect("quotient below n");
        let mut cands: Vec<(u64, BigInt)> = [q.checked_sub(1), Some(q), Some(q + 1)]
            .into_iter()
            .flatten()
            .map(|m| (m, &n_raw - pi_raw * BigInt::from(m)))
            .collect();
        cands.sort_by(|a, b| a.1.magnitude().cmp(b.1.magnitude()));
        let (m, r) = cands[0].clone();
        let (m2, r2) = &cands[1];
        // Each residual is off by at most m ulps (π carries a one-ulp radius).
        let best_hi = r.magnitude() + BigUint::from(m);
        let second_lo = r2.magnitude().clone();
        if second_lo <= best_hi + BigUint::from(*m2) {
            return Err(Error::Precision {
                n,
                bits: self.bits,
                what: "nearest multiple of pi",
            });
        }
        Ok((m, r))
    }

    /// The `m` minimizing `|n - m·π|`.
    pub fn nearest_multiple(&self, n: u64) -> Result<u64> {
        self.reduce_raw(n).map(|(m, _)| m)
    }

    /// `d(n) = min_m |n - m·π|` with its nearest multiple, certified to a
    /// relative radius below `2^-20`.
    pub fn reduce(&self, n: u64) -> Result<(u64, Ball)> {
        let (m, r) = self.reduce_raw(n)?;
        let d = Ball::new(BigInt::from(r.magnitude().clone()), BigUint::from(m), self.bits);
        if !d.rel_below(CERT_SHIFT) {
            return Err(Error::Precision {
                n,
                bits: self.bits,
                what: "d(n)",
            });
        }
        Ok((m, d))
    }

    /// Full sample: `d(n)` and `|sin n|` evaluated on the reduced argument.
    pub fn dist(&self, n: u64) -> Result<DistSample> {
        let (m, d) = self.reduce(n)?;
        let sin_abs = self.sin(&d);
        Ok(DistSample { n, m, d, sin_abs })
    }

    /// `(|sin n|, error bound)` via reduction modulo π.
    pub fn sin_abs(&self, n: u64) -> Result<(f64, f64)> {
        let s = self.dist(n)?;
        Ok((s.sin_abs_f64(), s.sin_error()))
    }

    /// sin on a ball with `|x| <= π/2 + ε`, by Taylor series.
    pub fn sin(&self, x: &Ball) -> Ball {
        assert_eq!(x.frac(), self.bits);
        let w = self.bits + GUARD;
        let xw = x.mid() << GUARD as usize;
        let x2 = (&xw * &xw) >> w as usize;
        let mut term = xw.clone();
        let mut sum = xw;
        let mut j: u64 = 1;
        loop {
            term = (&term * &x2) >> w as usize;
            term /= BigInt::from((2 * j) * (2 * j + 1));
            if term.is_zero() {
                break;
            }
            if j % 2 == 1 {
                sum -= &term;
            } else {
                sum += &term;
            }
            j += 1;
        }
        // Per term: two truncations plus inherited error scaled by x²/((2j)(2j+1)) < 1.
        // Summing over j terms stays below 4(j+2)^2 ulps, tail included.
        let err = BigUint::from(4 * (j + 2) * (j + 2));
        let mut out = self.narrow(Wide { val: sum, err });
        // |sin'| <= 1
        out = Ball::new(out.mid().clone(), out.rad() + x.rad(), self.bits);
        out
    }

    /// Natural logarithm of a positive ball.
    pub fn ln(&self, x: &Ball) -> Option<Ball> {
        assert_eq!(x.frac(), self.bits);
        if !x.is_positive() {
            return None;
        }
        let w = self.bits + GUARD;
        let m = x.mid().magnitude().clone();
        let len = m.bits() as i64;
        let k = len - 1 - i64::from(self.bits);
        // y = m / 2^(len-1) in [1, 2), at w fractional bits.
        let shift = i64::from(w) - (len - 1);
        let (y, y_err) = if shift >= 0 {
            (BigInt::from(m.clone()) << shift as usize, 0u32)
        } else {
            let s = (-shift) as usize;
            let y = BigInt::from(&m >> s);
            let exact = (y.magnitude().clone() << s) == m;
            (y, if exact { 0 } else { 1 })
        };
        let one = BigInt::one() << w as usize;
        let num = (&y - &one) << w as usize;
        let z = num / (&y + &one);
        let z_err = BigUint::from(1u32 + y_err);
        let s = atanh_series(&z, &z_err, w);
        let ln_y = s.val * 2;
        let mut err = s.err * 2u32;
        let val = ln_y + &self.ln2_wide * BigInt::from(k);
        err += &self.ln2_wide_err * BigUint::from(k.unsigned_abs());
        let out = self.narrow(Wide { val, err });
        // |ln X - ln x| <= r / (x - r)
        let r = x.rad();
        let spread = if r.is_zero() {
            BigUint::zero()
        } else {
            crate::ball::div_ceil(&(r << self.bits as usize), &(&m - r)) + 1u32
        };
        Some(Ball::new(out.mid().clone(), out.rad() + spread, self.bits))
    }

    /// Exponential of a ball whose radius is at most 1/2 and whose value
    /// stays below a few thousand in magnitude.
    pub fn exp(&self, y: &Ball) -> Option<Ball> {
        assert_eq!(y.frac(), self.bits);
        let yf = y.to_f64();
        if !yf.is_finite() || yf.abs() > 1e5 {
            return None;
        }
        if (y.rad() << 1usize) > (BigUint::one() << self.bits as usize) {
            return None;
        }
        let w = self.bits + GUARD;
        let k = (yf / std::f64::consts::LN_2).round() as i64;
        let yw = y.mid() << GUARD as usize;
        let r = yw - &self.ln2_wide * BigInt::from(k);
        let mut err = &self.ln2_wide_err * BigUint::from(k.unsigned_abs());
        const HALVINGS: u32 = 10;
        let rs = &r >> HALVINGS as usize;
        err = shr_ceil(&err, HALVINGS) + 1u32;
        let mut sum = BigInt::one() << w as usize;
        let mut term = sum.clone();
        let mut j: u64 = 1;
        loop {
            term = (&term * &rs) >> w as usize;
            term /= BigInt::from(j);
            if term.is_zero() {
                break;
            }
            sum += &term;
            j += 1;
        }
        // Taylor rounding and tail, plus the argument error (derivative < 2).
        err = err * 2u32 + BigUint::from(2 * j + 4);
        for _ in 0..HALVINGS {
            sum = (&sum * &sum) >> w as usize;
            // value < 2 throughout: e' <= 2·2·e + e²/2^w + 1
            err = err * 4u32 + 2u32;
        }
        if k >= 0 {
            sum <<= k as usize;
            err <<= k as usize;
        } else {
            let s = (-k) as u32;
            sum >>= s as usize;
            err = shr_ceil(&err, s) + 1u32;
        }
        let out = self.narrow(Wide { val: sum, err });
        // exp(y ± r) - exp(y) <= exp(y)·r·e^r <= 2·exp(y)·r for r <= 1/2.
        let hi = out.hi_raw().magnitude().clone();
        let spread = if y.rad().is_zero() {
            BigUint::zero()
        } else {
            shr_ceil(&(hi * y.rad() * 2u32), self.bits) + 1u32
        };
        Some(Ball::new(out.mid().clone(), out.rad() + spread, self.bits))
    }

    /// `n^e` for an integer base and real exponent. Integer exponents are
    /// evaluated exactly; others through exp/ln.
    pub fn pow_u64(&self, n: u64, e: f64) -> Option<Ball> {
        if n == 0 {
            return None;
        }
        if let Some(k) = small_int(e) {
            let p = num_traits::pow(BigUint::from(n), k.unsigned_abs() as usize);
            let p = Ball::from_int(BigInt::from(p), self.bits);
            return if k >= 0 { Some(p) } else { p.checked_recip() };
        }
        if n == 1 {
            return Some(self.int(1));
        }
        let l = self.ln(&self.int(n))?;
        self.exp(&l.mul(&self.real(e)))
    }

    /// `x^e` for a positive ball and real exponent.
    pub fn pow_ball(&self, x: &Ball, e: f64) -> Option<Ball> {
        if let Some(k) = small_int(e) {
            let mut acc = self.int(1);
            for _ in 0..k.unsigned_abs() {
                acc = acc.mul(x);
            }
            return if k >= 0 { Some(acc) } else { acc.checked_recip() };
        }
        if !x.is_positive() {
            return None;
        }
        let l = self.ln(x)?;
        self.exp(&l.mul(&self.real(e)))
    }

    /// Compares `d` against `threshold`, turning overlap into a precision
    /// error for index `n`.
    pub fn decide_lt(&self, d: &Ball, threshold: &Ball, n: u64, what: &'static str) -> Result<bool> {
        d.certainly_lt(threshold).ok_or(Error::Precision {
            n,
            bits: self.bits,
            what,
        })
    }
}

/// Integer value of `e` when it is a modest whole number.
fn small_int(e: f64) -> Option<i64> {
    (e.fract() == 0.0 && e.abs() <= 64.0).then_some(e as i64)
}
