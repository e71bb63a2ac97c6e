//! Prefix sums of the Flint Hills series and its comparison series.
//!
//! `S_N = Σ 1/(n³ sin² n)`, `L(N) = Σ 1/(n³ d(n)²)`, `G(N) = (π²/4) L(N)`
//! and `G♯(N) = Σ 1/(n³ B(d(n))²)`. Terms are certified balls on a common
//! binary grid, so accumulation is exact integer addition: the result does
//! not depend on chunking, thread count, or resume points.

use std::f64::consts::FRAC_PI_2;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::Ball;
use crate::diophantine::{counts_at, decade_checkpoints, is_small};
use crate::error::{Error, Result};
use crate::precision::{DistSample, PrecisionContext, CERT_SHIFT};

/// Indices per accumulation chunk; checkpoints on disk fall on multiples.
pub const CHUNK_LEN: u64 = 1 << 14;

pub const DEFAULT_STRIDE: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    /// Power of `n`.
    pub a: f64,
    /// Power of `|sin n|`.
    pub b: f64,
    /// Extra weight exponent of the weighted series.
    pub eta: f64,
    /// Safe-region threshold on `d(n)`.
    pub delta: f64,
    /// Adaptive threshold exponent, `ε(n) = n^-alpha`.
    pub alpha: f64,
}

impl Default for SeriesParams {
    fn default() -> Self {
        SeriesParams {
            a: 3.0,
            b: 2.0,
            eta: 1.0,
            delta: 1.0,
            alpha: 0.5,
        }
    }
}

impl SeriesParams {
    pub fn validate(&self) -> Result<()> {
        check_exponents(self.a, self.b)?;
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be nonnegative, got {}", self.eta)));
        }
        check_delta(self.delta)?;
        check_alpha(self.alpha)
    }
}

fn check_exponents(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!(
            "exponents must be nonnegative, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

pub fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= FRAC_PI_2) {
        return Err(Error::invalid(format!("delta must lie in (0, pi/2], got {delta}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

fn check_n_max(n_max: u64) -> Result<()> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    Ok(())
}

fn precision(ctx: &PrecisionContext, n: u64, what: &'static str) -> Error {
    Error::Precision {
        n,
        bits: ctx.bits(),
        what,
    }
}

/// Rejects terms whose radius exceeds `2^-20` of their value.
fn certify(term: Ball, ctx: &PrecisionContext, n: u64) -> Result<Ball> {
    if term.rel_below(CERT_SHIFT) {
        Ok(term)
    } else {
        Err(precision(ctx, n, "series term"))
    }
}

/// Piecewise lower bound for `sin x` on `[0, π/2]`: `x - x³/6` up to and
/// including 1, `(2/π)x` beyond.
pub fn b_bound(x: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&x) {
        return Err(Error::invalid(format!("B(x) needs 0 <= x <= pi/2, got {x}")));
    }
    Ok(if x <= 1.0 {
        x - x * x * x / 6.0
    } else {
        2.0 / std::f64::consts::PI * x
    })
}

/// `B(d)` on a certified ball; the branch must be decidable.
pub fn b_bound_ball(d: &Ball, ctx: &PrecisionContext, n: u64) -> Result<Ball> {
    let one = ctx.int(1);
    match d.certainly_le(&one) {
        Some(true) => Ok(d.sub(&d.mul(d).mul(d).div_u64(6))),
        Some(false) => Ok(ctx.two_over_pi().mul(d)),
        None => Err(precision(ctx, n, "branch of B(d)")),
    }
}

/// `1/(n^a · x^b)` with `x` the certified `|sin n|` or `d(n)`.
fn power_term(ctx: &PrecisionContext, n: u64, a: f64, x: &Ball, b: f64) -> Result<Ball> {
    let na = ctx
        .pow_u64(n, a)
        .ok_or_else(|| precision(ctx, n, "n^a"))?;
    let xb = if b == 0.0 {
        ctx.int(1)
    } else {
        ctx.pow_ball(x, b).ok_or_else(|| precision(ctx, n, "|sin n|^b"))?
    };
    let term = na
        .mul(&xb)
        .checked_recip()
        .ok_or_else(|| precision(ctx, n, "series term"))?;
    certify(term, ctx, n)
}

/// The three terms of index `n` sharing one reduction.
#[derive(Debug, Clone)]
pub struct TermSet {
    pub n: u64,
    pub s: Ball,
    pub l: Ball,
    pub g_sharp: Ball,
}

pub fn term_set(n: u64, ctx: &PrecisionContext) -> Result<TermSet> {
    let sample = ctx.dist(n)?;
    term_set_from(&sample, ctx)
}

fn term_set_from(sample: &DistSample, ctx: &PrecisionContext) -> Result<TermSet> {
    let n = sample.n;
    let s = power_term(ctx, n, 3.0, &sample.sin_abs, 2.0)?;
    let l = power_term(ctx, n, 3.0, &sample.d, 2.0)?;
    let b = b_bound_ball(&sample.d, ctx, n)?;
    let g_sharp = power_term(ctx, n, 3.0, &b, 2.0)?;
    Ok(TermSet { n, s, l, g_sharp })
}

/// `1/(n³ sin² n)`
pub fn term_s(n: u64, ctx: &PrecisionContext) -> Result<Ball> {
    let sample = ctx.dist(n)?;
    power_term(ctx, n, 3.0, &sample.sin_abs, 2.0)
}

/// `1/(n³ d(n)²)`
pub fn term_l(n: u64, ctx: &PrecisionContext) -> Result<Ball> {
    let (_, d) = ctx.reduce(n)?;
    power_term(ctx, n, 3.0, &d, 2.0)
}

/// Evaluates `f` over `lo..=hi` in parallel, returning results in index
/// order. On failure the lowest failing index wins.
fn map_range<T, F>(lo: u64, hi: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let results: Vec<Result<T>> = (lo..=hi).into_par_iter().map(f).collect();
    results.into_iter().collect()
}

fn sum_balls<'a>(frac: u32, items: impl IntoIterator<Item = &'a Ball>) -> Ball {
    items.into_iter().fold(Ball::zero(frac), |acc, b| acc.add(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub n: u64,
    pub s: Ball,
    pub l: Ball,
    pub g_sharp: Ball,
}

impl LedgerRow {
    pub fn g(&self, ctx: &PrecisionContext) -> Ball {
        ctx.pi_sq_over_4().mul(&self.l)
    }

    /// `(S/L, S/G)`
    pub fn ratios(&self, ctx: &PrecisionContext) -> (f64, f64) {
        let sl = self.s.checked_div(&self.l).expect("L > 0");
        let sg = self.s.checked_div(&self.g(ctx)).expect("G > 0");
        (sl.to_f64(), sg.to_f64())
    }

    /// Number of links in `L <= S <= G♯ <= G` that the balls prove false.
    pub fn chain_violations(&self, ctx: &PrecisionContext) -> usize {
        let g = self.g(ctx);
        [
            self.l.le_within_error(&self.s),
            self.s.le_within_error(&self.g_sharp),
            self.g_sharp.le_within_error(&g),
        ]
        .iter()
        .filter(|ok| !**ok)
        .count()
    }
}

/// Running sums `S`, `L`, `G♯` with checkpoint rows.
///
/// `G` is never accumulated; it is always `(π²/4)·L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumLedger {
    pub bits: u32,
    pub stride: u64,
    pub n_done: u64,
    pub s: Ball,
    pub l: Ball,
    pub g_sharp: Ball,
    pub checkpoints: Vec<LedgerRow>,
    pub max_term: Option<(u64, Ball)>,
}

fn is_power_of_ten(mut n: u64) -> bool {
    if n == 0 {
        return false;
    }
    while n.is_multiple_of(10) {
        n /= 10;
    }
    n == 1
}

impl SumLedger {
    pub fn new(ctx: &PrecisionContext, stride: u64) -> Result<Self> {
        if stride < 1 {
            return Err(Error::invalid("stride must be at least 1"));
        }
        let zero = Ball::zero(ctx.bits());
        Ok(SumLedger {
            bits: ctx.bits(),
            stride,
            n_done: 0,
            s: zero.clone(),
            l: zero.clone(),
            g_sharp: zero,
            checkpoints: Vec::new(),
            max_term: None,
        })
    }

    pub fn is_checkpoint(&self, n: u64) -> bool {
        n.is_multiple_of(self.stride) || is_power_of_ten(n)
    }

    fn current_row(&self) -> LedgerRow {
        LedgerRow {
            n: self.n_done,
            s: self.s.clone(),
            l: self.l.clone(),
            g_sharp: self.g_sharp.clone(),
        }
    }

    /// Checkpoint rows plus the current state if it is not one of them.
    pub fn rows(&self) -> Vec<LedgerRow> {
        let mut rows = self.checkpoints.clone();
        if self.n_done > 0 && rows.last().map(|r| r.n) != Some(self.n_done) {
            rows.push(self.current_row());
        }
        rows
    }

    pub fn g(&self, ctx: &PrecisionContext) -> Ball {
        ctx.pi_sq_over_4().mul(&self.l)
    }

    /// Advances the sums through index `n_end`, one chunk at a time. On a
    /// precision failure the ledger stays at the last certified index.
    pub fn extend_to(&mut self, n_end: u64, ctx: &PrecisionContext) -> Result<()> {
        if ctx.bits() != self.bits {
            return Err(Error::invalid(format!(
                "ledger was built at {} bits, context has {}",
                self.bits,
                ctx.bits()
            )));
        }
        while self.n_done < n_end {
            let lo = self.n_done + 1;
            let chunk_end = (self.n_done / CHUNK_LEN + 1) * CHUNK_LEN;
            let hi = chunk_end.min(n_end);
            let results: Vec<Result<TermSet>> =
                (lo..=hi).into_par_iter().map(|n| term_set(n, ctx)).collect();
            for r in results {
                let t = r?;
                self.push(t);
            }
        }
        Ok(())
    }

    fn push(&mut self, t: TermSet) {
        debug_assert_eq!(t.n, self.n_done + 1);
        self.s = self.s.add(&t.s);
        self.l = self.l.add(&t.l);
        self.g_sharp = self.g_sharp.add(&t.g_sharp);
        self.n_done = t.n;
        let bigger = match &self.max_term {
            Some((_, m)) => t.s.mid() > m.mid(),
            None => true,
        };
        if bigger {
            self.max_term = Some((t.n, t.s));
        }
        if self.is_checkpoint(t.n) {
            self.checkpoints.push(self.current_row());
        }
    }
}

/// Sums over `1..=n_max` with checkpoints every `stride` indices and at
/// powers of ten.
pub fn partial_sums(n_max: u64, ctx: &PrecisionContext, stride: u64) -> Result<SumLedger> {
    check_n_max(n_max)?;
    let mut ledger = SumLedger::new(ctx, stride)?;
    ledger.extend_to(n_max, ctx)?;
    Ok(ledger)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: u64,
    pub s_over_l: f64,
    pub s_over_g: f64,
}

/// `S/L` and `S/G` at powers of ten and at `n_max`, from one pass.
pub fn ratio_report(n_max: u64, ctx: &PrecisionContext) -> Result<Vec<RatioRow>> {
    let ledger = partial_sums(n_max, ctx, u64::MAX)?;
    Ok(ledger
        .rows()
        .iter()
        .map(|row| {
            let (s_over_l, s_over_g) = row.ratios(ctx);
            RatioRow {
                n: row.n,
                s_over_l,
                s_over_g,
            }
        })
        .collect())
}

/// ζ(3) from the alternating central-binomial series
/// `(5/2) Σ (-1)^(k+1) / (k³ C(2k,k))`.
pub fn zeta3(ctx: &PrecisionContext) -> Ball {
    let guard = 64;
    let w = ctx.bits() + guard;
    let one = BigInt::one() << w as usize;
    let mut binom = BigInt::one();
    let mut sum = BigInt::zero();
    let mut k: u64 = 1;
    loop {
        // C(2k,k) = C(2k-2,k-1) · (2k)(2k-1) / k²
        binom = binom * BigInt::from(2 * k) * BigInt::from(2 * k - 1) / BigInt::from(k * k);
        let den = &binom * BigInt::from(k) * BigInt::from(k) * BigInt::from(k);
        let term = &one / den;
        if term.is_zero() {
            break;
        }
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        k += 1;
    }
    // One ulp per truncated term, one for the alternating tail.
    let partial = Ball::new(sum, (k + 1).into(), w);
    partial.mul_u64(5).div_u64(2).with_frac(ctx.bits())
}

#[derive(Debug, Clone)]
pub struct SafeRegionReport {
    pub delta: f64,
    pub n_max: u64,
    pub sum: Ball,
    /// `π²/(4δ²) · ζ(3)`
    pub bound: Ball,
    pub member_count: u64,
}

impl SafeRegionReport {
    /// `false` only if the balls prove the sum exceeds the bound.
    pub fn within_bound(&self) -> bool {
        self.sum.le_within_error(&self.bound)
    }
}

/// Sum of the `S` terms over `{n <= n_max : d(n) >= delta}`.
pub fn safe_region_sum(delta: f64, n_max: u64, ctx: &PrecisionContext) -> Result<SafeRegionReport> {
    check_delta(delta)?;
    check_n_max(n_max)?;
    let delta_ball = ctx.real(delta);
    let hits = map_range(1, n_max, |n| {
        let sample = ctx.dist(n)?;
        let below = ctx.decide_lt(&sample.d, &delta_ball, n, "d(n) against delta")?;
        if below {
            Ok(None)
        } else {
            power_term(ctx, n, 3.0, &sample.sin_abs, 2.0).map(Some)
        }
    })?;
    let members: Vec<&Ball> = hits.iter().flatten().collect();
    let bound = ctx
        .pi_sq_over_4()
        .checked_div(&delta_ball.square())
        .ok_or_else(|| Error::invalid("delta too small for the working precision"))?
        .mul(&zeta3(ctx));
    Ok(SafeRegionReport {
        delta,
        n_max,
        member_count: members.len() as u64,
        sum: sum_balls(ctx.bits(), members),
        bound,
    })
}

#[derive(Debug, Clone)]
pub struct WeightedReport {
    pub eta: f64,
    pub n_max: u64,
    pub value: Ball,
    /// `(N, #{n <= N : d(n) < n^(-1-eta/4)})` at decade checkpoints.
    pub small_set_counts: Vec<(u64, u64)>,
}

/// `Σ 1/(n^(3+eta) sin² n)` with the sizes of its small-distance set.
pub fn weighted_sum(eta: f64, n_max: u64, ctx: &PrecisionContext) -> Result<WeightedReport> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    check_n_max(n_max)?;
    let split = 1.0 + eta / 4.0;
    let terms = map_range(1, n_max, |n| {
        let sample = ctx.dist(n)?;
        let term = power_term(ctx, n, 3.0 + eta, &sample.sin_abs, 2.0)?;
        let small = is_small(ctx, n, &sample.d, split)?;
        Ok((term, small))
    })?;
    let flags: Vec<bool> = terms.iter().map(|t| t.1).collect();
    Ok(WeightedReport {
        eta,
        n_max,
        value: sum_balls(ctx.bits(), terms.iter().map(|t| &t.0)),
        small_set_counts: counts_at(&flags, &decade_checkpoints(n_max)),
    })
}

/// `Σ 1/(n^a |sin n|^b)` over `n <= n_max`.
pub fn generalized_sum(a: f64, b: f64, n_max: u64, ctx: &PrecisionContext) -> Result<Ball> {
    check_exponents(a, b)?;
    check_n_max(n_max)?;
    let terms = map_range(1, n_max, |n| {
        if b == 0.0 {
            power_term(ctx, n, a, &ctx.int(1), 0.0)
        } else {
            let sample = ctx.dist(n)?;
            power_term(ctx, n, a, &sample.sin_abs, b)
        }
    })?;
    Ok(sum_balls(ctx.bits(), &terms))
}

#[derive(Debug, Clone)]
pub struct SplitReport {
    pub alpha: f64,
    pub n_max: u64,
    /// Σ over `d(n) >= n^-alpha` of `(π²/4)/(n³ ε(n)²)`.
    pub bulk_bound: Ball,
    /// Σ over `d(n) < n^-alpha` of `(π²/4)/(n³ d(n)²)`.
    pub spike_part: Ball,
    pub small_set: Vec<u64>,
}

impl SplitReport {
    pub fn total(&self) -> Ball {
        self.bulk_bound.add(&self.spike_part)
    }
}

/// Splits the upper bound for `S_N` at the threshold `ε(n) = n^-alpha`.
pub fn adaptive_split(alpha: f64, n_max: u64, ctx: &PrecisionContext) -> Result<SplitReport> {
    check_alpha(alpha)?;
    check_n_max(n_max)?;
    let k = ctx.pi_sq_over_4();
    let parts = map_range(1, n_max, |n| {
        let (_, d) = ctx.reduce(n)?;
        let eps = ctx
            .pow_u64(n, -alpha)
            .ok_or_else(|| precision(ctx, n, "n^-alpha"))?;
        if ctx.decide_lt(&d, &eps, n, "d(n) against n^-alpha")? {
            Ok((false, k.mul(&power_term(ctx, n, 3.0, &d, 2.0)?)))
        } else {
            Ok((true, k.mul(&power_term(ctx, n, 3.0, &eps, 2.0)?)))
        }
    })?;
    let frac = ctx.bits();
    let bulk_bound = sum_balls(frac, parts.iter().filter(|p| p.0).map(|p| &p.1));
    let spike_part = sum_balls(frac, parts.iter().filter(|p| !p.0).map(|p| &p.1));
    let small_set = parts
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.0)
        .map(|(i, _)| i as u64 + 1)
        .collect();
    Ok(SplitReport {
        alpha,
        n_max,
        bulk_bound,
        spike_part,
        small_set,
    })
}
