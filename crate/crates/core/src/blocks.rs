//! Windows of indices around `q_k·π`, their measured contribution to the
//! series against the heuristic `C/(q_k² q_{k+1})`, and single-term spikes
//! matched to convergents.

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::ball::Ball;
use crate::diophantine::{convergents_covering, convergents_through, ConvergentList};
use crate::error::{Error, Result};
use crate::precision::PrecisionContext;
use crate::series::term_s;

pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct BlockReport {
    pub k: usize,
    pub q_k: BigUint,
    pub q_k1: BigUint,
    pub tau: f64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub measured_sum: Ball,
    /// Index nearest `q_k·π`, i.e. the numerator `p_k`.
    pub central_n: u64,
    pub central_term: Ball,
    pub constant: f64,
    pub heuristic: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpikeEvent {
    pub n: u64,
    #[serde(skip)]
    pub term: Ball,
    /// `k` with `p_k = n`.
    pub matched_k: Option<usize>,
    /// `k` with `q_k = n`, for cross-reference.
    pub denominator_k: Option<usize>,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

fn window_in(list: &ConvergentList, k: usize, tau: f64, ctx: &PrecisionContext) -> Result<(u64, u64)> {
    let q = BigInt::from(list.convergents[k].q.clone());
    let center = ctx.pi().mul_int(&q);
    let half = ctx.real(tau).mul_int(&q);
    let lo = center.sub(&half);
    let hi = center.add(&half);
    let uncertified = || Error::Precision {
        n: list.convergents[k].p.to_u64().unwrap_or(u64::MAX),
        bits: ctx.bits(),
        what: "block window bounds",
    };
    // The bounds q_k·π ± τ·q_k are irrational, so ceil = floor + 1.
    let n_lo: BigInt = lo.certified_floor().ok_or_else(uncertified)? + 1;
    let n_hi: BigInt = hi.certified_floor().ok_or_else(uncertified)?;
    let n_lo = n_lo.max(BigInt::from(1));
    if n_lo > n_hi {
        return Err(Error::EmptyWindow { k, tau });
    }
    let to_u64 = |v: BigInt| v.to_u64().ok_or_else(|| Error::invalid("window exceeds u64 range"));
    Ok((to_u64(n_lo)?, to_u64(n_hi)?))
}

/// Integer window `ceil(q_k π - τ q_k) ..= floor(q_k π + τ q_k)`.
pub fn block_window(k: usize, tau: f64, ctx: &PrecisionContext) -> Result<(u64, u64)> {
    check_tau(tau)?;
    let list = convergents_through(ctx, k)?;
    window_in(&list, k, tau, ctx)
}

/// Sums `1/(n³ sin² n)` over the window of convergent `k` and compares it
/// with `constant / (q_k² q_{k+1})`. The ratio is reported, never judged.
pub fn block_sum(k: usize, tau: f64, ctx: &PrecisionContext, constant: f64) -> Result<BlockReport> {
    check_tau(tau)?;
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::invalid(format!("constant must be positive, got {constant}")));
    }
    let list = convergents_through(ctx, k + 1)?;
    let (n_lo, n_hi) = window_in(&list, k, tau, ctx)?;
    let terms: Vec<Result<Ball>> = (n_lo..=n_hi).into_par_iter().map(|n| term_s(n, ctx)).collect();
    let mut measured_sum = Ball::zero(ctx.bits());
    for t in terms {
        measured_sum = measured_sum.add(&t?);
    }
    let conv = &list.convergents[k];
    let central_n = conv
        .p
        .to_u64()
        .ok_or_else(|| Error::invalid("numerator exceeds u64 range"))?;
    let central_term = term_s(central_n, ctx)?;
    let q_k = conv.q.clone();
    let q_k1 = list.convergents[k + 1].q.clone();
    let scale = heuristic_scale(&q_k, &q_k1);
    let heuristic = constant / scale;
    Ok(BlockReport {
        k,
        tau,
        n_lo,
        n_hi,
        ratio: measured_sum.to_f64() / heuristic,
        measured_sum,
        central_n,
        central_term,
        constant,
        heuristic,
        q_k,
        q_k1,
    })
}

/// `q_k² · q_{k+1}` as `f64`.
fn heuristic_scale(q_k: &BigUint, q_k1: &BigUint) -> f64 {
    (q_k * q_k * q_k1).to_f64().unwrap_or(f64::INFINITY)
}

/// Log-space least squares for `C` in `measured ≈ C/(q_k² q_{k+1})`:
/// `ln C = mean(ln(measured · q_k² · q_{k+1}))`. Samples are
/// `(measured, q_k, q_{k+1})`.
pub fn fit_constant_from(samples: &[(f64, f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewBlocks(samples.len()));
    }
    let mean = samples
        .iter()
        .map(|&(m, q, q1)| m.ln() + 2.0 * q.ln() + q1.ln())
        .sum::<f64>()
        / samples.len() as f64;
    Ok(mean.exp())
}

/// Fits `C` over the blocks of `k_list`.
pub fn fit_constant(k_list: &[usize], tau: f64, ctx: &PrecisionContext) -> Result<f64> {
    if k_list.len() < 2 {
        return Err(Error::TooFewBlocks(k_list.len()));
    }
    let samples = k_list
        .iter()
        .map(|&k| {
            let r = block_sum(k, tau, ctx, 1.0)?;
            Ok((
                r.measured_sum.to_f64(),
                r.q_k.to_f64().unwrap_or(f64::INFINITY),
                r.q_k1.to_f64().unwrap_or(f64::INFINITY),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_constant_from(&samples)
}

/// Every `n <= n_max` whose term exceeds `threshold`, matched against the
/// convergents of π.
pub fn spike_scan(n_max: u64, threshold: f64, ctx: &PrecisionContext) -> Result<Vec<SpikeEvent>> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::invalid(format!("threshold must be positive, got {threshold}")));
    }
    let limit = ctx.real(threshold);
    let hits: Vec<Result<Option<Ball>>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let t = term_s(n, ctx)?;
            let below = t.certainly_le(&limit).ok_or(Error::Precision {
                n,
                bits: ctx.bits(),
                what: "term against spike threshold",
            })?;
            Ok((!below).then_some(t))
        })
        .collect();
    let list = convergents_covering(ctx, n_max);
    let mut events = Vec::new();
    for (i, hit) in hits.into_iter().enumerate() {
        if let Some(term) = hit? {
            let n = i as u64 + 1;
            events.push(SpikeEvent {
                n,
                term,
                matched_k: list.numerator_index(n),
                denominator_k: list.denominator_index(n),
            });
        }
    }
    Ok(events)
}

/// Reconciliation note for spikes sitting at numerators `p_k` while no
/// denominator `q_k > 1` shows one. `None` if nothing needs saying.
pub fn denominator_note(events: &[SpikeEvent]) -> Option<String> {
    let at_numerators: Vec<String> = events
        .iter()
        .filter_map(|e| e.matched_k.map(|k| format!("{}=p_{}", e.n, k)))
        .collect();
    if at_numerators.is_empty() {
        return None;
    }
    let at_denominators: Vec<String> = events
        .iter()
        .filter(|e| e.n > 1 && e.matched_k.is_none())
        .filter_map(|e| e.denominator_k.map(|k| format!("{}=q_{}", e.n, k)))
        .collect();
    Some(format!(
        "spikes sit at convergent numerators ({}); spikes at denominators q_k > 1: {}. \
         Integers near q_k*pi are the numerators p_k, i.e. the denominators of the convergents of 1/pi",
        at_numerators.join(", "),
        if at_denominators.is_empty() {
            "none".to_string()
        } else {
            at_denominators.join(", ")
        }
    ))
}

impl BlockReport {
    pub fn central_within_window(&self) -> bool {
        (self.n_lo..=self.n_hi).contains(&self.central_n)
    }

    /// `measured_sum >= central_term`, unless the balls prove otherwise.
    pub fn dominates_center(&self) -> bool {
        self.central_term.le_within_error(&self.measured_sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    #[test]
    fn window_examples() {
        let c = ctx();
        assert_eq!(block_window(1, 0.1, &c).unwrap(), (22, 22));
        assert_eq!(block_window(3, 0.1, &c).unwrap(), (344, 366));
        assert_eq!(
            block_window(0, 0.1, &c).unwrap_err(),
            Error::EmptyWindow { k: 0, tau: 0.1 }
        );
        assert!(block_window(1, -1.0, &c).is_err());
    }

    #[test]
    fn block_examples() {
        let c = ctx();
        let b1 = block_sum(1, 0.1, &c, 1.0).unwrap();
        assert!((b1.measured_sum.to_f64() - 1.1987177).abs() < 1e-6);
        assert!((b1.heuristic - 1.0 / 5194.0).abs() < 1e-15);
        assert!(b1.dominates_center() && b1.central_within_window());
        let b3 = block_sum(3, 0.1, &c, 1.0).unwrap();
        assert!((b3.measured_sum.to_f64() - 24.598).abs() < 0.01);
        assert!((b3.heuristic - 1.0 / (113.0 * 113.0 * 33102.0)).abs() < 1e-20);
        let doubled = block_sum(3, 0.1, &c, 2.0).unwrap();
        assert_eq!(doubled.heuristic, 2.0 * b3.heuristic);
        assert_eq!(doubled.measured_sum, b3.measured_sum);
    }

    #[test]
    fn fit_recovers_planted_constant() {
        let samples = [(5.0 / (49.0 * 106.0), 7.0, 106.0), (5.0 / (12769.0 * 33102.0), 113.0, 33102.0)];
        assert!((fit_constant_from(&samples).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(fit_constant_from(&samples[..1]).unwrap_err(), Error::TooFewBlocks(1));
        assert!(fit_constant(&[1], 0.1, &ctx()).is_err());
    }

    #[test]
    fn spike_examples() {
        let c = ctx();
        assert!(spike_scan(2, 2.0, &c).unwrap().is_empty());
        let s = spike_scan(400, 1.0, &c).unwrap();
        let ns: Vec<u64> = s.iter().map(|e| e.n).collect();
        assert_eq!(ns, vec![1, 3, 22, 355]);
        assert_eq!(s[0].matched_k, None);
        assert_eq!(s[0].denominator_k, Some(0));
        assert_eq!(s[3].matched_k, Some(3));
        let note = denominator_note(&s).unwrap();
        assert!(note.contains("355=p_3"));
    }
}
