//! Continued-fraction expansion of π, convergents with certified error
//! terms, exhaustive good-approximation scans, and the irrationality
//! exponent classifier.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::precision::{PrecisionContext, CERT_SHIFT};

/// Lower end of the undecided band for the irrationality exponent.
pub const MU_CONVERGES_BELOW: f64 = 2.37;
/// Upper end of the undecided band.
pub const MU_DIVERGES_ABOVE: f64 = 2.5;

/// Partial quotients of π certified from the context's enclosure.
#[derive(Debug, Clone, PartialEq)]
pub struct CfExpansion {
    pub quotients: Vec<BigUint>,
    /// `true` when fewer than `k_max + 1` quotients could be certified.
    pub stopped_early: bool,
}

#[derive(Debug, Clone)]
pub struct Convergent {
    pub k: usize,
    pub a: BigUint,
    pub p: BigUint,
    pub q: BigUint,
    /// `|q·π - p|`
    pub eps: Ball,
}

impl Convergent {
    pub fn eps_f64(&self) -> f64 {
        self.eps.to_f64()
    }

    pub fn eps_error(&self) -> f64 {
        self.eps.rad_f64()
    }
}

#[derive(Debug, Clone)]
pub struct ConvergentList {
    pub convergents: Vec<Convergent>,
    pub stopped_early: bool,
}

impl ConvergentList {
    pub fn numerator_index(&self, n: u64) -> Option<usize> {
        let n = BigUint::from(n);
        self.convergents.iter().position(|c| c.p == n)
    }

    pub fn denominator_index(&self, n: u64) -> Option<usize> {
        let n = BigUint::from(n);
        self.convergents.iter().position(|c| c.q == n)
    }

    /// Checks `1/(q_k + q_{k+1}) < eps_k < 1/q_{k+1}` for every consecutive
    /// pair, within the certified radii. Returns the first failing `k`.
    pub fn check_eps_bounds(&self, ctx: &PrecisionContext) -> std::result::Result<(), usize> {
        for w in self.convergents.windows(2) {
            let (c, next) = (&w[0], &w[1]);
            let one = ctx.int(1);
            let lower = one
                .checked_div(&ctx.int(BigInt::from(&c.q + &next.q)))
                .expect("positive");
            let upper = one.checked_div(&ctx.int(BigInt::from(next.q.clone()))).expect("positive");
            let ok = lower.lo_raw() < c.eps.hi_raw() && c.eps.lo_raw() < upper.hi_raw();
            if !ok {
                return Err(c.k);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GoodApprox {
    pub q: u64,
    pub p: u64,
    /// `|π·q - p|`
    #[serde(skip)]
    pub err: Ball,
}

#[derive(Debug, Clone)]
pub struct GoodApproxSet {
    pub nu: f64,
    pub n_max: u64,
    pub members: Vec<GoodApprox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Converges => "Converges",
            Verdict::Diverges => "Diverges",
            Verdict::Undecided => "Undecided",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub mu_input: f64,
    pub verdict: Verdict,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeRecord {
    /// New maximum of κ(n).
    Kappa,
    /// New minimum of d(n).
    Distance,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeEntry {
    pub n: u64,
    pub kappa: f64,
    pub d: f64,
    pub record: ProbeRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentProbe {
    pub kappa_max: f64,
    pub argmax_n: u64,
    pub table: Vec<ProbeEntry>,
}

/// Expands the enclosure `[pi_lo, pi_hi]` as two exact rationals and emits
/// a quotient only while both endpoints share it.
pub fn cf_expand(ctx: &PrecisionContext, k_max: usize) -> CfExpansion {
    let pi = ctx.pi();
    let den = BigInt::one() << ctx.bits() as usize;
    let mut lo = (pi.lo_raw(), den.clone());
    let mut hi = (pi.hi_raw(), den);
    let mut quotients = Vec::new();
    while quotients.len() <= k_max {
        let (a_lo, r_lo) = lo.0.div_mod_floor(&lo.1);
        let (a_hi, r_hi) = hi.0.div_mod_floor(&hi.1);
        if a_lo != a_hi || r_lo.is_zero() || r_hi.is_zero() {
            break;
        }
        quotients.push(a_lo.to_biguint().expect("quotients of pi are positive"));
        // x -> 1/(x - a) reverses the order of the endpoints.
        let next_lo = (hi.1.clone(), r_hi);
        let next_hi = (lo.1.clone(), r_lo);
        lo = next_lo;
        hi = next_hi;
    }
    CfExpansion {
        stopped_early: quotients.len() <= k_max,
        quotients,
    }
}

/// Convergents `p_k/q_k` from the certified quotients. A convergent is kept
/// only while `eps_k` is certified to relative precision `2^-20`.
pub fn convergents(ctx: &PrecisionContext, k_max: usize) -> ConvergentList {
    let cf = cf_expand(ctx, k_max);
    let mut stopped_early = cf.stopped_early;
    let (mut p_prev, mut p) = (BigUint::zero(), BigUint::one());
    let (mut q_prev, mut q) = (BigUint::one(), BigUint::zero());
    let mut out = Vec::with_capacity(cf.quotients.len());
    for (k, a) in cf.quotients.into_iter().enumerate() {
        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        let eps = ctx
            .pi()
            .mul_int(&BigInt::from(q.clone()))
            .sub(&ctx.int(BigInt::from(p.clone())))
            .abs();
        if !eps.rel_below(CERT_SHIFT) {
            stopped_early = true;
            break;
        }
        out.push(Convergent {
            k,
            a,
            p: p.clone(),
            q: q.clone(),
            eps,
        });
    }
    ConvergentList {
        convergents: out,
        stopped_early,
    }
}

/// Convergents through index `k_max`, failing if any is uncertified.
pub(crate) fn convergents_through(ctx: &PrecisionContext, k_max: usize) -> Result<ConvergentList> {
    let list = convergents(ctx, k_max);
    if list.convergents.len() <= k_max {
        return Err(Error::UncertifiedConvergent {
            k: k_max,
            bits: ctx.bits(),
            available: list.convergents.len(),
        });
    }
    Ok(list)
}

/// Convergents whose numerators reach at least `n_max` (or all certified
/// ones, if the precision runs out first).
pub fn convergents_covering(ctx: &PrecisionContext, n_max: u64) -> ConvergentList {
    let mut k_max = 8;
    loop {
        let list = convergents(ctx, k_max);
        let covered = list
            .convergents
            .last()
            .is_some_and(|c| c.p > BigUint::from(n_max));
        if covered || list.stopped_early {
            return list;
        }
        k_max *= 2;
    }
}

/// `q^-nu` as a ball.
fn inverse_power(ctx: &PrecisionContext, q: u64, nu: f64) -> Result<Ball> {
    ctx.pow_u64(q, -nu).ok_or(Error::Precision {
        n: q,
        bits: ctx.bits(),
        what: "q^-nu",
    })
}

/// Every `q <= n_max` with `0 < |π·q - p| < q^-nu`, where `p` is the
/// integer nearest `π·q`.
pub fn good_denominators(nu: f64, n_max: u64, ctx: &PrecisionContext) -> Result<GoodApproxSet> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let bits = ctx.bits() as usize;
    let half = BigInt::one() << (bits - 1);
    let members = (1..=n_max)
        .into_par_iter()
        .map(|q| -> Result<Option<GoodApprox>> {
            let qpi = ctx.pi().mul_u64(q);
            let p = (qpi.mid() + &half) >> bits;
            let err = qpi.sub(&ctx.int(p.clone())).abs();
            if !err.is_positive() {
                return Err(Error::Precision {
                    n: q,
                    bits: ctx.bits(),
                    what: "|pi q - p| > 0",
                });
            }
            let bound = inverse_power(ctx, q, nu)?;
            let hit = ctx.decide_lt(&err, &bound, q, "|pi q - p| against q^-nu")?;
            Ok(hit.then(|| GoodApprox {
                q,
                p: p.to_u64().expect("p fits alongside q"),
                err,
            }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(GoodApproxSet { nu, n_max, members })
}

/// Three-way classification against the thresholds 2.37 and 2.5; both
/// boundary values are undecided.
pub fn classify_mu(mu: f64) -> Result<CriterionVerdict> {
    if !(mu >= 2.0 && mu.is_finite()) {
        return Err(Error::invalid(format!(
            "irrationality exponents are at least 2, got {mu}"
        )));
    }
    let verdict = if mu < MU_CONVERGES_BELOW {
        Verdict::Converges
    } else if mu > MU_DIVERGES_ABOVE {
        Verdict::Diverges
    } else {
        Verdict::Undecided
    };
    Ok(CriterionVerdict {
        mu_input: mu,
        verdict,
        lower_threshold: MU_CONVERGES_BELOW,
        upper_threshold: MU_DIVERGES_ABOVE,
    })
}

/// Empirical exponent `κ(n) = ln(1/d(n)) / ln n` for `2 <= n <= n_max`.
///
/// The table keeps every running record: new maxima of κ and new minima of
/// `d(n)` (the latter are where the best approximations live).
pub fn exponent_probe(n_max: u64, ctx: &PrecisionContext) -> Result<ExponentProbe> {
    if n_max < 2 {
        return Err(Error::invalid("n_max must be at least 2"));
    }
    let ds = distances(2, n_max, ctx)?;
    let mut kappa_max = f64::NEG_INFINITY;
    let mut argmax_n = 2;
    let mut d_min = f64::INFINITY;
    let mut table = Vec::new();
    for (i, d) in ds.into_iter().enumerate() {
        let n = i as u64 + 2;
        let kappa = -d.ln() / (n as f64).ln();
        let kappa_rec = kappa > kappa_max;
        let d_rec = d < d_min;
        if kappa_rec {
            kappa_max = kappa;
            argmax_n = n;
        }
        if d_rec {
            d_min = d;
        }
        let record = match (kappa_rec, d_rec) {
            (true, true) => ProbeRecord::Both,
            (true, false) => ProbeRecord::Kappa,
            (false, true) => ProbeRecord::Distance,
            (false, false) => continue,
        };
        table.push(ProbeEntry {
            n,
            kappa,
            d,
            record,
        });
    }
    Ok(ExponentProbe {
        kappa_max,
        argmax_n,
        table,
    })
}

/// Certified `d(n)` as `f64` for `lo..=hi`, in index order.
fn distances(lo: u64, hi: u64, ctx: &PrecisionContext) -> Result<Vec<f64>> {
    (lo..=hi)
        .into_par_iter()
        .map(|n| ctx.reduce(n).map(|(_, d)| d.to_f64()))
        .collect()
}

/// Powers of ten up to `n_max`, then `n_max` itself.
pub fn decade_checkpoints(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 1u64;
    while p <= n_max {
        out.push(p);
        match p.checked_mul(10) {
            Some(next) => p = next,
            None => break,
        }
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Certified `d(n) < n^-nu`.
pub(crate) fn is_small(ctx: &PrecisionContext, n: u64, d: &Ball, nu: f64) -> Result<bool> {
    let bound = inverse_power(ctx, n, nu)?;
    ctx.decide_lt(d, &bound, n, "d(n) against n^-nu")
}

/// Running count of `n <= N` with `d(n) < n^-nu`, reported at decade
/// checkpoints.
pub fn sparsity_count(nu: f64, n_max: u64, ctx: &PrecisionContext) -> Result<Vec<(u64, u64)>> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let flags: Vec<bool> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let (_, d) = ctx.reduce(n)?;
            is_small(ctx, n, &d, nu)
        })
        .collect::<Result<_>>()?;
    Ok(counts_at(&flags, &decade_checkpoints(n_max)))
}

/// Prefix counts of `flags` (indexed from n = 1) at each checkpoint.
pub(crate) fn counts_at(flags: &[bool], checkpoints: &[u64]) -> Vec<(u64, u64)> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut count = 0;
    let mut next = checkpoints.iter().peekable();
    for (i, &f) in flags.iter().enumerate() {
        count += u64::from(f);
        let n = i as u64 + 1;
        while next.peek() == Some(&&n) {
            out.push((n, count));
            next.next();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    fn small(v: &[BigUint]) -> Vec<u64> {
        v.iter().map(|x| x.to_u64().unwrap()).collect()
    }

    #[test]
    fn cf_leading_quotients() {
        let c = ctx();
        assert_eq!(small(&cf_expand(&c, 5).quotients), vec![3, 7, 15, 1, 292, 1]);
        let zero = cf_expand(&c, 0);
        assert_eq!(small(&zero.quotients), vec![3]);
        assert!(!zero.stopped_early);
    }

    #[test]
    fn cf_low_precision_stops_early() {
        let low = PrecisionContext::new(64).unwrap();
        let cf = cf_expand(&low, 100);
        assert!(cf.stopped_early);
        assert!(cf.quotients.len() < 101);
        let high = cf_expand(&ctx(), cf.quotients.len() - 1);
        assert_eq!(cf.quotients, high.quotients);
    }

    #[test]
    fn convergent_examples() {
        let c = ctx();
        let list = convergents(&c, 5);
        let pq: Vec<(u64, u64)> = list
            .convergents
            .iter()
            .map(|c| (c.p.to_u64().unwrap(), c.q.to_u64().unwrap()))
            .collect();
        assert_eq!(
            pq,
            vec![(3, 1), (22, 7), (333, 106), (355, 113), (103993, 33102), (104348, 33215)]
        );
        assert!((list.convergents[0].eps_f64() - 0.14159265358979323).abs() < 1e-15);
        let e1 = list.convergents[1].eps_f64();
        assert!((e1 - 0.0088514).abs() < 1e-6);
        assert!(1.0 / 113.0 < e1 && e1 < 1.0 / 106.0);
        assert!(list.check_eps_bounds(&c).is_ok());
    }

    #[test]
    fn good_denominator_examples() {
        let c = ctx();
        let set = good_denominators(2.0, 200, &c).unwrap();
        let qs: Vec<u64> = set.members.iter().map(|m| m.q).collect();
        assert_eq!(qs, vec![1, 7, 113]);
        let one = good_denominators(0.1, 1, &c).unwrap();
        assert_eq!(one.members.len(), 1);
        assert_eq!(one.members[0].p, 3);
        assert!(good_denominators(0.0, 10, &c).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_mu(2.0).unwrap().verdict, Verdict::Converges);
        assert_eq!(classify_mu(2.6).unwrap().verdict, Verdict::Diverges);
        assert_eq!(classify_mu(2.45).unwrap().verdict, Verdict::Undecided);
        assert_eq!(classify_mu(2.37).unwrap().verdict, Verdict::Undecided);
        assert_eq!(classify_mu(2.5).unwrap().verdict, Verdict::Undecided);
        assert!(classify_mu(1.9).is_err());
        assert!(classify_mu(f64::NAN).is_err());
    }

    #[test]
    fn probe_examples() {
        let c = ctx();
        let p3 = exponent_probe(3, &c).unwrap();
        assert_eq!(p3.argmax_n, 3);
        assert!((p3.kappa_max - 1.7796).abs() < 1e-3);
        let p2 = exponent_probe(2, &c).unwrap();
        assert!((p2.kappa_max + 0.1911).abs() < 1e-3);
        let p400 = exponent_probe(400, &c).unwrap();
        assert_eq!(p400.argmax_n, 3);
        let e355 = p400.table.iter().find(|e| e.n == 355).unwrap();
        assert!((e355.kappa - 1.7727).abs() < 1e-3);
        assert_eq!(e355.record, ProbeRecord::Distance);
        assert!(exponent_probe(1, &c).is_err());
    }

    #[test]
    fn sparsity_examples() {
        let c = ctx();
        assert_eq!(sparsity_count(2.0, 1, &c).unwrap(), vec![(1, 0)]);
        let at = sparsity_count(3.0, 10_000, &c).unwrap();
        assert!(at.last().unwrap().1 <= 2);
        assert_eq!(decade_checkpoints(400), vec![1, 10, 100, 400]);
        assert_eq!(decade_checkpoints(1000), vec![1, 10, 100, 1000]);
    }
}
