//! Invariants from the model, exercised over random and exhaustive ranges.

mod support;

use std::sync::OnceLock;

use flinthills_core::blocks::{block_window, spike_scan};
use flinthills_core::diophantine::{classify_mu, convergents, exponent_probe, good_denominators, Verdict};
use flinthills_core::series::{safe_region_sum, term_set};
use flinthills_core::PrecisionContext;
use num_bigint::BigInt;
use proptest::prelude::*;

fn ctx() -> &'static PrecisionContext {
    static CTX: OnceLock<PrecisionContext> = OnceLock::new();
    CTX.get_or_init(|| PrecisionContext::new(256).unwrap())
}

fn wide() -> &'static PrecisionContext {
    static CTX: OnceLock<PrecisionContext> = OnceLock::new();
    CTX.get_or_init(|| PrecisionContext::new(512).unwrap())
}

fn verdict_rank(v: Verdict) -> u8 {
    match v {
        Verdict::Converges => 0,
        Verdict::Undecided => 1,
        Verdict::Diverges => 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn per_term_sandwich(n in 1u64..=100_000) {
        let c = ctx();
        let t = term_set(n, c).unwrap();
        let g = c.pi_sq_over_4().mul(&t.l);
        prop_assert!(t.l.le_within_error(&t.s));
        prop_assert!(t.s.le_within_error(&t.g_sharp));
        prop_assert!(t.g_sharp.le_within_error(&g));
    }

    #[test]
    fn sine_between_linear_bounds(n in 1u64..=1_000_000) {
        let c = ctx();
        let s = c.dist(n).unwrap();
        let d_lo = s.d.sub(&flinthills_core::Ball::new(BigInt::from(0), s.d.rad().clone(), 256));
        let lower = c.two_over_pi().mul(&d_lo);
        prop_assert!(lower.le_within_error(&s.sin_abs));
        prop_assert!(s.sin_abs.le_within_error(&s.d));
        prop_assert!(s.d.le_within_error(c.half_pi()));
        prop_assert!(s.d.rad_f64() < s.d_f64() / 2f64.powi(20));
    }

    #[test]
    fn doubling_bits_stays_inside_reported_error(n in 1u64..=1_000_000) {
        let coarse = ctx().dist(n).unwrap();
        let fine = wide().dist(n).unwrap();
        let diff = (fine.d.to_f64() - coarse.d.to_f64()).abs();
        // Compare on the wide grid to avoid f64 rounding of tiny values.
        let coarse_w = coarse.d.with_frac(512);
        let gap = fine.d.sub(&coarse_w).abs();
        prop_assert!(gap.mid().magnitude() <= &(coarse_w.rad() + 1u32), "diff {diff}");
        prop_assert_eq!(coarse.m, fine.m);
    }

    #[test]
    fn classify_is_monotone(a in 2.0f64..4.0, b in 2.0f64..4.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let vl = classify_mu(lo).unwrap().verdict;
        let vh = classify_mu(hi).unwrap().verdict;
        prop_assert!(verdict_rank(vl) <= verdict_rank(vh));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn windows_shrink_with_tau(k in 1usize..6, t1 in 0.05f64..1.0, t2 in 0.05f64..1.0) {
        let (small, big) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let c = ctx();
        let (a_lo, a_hi) = block_window(k, small, c).unwrap();
        let (b_lo, b_hi) = block_window(k, big, c).unwrap();
        prop_assert!(b_lo <= a_lo && a_hi <= b_hi);
    }

    #[test]
    fn spike_sets_nest(t1 in 0.05f64..30.0, t2 in 0.05f64..30.0) {
        let (low, high) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let c = ctx();
        let wide: Vec<u64> = spike_scan(2000, low, c).unwrap().iter().map(|e| e.n).collect();
        let narrow: Vec<u64> = spike_scan(2000, high, c).unwrap().iter().map(|e| e.n).collect();
        prop_assert!(narrow.iter().all(|n| wide.contains(n)));
    }

    #[test]
    fn safe_region_sum_monotone_in_delta(d1 in 0.01f64..1.5, d2 in 0.01f64..1.5) {
        let (small, big) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let c = ctx();
        let a = safe_region_sum(small, 2000, c).unwrap();
        let b = safe_region_sum(big, 2000, c).unwrap();
        prop_assert!(b.sum.le_within_error(&a.sum));
        prop_assert!(a.within_bound() && b.within_bound());
    }

    #[test]
    fn kappa_max_non_decreasing(n1 in 2u64..3000, n2 in 2u64..3000) {
        let (a, b) = if n1 <= n2 { (n1, n2) } else { (n2, n1) };
        let c = ctx();
        prop_assert!(exponent_probe(a, c).unwrap().kappa_max <= exponent_probe(b, c).unwrap().kappa_max);
    }
}

#[test]
fn convergent_invariants() {
    let c = ctx();
    let list = convergents(c, 60);
    assert!(list.convergents.len() > 40);
    for w in list.convergents.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let det = BigInt::from(b.p.clone()) * BigInt::from(a.q.clone())
            - BigInt::from(a.p.clone()) * BigInt::from(b.q.clone());
        assert!(det == BigInt::from(1) || det == BigInt::from(-1));
        assert!(b.q > a.q);
        assert!(b.eps.certainly_lt(&a.eps).unwrap(), "eps not decreasing at k = {}", b.k);
        assert_eq!(num_integer::Integer::gcd(&b.p, &b.q), 1u32.into());
    }
    for w in list.convergents.windows(3) {
        assert_eq!(w[2].q, &w[2].a * &w[1].q + &w[0].q);
    }
    list.check_eps_bounds(c).unwrap();
}

#[test]
fn good_denominators_are_convergent_denominators() {
    let c = ctx();
    let list = convergents(c, 20);
    for nu in [2.0, 2.5, 3.0] {
        for m in good_denominators(nu, 100_000, c).unwrap().members {
            assert!(list.denominator_index(m.q).is_some(), "q = {} at nu = {nu}", m.q);
        }
    }
}

#[test]
fn spikes_below_1e5_match_numerators() {
    let c = ctx();
    let events = spike_scan(100_000, 1.0, c).unwrap();
    for e in &events {
        if e.n >= 3 {
            assert!(e.matched_k.is_some(), "spike at {} unmatched", e.n);
        }
    }
    let brute: Vec<u64> = (1..=100_000u64).filter(|&n| support::term_f64(n) > 1.0).collect();
    assert_eq!(events.iter().map(|e| e.n).collect::<Vec<_>>(), brute);
}
