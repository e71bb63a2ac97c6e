//! Precision self-check: the same sums at `bits` and `2·bits`.

use flinthills_core::series::partial_sums;
use flinthills_core::{Ball, PrecisionContext, Result};

pub const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub n_max: u64,
    pub bits: u32,
    pub bits_wide: u32,
    pub s: Ball,
    pub l: Ball,
    pub drift_s: f64,
    pub drift_l: f64,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.drift_s < AUDIT_TOLERANCE && self.drift_l < AUDIT_TOLERANCE
    }
}

fn rel_drift(base: &Ball, wide: &Ball) -> f64 {
    let base = base.with_frac(wide.frac());
    match base.sub(wide).abs().checked_div(wide) {
        Some(r) => r.to_f64(),
        None => f64::INFINITY,
    }
}

/// Recomputes `S` and `L` over `1..=n_max` at `bits` and `2·bits`. A term
/// that cannot be certified at either precision is an error, never a pass.
pub fn audit(n_max: u64, bits: u32) -> Result<AuditReport> {
    let bits_wide = bits * 2;
    let ctx = PrecisionContext::new(bits)?;
    let wide = PrecisionContext::new(bits_wide)?;
    let base = partial_sums(n_max, &ctx, u64::MAX)?;
    let check = partial_sums(n_max, &wide, u64::MAX)?;
    Ok(AuditReport {
        n_max,
        bits,
        bits_wide,
        drift_s: rel_drift(&base.s, &check.s),
        drift_l: rel_drift(&base.l, &check.l),
        s: base.s,
        l: base.l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flinthills_core::Error;

    #[test]
    fn small_runs_pass() {
        let r = audit(10, 64).unwrap();
        assert_eq!(r.bits_wide, 128);
        assert!(r.pass(), "{r:?}");
        let r = audit(10_000, 256).unwrap();
        assert!(r.pass() && r.drift_s < 1e-60, "{r:?}");
    }

    #[test]
    fn tiny_precision_fails_loudly() {
        let err = audit(1_000_000, 64).unwrap_err();
        assert!(matches!(err, Error::Precision { bits: 64, .. }), "{err:?}");
        assert!(err.failing_index().unwrap() <= 1_000_000);
    }
}
