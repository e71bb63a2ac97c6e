//! Command dispatch.

use std::io::Write;

use flinthills_core::blocks::{block_sum, denominator_note, fit_constant_from, spike_scan};
use flinthills_core::diophantine::{
    classify_mu, convergents, convergents_covering, exponent_probe, good_denominators, sparsity_count,
    ConvergentList,
};
use flinthills_core::series::{
    adaptive_split, generalized_sum, safe_region_sum, weighted_sum, SumLedger, CHUNK_LEN,
};
use flinthills_core::{Error, PrecisionContext};
use num_traits::ToPrimitive;
use thiserror::Error as ThisError;

use crate::audit::{audit, AUDIT_TOLERANCE};
use crate::checkpoint::{checkpoint_load, checkpoint_save, CheckpointError};
use crate::config::{Command, RunConfig};
use crate::output::{Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const SUMS_COLUMNS: [&str; 7] = ["N", "S", "L", "G", "Gsharp", "ratio_SL", "ratio_SG"];

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(Error),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("audit failed: relative drift S = {drift_s:e}, L = {drift_l:e} (tolerance {AUDIT_TOLERANCE:e})")]
    AuditFailed { drift_s: f64, drift_l: f64 },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::EmptyWindow { .. } | Error::TooFewBlocks(_) => {
                RunError::Usage(e.to_string())
            }
            Error::Precision { .. } | Error::UncertifiedConvergent { .. } => RunError::Numeric(e),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Checkpoint(_) => EXIT_USAGE,
            RunError::Numeric(_) | RunError::AuditFailed { .. } | RunError::Io(_) => EXIT_NUMERIC,
        }
    }
}

/// A finished command: its table plus notes for stderr.
pub struct Output {
    pub table: Option<Table>,
    pub notes: Vec<String>,
    /// Reported after the table, e.g. a failed audit.
    pub failure: Option<RunError>,
}

impl Output {
    fn table(table: Table) -> Self {
        Output {
            table: Some(table),
            notes: Vec::new(),
            failure: None,
        }
    }
}

/// Runs the command and writes its table to `out`, notes and the
/// diagnostic (if any) to `err`. Returns the exit code.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match config.jobs {
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| compute(config)),
            Err(e) => Err(RunError::Usage(format!("--jobs: {e}"))),
        },
        None => compute(config),
    };
    let result = result.and_then(|output| {
        for note in &output.notes {
            let _ = writeln!(err, "note: {note}");
        }
        if let Some(table) = &output.table {
            table.write(config.format, out)?;
        }
        output.failure.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "flinthills: error: {e}");
            e.exit_code()
        }
    }
}

pub fn compute(config: &RunConfig) -> Result<Output, RunError> {
    if config.command == Command::Criterion {
        return criterion(config);
    }
    if config.command == Command::Audit {
        return audit_command(config);
    }
    let ctx = PrecisionContext::new(config.bits)?;
    match config.command {
        Command::Sums => sums(config, &ctx),
        Command::Convergents => convergents_command(config, &ctx),
        Command::Blocks => blocks(config, &ctx),
        Command::Spikes => spikes(config, &ctx),
        Command::Safe => safe(config, &ctx),
        Command::Weighted => weighted(config, &ctx),
        Command::Split => split(config, &ctx),
        Command::General => general(config, &ctx),
        Command::Probe => probe(config, &ctx),
        Command::Criterion | Command::Audit => unreachable!(),
    }
}

fn sums(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    let mut ledger = match (&config.checkpoint_path, config.resume) {
        (Some(path), true) => checkpoint_load(path, config)?,
        _ => SumLedger::new(ctx, config.stride)?,
    };
    if ledger.n_done > config.n_max {
        return Err(RunError::Usage(format!(
            "--n-max: checkpoint already covers n = {}, beyond {}",
            ledger.n_done, config.n_max
        )));
    }
    let target = config.halt_at.map_or(config.n_max, |h| h.min(config.n_max));
    match &config.checkpoint_path {
        Some(path) => {
            while ledger.n_done < target {
                let next = ((ledger.n_done / CHUNK_LEN + 1) * CHUNK_LEN).min(target);
                ledger.extend_to(next, ctx)?;
                checkpoint_save(path, &ledger, config)?;
            }
        }
        None => ledger.extend_to(target, ctx)?,
    }
    if target < config.n_max {
        return Ok(Output {
            table: None,
            notes: vec![format!("halted at n = {target}; continue with --resume")],
            failure: None,
        });
    }
    let mut table = Table::new(&SUMS_COLUMNS);
    for row in ledger.rows() {
        let (sl, sg) = row.ratios(ctx);
        table.push(vec![
            Cell::Int(row.n),
            Cell::ball(&row.s),
            Cell::ball(&row.l),
            Cell::ball(&row.g(ctx)),
            Cell::ball(&row.g_sharp),
            Cell::Float(sl),
            Cell::Float(sg),
        ]);
    }
    Ok(Output::table(table))
}

fn big(v: &num_bigint::BigUint) -> Cell {
    Cell::Text(v.to_string())
}

fn convergents_command(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    let list = convergents(ctx, config.k_max);
    let mut table = Table::new(&["k", "a", "p", "q", "eps", "eps_err", "bounds_ok"]);
    for (i, c) in list.convergents.iter().enumerate() {
        let bounds_ok = list.convergents.get(i + 1).map(|next| {
            ConvergentList {
                convergents: vec![c.clone(), next.clone()],
                stopped_early: false,
            }
            .check_eps_bounds(ctx)
            .is_ok()
        });
        table.push(vec![
            Cell::Int(c.k as u64),
            big(&c.a),
            big(&c.p),
            big(&c.q),
            Cell::ball(&c.eps),
            Cell::Float(c.eps_error()),
            bounds_ok.map_or(Cell::Null, Cell::Bool),
        ]);
    }
    let mut out = Output::table(table);
    if list.stopped_early {
        out.notes.push(format!(
            "only {} convergents are certified at {} bits",
            list.convergents.len(),
            config.bits
        ));
    }
    Ok(out)
}

fn blocks(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    let mut table = Table::new(&[
        "k",
        "q_k",
        "q_k1",
        "tau",
        "n_lo",
        "n_hi",
        "measured_sum",
        "central_n",
        "central_term",
        "constant",
        "heuristic",
        "ratio",
        "dominates_center",
    ]);
    let mut samples = Vec::new();
    for &k in &config.k_list {
        let r = block_sum(k, config.tau, ctx, config.constant)?;
        samples.push((
            r.measured_sum.to_f64(),
            r.q_k.to_f64().unwrap_or(f64::INFINITY),
            r.q_k1.to_f64().unwrap_or(f64::INFINITY),
        ));
        table.push(vec![
            Cell::Int(k as u64),
            big(&r.q_k),
            big(&r.q_k1),
            Cell::Float(r.tau),
            Cell::Int(r.n_lo),
            Cell::Int(r.n_hi),
            Cell::ball(&r.measured_sum),
            Cell::Int(r.central_n),
            Cell::ball(&r.central_term),
            Cell::Float(r.constant),
            Cell::Float(r.heuristic),
            Cell::Float(r.ratio),
            Cell::Bool(r.dominates_center()),
        ]);
    }
    let mut out = Output::table(table);
    if let Ok(c) = fit_constant_from(&samples) {
        out.notes.push(format!("fitted constant C = {}", crate::output::float_text(c)));
    }
    Ok(out)
}

fn spikes(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    let events = spike_scan(config.n_max, config.threshold, ctx)?;
    let mut table = Table::new(&["n", "term", "matched_k", "denominator_k"]);
    for e in &events {
        table.push(vec![
            Cell::Int(e.n),
            Cell::ball(&e.term),
            Cell::opt_int(e.matched_k.map(|k| k as u64)),
            Cell::opt_int(e.denominator_k.map(|k| k as u64)),
        ]);
    }
    let mut out = Output::table(table);
    out.notes.extend(denominator_note(&events));
    Ok(out)
}

fn safe(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    let r = safe_region_sum(config.params.delta, config.n_max, ctx)?;
    let mut table = Table::new(&["delta", "n_max", "sum", "bound", "member_count", "within_bound"]);
    table.push(vec![
        Cell::Float(r.delta),
        Cell::Int(r.n_max),
        Cell::ball(&r.sum),
        Cell::ball(&r.bound),
        Cell::Int(r.member_count),
        Cell::Bool(r.within_bound()),
    ]);
    Ok(Output::table(table))
}

fn weighted(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    let r = weighted_sum(config.params.eta, config.n_max, ctx)?;
    let mut table = Table::new(&["eta", "n_max", "value", "N", "small_count"]);
    for &(n, count) in &r.small_set_counts {
        table.push(vec![
            Cell::Float(r.eta),
            Cell::Int(r.n_max),
            Cell::ball(&r.value),
            Cell::Int(n),
            Cell::Int(count),
        ]);
    }
    Ok(Output::table(table))
}

fn split(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    let r = adaptive_split(config.params.alpha, config.n_max, ctx)?;
    let mut table = Table::new(&["alpha", "n_max", "bulk_bound", "spike_part", "total", "small_set"]);
    table.push(vec![
        Cell::Float(r.alpha),
        Cell::Int(r.n_max),
        Cell::ball(&r.bulk_bound),
        Cell::ball(&r.spike_part),
        Cell::ball(&r.total()),
        Cell::Ints(r.small_set.clone()),
    ]);
    Ok(Output::table(table))
}

fn general(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    let p = &config.params;
    let value = generalized_sum(p.a, p.b, config.n_max, ctx)?;
    let mut table = Table::new(&["a", "b", "n_max", "value"]);
    table.push(vec![
        Cell::Float(p.a),
        Cell::Float(p.b),
        Cell::Int(config.n_max),
        Cell::ball(&value),
    ]);
    Ok(Output::table(table))
}

fn criterion(config: &RunConfig) -> Result<Output, RunError> {
    let mu = config.mu.ok_or_else(|| RunError::Usage("--mu: required by criterion".into()))?;
    let v = classify_mu(mu)?;
    let mut table = Table::new(&["mu", "verdict", "lower_threshold", "upper_threshold"]);
    table.push(vec![
        Cell::Float(v.mu_input),
        Cell::Text(v.verdict.to_string()),
        Cell::Float(v.lower_threshold),
        Cell::Float(v.upper_threshold),
    ]);
    Ok(Output::table(table))
}

fn probe(config: &RunConfig, ctx: &PrecisionContext) -> Result<Output, RunError> {
    if let Some(nu) = config.nu {
        let set = good_denominators(nu, config.n_max, ctx)?;
        let list = convergents_covering(ctx, config.n_max);
        let mut table = Table::new(&["q", "p", "err", "convergent_k"]);
        for m in &set.members {
            table.push(vec![
                Cell::Int(m.q),
                Cell::Int(m.p),
                Cell::ball(&m.err),
                Cell::opt_int(list.denominator_index(m.q).map(|k| k as u64)),
            ]);
        }
        let counts = sparsity_count(nu, config.n_max, ctx)?;
        let text: Vec<String> = counts.iter().map(|(n, c)| format!("{n}:{c}")).collect();
        let mut out = Output::table(table);
        out.notes.push(format!("count of n <= N with d(n) < n^-{nu}: {}", text.join(", ")));
        return Ok(out);
    }
    let p = exponent_probe(config.n_max, ctx)?;
    let mut table = Table::new(&["n", "kappa", "d", "record"]);
    for e in &p.table {
        table.push(vec![
            Cell::Int(e.n),
            Cell::Float(e.kappa),
            Cell::Float(e.d),
            Cell::Text(format!("{:?}", e.record)),
        ]);
    }
    let mut out = Output::table(table);
    out.notes.push(format!(
        "kappa_max = {} at n = {}",
        crate::output::float_text(p.kappa_max),
        p.argmax_n
    ));
    Ok(out)
}

fn audit_command(config: &RunConfig) -> Result<Output, RunError> {
    let r = audit(config.n_max, config.bits)?;
    let mut table = Table::new(&["n_max", "bits", "bits_wide", "S", "L", "drift_S", "drift_L", "pass"]);
    table.push(vec![
        Cell::Int(r.n_max),
        Cell::Int(r.bits.into()),
        Cell::Int(r.bits_wide.into()),
        Cell::ball(&r.s),
        Cell::ball(&r.l),
        Cell::Float(r.drift_s),
        Cell::Float(r.drift_l),
        Cell::Bool(r.pass()),
    ]);
    let mut out = Output::table(table);
    if !r.pass() {
        out.failure = Some(RunError::AuditFailed {
            drift_s: r.drift_s,
            drift_l: r.drift_l,
        });
    }
    Ok(out)
}
