//! Argument parsing and validation.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use flinthills_core::blocks::{DEFAULT_THRESHOLD, DEFAULT_TAU};
use flinthills_core::precision::MIN_BITS;
use flinthills_core::series::{SeriesParams, CHUNK_LEN, DEFAULT_STRIDE};
use flinthills_core::{required_bits, DEFAULT_BITS};
use sha2::{Digest, Sha256};

pub const DEFAULT_N_MAX: u64 = 100_000;
pub const DEFAULT_K_MAX: usize = 20;
/// `mu_cap` and guard bits used when `--bits` is not given.
pub const ESCALATION_MU_CAP: f64 = 8.0;
pub const ESCALATION_GUARD: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Sums,
    Convergents,
    Blocks,
    Spikes,
    Safe,
    Weighted,
    Split,
    General,
    Criterion,
    Probe,
    Audit,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "flinthills", version, about = "Certified Flint Hills series experiments")]
struct Args {
    command: Command,
    /// Largest index summed or scanned [default: 100000]
    #[arg(long)]
    n_max: Option<u64>,
    /// Working precision in bits [default: 256, raised for large --n-max]
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: u64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Safe-region threshold; a number or `pi/2`
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Good-approximation exponent for `probe`
    #[arg(long)]
    nu: Option<f64>,
    /// Irrationality exponent for `criterion`
    #[arg(long)]
    mu: Option<f64>,
    /// Convergent indices for `blocks`
    #[arg(long = "k", value_delimiter = ',', default_values_t = [1usize, 3])]
    k_list: Vec<usize>,
    /// Number of partial quotients for `convergents`
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    k_max: usize,
    /// Constant `C` of the block heuristic
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Checkpoint file for `sums`
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Continue from the checkpoint file
    #[arg(long)]
    resume: bool,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// Stop `sums` after this index (a multiple of 16384) and leave the checkpoint
    #[arg(long)]
    halt_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n_max: u64,
    pub bits: u32,
    pub stride: u64,
    pub tau: f64,
    pub threshold: f64,
    pub params: SeriesParams,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub k_list: Vec<usize>,
    pub k_max: usize,
    pub constant: f64,
    pub format: Format,
    pub checkpoint_path: Option<PathBuf>,
    pub resume: bool,
    pub jobs: Option<usize>,
    pub halt_at: Option<u64>,
}

/// Parse outcome that is not a config: a usage error or a help/version
/// request whose text should go to stdout.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    Usage(String),
    Info(String),
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> ParseOutcome {
    ParseOutcome::Usage(format!("{flag}: {msg}"))
}

fn parse_delta(text: &str) -> Result<f64, ParseOutcome> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("pi/2") {
        return Ok(FRAC_PI_2);
    }
    t.parse::<f64>()
        .map_err(|_| usage("--delta", format!("not a number: '{text}'")))
}

fn positive(flag: &str, v: f64) -> Result<f64, ParseOutcome> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(flag, format!("must be positive, got {v}")))
    }
}

fn nonnegative(flag: &str, v: f64) -> Result<f64, ParseOutcome> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(flag, format!("must be nonnegative, got {v}")))
    }
}

pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ParseOutcome::Info(e.to_string()),
            _ => {
                let text = e.to_string();
                let first = text.lines().next().unwrap_or("invalid arguments");
                ParseOutcome::Usage(first.trim_start_matches("error: ").to_string())
            }
        }
    })?;
    validate(args)
}

fn validate(args: Args) -> Result<RunConfig, ParseOutcome> {
    let n_max = args.n_max.unwrap_or(DEFAULT_N_MAX);
    if n_max < 1 {
        return Err(usage("--n-max", "must be at least 1"));
    }
    let bits = match args.bits {
        Some(b) if b < MIN_BITS => {
            return Err(usage("--bits", format!("must be at least {MIN_BITS}, got {b}")))
        }
        Some(b) => b,
        None => required_bits(n_max, ESCALATION_MU_CAP, ESCALATION_GUARD)
            .map_err(|e| usage("--n-max", e))?
            .max(DEFAULT_BITS),
    };
    if args.stride < 1 {
        return Err(usage("--stride", "must be at least 1"));
    }
    let tau = positive("--tau", args.tau)?;
    let threshold = positive("--threshold", args.threshold)?;
    let defaults = SeriesParams::default();
    let delta = match args.delta.as_deref() {
        Some(text) => parse_delta(text)?,
        None => defaults.delta,
    };
    if delta.is_nan() || delta <= 0.0 {
        return Err(usage("--delta", format!("must be positive, got {delta}")));
    }
    if delta > FRAC_PI_2 {
        return Err(usage("--delta", format!("delta exceeds pi/2, got {delta}")));
    }
    let eta = positive("--eta", args.eta.unwrap_or(defaults.eta))?;
    let alpha = positive("--alpha", args.alpha.unwrap_or(defaults.alpha))?;
    let a = nonnegative("--a", args.a.unwrap_or(defaults.a))?;
    let b = nonnegative("--b", args.b.unwrap_or(defaults.b))?;
    let nu = args.nu.map(|v| positive("--nu", v)).transpose()?;
    let mu = match (args.command, args.mu) {
        (Command::Criterion, None) => return Err(usage("--mu", "required by criterion")),
        (_, Some(m)) if !(m >= 2.0 && m.is_finite()) => {
            return Err(usage("--mu", format!("an irrationality exponent is at least 2, got {m}")))
        }
        (_, m) => m,
    };
    if args.k_list.is_empty() {
        return Err(usage("--k", "needs at least one index"));
    }
    if args.k_max < 1 {
        return Err(usage("--k-max", "must be at least 1"));
    }
    let constant = positive("--constant", args.constant)?;
    if args.jobs == Some(0) {
        return Err(usage("--jobs", "must be at least 1"));
    }
    let sums = args.command == Command::Sums;
    if args.checkpoint.is_some() && !sums {
        return Err(usage("--checkpoint", "only supported by sums"));
    }
    if args.resume && args.checkpoint.is_none() {
        return Err(usage("--resume", "requires --checkpoint"));
    }
    if let Some(h) = args.halt_at {
        if args.checkpoint.is_none() {
            return Err(usage("--halt-at", "requires --checkpoint"));
        }
        if h == 0 || h % CHUNK_LEN != 0 {
            return Err(usage("--halt-at", format!("must be a positive multiple of {CHUNK_LEN}, got {h}")));
        }
    }
    Ok(RunConfig {
        command: args.command,
        n_max,
        bits,
        stride: args.stride,
        tau,
        threshold,
        params: SeriesParams {
            a,
            b,
            eta,
            delta,
            alpha,
        },
        nu,
        mu,
        k_list: args.k_list,
        k_max: args.k_max,
        constant,
        format: args.format,
        checkpoint_path: args.checkpoint,
        resume: args.resume,
        jobs: args.jobs,
        halt_at: args.halt_at,
    })
}

impl RunConfig {
    /// Everything that shapes the numbers. Run control (`n_max`, jobs,
    /// output format, checkpoint handling) is left out so a checkpoint can
    /// be resumed towards a larger `n_max`.
    pub fn canonical(&self) -> String {
        let p = &self.params;
        format!(
            "command={};bits={};stride={};tau={:?};threshold={:?};a={:?};b={:?};eta={:?};delta={:?};alpha={:?};nu={:?};mu={:?}",
            self.command.name(),
            self.bits,
            self.stride,
            self.tau,
            self.threshold,
            p.a,
            p.b,
            p.eta,
            p.delta,
            p.alpha,
            self.nu,
            self.mu,
        )
    }

    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical().as_bytes()))
    }
}
