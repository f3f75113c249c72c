//! `telag` — symbolic transfer-entropy analysis of event series.
//!
//! Subcommands cover single-pair estimation (`te`), two-source comparison
//! (`compare`), lag scans (`lagscan`), all-pairs network inference
//! (`network`), Monte-Carlo benchmark campaigns (`bench`), and tick-to-symbol
//! encoding (`encode`). All randomness is seed-driven; for fixed inputs and
//! seeds every command produces byte-identical output at any worker count.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric
//! non-convergence.

mod commands;
mod io;

use std::fmt;
use std::process;

use clap::{Parser, Subcommand};
use telag_core::TeError;

#[derive(Parser)]
#[command(name = "telag", version, about = "Symbolic transfer entropy between event series")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores). The thread
    /// count never changes output bytes.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer entropy from a source series onto a target, with significance
    Te(commands::te::TeArgs),
    /// Compare the transfer from two sources onto one target across shifts
    Compare(commands::compare::CompareArgs),
    /// Transfer-entropy significance as a function of the matching shift
    Lagscan(commands::lagscan::LagscanArgs),
    /// Bonferroni-validated lead-lag network over a manifest of series
    Network(commands::network::NetworkArgs),
    /// Monte-Carlo benchmark campaigns over synthetic tables
    Bench(commands::bench::BenchArgs),
    /// Encode a tick file into binary price-change symbols
    Encode(commands::encode::EncodeArgs),
}

/// Failures grouped by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag values or grids (exit 2).
    Usage(String),
    /// Unreadable, malformed, or insufficient input data (exit 3).
    Data(String),
    /// An iterative procedure failed to converge (exit 4).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<TeError> for CliError {
    fn from(e: TeError) -> Self {
        match e {
            TeError::NonConvergence { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Writes to stdout; when the read end has gone away (e.g. piped into
/// `head`), exits quietly instead of failing.
pub fn emit(text: &str) {
    use std::io::Write;
    if std::io::stdout().write_all(text.as_bytes()).is_err() {
        process::exit(0);
    }
}

macro_rules! outln {
    ($($arg:tt)*) => {
        crate::emit(&::std::format!("{}\n", ::std::format_args!($($arg)*)))
    };
}
pub(crate) use outln;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

/// Parses a comma-separated, strictly ascending grid of non-negative shifts.
pub fn parse_shifts(text: &str) -> Result<Vec<f64>, CliError> {
    let mut shifts = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let s: f64 = part.parse().map_err(|_| usage(format!("bad shift value {part:?}")))?;
        if !s.is_finite() || s < 0.0 {
            return Err(usage(format!("shift {part} must be finite and >= 0")));
        }
        shifts.push(s);
    }
    if shifts.is_empty() {
        return Err(usage("shift grid is empty"));
    }
    if shifts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("shift grid must be strictly ascending"));
    }
    Ok(shifts)
}

/// Parses a `START,END` time-of-day window in seconds since midnight UTC.
pub fn parse_session(text: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| usage("session filter must be START,END in seconds since midnight"))?;
    let start: f64 = a.trim().parse().map_err(|_| usage(format!("bad session start {a:?}")))?;
    let end: f64 = b.trim().parse().map_err(|_| usage(format!("bad session end {b:?}")))?;
    if !(start >= 0.0 && end > start && end <= 86_400.0) {
        return Err(usage(format!(
            "session window [{start}, {end}] must satisfy 0 <= start < end <= 86400"
        )));
    }
    Ok((start, end))
}

pub fn check_threshold(q: f64) -> Result<(), CliError> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("significance threshold must lie in (0, 1), got {q}")))
    }
}

pub fn check_past_window(w: u32) -> Result<(), CliError> {
    if w >= 1 {
        Ok(())
    } else {
        Err(usage("past window must be at least 1"))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| data(format!("failed to size the thread pool: {e}")))?;
    }
    match cli.command {
        Command::Te(args) => commands::te::run(&args),
        Command::Compare(args) => commands::compare::run(&args),
        Command::Lagscan(args) => commands::lagscan::run(&args),
        Command::Network(args) => commands::network::run(&args),
        Command::Bench(args) => commands::bench::run(&args),
        Command::Encode(args) => commands::encode::run(&args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        process::exit(e.exit_code());
    }
}
