use std::f64::consts::LN_2;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use telag_core::{
    backward_match, event_matrix_from_alignment, shuffle_pvalue, te_significance_test,
    BootstrapConfig,
};

use crate::io::{ensure_dir, fmt_float, load_series, to_json_pretty, write_file, write_run_config};
use crate::{check_past_window, outln, parse_session, usage, CliError};

#[derive(Args, Serialize)]
pub struct TeArgs {
    /// Target series: tick CSV or symbol file
    pub target: PathBuf,
    /// Source series whose transfer onto the target is measured
    pub source: PathBuf,
    /// Past target events encoded into the conditioning state
    #[arg(long, default_value_t = 1)]
    pub past_window: u32,
    /// Backward-matching shift in seconds
    #[arg(long, default_value_t = 0.0)]
    pub delta_t: f64,
    /// Shuffle resamples for a reference p-value
    #[arg(long)]
    pub bootstrap: Option<u32>,
    /// Seed for the shuffle reference
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time-of-day filter START,END in seconds since midnight UTC
    #[arg(long)]
    pub session: Option<String>,
    /// Directory receiving te.json and run_config.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TeReport<'a> {
    target: &'a str,
    source: &'a str,
    delta_t: f64,
    past_window: u32,
    rows: u64,
    te_nats: f64,
    te_bits: f64,
    statistic: f64,
    df: u64,
    p_value: f64,
    small_sample: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    shuffle_p: Option<f64>,
}

pub fn run(args: &TeArgs) -> Result<(), CliError> {
    check_past_window(args.past_window)?;
    if !(args.delta_t.is_finite() && args.delta_t >= 0.0) {
        return Err(usage(format!("--delta-t must be finite and >= 0, got {}", args.delta_t)));
    }
    if args.bootstrap == Some(0) {
        return Err(usage("--bootstrap needs at least 1 resample"));
    }
    let session = args.session.as_deref().map(parse_session).transpose()?;

    let target = load_series(&args.target, None, session)?;
    let source = load_series(&args.source, None, session)?;
    let pair = backward_match(&target, &source, args.delta_t)?;
    let em = event_matrix_from_alignment(&pair, args.past_window)?;
    let test = te_significance_test(&em)?;
    let shuffle_p = match args.bootstrap {
        Some(q) => Some(shuffle_pvalue(&em, &BootstrapConfig::shuffle(q, args.seed))?),
        None => None,
    };

    let report = TeReport {
        target: target.label(),
        source: source.label(),
        delta_t: args.delta_t,
        past_window: args.past_window,
        rows: test.t,
        te_nats: test.te,
        te_bits: test.te / LN_2,
        statistic: test.statistic,
        df: test.df,
        p_value: test.p_value,
        small_sample: test.small_sample,
        shuffle_p,
    };

    outln!("transfer {} -> {} at shift {} s", report.source, report.target, report.delta_t);
    outln!("rows: {}", report.rows);
    outln!("te_nats: {}", fmt_float(report.te_nats));
    outln!("te_bits: {}", fmt_float(report.te_bits));
    outln!("statistic: {}", fmt_float(report.statistic));
    outln!("df: {}", report.df);
    outln!("p_value: {}", fmt_float(report.p_value));
    if report.small_sample {
        outln!("note: sample is small for this state space; cross-check with --bootstrap");
    }
    if let Some(p) = report.shuffle_p {
        outln!("shuffle_p: {p} (q={}, seed={})", args.bootstrap.unwrap(), args.seed);
    }

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_file(dir, "te.json", &to_json_pretty(&report)?)?;
        write_run_config(dir, "te", args)?;
    }
    Ok(())
}
