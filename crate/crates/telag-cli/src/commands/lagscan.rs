use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use telag_core::{lag_scan, LagProfile};

use crate::io::{ensure_dir, fmt_float, load_series, to_json_pretty, write_file, write_run_config};
use crate::{
    check_past_window, check_threshold, data, emit, outln, parse_session, parse_shifts, CliError,
};

#[derive(Args, Serialize)]
pub struct LagscanArgs {
    /// Target series: tick CSV or symbol file
    pub target: PathBuf,
    /// Source series
    pub source: PathBuf,
    /// Comma-separated ascending shifts in seconds, e.g. 0,0.25,0.5,1
    #[arg(long)]
    pub shifts: String,
    /// Per-shift significance threshold
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Past target events encoded into the conditioning state
    #[arg(long, default_value_t = 1)]
    pub past_window: u32,
    /// Time-of-day filter START,END in seconds since midnight UTC
    #[arg(long)]
    pub session: Option<String>,
    /// Directory receiving lagscan.csv, lagscan.json, run_config.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn profile_csv(profile: &LagProfile) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to = |e: csv::Error| data(format!("csv output failed: {e}"));
    w.write_record([
        "shift",
        "retained",
        "valid",
        "te_nats",
        "statistic",
        "df",
        "p_value",
        "significant",
    ])
    .map_err(to)?;
    for p in &profile.points {
        let row: Vec<String> = match &p.test {
            Some(t) if p.valid => vec![
                p.shift.to_string(),
                p.retained.to_string(),
                "true".into(),
                fmt_float(t.te),
                fmt_float(t.statistic),
                t.df.to_string(),
                fmt_float(t.p_value),
                (t.p_value < profile.threshold).to_string(),
            ],
            _ => vec![
                p.shift.to_string(),
                p.retained.to_string(),
                "false".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "false".into(),
            ],
        };
        w.write_record(&row).map_err(to)?;
    }
    let bytes = w.into_inner().map_err(|e| data(format!("csv output failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| data(format!("csv output failed: {e}")))
}

pub fn run(args: &LagscanArgs) -> Result<(), CliError> {
    check_past_window(args.past_window)?;
    check_threshold(args.threshold)?;
    let shifts = parse_shifts(&args.shifts)?;
    let session = args.session.as_deref().map(parse_session).transpose()?;

    let target = load_series(&args.target, None, session)?;
    let source = load_series(&args.source, None, session)?;
    let profile = lag_scan(&target, &source, &shifts, args.past_window, args.threshold)?;

    let csv_text = profile_csv(&profile)?;
    emit(&csv_text);
    match profile.cutoff_shift {
        Some(s) => outln!("cutoff_shift: {s}"),
        None => outln!("cutoff_shift: none (largest shift still significant)"),
    }

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_file(dir, "lagscan.csv", &csv_text)?;
        write_file(dir, "lagscan.json", &to_json_pretty(&profile)?)?;
        write_run_config(dir, "lagscan", args)?;
    }
    Ok(())
}
