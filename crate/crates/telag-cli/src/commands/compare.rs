use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use telag_core::{lag_compare_scan, CompareLagProfile};

use crate::io::{ensure_dir, fmt_float, load_series, to_json_pretty, write_file, write_run_config};
use crate::{
    check_past_window, check_threshold, data, emit, outln, parse_session, parse_shifts, CliError,
};

#[derive(Args, Serialize)]
pub struct CompareArgs {
    /// Target series: tick CSV or symbol file
    pub target: PathBuf,
    /// First candidate source (B)
    pub source_b: PathBuf,
    /// Second candidate source (C)
    pub source_c: PathBuf,
    /// Comma-separated ascending shifts in seconds
    #[arg(long, default_value = "0")]
    pub shifts: String,
    /// Two-sided significance threshold for the band detection
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Past target events encoded into the conditioning state
    #[arg(long, default_value_t = 1)]
    pub past_window: u32,
    /// Time-of-day filter START,END in seconds since midnight UTC
    #[arg(long)]
    pub session: Option<String>,
    /// Directory receiving compare.csv, compare.json, run_config.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn profile_csv(profile: &CompareLagProfile) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to = |e: csv::Error| data(format!("csv output failed: {e}"));
    w.write_record([
        "shift",
        "retained",
        "valid",
        "q_nats",
        "delta_l",
        "omega",
        "nu",
        "v",
        "p_two_sided",
        "p_one_sided",
        "significant",
    ])
    .map_err(to)?;
    for p in &profile.points {
        let row: Vec<String> = match &p.test {
            Some(t) if p.valid => vec![
                p.shift.to_string(),
                p.retained.to_string(),
                "true".into(),
                fmt_float(t.q_stat),
                fmt_float(t.delta_l),
                fmt_float(t.omega),
                fmt_float(t.nu),
                fmt_float(t.v),
                fmt_float(t.p_two_sided),
                fmt_float(t.p_one_sided),
                (t.p_two_sided < profile.threshold).to_string(),
            ],
            _ => {
                let mut row = vec![p.shift.to_string(), p.retained.to_string(), "false".into()];
                row.extend((0..7).map(|_| String::new()));
                row.push("false".into());
                row
            }
        };
        w.write_record(&row).map_err(to)?;
    }
    let bytes = w.into_inner().map_err(|e| data(format!("csv output failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| data(format!("csv output failed: {e}")))
}

pub fn run(args: &CompareArgs) -> Result<(), CliError> {
    check_past_window(args.past_window)?;
    check_threshold(args.threshold)?;
    let shifts = parse_shifts(&args.shifts)?;
    let session = args.session.as_deref().map(parse_session).transpose()?;

    let target = load_series(&args.target, None, session)?;
    let source_b = load_series(&args.source_b, None, session)?;
    let source_c = load_series(&args.source_c, None, session)?;
    let profile =
        lag_compare_scan(&target, &source_b, &source_c, &shifts, args.past_window, args.threshold)?;

    let csv_text = profile_csv(&profile)?;
    emit(&csv_text);
    if profile.bands.is_empty() {
        outln!("no significant bands at threshold {}", profile.threshold);
    }
    for band in &profile.bands {
        let favored = if band.favors_b { source_b.label() } else { source_c.label() };
        outln!(
            "band shifts [{}, {}]: {favored} transfers more",
            profile.points[band.start].shift,
            profile.points[band.end].shift,
        );
    }

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_file(dir, "compare.csv", &csv_text)?;
        write_file(dir, "compare.json", &to_json_pretty(&profile)?)?;
        write_run_config(dir, "compare", args)?;
    }
    Ok(())
}
