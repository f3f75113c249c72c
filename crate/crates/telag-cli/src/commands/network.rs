use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use telag_core::{
    assortativity, coarse_grain, infer_network, CoarseGraph, LeadLagNetwork, NetworkJob,
};

use crate::io::{
    ensure_dir, fmt_float, load_series, read_manifest, to_json_pretty, write_file, write_run_config,
};
use crate::{check_past_window, check_threshold, data, outln, parse_session, usage, CliError};

#[derive(Args, Serialize)]
pub struct NetworkArgs {
    /// Manifest CSV with columns path,label,group; paths are resolved
    /// relative to the manifest
    pub manifest: PathBuf,
    /// Global confidence; each pair is tested at threshold / n_tests
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Series with fewer events are excluded before testing
    #[arg(long, default_value_t = 1000)]
    pub min_events: usize,
    /// Past target events encoded into the conditioning state
    #[arg(long, default_value_t = 1)]
    pub past_window: u32,
    /// Backward-matching shift in seconds, applied to every pair
    #[arg(long, default_value_t = 0.0)]
    pub delta_t: f64,
    /// Overrides the default n(n+1)/2 Bonferroni test count
    #[arg(long)]
    pub n_tests: Option<u64>,
    /// Time-of-day filter START,END in seconds since midnight UTC
    #[arg(long)]
    pub session: Option<String>,
    /// Directory receiving edges.csv, coarse.csv, summary.json,
    /// run_config.json
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct NetworkSummary<'a> {
    /// Series loaded from the manifest.
    n: usize,
    /// Series surviving the event-count filter.
    n_filtered: usize,
    /// Bonferroni test count behind the per-test threshold.
    n_t: u64,
    /// Per-test p-value threshold.
    threshold: f64,
    edges_retained: usize,
    fraction_retained: f64,
    non_isolated_nodes: usize,
    untestable_pairs: usize,
    assortativity: Option<f64>,
    groups: &'a [telag_core::CoarseNode],
}

fn edges_csv(net: &LeadLagNetwork) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to = |e: csv::Error| data(format!("csv output failed: {e}"));
    w.write_record([
        "source",
        "target",
        "group_source",
        "group_target",
        "te_nats",
        "statistic",
        "df",
        "p_value",
    ])
    .map_err(to)?;
    for e in &net.edges {
        let (s, t) = (&net.nodes[e.source], &net.nodes[e.target]);
        w.write_record([
            s.label.as_str(),
            t.label.as_str(),
            s.group.as_str(),
            t.group.as_str(),
            &fmt_float(e.te_nats),
            &fmt_float(e.statistic),
            &e.df.to_string(),
            &fmt_float(e.p_value),
        ])
        .map_err(to)?;
    }
    let bytes = w.into_inner().map_err(|e| data(format!("csv output failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| data(format!("csv output failed: {e}")))
}

fn coarse_csv(coarse: &CoarseGraph) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to = |e: csv::Error| data(format!("csv output failed: {e}"));
    w.write_record(["source_group", "target_group", "links", "width"]).map_err(to)?;
    for e in &coarse.edges {
        w.write_record([
            e.source_group.as_str(),
            e.target_group.as_str(),
            &e.links.to_string(),
            &e.width.to_string(),
        ])
        .map_err(to)?;
    }
    let bytes = w.into_inner().map_err(|e| data(format!("csv output failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| data(format!("csv output failed: {e}")))
}

pub fn run(args: &NetworkArgs) -> Result<(), CliError> {
    check_past_window(args.past_window)?;
    check_threshold(args.threshold)?;
    if !(args.delta_t.is_finite() && args.delta_t >= 0.0) {
        return Err(usage(format!("--delta-t must be finite and >= 0, got {}", args.delta_t)));
    }
    if args.min_events < args.past_window as usize + 2 {
        return Err(usage(format!(
            "--min-events {} cannot test anything with past window {}",
            args.min_events, args.past_window
        )));
    }
    if args.n_tests == Some(0) {
        return Err(usage("--n-tests must be positive"));
    }
    let session = args.session.as_deref().map(parse_session).transpose()?;

    let entries = read_manifest(&args.manifest)?;
    let mut series = Vec::new();
    let mut groups = Vec::new();
    for entry in &entries {
        match load_series(&entry.path, Some(&entry.label), session) {
            Ok(s) => {
                series.push(s);
                groups.push(entry.group.clone());
            }
            Err(e) => {
                eprintln!("warning: skipping {} ({}): {e}", entry.label, entry.path.display())
            }
        }
    }

    let job = NetworkJob {
        series,
        groups,
        q_conf: args.threshold,
        min_events: args.min_events,
        past_window: args.past_window,
        delta_t: args.delta_t,
        n_tests_override: args.n_tests,
    };
    let net = infer_network(&job)?;
    let coarse = coarse_grain(&net)?;
    let assort = if net.edges.is_empty() { None } else { Some(assortativity(&net)?) };

    let summary = NetworkSummary {
        n: net.n_total_series,
        n_filtered: net.nodes.len(),
        n_t: net.n_tests,
        threshold: net.threshold,
        edges_retained: net.edges.len(),
        fraction_retained: net.fraction_retained(),
        non_isolated_nodes: net.non_isolated_nodes(),
        untestable_pairs: net.untestable_pairs,
        assortativity: assort,
        groups: &coarse.nodes,
    };

    outln!("series: {} loaded, {} kept", summary.n, summary.n_filtered);
    outln!("tests: {} (per-test threshold {})", summary.n_t, fmt_float(summary.threshold));
    outln!(
        "edges retained: {} ({} untestable pairs)",
        summary.edges_retained,
        summary.untestable_pairs
    );
    match summary.assortativity {
        Some(r) => outln!("assortativity by group: {r}"),
        None => outln!("assortativity by group: undefined (no edges)"),
    }

    ensure_dir(&args.out)?;
    write_file(&args.out, "edges.csv", &edges_csv(&net)?)?;
    write_file(&args.out, "coarse.csv", &coarse_csv(&coarse)?)?;
    write_file(&args.out, "summary.json", &to_json_pretty(&summary)?)?;
    write_run_config(&args.out, "network", args)?;
    Ok(())
}
