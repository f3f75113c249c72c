use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use telag_core::benchgen::{
    construct_te_pair, gen_false_null, gen_true_null, DirichletSpec, TePairTarget,
};
use telag_core::{
    derive_seed, par_map, resample_compare_pvalue, shuffle_pvalue, stream_rng,
    te_significance_test, vuong_compare, BootstrapConfig, JointDistribution, ProbTable,
    Result as CoreResult, SourceAxis, StateSpec, TeError,
};

use crate::io::{ensure_dir, write_file, write_run_config};
use crate::{data, emit, outln, usage, CliError};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Campaign {
    /// Product-measure tables: generating transfer is exactly zero
    TrueNull,
    /// Fully Dirichlet-drawn tables: generically positive transfer
    FalseNull,
    /// Constructed two-source tables with prescribed transfer targets
    EqualTe,
}

impl Campaign {
    fn name(self) -> &'static str {
        match self {
            Campaign::TrueNull => "true-null",
            Campaign::FalseNull => "false-null",
            Campaign::EqualTe => "equal-te",
        }
    }
}

#[derive(Args, Serialize)]
pub struct BenchArgs {
    /// Campaign to run
    #[arg(value_enum)]
    pub campaign: Campaign,
    /// State-count grid, one entry per axis: a size or LO:HI range,
    /// e.g. 2:4,2:4,2:4 (three axes; equal-te takes four)
    #[arg(long)]
    pub dims: String,
    /// Comma-separated sample sizes
    #[arg(long)]
    pub t: String,
    /// Dirichlet concentration grid (true-null and false-null only)
    #[arg(long)]
    pub alpha: Option<String>,
    /// First-source transfer targets in nats (equal-te only)
    #[arg(long)]
    pub s: Option<String>,
    /// Fixed second-source transfer target; defaults to matching --s
    #[arg(long)]
    pub s_c: Option<f64>,
    /// Distinct constructed tables per equal-te grid point
    #[arg(long, default_value_t = 20)]
    pub tables: u32,
    /// Replicates per grid point
    #[arg(long)]
    pub replicates: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reference resamples per replicate: shuffle p for the null campaigns,
    /// model-comparison resampling for equal-te
    #[arg(long)]
    pub bootstrap: Option<u32>,
    /// Directory receiving campaign.csv and run_config.json; stdout when
    /// omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_axis(text: &str) -> Result<Vec<u32>, CliError> {
    let values: Vec<u32> = if let Some((lo, hi)) = text.split_once(':') {
        let lo: u32 = lo.trim().parse().map_err(|_| usage(format!("bad axis range {text:?}")))?;
        let hi: u32 = hi.trim().parse().map_err(|_| usage(format!("bad axis range {text:?}")))?;
        if hi < lo {
            return Err(usage(format!("axis range {text:?} is descending")));
        }
        (lo..=hi).collect()
    } else {
        vec![text.trim().parse().map_err(|_| usage(format!("bad axis size {text:?}")))?]
    };
    if values.iter().any(|&v| v < 2) {
        return Err(usage(format!("axis {text:?}: state counts must be at least 2")));
    }
    Ok(values)
}

/// Expands per-axis value lists into all combinations, last axis fastest.
fn parse_dims_grid(text: &str, n_axes: usize) -> Result<Vec<Vec<u32>>, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
    if parts.len() != n_axes {
        return Err(usage(format!(
            "--dims needs {n_axes} axes for this campaign, got {}",
            parts.len()
        )));
    }
    let axes = parts.iter().map(|p| parse_axis(p)).collect::<Result<Vec<_>, _>>()?;
    let mut combos = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(combos.len() * axis.len());
        for combo in &combos {
            for &v in axis {
                let mut c = combo.clone();
                c.push(v);
                next.push(c);
            }
        }
        combos = next;
    }
    Ok(combos)
}

fn parse_f64_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| usage(format!("{flag}: bad value {p:?}"))))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(usage(format!("{flag}: grid is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(usage(format!("{flag}: values must be finite")));
    }
    Ok(values)
}

fn parse_u64_list(text: &str, flag: &str) -> Result<Vec<u64>, CliError> {
    let values: Vec<u64> = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| usage(format!("{flag}: bad value {p:?}"))))
        .collect::<Result<_, _>>()?;
    if values.is_empty() || values.contains(&0) {
        return Err(usage(format!("{flag}: needs positive values")));
    }
    Ok(values)
}

enum JobKind {
    Null { alt: bool, alpha: f64 },
    Pair { table_index: usize, s_b: f64, s_c: f64 },
}

struct JobSpec {
    dims: Vec<u32>,
    t: u64,
    replicate: u32,
    seed: u64,
    kind: JobKind,
}

struct TableEntry {
    table: ProbTable,
    pop_b: f64,
    pop_c: f64,
}

#[derive(Default)]
struct Record {
    campaign: &'static str,
    dims: Vec<u32>,
    t: u64,
    alpha: Option<f64>,
    s_b: Option<f64>,
    s_c: Option<f64>,
    table_index: Option<usize>,
    replicate: u32,
    seed: u64,
    te_b: Option<f64>,
    te_c: Option<f64>,
    statistic: Option<f64>,
    df: Option<u64>,
    p_analytic: Option<f64>,
    p_bootstrap: Option<f64>,
    population_te_b: Option<f64>,
    population_te_c: Option<f64>,
    v: Option<f64>,
    p_vuong_one: Option<f64>,
    p_vuong_two: Option<f64>,
}

fn spec3(d: &[u32]) -> CoreResult<StateSpec> {
    StateSpec::new(d[0], d[1], d[2])
}

fn spec4(d: &[u32]) -> CoreResult<StateSpec> {
    StateSpec::with_second_source(d[0], d[1], d[2], d[3])
}

fn run_one(
    campaign: Campaign,
    job: &JobSpec,
    tables: &[TableEntry],
    bootstrap: Option<u32>,
) -> CoreResult<Record> {
    let mut rec = Record {
        campaign: campaign.name(),
        dims: job.dims.clone(),
        t: job.t,
        replicate: job.replicate,
        seed: job.seed,
        ..Record::default()
    };
    match &job.kind {
        JobKind::Null { alt, alpha } => {
            rec.alpha = Some(*alpha);
            let spec =
                DirichletSpec { alpha: *alpha, dims: spec3(&job.dims)?, t: job.t, seed: job.seed };
            let (events, pop_te) = if *alt {
                let gen = gen_false_null(&spec)?;
                (gen.events, gen.population_te)
            } else {
                let gen = gen_true_null(&spec)?;
                (gen.events, 0.0)
            };
            let test = te_significance_test(&events)?;
            rec.te_b = Some(test.te);
            rec.statistic = Some(test.statistic);
            rec.df = Some(test.df);
            rec.p_analytic = Some(test.p_value);
            rec.population_te_b = Some(pop_te);
            if let Some(q) = bootstrap {
                let cfg = BootstrapConfig::shuffle(q, derive_seed(job.seed, 9));
                rec.p_bootstrap = Some(shuffle_pvalue(&events, &cfg)?);
            }
        }
        JobKind::Pair { table_index, s_b, s_c } => {
            rec.s_b = Some(*s_b);
            rec.s_c = Some(*s_c);
            rec.table_index = Some(*table_index);
            let entry = &tables[*table_index];
            rec.population_te_b = Some(entry.pop_b);
            rec.population_te_c = Some(entry.pop_c);
            let events = entry.table.sample_rows(job.t, &mut stream_rng(job.seed, 0))?;
            let jd = JointDistribution::from_events(&events)?;
            rec.te_b = Some(jd.transfer_entropy(SourceAxis::B)?);
            rec.te_c = Some(jd.transfer_entropy(SourceAxis::C)?);
            match vuong_compare(&events) {
                Ok(v) => {
                    rec.v = Some(v.v);
                    rec.p_vuong_one = Some(v.p_one_sided);
                    rec.p_vuong_two = Some(v.p_two_sided);
                }
                Err(TeError::DegenerateVariance { .. }) => {}
                Err(e) => return Err(e),
            }
            if let Some(q) = bootstrap {
                let cfg = BootstrapConfig::resample(q, derive_seed(job.seed, 9));
                rec.p_bootstrap = Some(resample_compare_pvalue(&events, &cfg)?);
            }
        }
    }
    Ok(rec)
}

fn records_csv(records: &[Record]) -> Result<String, CliError> {
    fn opt<T: ToString>(v: &Option<T>) -> String {
        v.as_ref().map(T::to_string).unwrap_or_default()
    }
    fn optf(v: &Option<f64>) -> String {
        v.map(crate::io::fmt_float).unwrap_or_default()
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let to = |e: csv::Error| data(format!("csv output failed: {e}"));
    w.write_record([
        "campaign",
        "n_a_plus",
        "n_a",
        "n_b",
        "n_c",
        "t",
        "alpha",
        "s_b",
        "s_c",
        "table_index",
        "replicate",
        "seed",
        "te_b_nats",
        "te_c_nats",
        "statistic",
        "df",
        "p_analytic",
        "p_bootstrap",
        "population_te_b",
        "population_te_c",
        "v",
        "p_vuong_one",
        "p_vuong_two",
    ])
    .map_err(to)?;
    for r in records {
        let n_c = r.dims.get(3).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.campaign.to_string(),
            r.dims[0].to_string(),
            r.dims[1].to_string(),
            r.dims[2].to_string(),
            n_c,
            r.t.to_string(),
            optf(&r.alpha),
            optf(&r.s_b),
            optf(&r.s_c),
            opt(&r.table_index),
            r.replicate.to_string(),
            r.seed.to_string(),
            optf(&r.te_b),
            optf(&r.te_c),
            optf(&r.statistic),
            opt(&r.df),
            optf(&r.p_analytic),
            optf(&r.p_bootstrap),
            optf(&r.population_te_b),
            optf(&r.population_te_c),
            optf(&r.v),
            optf(&r.p_vuong_one),
            optf(&r.p_vuong_two),
        ])
        .map_err(to)?;
    }
    let bytes = w.into_inner().map_err(|e| data(format!("csv output failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| data(format!("csv output failed: {e}")))
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    if args.replicates == 0 {
        return Err(usage("--replicates must be at least 1"));
    }
    if args.bootstrap == Some(0) {
        return Err(usage("--bootstrap needs at least 1 resample"));
    }
    let t_grid = parse_u64_list(&args.t, "--t")?;

    let mut jobs: Vec<JobSpec> = Vec::new();
    let mut tables: Vec<TableEntry> = Vec::new();
    let mut record_counter = 0u64;
    let next_seed = |counter: &mut u64| {
        let s = derive_seed(args.seed, 2 * *counter);
        *counter += 1;
        s
    };

    match args.campaign {
        Campaign::TrueNull | Campaign::FalseNull => {
            if args.s.is_some() || args.s_c.is_some() {
                return Err(usage("--s and --s-c only apply to the equal-te campaign"));
            }
            let alt = args.campaign == Campaign::FalseNull;
            let dims_grid = parse_dims_grid(&args.dims, 3)?;
            let alphas = parse_f64_list(args.alpha.as_deref().unwrap_or("1"), "--alpha")?;
            if alphas.iter().any(|&a| a <= 0.0) {
                return Err(usage("--alpha: concentrations must be positive"));
            }
            for dims in &dims_grid {
                spec3(dims).map_err(CliError::from)?;
                for &t in &t_grid {
                    for &alpha in &alphas {
                        for replicate in 0..args.replicates {
                            jobs.push(JobSpec {
                                dims: dims.clone(),
                                t,
                                replicate,
                                seed: next_seed(&mut record_counter),
                                kind: JobKind::Null { alt, alpha },
                            });
                        }
                    }
                }
            }
        }
        Campaign::EqualTe => {
            if args.alpha.is_some() {
                return Err(usage("--alpha only applies to the null campaigns"));
            }
            if args.tables == 0 {
                return Err(usage("--tables must be at least 1"));
            }
            let dims_grid = parse_dims_grid(&args.dims, 4)?;
            let s_grid = parse_f64_list(
                args.s.as_deref().ok_or_else(|| usage("equal-te needs --s targets"))?,
                "--s",
            )?;
            let n_tables = args.tables.min(args.replicates) as usize;

            // Construct all prescribed-transfer tables up front, in parallel;
            // records then only sample from them.
            struct TableJob {
                dims: Vec<u32>,
                s_b: f64,
                s_c: f64,
                seed: u64,
            }
            let mut table_jobs = Vec::new();
            let mut grid_point = 0u64;
            for dims in &dims_grid {
                spec4(dims).map_err(CliError::from)?;
                for &s_b in &s_grid {
                    let s_c = args.s_c.unwrap_or(s_b);
                    for j in 0..n_tables as u64 {
                        table_jobs.push(TableJob {
                            dims: dims.clone(),
                            s_b,
                            s_c,
                            seed: derive_seed(
                                args.seed,
                                2 * (grid_point * n_tables as u64 + j) + 1,
                            ),
                        });
                    }
                    grid_point += 1;
                }
            }
            let built = par_map(table_jobs.len(), |i| -> CoreResult<TableEntry> {
                let tj = &table_jobs[i];
                let target = TePairTarget::new(tj.s_b, tj.s_c, spec4(&tj.dims)?, tj.seed);
                let solution = construct_te_pair(&target)?;
                let pop_b = solution.table.transfer_entropy(SourceAxis::B)?;
                let pop_c = solution.table.transfer_entropy(SourceAxis::C)?;
                Ok(TableEntry { table: solution.table, pop_b, pop_c })
            });
            tables = built.into_iter().collect::<CoreResult<Vec<_>>>().map_err(CliError::from)?;

            let mut gp = 0usize;
            for dims in &dims_grid {
                for &s_b in &s_grid {
                    let s_c = args.s_c.unwrap_or(s_b);
                    for &t in &t_grid {
                        for replicate in 0..args.replicates {
                            let within = (replicate as u64 * n_tables as u64
                                / args.replicates as u64)
                                as usize;
                            jobs.push(JobSpec {
                                dims: dims.clone(),
                                t,
                                replicate,
                                seed: next_seed(&mut record_counter),
                                kind: JobKind::Pair {
                                    table_index: gp * n_tables + within,
                                    s_b,
                                    s_c,
                                },
                            });
                        }
                    }
                    gp += 1;
                }
            }
        }
    }

    let results =
        par_map(jobs.len(), |i| run_one(args.campaign, &jobs[i], &tables, args.bootstrap));
    let records = results.into_iter().collect::<CoreResult<Vec<_>>>().map_err(CliError::from)?;
    let csv_text = records_csv(&records)?;

    match &args.out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_file(dir, "campaign.csv", &csv_text)?;
            write_run_config(dir, "bench", args)?;
            outln!(
                "campaign {}: {} records -> {}",
                args.campaign.name(),
                records.len(),
                dir.join("campaign.csv").display()
            );
        }
        None => emit(&csv_text),
    }
    Ok(())
}
