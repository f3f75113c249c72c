//! Synthetic benchmark generators: Dirichlet-drawn distributions with and
//! without information transfer, constrained equal-TE tables, and
//! event-time constructions with known lag structure.

mod equal_te;

pub use equal_te::{
    construct_equal_te, construct_te_pair, objective, objective_gradient, EqualTeSolution,
    EqualTeTarget, TePairTarget,
};

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::dist::SourceAxis;
use crate::error::{Result, TeError};
use crate::events::{EventMatrix, StateSpec};
use crate::rng::stream_rng;
use crate::series::{SymbolSeries, NANOS_PER_SEC};
use crate::table::ProbTable;

/// Parameters for one Dirichlet-generated benchmark draw.
#[derive(Debug, Clone, Copy)]
pub struct DirichletSpec {
    /// Symmetric concentration parameter.
    pub alpha: f64,
    pub dims: StateSpec,
    /// Number of rows to sample.
    pub t: u64,
    pub seed: u64,
}

/// A generating table with exactly zero transfer plus rows sampled from it.
#[derive(Debug, Clone)]
pub struct GeneratedNull {
    pub table: ProbTable,
    pub events: EventMatrix,
}

impl GeneratedNull {
    /// The generating measure factorizes as P(a⁺,a)·P(b), so its transfer
    /// entropy is zero exactly, not merely to rounding.
    pub fn population_te(&self) -> f64 {
        0.0
    }
}

/// A fully Dirichlet-drawn table (generically positive transfer) plus
/// rows sampled from it.
#[derive(Debug, Clone)]
pub struct GeneratedAlt {
    pub table: ProbTable,
    pub events: EventMatrix,
    /// TE of the generating table, in nats.
    pub population_te: f64,
}

/// One draw from a symmetric Dirichlet(alpha) over k categories, via
/// normalized Gamma(alpha, 1) variates.
pub fn sample_dirichlet<R: Rng>(alpha: f64, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(TeError::Domain(format!("Dirichlet concentration must be > 0, got {alpha}")));
    }
    if k < 2 {
        return Err(TeError::InvalidInput("Dirichlet needs at least 2 categories".into()));
    }
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|e| TeError::Domain(format!("gamma parameters rejected: {e}")))?;
    for _ in 0..100 {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return Ok(draws.into_iter().map(|x| x / sum).collect());
        }
    }
    Err(TeError::Domain(format!("gamma draws underflowed to zero repeatedly at alpha = {alpha}")))
}

/// Draws a product-measure table P(a⁺,a)·P(b) from two Dirichlets and
/// samples `t` rows from it. The generating TE is exactly zero.
pub fn gen_true_null(spec: &DirichletSpec) -> Result<GeneratedNull> {
    if spec.dims.n_c.is_some() {
        return Err(TeError::InvalidInput(
            "the zero-transfer generator uses a single source axis".into(),
        ));
    }
    if spec.t == 0 {
        return Err(TeError::InvalidInput("sample size must be at least 1".into()));
    }
    let dims = spec.dims;
    let mut rng = stream_rng(spec.seed, 0);
    let p_apa = sample_dirichlet(spec.alpha, (dims.n_a_plus * dims.n_a) as usize, &mut rng)?;
    let p_b = sample_dirichlet(spec.alpha, dims.n_b as usize, &mut rng)?;
    let mut probs = Vec::with_capacity(dims.cells() as usize);
    for pa in &p_apa {
        for pb in &p_b {
            probs.push(pa * pb);
        }
    }
    let table = ProbTable::new(dims, probs)?;
    let events = table.sample_rows(spec.t, &mut rng)?;
    Ok(GeneratedNull { table, events })
}

/// Draws a full joint table from one symmetric Dirichlet and samples `t`
/// rows; records the generating table's TE.
pub fn gen_false_null(spec: &DirichletSpec) -> Result<GeneratedAlt> {
    if spec.t == 0 {
        return Err(TeError::InvalidInput("sample size must be at least 1".into()));
    }
    let mut rng = stream_rng(spec.seed, 0);
    let probs = sample_dirichlet(spec.alpha, spec.dims.cells() as usize, &mut rng)?;
    let table = ProbTable::new(spec.dims, probs)?;
    let population_te = table.transfer_entropy(SourceAxis::B)?;
    let events = table.sample_rows(spec.t, &mut rng)?;
    Ok(GeneratedAlt { table, events, population_te })
}

/// Poisson event times over `duration_s` seconds with fair-coin binary
/// symbols.
pub fn gen_poisson_binary<R: Rng>(
    rate_hz: f64,
    duration_s: f64,
    label: &str,
    rng: &mut R,
) -> Result<SymbolSeries> {
    if !(rate_hz > 0.0) || !(duration_s > 0.0) {
        return Err(TeError::InvalidInput("event rate and duration must be positive".into()));
    }
    let exp = Exp::new(rate_hz)
        .map_err(|e| TeError::Domain(format!("exponential parameters rejected: {e}")))?;
    let mut times_ns = Vec::new();
    let mut symbols = Vec::new();
    let mut t = 0.0f64;
    loop {
        t += exp.sample(rng);
        if t > duration_s {
            break;
        }
        times_ns.push((t * NANOS_PER_SEC as f64).round() as i64);
        symbols.push(rng.random_range(0..2u32));
    }
    SymbolSeries::new(times_ns, symbols, 2, label)
}

/// Parameters for the delayed-copy pair generator.
#[derive(Debug, Clone, Copy)]
pub struct DelayedPairSpec {
    /// Target event rate in events per second.
    pub rate_hz: f64,
    pub duration_s: f64,
    /// Information delay: each source event precedes its target event by
    /// exactly this much.
    pub delay_s: f64,
    pub seed: u64,
}

/// Generates a target series of Poisson fair-coin events plus a source
/// series that announces every target symbol `delay_s` seconds early.
///
/// Matched at shifts below the delay the source determines many target
/// symbols; beyond the delay the most recent qualifying source event
/// always announces an older target event, so the transfer is exactly
/// zero in population.
pub fn gen_delayed_pair(spec: &DelayedPairSpec) -> Result<(SymbolSeries, SymbolSeries)> {
    if !(spec.delay_s > 0.0) {
        return Err(TeError::InvalidInput("delay must be positive".into()));
    }
    let mut rng = stream_rng(spec.seed, 0);
    let target = gen_poisson_binary(spec.rate_hz, spec.duration_s, "target", &mut rng)?;
    if target.len() < 2 {
        return Err(TeError::SeriesTooShort("too few events generated".into()));
    }
    let delay_ns = (spec.delay_s * NANOS_PER_SEC as f64).round() as i64;
    let source_times: Vec<i64> = target.times_ns().iter().map(|&t| t - delay_ns).collect();
    let source = SymbolSeries::new(source_times, target.symbols().to_vec(), 2, "source")?;
    Ok((target, source))
}

/// Parameters for the two-source generator with distinct delays.
#[derive(Debug, Clone, Copy)]
pub struct DualSourceSpec {
    pub rate_hz: f64,
    pub duration_s: f64,
    /// Announcement delay of the first source.
    pub delay_b_s: f64,
    /// Announcement delay of the second source.
    pub delay_c_s: f64,
    pub seed: u64,
}

/// Generates one target and two announcing sources with different delays,
/// so each source is informative in a different shift range.
pub fn gen_dual_source(
    spec: &DualSourceSpec,
) -> Result<(SymbolSeries, SymbolSeries, SymbolSeries)> {
    if !(spec.delay_b_s > 0.0) || !(spec.delay_c_s > 0.0) {
        return Err(TeError::InvalidInput("delays must be positive".into()));
    }
    let mut rng = stream_rng(spec.seed, 0);
    let target = gen_poisson_binary(spec.rate_hz, spec.duration_s, "target", &mut rng)?;
    if target.len() < 2 {
        return Err(TeError::SeriesTooShort("too few events generated".into()));
    }
    let mk = |delay_s: f64, label: &str| -> Result<SymbolSeries> {
        let d = (delay_s * NANOS_PER_SEC as f64).round() as i64;
        SymbolSeries::new(
            target.times_ns().iter().map(|&t| t - d).collect(),
            target.symbols().to_vec(),
            2,
            label,
        )
    };
    Ok((target.clone(), mk(spec.delay_b_s, "early")?, mk(spec.delay_c_s, "late")?))
}

/// Parameters for the noisy copy chain used in network recovery tests.
#[derive(Debug, Clone, Copy)]
pub struct CopyChainSpec {
    pub n_series: usize,
    pub events_per_series: usize,
    /// Probability that a symbol is copied from the predecessor series
    /// rather than drawn fresh.
    pub fidelity: f64,
    /// Common event clock period.
    pub period_s: f64,
    /// Per-hop time offset; successors fire later within each period so
    /// that the predecessor state known at a successor event is the
    /// same-period one — exactly the symbol the successor will copy next.
    pub stagger_s: f64,
    pub seed: u64,
}

/// Generates an n-series noisy copy chain on a common clock.
///
/// Series j+1 copies series j's previous-period symbol with probability
/// `fidelity`. Under backward matching, only the adjacent (j, j+1) pairs
/// carry transfer; every other ordered pair pairs symbols with disjoint
/// innovation roots and has population TE exactly zero.
pub fn gen_copy_chain(spec: &CopyChainSpec) -> Result<Vec<SymbolSeries>> {
    if spec.n_series < 2 {
        return Err(TeError::InvalidInput("chain needs at least 2 series".into()));
    }
    if spec.events_per_series < 3 {
        return Err(TeError::InvalidInput("chain needs at least 3 events per series".into()));
    }
    if !(0.0..=1.0).contains(&spec.fidelity) {
        return Err(TeError::InvalidInput("fidelity must lie in [0, 1]".into()));
    }
    if !(spec.period_s > 0.0)
        || !(spec.stagger_s > 0.0)
        || spec.stagger_s * (spec.n_series as f64 - 1.0) >= spec.period_s
    {
        return Err(TeError::InvalidInput(
            "need 0 < stagger and (n_series - 1) * stagger < period".into(),
        ));
    }
    let mut rng = stream_rng(spec.seed, 0);
    let period_ns = (spec.period_s * NANOS_PER_SEC as f64).round() as i64;
    let stagger_ns = (spec.stagger_s * NANOS_PER_SEC as f64).round() as i64;
    let n = spec.n_series;
    let len = spec.events_per_series;

    let mut all_symbols: Vec<Vec<u32>> = Vec::with_capacity(n);
    let first: Vec<u32> = (0..len).map(|_| rng.random_range(0..2u32)).collect();
    all_symbols.push(first);
    for j in 1..n {
        let mut s = Vec::with_capacity(len);
        s.push(rng.random_range(0..2u32));
        for k in 1..len {
            let copied = rng.random::<f64>() < spec.fidelity;
            let fresh = rng.random_range(0..2u32);
            s.push(if copied { all_symbols[j - 1][k - 1] } else { fresh });
        }
        all_symbols.push(s);
    }

    let mut out = Vec::with_capacity(n);
    for (j, symbols) in all_symbols.into_iter().enumerate() {
        let offset = j as i64 * stagger_ns;
        let times: Vec<i64> = (0..len as i64).map(|k| k * period_ns + offset).collect();
        out.push(SymbolSeries::new(times, symbols, 2, format!("s{j:02}"))?);
    }
    Ok(out)
}
