//! Asynchronous-series machinery: backward matching of a source series onto
//! a target series, forward time shifts, and TE-versus-lag profiles.
//!
//! Matching attaches to every target event the last source state known
//! before it (optionally at least `delta_t` seconds before it). The retained
//! events form a contiguous suffix of the target, and zipping their symbols
//! with the matched source states reduces the asynchronous problem to the
//! index-aligned one.

use serde::Serialize;

use crate::error::{Result, TeError};
use crate::events::{encode_past, EventMatrix, StateSpec};
use crate::inference::{te_significance_test, vuong_compare, TeTestResult, VuongTestResult};
use crate::par::par_map;
use crate::series::{SymbolSeries, NANOS_PER_SEC};

/// A target series together with the last known source state at each
/// retained target event.
///
/// One source event may serve several target events, and source events after
/// the last target event are never consulted. Target events with no
/// qualifying source event are dropped; because source knowledge only
/// accumulates over time, the retained indices are a contiguous suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    target: SymbolSeries,
    matched_source_states: Vec<u32>,
    matched_source_times_ns: Vec<i64>,
    retained_indices: Vec<usize>,
    source_alphabet_size: u32,
    source_label: String,
    delta_t: f64,
}

impl AlignedPair {
    pub fn target(&self) -> &SymbolSeries {
        &self.target
    }

    /// One matched source state per retained target event.
    pub fn matched_source_states(&self) -> &[u32] {
        &self.matched_source_states
    }

    pub fn matched_source_times_ns(&self) -> &[i64] {
        &self.matched_source_times_ns
    }

    /// Indices into the target series of the events that found a match.
    pub fn retained_indices(&self) -> &[usize] {
        &self.retained_indices
    }

    pub fn retained_len(&self) -> usize {
        self.retained_indices.len()
    }

    /// Index of the first retained target event.
    pub fn first_retained(&self) -> usize {
        self.retained_indices[0]
    }

    pub fn source_alphabet_size(&self) -> u32 {
        self.source_alphabet_size
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    /// Applied shift in seconds.
    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    fn retained_target_symbols(&self) -> &[u32] {
        &self.target.symbols()[self.first_retained()..]
    }
}

fn qualifies(t_source: i64, t_target: i64, dt_ns: i64) -> bool {
    if dt_ns == 0 {
        t_source < t_target
    } else {
        t_source as i128 + dt_ns as i128 <= t_target as i128
    }
}

/// Matches each target event with the most recent source event at least
/// `delta_t` seconds older (strictly older when `delta_t` is zero, so that
/// simultaneous timestamps never leak a contemporaneous source state).
pub fn backward_match(
    target: &SymbolSeries,
    source: &SymbolSeries,
    delta_t: f64,
) -> Result<AlignedPair> {
    if target.is_empty() || source.is_empty() {
        return Err(TeError::InvalidInput("backward matching needs non-empty series".into()));
    }
    if !delta_t.is_finite() || delta_t < 0.0 {
        return Err(TeError::InvalidInput(format!(
            "shift must be a finite non-negative number of seconds, got {delta_t}"
        )));
    }
    let dt_ns = (delta_t * NANOS_PER_SEC as f64).round() as i64;
    let s_times = source.times_ns();
    let s_syms = source.symbols();
    let mut matched_states = Vec::new();
    let mut matched_times = Vec::new();
    let mut retained = Vec::new();
    let mut j = 0usize;
    for (k, &ta) in target.times_ns().iter().enumerate() {
        while j < s_times.len() && qualifies(s_times[j], ta, dt_ns) {
            j += 1;
        }
        if j > 0 {
            matched_states.push(s_syms[j - 1]);
            matched_times.push(s_times[j - 1]);
            retained.push(k);
        }
    }
    if retained.is_empty() {
        return Err(TeError::NoOverlap);
    }
    Ok(AlignedPair {
        target: target.clone(),
        matched_source_states: matched_states,
        matched_source_times_ns: matched_times,
        retained_indices: retained,
        source_alphabet_size: source.alphabet_size(),
        source_label: source.label().to_string(),
        delta_t,
    })
}

/// Event matrix over the retained suffix of an aligned pair: the row
/// predicting the target symbol at retained position `i` conditions on the
/// target past window ending at position `i - 1` and on the source state
/// matched to that position — the same convention as the index-aligned
/// builder.
pub fn event_matrix_from_alignment(pair: &AlignedPair, past_window: u32) -> Result<EventMatrix> {
    let rts = pair.retained_target_symbols();
    let len = rts.len();
    if len <= past_window as usize {
        return Err(TeError::InsufficientHistory { len, past_window });
    }
    let alpha = pair.target.alphabet_size();
    let spec = StateSpec::from_alphabets(alpha, pair.source_alphabet_size, None, past_window)?;
    let w = past_window as usize;
    let rows = len - w;
    let mut a_plus = Vec::with_capacity(rows);
    let mut a = Vec::with_capacity(rows);
    let mut b = Vec::with_capacity(rows);
    for i in w..len {
        a_plus.push(rts[i]);
        a.push(encode_past(rts, i, past_window, alpha));
        b.push(pair.matched_source_states[i - 1]);
    }
    EventMatrix::new(spec, a_plus, a, b, None)
}

/// Event matrix conditioning on two sources matched against the same target:
/// rows cover the intersection of both retained suffixes.
pub fn event_matrix_from_joint_alignment(
    pair_b: &AlignedPair,
    pair_c: &AlignedPair,
    past_window: u32,
) -> Result<EventMatrix> {
    if pair_b.target.times_ns() != pair_c.target.times_ns()
        || pair_b.target.symbols() != pair_c.target.symbols()
    {
        return Err(TeError::InvalidInput(
            "joint alignment needs both matchings to share one target series".into(),
        ));
    }
    let start = pair_b.first_retained().max(pair_c.first_retained());
    let tsym = pair_b.target.symbols();
    let len = tsym.len() - start;
    if len <= past_window as usize {
        return Err(TeError::InsufficientHistory { len, past_window });
    }
    let alpha = pair_b.target.alphabet_size();
    let spec = StateSpec::from_alphabets(
        alpha,
        pair_b.source_alphabet_size,
        Some(pair_c.source_alphabet_size),
        past_window,
    )?;
    let w = past_window as usize;
    let off_b = start - pair_b.first_retained();
    let off_c = start - pair_c.first_retained();
    let rows = len - w;
    let mut a_plus = Vec::with_capacity(rows);
    let mut a = Vec::with_capacity(rows);
    let mut b = Vec::with_capacity(rows);
    let mut c = Vec::with_capacity(rows);
    for i in w..len {
        a_plus.push(tsym[start + i]);
        a.push(encode_past(tsym, start + i, past_window, alpha));
        b.push(pair_b.matched_source_states[off_b + i - 1]);
        c.push(pair_c.matched_source_states[off_c + i - 1]);
    }
    EventMatrix::new(spec, a_plus, a, b, Some(c))
}

/// One shift of a TE lag scan.
#[derive(Debug, Clone, Serialize)]
pub struct LagPoint {
    /// Shift in seconds.
    pub shift: f64,
    /// Target events retained by the matching at this shift.
    pub retained: usize,
    /// False when fewer than `past_window + 2` events survive, leaving too
    /// few rows to test; such shifts are reported, not silently skipped.
    pub valid: bool,
    pub test: Option<TeTestResult>,
}

/// TE and significance per shift, with the detected information horizon.
#[derive(Debug, Clone, Serialize)]
pub struct LagProfile {
    pub points: Vec<LagPoint>,
    pub threshold: f64,
    /// Smallest tested shift from which every tested shift onward is
    /// insignificant at `threshold` (invalid points count as insignificant);
    /// `None` when the largest shift is still significant.
    pub cutoff_shift: Option<f64>,
}

fn validate_scan_inputs(shifts: &[f64], threshold: f64) -> Result<()> {
    if shifts.is_empty() {
        return Err(TeError::InvalidInput("shift grid must be non-empty".into()));
    }
    for &s in shifts {
        if !s.is_finite() || s < 0.0 {
            return Err(TeError::InvalidInput(format!("shift {s} must be finite and >= 0")));
        }
    }
    if shifts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TeError::InvalidInput("shift grid must be strictly ascending".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(TeError::InvalidInput(format!(
            "significance threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(())
}

fn insignificant(point: &LagPoint, threshold: f64) -> bool {
    match &point.test {
        Some(t) if point.valid => t.p_value >= threshold,
        _ => true,
    }
}

fn detect_cutoff(points: &[LagPoint], threshold: f64) -> Option<f64> {
    let mut first_of_suffix = None;
    for (i, p) in points.iter().enumerate().rev() {
        if insignificant(p, threshold) {
            first_of_suffix = Some(i);
        } else {
            break;
        }
    }
    first_of_suffix.map(|i| points[i].shift)
}

/// TE significance as a function of the backward-matching shift.
///
/// Each shift re-matches, rebuilds the event matrix, and tests; shifts run
/// in parallel without affecting the output.
pub fn lag_scan(
    target: &SymbolSeries,
    source: &SymbolSeries,
    shifts: &[f64],
    past_window: u32,
    threshold: f64,
) -> Result<LagProfile> {
    validate_scan_inputs(shifts, threshold)?;
    let results = par_map(shifts.len(), |i| -> Result<LagPoint> {
        let shift = shifts[i];
        let pair = backward_match(target, source, shift)?;
        let retained = pair.retained_len();
        if retained < past_window as usize + 2 {
            return Ok(LagPoint { shift, retained, valid: false, test: None });
        }
        let em = event_matrix_from_alignment(&pair, past_window)?;
        let test = te_significance_test(&em)?;
        Ok(LagPoint { shift, retained, valid: true, test: Some(test) })
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let cutoff_shift = detect_cutoff(&points, threshold);
    Ok(LagProfile { points, threshold, cutoff_shift })
}

/// One shift of a two-source comparison scan.
#[derive(Debug, Clone, Serialize)]
pub struct CompareLagPoint {
    pub shift: f64,
    /// Target events in the intersection of both retained suffixes.
    pub retained: usize,
    pub valid: bool,
    pub test: Option<VuongTestResult>,
}

/// A maximal run of consecutive shifts whose two-sided comparison is
/// significant with a consistent direction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareBand {
    /// First point index of the band (inclusive).
    pub start: usize,
    /// Last point index of the band (inclusive).
    pub end: usize,
    /// True when the first source transfers more within this band.
    pub favors_b: bool,
}

/// Vuong comparison per shift with the significant bands marked.
#[derive(Debug, Clone, Serialize)]
pub struct CompareLagProfile {
    pub points: Vec<CompareLagPoint>,
    pub threshold: f64,
    pub bands: Vec<CompareBand>,
}

fn detect_bands(points: &[CompareLagPoint], threshold: f64) -> Vec<CompareBand> {
    let mut out: Vec<CompareBand> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let test = match &p.test {
            Some(t) if p.valid && t.p_two_sided < threshold => t,
            _ => continue,
        };
        let favors_b = test.v > 0.0;
        match out.last_mut() {
            Some(band) if band.end + 1 == i && band.favors_b == favors_b => band.end = i,
            _ => out.push(CompareBand { start: i, end: i, favors_b }),
        }
    }
    out
}

/// Compares the information transfer of two sources onto one target across
/// a shift grid; both sources are matched against the same retained target
/// events at every shift.
pub fn lag_compare_scan(
    target: &SymbolSeries,
    source_b: &SymbolSeries,
    source_c: &SymbolSeries,
    shifts: &[f64],
    past_window: u32,
    threshold: f64,
) -> Result<CompareLagProfile> {
    validate_scan_inputs(shifts, threshold)?;
    let results = par_map(shifts.len(), |i| -> Result<CompareLagPoint> {
        let shift = shifts[i];
        let pair_b = backward_match(target, source_b, shift)?;
        let pair_c = backward_match(target, source_c, shift)?;
        let start = pair_b.first_retained().max(pair_c.first_retained());
        let retained = target.len() - start;
        if retained < past_window as usize + 2 {
            return Ok(CompareLagPoint { shift, retained, valid: false, test: None });
        }
        let em = event_matrix_from_joint_alignment(&pair_b, &pair_c, past_window)?;
        let test = vuong_compare(&em)?;
        Ok(CompareLagPoint { shift, retained, valid: true, test: Some(test) })
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let bands = detect_bands(&points, threshold);
    Ok(CompareLagProfile { points, threshold, bands })
}
