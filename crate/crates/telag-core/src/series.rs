//! Timestamped symbol series and price-change encoding.
//!
//! Timestamps are carried as integer nanoseconds so that tick collisions
//! and repeated file round-trips never hit float-equality problems.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeError};

pub const NANOS_PER_SEC: i64 = 1_000_000_000;

/// One raw price observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub time_ns: i64,
    pub price: f64,
}

impl Tick {
    pub fn new(time_ns: i64, price: f64) -> Self {
        Self { time_ns, price }
    }
}

/// A timestamped sequence of discrete symbols over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSeries {
    times_ns: Vec<i64>,
    symbols: Vec<u32>,
    alphabet_size: u32,
    label: String,
}

impl SymbolSeries {
    /// Builds a series, checking the structural invariants: equal lengths,
    /// non-decreasing timestamps, every symbol inside the alphabet.
    pub fn new(
        times_ns: Vec<i64>,
        symbols: Vec<u32>,
        alphabet_size: u32,
        label: impl Into<String>,
    ) -> Result<Self> {
        if times_ns.len() != symbols.len() {
            return Err(TeError::InvalidInput(format!(
                "timestamp/symbol length mismatch: {} vs {}",
                times_ns.len(),
                symbols.len()
            )));
        }
        if alphabet_size == 0 {
            return Err(TeError::InvalidInput("alphabet_size must be positive".into()));
        }
        if let Some(w) = times_ns.windows(2).position(|w| w[1] < w[0]) {
            return Err(TeError::InvalidInput(format!(
                "timestamps not non-decreasing at index {}",
                w + 1
            )));
        }
        if let Some(i) = symbols.iter().position(|&s| s >= alphabet_size) {
            return Err(TeError::InvalidInput(format!(
                "symbol {} at index {i} outside alphabet of size {alphabet_size}",
                symbols[i]
            )));
        }
        Ok(Self { times_ns, symbols, alphabet_size, label: label.into() })
    }

    /// Convenience constructor from decimal-second timestamps (rounded to ns).
    pub fn from_seconds(
        times_s: &[f64],
        symbols: Vec<u32>,
        alphabet_size: u32,
        label: impl Into<String>,
    ) -> Result<Self> {
        let times_ns = times_s.iter().map(|&t| (t * NANOS_PER_SEC as f64).round() as i64).collect();
        Self::new(times_ns, symbols, alphabet_size, label)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn times_ns(&self) -> &[i64] {
        &self.times_ns
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Sub-series over a contiguous index range (timestamps retained).
    pub fn slice(&self, start: usize, end: usize) -> SymbolSeries {
        SymbolSeries {
            times_ns: self.times_ns[start..end].to_vec(),
            symbols: self.symbols[start..end].to_vec(),
            alphabet_size: self.alphabet_size,
            label: self.label.clone(),
        }
    }

    /// Keeps only events whose time of day (UTC, seconds since midnight)
    /// falls inside `[start_s, end_s]`.
    pub fn filter_session(&self, start_s: f64, end_s: f64) -> SymbolSeries {
        let day = 86_400 * NANOS_PER_SEC;
        let lo = (start_s * NANOS_PER_SEC as f64).round() as i64;
        let hi = (end_s * NANOS_PER_SEC as f64).round() as i64;
        let mut times = Vec::new();
        let mut syms = Vec::new();
        for (&t, &s) in self.times_ns.iter().zip(&self.symbols) {
            let tod = t.rem_euclid(day);
            if tod >= lo && tod <= hi {
                times.push(t);
                syms.push(s);
            }
        }
        SymbolSeries {
            times_ns: times,
            symbols: syms,
            alphabet_size: self.alphabet_size,
            label: self.label.clone(),
        }
    }
}

/// Encodes a tick series into binary price-change symbols: 1 for an uptick,
/// 0 for a downtick. Ticks with zero price change are dropped; each emitted
/// symbol carries the timestamp of the later tick of the change.
pub fn encode_sign_changes(ticks: &[Tick], label: impl Into<String>) -> Result<SymbolSeries> {
    let label = label.into();
    if ticks.len() < 2 {
        return Err(TeError::SeriesTooShort(format!(
            "{label}: need at least 2 ticks, got {}",
            ticks.len()
        )));
    }
    let mut times = Vec::new();
    let mut syms = Vec::new();
    let mut last = ticks[0].price;
    for tick in &ticks[1..] {
        if tick.price > last {
            times.push(tick.time_ns);
            syms.push(1);
            last = tick.price;
        } else if tick.price < last {
            times.push(tick.time_ns);
            syms.push(0);
            last = tick.price;
        }
        // equal prices: no event
    }
    if syms.is_empty() {
        return Err(TeError::SeriesTooShort(format!("{label}: no strict price changes")));
    }
    SymbolSeries::new(times, syms, 2, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tick(t: f64, p: f64) -> Tick {
        Tick::new((t * NANOS_PER_SEC as f64) as i64, p)
    }

    #[test]
    fn encode_up_down() {
        let s =
            encode_sign_changes(&[tick(1.0, 10.0), tick(2.0, 10.5), tick(3.0, 10.2)], "x").unwrap();
        assert_eq!(s.symbols(), &[1, 0]);
        assert_eq!(s.times_ns(), &[2 * NANOS_PER_SEC, 3 * NANOS_PER_SEC]);
        assert_eq!(s.alphabet_size(), 2);
    }

    #[test]
    fn encode_drops_zero_change() {
        let s =
            encode_sign_changes(&[tick(1.0, 10.0), tick(2.0, 10.0), tick(3.0, 10.1)], "x").unwrap();
        assert_eq!(s.symbols(), &[1]);
        assert_eq!(s.times_ns(), &[3 * NANOS_PER_SEC]);
    }

    #[test]
    fn encode_strictly_increasing() {
        let ticks: Vec<Tick> = (0..100).map(|i| tick(i as f64, 100.0 + i as f64)).collect();
        let s = encode_sign_changes(&ticks, "up").unwrap();
        assert_eq!(s.len(), 99);
        assert!(s.symbols().iter().all(|&x| x == 1));
    }

    #[test]
    fn encode_all_flat_is_error() {
        let e = encode_sign_changes(&[tick(1.0, 5.0), tick(2.0, 5.0), tick(3.0, 5.0)], "flat");
        assert!(matches!(e, Err(TeError::SeriesTooShort(_))));
    }

    #[test]
    fn encode_single_tick_is_error() {
        assert!(matches!(
            encode_sign_changes(&[tick(1.0, 5.0)], "one"),
            Err(TeError::SeriesTooShort(_))
        ));
    }

    #[test]
    fn rejects_unsorted_timestamps() {
        let e = SymbolSeries::new(vec![3, 2], vec![0, 1], 2, "bad");
        assert!(matches!(e, Err(TeError::InvalidInput(_))));
    }

    #[test]
    fn rejects_out_of_alphabet_symbol() {
        let e = SymbolSeries::new(vec![1, 2], vec![0, 2], 2, "bad");
        assert!(matches!(e, Err(TeError::InvalidInput(_))));
    }

    #[test]
    fn session_filter_keeps_window() {
        let s = SymbolSeries::from_seconds(&[100.0, 200.0, 300.0], vec![1, 0, 1], 2, "s").unwrap();
        let f = s.filter_session(150.0, 250.0);
        assert_eq!(f.symbols(), &[0]);
    }
}
