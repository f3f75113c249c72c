//! State-space description and the joint event matrix.
//!
//! An event matrix holds, for every usable time index, the next target
//! symbol `a_plus`, the encoded target past `a`, the source symbol `b`,
//! and optionally a second source symbol `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeError};
use crate::series::SymbolSeries;

/// Hard ceiling on joint table size: product of axis cardinalities.
pub const MAX_TABLE_CELLS: u64 = 1 << 20;

/// Cardinalities of each axis of the joint state space plus the target
/// past-window length used for encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpec {
    pub n_a_plus: u32,
    pub n_a: u32,
    pub n_b: u32,
    pub n_c: Option<u32>,
    pub past_window: u32,
}

impl StateSpec {
    pub fn new(n_a_plus: u32, n_a: u32, n_b: u32) -> Result<Self> {
        Self::build(n_a_plus, n_a, n_b, None, 1)
    }

    pub fn with_second_source(n_a_plus: u32, n_a: u32, n_b: u32, n_c: u32) -> Result<Self> {
        Self::build(n_a_plus, n_a, n_b, Some(n_c), 1)
    }

    pub fn build(
        n_a_plus: u32,
        n_a: u32,
        n_b: u32,
        n_c: Option<u32>,
        past_window: u32,
    ) -> Result<Self> {
        if n_a_plus == 0 || n_a == 0 || n_b == 0 || n_c == Some(0) {
            return Err(TeError::InvalidInput("state-space cardinalities must be positive".into()));
        }
        if past_window == 0 {
            return Err(TeError::InvalidInput("past_window must be at least 1".into()));
        }
        let spec = Self { n_a_plus, n_a, n_b, n_c, past_window };
        let cells = spec.cells();
        if cells > MAX_TABLE_CELLS {
            return Err(TeError::TableTooLarge { cells, limit: MAX_TABLE_CELLS });
        }
        Ok(spec)
    }

    /// Builds the spec implied by alphabet sizes and a past window: the
    /// encoded past ranges over `alphabet^past_window` states.
    pub fn from_alphabets(
        target_alphabet: u32,
        source_alphabet: u32,
        second_source_alphabet: Option<u32>,
        past_window: u32,
    ) -> Result<Self> {
        let n_a = (target_alphabet as u64)
            .checked_pow(past_window)
            .ok_or(TeError::TableTooLarge { cells: u64::MAX, limit: MAX_TABLE_CELLS })?;
        if n_a > MAX_TABLE_CELLS {
            return Err(TeError::TableTooLarge { cells: n_a, limit: MAX_TABLE_CELLS });
        }
        Self::build(
            target_alphabet,
            n_a as u32,
            source_alphabet,
            second_source_alphabet,
            past_window,
        )
    }

    /// Total number of joint cells across all axes.
    pub fn cells(&self) -> u64 {
        let mut c = self.n_a_plus as u64 * self.n_a as u64 * self.n_b as u64;
        if let Some(n_c) = self.n_c {
            c *= n_c as u64;
        }
        c
    }

    /// Spec with the two source axes swapped; identity without a second source.
    pub fn swap_sources(&self) -> StateSpec {
        match self.n_c {
            Some(n_c) => StateSpec { n_b: n_c, n_c: Some(self.n_b), ..*self },
            None => *self,
        }
    }

    /// Spec with the second source dropped.
    pub fn drop_second_source(&self) -> StateSpec {
        StateSpec { n_c: None, ..*self }
    }
}

/// Column-oriented store of joint events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventMatrix {
    pub spec: StateSpec,
    pub a_plus: Vec<u32>,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub c: Option<Vec<u32>>,
}

impl EventMatrix {
    pub fn new(
        spec: StateSpec,
        a_plus: Vec<u32>,
        a: Vec<u32>,
        b: Vec<u32>,
        c: Option<Vec<u32>>,
    ) -> Result<Self> {
        let t = a_plus.len();
        if t == 0 {
            return Err(TeError::InvalidInput("event matrix needs at least one row".into()));
        }
        if a.len() != t || b.len() != t || c.as_ref().is_some_and(|c| c.len() != t) {
            return Err(TeError::InvalidInput("event matrix columns differ in length".into()));
        }
        if spec.n_c.is_some() != c.is_some() {
            return Err(TeError::InvalidInput(
                "second-source column presence disagrees with state spec".into(),
            ));
        }
        let check = |col: &[u32], n: u32, name: &str| -> Result<()> {
            if let Some(i) = col.iter().position(|&v| v >= n) {
                return Err(TeError::InvalidInput(format!(
                    "{name} value {} at row {i} outside range {n}",
                    col[i]
                )));
            }
            Ok(())
        };
        check(&a_plus, spec.n_a_plus, "a_plus")?;
        check(&a, spec.n_a, "a")?;
        check(&b, spec.n_b, "b")?;
        if let (Some(c), Some(n_c)) = (&c, spec.n_c) {
            check(c, n_c, "c")?;
        }
        Ok(Self { spec, a_plus, a, b, c })
    }

    /// Number of joint events (rows).
    pub fn len(&self) -> usize {
        self.a_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_plus.is_empty()
    }

    /// Matrix with the `b` and `c` columns exchanged (and the spec swapped).
    pub fn swap_sources(&self) -> Result<EventMatrix> {
        let c = self.c.clone().ok_or_else(|| {
            TeError::InvalidInput("cannot swap sources without a second source column".into())
        })?;
        EventMatrix::new(
            self.spec.swap_sources(),
            self.a_plus.clone(),
            self.a.clone(),
            c,
            Some(self.b.clone()),
        )
    }

    /// Matrix restricted to the first source.
    pub fn drop_second_source(&self) -> EventMatrix {
        EventMatrix {
            spec: self.spec.drop_second_source(),
            a_plus: self.a_plus.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            c: None,
        }
    }
}

/// Encodes a window of past symbols into one state index. The most recent
/// symbol is the least significant digit in base `alphabet`.
pub fn encode_past(symbols: &[u32], end: usize, past_window: u32, alphabet: u32) -> u32 {
    let mut code = 0u32;
    for j in 0..past_window as usize {
        code += symbols[end - 1 - j] * alphabet.pow(j as u32);
    }
    code
}

/// Builds the joint event matrix for index-aligned series: row `t` pairs the
/// target symbol at index `t + past_window` with the encoded target past over
/// the `past_window` preceding indices and the source symbols at
/// `t + past_window - 1`.
pub fn build_event_matrix(
    target: &SymbolSeries,
    source: &SymbolSeries,
    second_source: Option<&SymbolSeries>,
    past_window: u32,
) -> Result<EventMatrix> {
    let len = target.len();
    if source.len() != len || second_source.is_some_and(|s| s.len() != len) {
        return Err(TeError::InvalidInput(format!(
            "aligned series must have equal lengths (target {len}, source {})",
            source.len()
        )));
    }
    if len <= past_window as usize {
        return Err(TeError::InsufficientHistory { len, past_window });
    }
    let spec = StateSpec::from_alphabets(
        target.alphabet_size(),
        source.alphabet_size(),
        second_source.map(|s| s.alphabet_size()),
        past_window,
    )?;
    let w = past_window as usize;
    let t_rows = len - w;
    let mut a_plus = Vec::with_capacity(t_rows);
    let mut a = Vec::with_capacity(t_rows);
    let mut b = Vec::with_capacity(t_rows);
    let mut c = second_source.map(|_| Vec::with_capacity(t_rows));
    let tsym = target.symbols();
    let ssym = source.symbols();
    for i in w..len {
        a_plus.push(tsym[i]);
        a.push(encode_past(tsym, i, past_window, target.alphabet_size()));
        b.push(ssym[i - 1]);
        if let (Some(c), Some(s2)) = (&mut c, second_source) {
            c.push(s2.symbols()[i - 1]);
        }
    }
    EventMatrix::new(spec, a_plus, a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(symbols: Vec<u32>, alphabet: u32) -> SymbolSeries {
        let times: Vec<i64> = (0..symbols.len() as i64).collect();
        SymbolSeries::new(times, symbols, alphabet, "t").unwrap()
    }

    #[test]
    fn spec_cells_product() {
        let s = StateSpec::with_second_source(2, 3, 4, 5).unwrap();
        assert_eq!(s.cells(), 120);
    }

    #[test]
    fn spec_rejects_oversized_table() {
        let e = StateSpec::build(1024, 1024, 1024, None, 1);
        assert!(matches!(e, Err(TeError::TableTooLarge { .. })));
    }

    #[test]
    fn spec_rejects_zero_axis() {
        assert!(StateSpec::new(0, 2, 2).is_err());
        assert!(StateSpec::with_second_source(2, 2, 2, 0).is_err());
    }

    #[test]
    #[allow(clippy::erasing_op, clippy::identity_op)] // digits spelled out positionally
    fn past_encoding_radix() {
        // window [.., 1, 0, 2] over alphabet 3 ending at index 3:
        // most recent (2) is least significant digit.
        let syms = [1u32, 0, 2];
        assert_eq!(encode_past(&syms, 3, 3, 3), 2 + 0 * 3 + 1 * 9);
        assert_eq!(encode_past(&syms, 3, 1, 3), 2);
    }

    #[test]
    fn matrix_rows_window_one() {
        let t = series(vec![0, 1, 1, 0], 2);
        let s = series(vec![1, 0, 1, 0], 2);
        let em = build_event_matrix(&t, &s, None, 1).unwrap();
        assert_eq!(em.len(), 3);
        // rows (a_plus, a, b): (1,0,1), (1,1,0), (0,1,1)
        assert_eq!(em.a_plus, vec![1, 1, 0]);
        assert_eq!(em.a, vec![0, 1, 1]);
        assert_eq!(em.b, vec![1, 0, 1]);
        assert!(em.c.is_none());
    }

    #[test]
    fn matrix_rows_window_two() {
        let t = series(vec![0, 1, 1, 0, 1], 2);
        let s = series(vec![1, 0, 1, 1, 0], 2);
        let em = build_event_matrix(&t, &s, None, 2).unwrap();
        assert_eq!(em.len(), 3);
        assert_eq!(em.spec.n_a, 4);
        // pasts: (0,1)->1+0*... wait most recent least significant:
        // i=2: [t0,t1]=[0,1], code = 1 + 0*2 = 1
        // i=3: [t1,t2]=[1,1], code = 1 + 1*2 = 3
        // i=4: [t2,t3]=[1,0], code = 0 + 1*2 = 2
        assert_eq!(em.a, vec![1, 3, 2]);
        assert_eq!(em.a_plus, vec![1, 0, 1]);
        assert_eq!(em.b, vec![0, 1, 1]);
    }

    #[test]
    fn matrix_too_short_errors() {
        let t = series(vec![0, 1], 2);
        let s = series(vec![1, 0], 2);
        let e = build_event_matrix(&t, &s, None, 2);
        assert!(matches!(e, Err(TeError::InsufficientHistory { .. })));
    }

    #[test]
    fn matrix_single_row_at_boundary() {
        let t = series(vec![0, 1], 2);
        let s = series(vec![1, 0], 2);
        let em = build_event_matrix(&t, &s, None, 1).unwrap();
        assert_eq!(em.len(), 1);
        assert_eq!((em.a_plus[0], em.a[0], em.b[0]), (1, 0, 1));
    }

    #[test]
    fn matrix_second_source() {
        let t = series(vec![0, 1, 0], 2);
        let s = series(vec![1, 0, 1], 2);
        let c = series(vec![2, 1, 0], 3);
        let em = build_event_matrix(&t, &s, Some(&c), 1).unwrap();
        assert_eq!(em.spec.n_c, Some(3));
        assert_eq!(em.c.as_ref().unwrap(), &vec![2, 1]);
    }

    #[test]
    fn swap_sources_round_trip() {
        let t = series(vec![0, 1, 0, 1], 2);
        let s = series(vec![1, 0, 1, 0], 2);
        let c = series(vec![2, 1, 0, 2], 3);
        let em = build_event_matrix(&t, &s, Some(&c), 1).unwrap();
        let sw = em.swap_sources().unwrap();
        assert_eq!(sw.spec.n_b, 3);
        assert_eq!(sw.spec.n_c, Some(2));
        assert_eq!(sw.swap_sources().unwrap(), em);
    }

    #[test]
    fn column_length_mismatch_rejected() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let e = EventMatrix::new(spec, vec![0, 1], vec![0], vec![1, 0], None);
        assert!(e.is_err());
    }

    #[test]
    fn out_of_range_value_rejected() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let e = EventMatrix::new(spec, vec![0, 2], vec![0, 1], vec![1, 0], None);
        assert!(e.is_err());
    }
}
