//! Empirical joint distributions, conditional entropies, and plug-in
//! Transfer Entropy.
//!
//! All quantities are in nats. Counts are kept as integers and combined as
//! count ratios inside a single logarithm per term, so independence and
//! constant-source cases come out exactly zero instead of accumulating
//! rounding noise.

use crate::error::{Result, TeError};
use crate::events::{EventMatrix, StateSpec};

/// One axis of the joint state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    APlus,
    A,
    B,
    C,
}

/// Selects which source column a Transfer Entropy refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceAxis {
    B,
    C,
}

impl SourceAxis {
    fn axis(self) -> Axis {
        match self {
            SourceAxis::B => Axis::B,
            SourceAxis::C => Axis::C,
        }
    }
}

/// Dense empirical count table over (a⁺, a, b[, c]).
///
/// The flattened index runs with a⁺ slowest and the last axis fastest. A
/// missing second source is stored as a size-1 axis so every code path is
/// uniform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    spec: StateSpec,
    counts: Vec<u64>,
    t: u64,
}

impl JointDistribution {
    /// Tabulates the rows of an event matrix.
    pub fn from_events(em: &EventMatrix) -> Result<Self> {
        if em.is_empty() {
            return Err(TeError::InvalidInput("empty event matrix".into()));
        }
        let spec = em.spec;
        let [_, _, n_b, n_c] = dims_of(&spec);
        let mut counts = vec![0u64; spec.cells() as usize];
        for i in 0..em.len() {
            let c = em.c.as_ref().map_or(0, |c| c[i]);
            let idx = ((em.a_plus[i] as usize * spec.n_a as usize + em.a[i] as usize)
                * n_b as usize
                + em.b[i] as usize)
                * n_c as usize
                + c as usize;
            counts[idx] += 1;
        }
        Ok(Self { spec, counts, t: em.len() as u64 })
    }

    pub fn spec(&self) -> &StateSpec {
        &self.spec
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sample size T.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// counts / T.
    pub fn probabilities(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.t as f64).collect()
    }

    /// Integer counts marginalized onto the given axes (canonical axis
    /// order a⁺, a, b, c; the returned table is indexed the same way with
    /// the dropped axes removed).
    pub fn marginal_counts(&self, keep: &[Axis]) -> Result<Vec<u64>> {
        let keep = self.validate_axes(keep, true)?;
        let dims = dims_of(&self.spec);
        let size: usize = keep.iter().map(|&ax| dims[ax] as usize).product();
        let mut out = vec![0u64; size];
        for (idx, &n) in self.counts.iter().enumerate() {
            if n > 0 {
                out[project(idx, &dims, &keep)] += n;
            }
        }
        Ok(out)
    }

    /// H(A⁺ | condition_on) in nats; conditioning axes drawn from
    /// {A, B, C}, the empty list giving the unconditional entropy H(A⁺).
    pub fn conditional_entropy(&self, condition_on: &[Axis]) -> Result<f64> {
        let cond = self.validate_axes(condition_on, false)?;
        let dims = dims_of(&self.spec);
        let cond_size: usize = cond.iter().map(|&ax| dims[ax] as usize).product();
        let mut joint = vec![0u64; dims[0] as usize * cond_size];
        let mut margin = vec![0u64; cond_size];
        for (idx, &n) in self.counts.iter().enumerate() {
            if n > 0 {
                let ap = idx / (dims[1] as usize * dims[2] as usize * dims[3] as usize);
                let key = project(idx, &dims, &cond);
                joint[ap * cond_size + key] += n;
                margin[key] += n;
            }
        }
        let t = self.t as f64;
        let mut h = 0.0;
        for (j, &n) in joint.iter().enumerate() {
            if n > 0 {
                let m = margin[j % cond_size];
                h += (n as f64 / t) * ((m as f64 / n as f64).ln());
            }
        }
        Ok(h)
    }

    /// Plug-in TE from the chosen source axis to the target, in nats:
    /// H(A⁺|A) − H(A⁺|A, source), evaluated as a single sum of count
    /// ratios. Tiny negative rounding is clipped to zero.
    pub fn transfer_entropy(&self, source: SourceAxis) -> Result<f64> {
        let src = source.axis();
        self.validate_axes(&[src], false)?;
        let dims = dims_of(&self.spec);
        let (n_ap, n_a, n_s) = (dims[0] as usize, dims[1] as usize, dims[src as usize] as usize);
        let m3 = self.marginal_counts(&[Axis::APlus, Axis::A, src])?;
        let m_as = self.marginal_counts(&[Axis::A, src])?;
        let m_apa = self.marginal_counts(&[Axis::APlus, Axis::A])?;
        let m_a = self.marginal_counts(&[Axis::A])?;
        let t = self.t as f64;
        let mut te = 0.0;
        for ap in 0..n_ap {
            for a in 0..n_a {
                for s in 0..n_s {
                    let c3 = m3[(ap * n_a + a) * n_s + s];
                    if c3 > 0 {
                        let num = c3 as f64 * m_a[a] as f64;
                        let den = m_as[a * n_s + s] as f64 * m_apa[ap * n_a + a] as f64;
                        te += (c3 as f64 / t) * (num / den).ln();
                    }
                }
            }
        }
        debug_assert!(te > -1e-9, "plug-in TE should never be materially negative: {te}");
        Ok(te.max(0.0))
    }

    fn validate_axes(&self, axes: &[Axis], allow_a_plus: bool) -> Result<Vec<usize>> {
        let mut seen = [false; 4];
        let mut out = Vec::with_capacity(axes.len());
        for &ax in axes {
            let i = ax as usize;
            if ax == Axis::APlus && !allow_a_plus {
                return Err(TeError::InvalidInput(
                    "the target-future axis cannot be conditioned on".into(),
                ));
            }
            if ax == Axis::C && self.spec.n_c.is_none() {
                return Err(TeError::InvalidInput(
                    "second source axis requested but not present".into(),
                ));
            }
            if seen[i] {
                return Err(TeError::InvalidInput("duplicate axis".into()));
            }
            seen[i] = true;
            out.push(i);
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Per-row log-likelihood differences between the two source models:
/// element t = log P(a⁺_t|a_t,b_t) − log P(a⁺_t|a_t,c_t).
///
/// Their sum is T·(H(A⁺|A,C) − H(A⁺|A,B)) and their population variance
/// is the ω² of the closeness test.
pub fn pointwise_loglik_diff(em: &EventMatrix, jd: &JointDistribution) -> Result<Vec<f64>> {
    if em.spec != *jd.spec() || em.len() as u64 != jd.t() {
        return Err(TeError::InvalidInput(
            "event matrix and joint distribution describe different data".into(),
        ));
    }
    let c_col = em.c.as_ref().ok_or_else(|| {
        TeError::InvalidInput("pointwise likelihood difference needs two source columns".into())
    })?;
    let spec = em.spec;
    let dims = dims_of(&spec);
    let (n_a, n_b, n_c) = (dims[1] as usize, dims[2] as usize, dims[3] as usize);
    let m3b = jd.marginal_counts(&[Axis::APlus, Axis::A, Axis::B])?;
    let m_ab = jd.marginal_counts(&[Axis::A, Axis::B])?;
    let m3c = jd.marginal_counts(&[Axis::APlus, Axis::A, Axis::C])?;
    let m_ac = jd.marginal_counts(&[Axis::A, Axis::C])?;
    let mut out = Vec::with_capacity(em.len());
    for i in 0..em.len() {
        let (ap, a, b, c) =
            (em.a_plus[i] as usize, em.a[i] as usize, em.b[i] as usize, c_col[i] as usize);
        let num = m3b[(ap * n_a + a) * n_b + b] as f64 * m_ac[a * n_c + c] as f64;
        let den = m_ab[a * n_b + b] as f64 * m3c[(ap * n_a + a) * n_c + c] as f64;
        out.push((num / den).ln());
    }
    Ok(out)
}

/// Axis cardinalities in canonical order, with a missing second source
/// represented as a size-1 axis.
pub(crate) fn dims_of(spec: &StateSpec) -> [u32; 4] {
    [spec.n_a_plus, spec.n_a, spec.n_b, spec.n_c.unwrap_or(1)]
}

/// Projects a flat 4-axis index onto the kept axes (ascending canonical
/// order), returning the flat index in the marginal table.
pub(crate) fn project(idx: usize, dims: &[u32; 4], keep: &[usize]) -> usize {
    let mut coords = [0usize; 4];
    let mut rest = idx;
    for ax in (0..4).rev() {
        coords[ax] = rest % dims[ax] as usize;
        rest /= dims[ax] as usize;
    }
    let mut out = 0usize;
    for &ax in keep {
        out = out * dims[ax] as usize + coords[ax];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::StateSpec;

    fn em_from_rows(rows: &[(u32, u32, u32)], spec: StateSpec) -> EventMatrix {
        EventMatrix::new(
            spec,
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            None,
        )
        .unwrap()
    }

    fn em4_from_rows(rows: &[(u32, u32, u32, u32)], spec: StateSpec) -> EventMatrix {
        EventMatrix::new(
            spec,
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            Some(rows.iter().map(|r| r.3).collect()),
        )
        .unwrap()
    }

    /// Brute-force conditional entropy straight from the definition,
    /// independent of the count-ratio implementation.
    fn brute_cond_entropy(probs: &[f64], dims: [usize; 4], cond_mask: [bool; 4]) -> f64 {
        use std::collections::BTreeMap;
        let mut joint: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut margin: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (idx, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                let mut coords = [0usize; 4];
                let mut rest = idx;
                for ax in (0..4).rev() {
                    coords[ax] = rest % dims[ax];
                    rest /= dims[ax];
                }
                let cond: Vec<usize> =
                    (0..4).filter(|&ax| cond_mask[ax]).map(|ax| coords[ax]).collect();
                let mut jkey = vec![coords[0]];
                jkey.extend(&cond);
                *joint.entry(jkey).or_insert(0.0) += p;
                *margin.entry(cond).or_insert(0.0) += p;
            }
        }
        let mut h = 0.0;
        for (key, p) in &joint {
            let m = margin[&key[1..].to_vec()];
            h -= p * (p / m).ln();
        }
        h
    }

    #[test]
    fn tabulation_degenerate() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let em = em_from_rows(&[(0, 0, 0), (0, 0, 0)], spec);
        let jd = JointDistribution::from_events(&em).unwrap();
        let p = jd.probabilities();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn tabulation_half_half() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let em = em_from_rows(&[(0, 0, 0), (1, 0, 0)], spec);
        let jd = JointDistribution::from_events(&em).unwrap();
        let p = jd.probabilities();
        assert_eq!(p[0], 0.5);
        assert_eq!(p[4], 0.5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tabulation_uniform_eight() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let rows: Vec<(u32, u32, u32)> = (0..8).map(|i| (i / 4, (i / 2) % 2, i % 2)).collect();
        let jd = JointDistribution::from_events(&em_from_rows(&rows, spec)).unwrap();
        assert!(jd.probabilities().iter().all(|&p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn empty_matrix_rejected() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let em = EventMatrix { spec, a_plus: vec![], a: vec![], b: vec![], c: None };
        assert!(JointDistribution::from_events(&em).is_err());
    }

    #[test]
    fn deterministic_coupling_zero_entropy() {
        // a_plus == b on every row, b uniform.
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let rows = [(0, 0, 0), (1, 0, 1), (0, 1, 0), (1, 1, 1)];
        let jd = JointDistribution::from_events(&em_from_rows(&rows, spec)).unwrap();
        assert_eq!(jd.conditional_entropy(&[Axis::A, Axis::B]).unwrap(), 0.0);
    }

    #[test]
    fn independent_uniform_entropy_ln2() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let rows: Vec<(u32, u32, u32)> = (0..8).map(|i| (i / 4, (i / 2) % 2, i % 2)).collect();
        let jd = JointDistribution::from_events(&em_from_rows(&rows, spec)).unwrap();
        let h = jd.conditional_entropy(&[Axis::A]).unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn uniform_three_state_entropy_ln3_vs_brute_force() {
        let spec = StateSpec::new(3, 3, 3).unwrap();
        let mut rows = Vec::new();
        for ap in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    rows.push((ap, a, b));
                }
            }
        }
        let jd = JointDistribution::from_events(&em_from_rows(&rows, spec)).unwrap();
        let h = jd.conditional_entropy(&[Axis::A, Axis::B]).unwrap();
        assert!((h - 3f64.ln()).abs() < 1e-12);
        let brute =
            brute_cond_entropy(&jd.probabilities(), [3, 3, 3, 1], [false, true, true, false]);
        assert!((h - brute).abs() < 1e-12);
    }

    #[test]
    fn te_product_measure_exactly_zero() {
        // counts(ap,a,b) = f(ap,a) * g(b): exact product measure in rationals.
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let f = [3u32, 1, 2, 4];
        let g = [2u32, 5];
        let mut rows = Vec::new();
        for ap in 0..2u32 {
            for a in 0..2u32 {
                for b in 0..2u32 {
                    for _ in 0..f[(ap * 2 + a) as usize] * g[b as usize] {
                        rows.push((ap, a, b));
                    }
                }
            }
        }
        let jd = JointDistribution::from_events(&em_from_rows(&rows, spec)).unwrap();
        assert_eq!(jd.transfer_entropy(SourceAxis::B).unwrap(), 0.0);
    }

    #[test]
    fn te_constant_source_exactly_zero() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let rows = [(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1), (0, 0, 1), (1, 1, 1)];
        let jd = JointDistribution::from_events(&em_from_rows(&rows, spec)).unwrap();
        assert_eq!(jd.transfer_entropy(SourceAxis::B).unwrap(), 0.0);
    }

    #[test]
    fn te_deterministic_coupling_ln2() {
        // a_plus = b, a independent and uniform: brute force over the
        // 8-cell table gives exactly ln 2.
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let rows = [(0, 0, 0), (1, 0, 1), (0, 1, 0), (1, 1, 1)];
        let jd = JointDistribution::from_events(&em_from_rows(&rows, spec)).unwrap();
        let te = jd.transfer_entropy(SourceAxis::B).unwrap();
        assert!((te - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn te_entropy_difference_route_agrees() {
        let spec = StateSpec::new(3, 2, 3).unwrap();
        let rows = [
            (0, 0, 0),
            (1, 0, 1),
            (2, 1, 2),
            (0, 1, 1),
            (1, 1, 0),
            (2, 0, 2),
            (0, 0, 2),
            (1, 1, 1),
            (2, 0, 0),
            (0, 1, 2),
        ];
        let jd = JointDistribution::from_events(&em_from_rows(&rows, spec)).unwrap();
        let te = jd.transfer_entropy(SourceAxis::B).unwrap();
        let via_entropies = jd.conditional_entropy(&[Axis::A]).unwrap()
            - jd.conditional_entropy(&[Axis::A, Axis::B]).unwrap();
        assert!((te - via_entropies).abs() < 1e-12);
    }

    #[test]
    fn te_on_second_source_marginalizes_first() {
        let spec = StateSpec::with_second_source(2, 2, 2, 2).unwrap();
        // a_plus = c, b is noise.
        let rows = [
            (0, 0, 0, 0),
            (1, 0, 1, 1),
            (0, 1, 1, 0),
            (1, 1, 0, 1),
            (0, 0, 1, 0),
            (1, 1, 1, 1),
            (0, 1, 0, 0),
            (1, 0, 0, 1),
        ];
        let jd = JointDistribution::from_events(&em4_from_rows(&rows, spec)).unwrap();
        let te_c = jd.transfer_entropy(SourceAxis::C).unwrap();
        assert!((te_c - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn te_requires_present_axis() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let jd =
            JointDistribution::from_events(&em_from_rows(&[(0, 0, 0), (1, 1, 1)], spec)).unwrap();
        assert!(jd.transfer_entropy(SourceAxis::C).is_err());
        assert!(jd.conditional_entropy(&[Axis::APlus]).is_err());
        assert!(jd.conditional_entropy(&[Axis::A, Axis::A]).is_err());
    }

    #[test]
    fn pointwise_identical_columns_zero() {
        let spec = StateSpec::with_second_source(2, 2, 2, 2).unwrap();
        let rows = [(0, 0, 1, 1), (1, 0, 0, 0), (1, 1, 1, 1), (0, 1, 0, 0)];
        let em = em4_from_rows(&rows, spec);
        let jd = JointDistribution::from_events(&em).unwrap();
        let d = pointwise_loglik_diff(&em, &jd).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pointwise_sum_matches_entropy_difference() {
        let spec = StateSpec::with_second_source(2, 2, 2, 2).unwrap();
        let rows = [
            (0, 0, 0, 1),
            (1, 0, 1, 1),
            (1, 1, 1, 0),
            (0, 1, 0, 0),
            (1, 0, 0, 0),
            (0, 1, 1, 1),
            (1, 1, 0, 1),
            (0, 0, 1, 0),
            (1, 0, 1, 0),
            (0, 0, 0, 0),
        ];
        let em = em4_from_rows(&rows, spec);
        let jd = JointDistribution::from_events(&em).unwrap();
        let d = pointwise_loglik_diff(&em, &jd).unwrap();
        let sum: f64 = d.iter().sum();
        let t = em.len() as f64;
        let expected = t
            * (jd.conditional_entropy(&[Axis::A, Axis::C]).unwrap()
                - jd.conditional_entropy(&[Axis::A, Axis::B]).unwrap());
        assert!((sum - expected).abs() < 1e-10);
    }

    #[test]
    fn pointwise_two_source_hand_computation() {
        let spec = StateSpec::with_second_source(2, 2, 2, 2).unwrap();
        let rows = [(0, 0, 0, 0), (1, 0, 0, 0), (1, 0, 1, 0)];
        let em = em4_from_rows(&rows, spec);
        let jd = JointDistribution::from_events(&em).unwrap();
        let d = pointwise_loglik_diff(&em, &jd).unwrap();
        // By hand: P(.|a=0,b=0) from rows {0,1}, P(.|a=0,b=1) from row {2},
        // P(.|a=0,c=0) from all three rows.
        let expected =
            [(0.5f64 / (1.0 / 3.0)).ln(), (0.5f64 / (2.0 / 3.0)).ln(), (1.0f64 / (2.0 / 3.0)).ln()];
        for (got, want) in d.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn pointwise_requires_second_source() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let em = em_from_rows(&[(0, 0, 0), (1, 1, 1)], spec);
        let jd = JointDistribution::from_events(&em).unwrap();
        assert!(pointwise_loglik_diff(&em, &jd).is_err());
    }
}
