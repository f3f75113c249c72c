//! Population probability tables: exact (non-empirical) distributions over
//! the joint state space, with entropies, Transfer Entropies, and row
//! sampling for synthetic benchmarks.

use rand::Rng;

use crate::dist::{dims_of, project, Axis, SourceAxis};
use crate::error::{Result, TeError};
use crate::events::{EventMatrix, StateSpec};

/// A dense probability table over (a⁺, a, b[, c]).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    spec: StateSpec,
    probs: Vec<f64>,
}

impl ProbTable {
    pub fn new(spec: StateSpec, probs: Vec<f64>) -> Result<Self> {
        if probs.len() as u64 != spec.cells() {
            return Err(TeError::InvalidInput(format!(
                "probability table has {} entries, state space {}",
                probs.len(),
                spec.cells()
            )));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(TeError::InvalidInput("probabilities must be finite and >= 0".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TeError::InvalidInput(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { spec, probs })
    }

    pub fn spec(&self) -> &StateSpec {
        &self.spec
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability mass marginalized onto the given axes (canonical order).
    pub fn marginal(&self, keep: &[Axis]) -> Vec<f64> {
        let dims = dims_of(&self.spec);
        let keep: Vec<usize> = {
            let mut k: Vec<usize> = keep.iter().map(|&ax| ax as usize).collect();
            k.sort_unstable();
            k
        };
        let size: usize = keep.iter().map(|&ax| dims[ax] as usize).product();
        let mut out = vec![0.0; size];
        for (idx, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                out[project(idx, &dims, &keep)] += p;
            }
        }
        out
    }

    /// H(A⁺ | condition_on) of the population, in nats.
    pub fn conditional_entropy(&self, condition_on: &[Axis]) -> Result<f64> {
        for &ax in condition_on {
            if ax == Axis::APlus {
                return Err(TeError::InvalidInput(
                    "the target-future axis cannot be conditioned on".into(),
                ));
            }
            if ax == Axis::C && self.spec.n_c.is_none() {
                return Err(TeError::InvalidInput(
                    "second source axis requested but not present".into(),
                ));
            }
        }
        let dims = dims_of(&self.spec);
        let cond: Vec<usize> = {
            let mut k: Vec<usize> = condition_on.iter().map(|&ax| ax as usize).collect();
            k.sort_unstable();
            k.dedup();
            if k.len() != condition_on.len() {
                return Err(TeError::InvalidInput("duplicate axis".into()));
            }
            k
        };
        let cond_size: usize = cond.iter().map(|&ax| dims[ax] as usize).product();
        let mut joint = vec![0.0; dims[0] as usize * cond_size];
        let mut margin = vec![0.0; cond_size];
        for (idx, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                let ap = idx / (dims[1] as usize * dims[2] as usize * dims[3] as usize);
                let key = project(idx, &dims, &cond);
                joint[ap * cond_size + key] += p;
                margin[key] += p;
            }
        }
        let mut h = 0.0;
        for (j, &p) in joint.iter().enumerate() {
            if p > 0.0 {
                h += p * (margin[j % cond_size] / p).ln();
            }
        }
        Ok(h)
    }

    /// Population TE from the chosen source axis, in nats, clipped at 0.
    pub fn transfer_entropy(&self, source: SourceAxis) -> Result<f64> {
        let src = match source {
            SourceAxis::B => Axis::B,
            SourceAxis::C => {
                if self.spec.n_c.is_none() {
                    return Err(TeError::InvalidInput(
                        "second source axis requested but not present".into(),
                    ));
                }
                Axis::C
            }
        };
        let dims = dims_of(&self.spec);
        let (n_ap, n_a, n_s) = (dims[0] as usize, dims[1] as usize, dims[src as usize] as usize);
        let m3 = self.marginal(&[Axis::APlus, Axis::A, src]);
        let m_as = self.marginal(&[Axis::A, src]);
        let m_apa = self.marginal(&[Axis::APlus, Axis::A]);
        let m_a = self.marginal(&[Axis::A]);
        let mut te = 0.0;
        for ap in 0..n_ap {
            for a in 0..n_a {
                for s in 0..n_s {
                    let p3 = m3[(ap * n_a + a) * n_s + s];
                    if p3 > 0.0 {
                        let num = p3 * m_a[a];
                        let den = m_as[a * n_s + s] * m_apa[ap * n_a + a];
                        te += p3 * (num / den).ln();
                    }
                }
            }
        }
        debug_assert!(te > -1e-9, "population TE should never be materially negative: {te}");
        Ok(te.max(0.0))
    }

    /// Draws `t` i.i.d. rows by inverse-CDF over the flattened cells.
    pub fn sample_rows<R: Rng>(&self, t: u64, rng: &mut R) -> Result<EventMatrix> {
        if t == 0 {
            return Err(TeError::InvalidInput("cannot sample zero rows".into()));
        }
        let dims = dims_of(&self.spec);
        let mut cum = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for &p in &self.probs {
            acc += p;
            cum.push(acc);
        }
        let last_nonzero = self
            .probs
            .iter()
            .rposition(|&p| p > 0.0)
            .ok_or_else(|| TeError::InvalidInput("all-zero probability table".into()))?;
        let n = t as usize;
        let mut a_plus = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut c = self.spec.n_c.map(|_| Vec::with_capacity(n));
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut idx = cum.partition_point(|&x| x <= u);
            if idx > last_nonzero {
                idx = last_nonzero;
            }
            let (n_a, n_b, n_c) = (dims[1] as usize, dims[2] as usize, dims[3] as usize);
            let cc = idx % n_c;
            let bb = (idx / n_c) % n_b;
            let aa = (idx / (n_c * n_b)) % n_a;
            let ap = idx / (n_c * n_b * n_a);
            a_plus.push(ap as u32);
            a.push(aa as u32);
            b.push(bb as u32);
            if let Some(c) = &mut c {
                c.push(cc as u32);
            }
        }
        EventMatrix::new(self.spec, a_plus, a, b, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::JointDistribution;
    use crate::rng::stream_rng;

    #[test]
    fn uniform_table_zero_te() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let table = ProbTable::new(spec, vec![0.125; 8]).unwrap();
        assert_eq!(table.transfer_entropy(SourceAxis::B).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_coupling_table_ln2() {
        // P(a_plus, a, b) = 1/4 iff a_plus == b.
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let mut probs = vec![0.0; 8];
        for a in 0..2usize {
            for b in 0..2usize {
                let ap = b;
                probs[(ap * 2 + a) * 2 + b] = 0.25;
            }
        }
        let table = ProbTable::new(spec, probs).unwrap();
        let te = table.transfer_entropy(SourceAxis::B).unwrap();
        assert!((te - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        assert!(ProbTable::new(spec, vec![0.5; 8]).is_err());
        assert!(ProbTable::new(spec, vec![0.25; 4]).is_err());
        let mut p = vec![0.125; 8];
        p[0] = -0.125;
        p[1] = 0.375;
        assert!(ProbTable::new(spec, p).is_err());
    }

    #[test]
    fn entropy_agrees_with_empirical_counterpart() {
        let spec = StateSpec::new(2, 3, 2).unwrap();
        // Integer-count-backed table so both implementations see the same
        // rational distribution.
        let counts = [3u32, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8];
        let t: u32 = counts.iter().sum();
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / t as f64).collect();
        let table = ProbTable::new(spec, probs).unwrap();

        let mut rows: Vec<(u32, u32, u32)> = Vec::new();
        for (i, &n) in counts.iter().enumerate() {
            let b = (i % 2) as u32;
            let a = ((i / 2) % 3) as u32;
            let ap = (i / 6) as u32;
            for _ in 0..n {
                rows.push((ap, a, b));
            }
        }
        let em = EventMatrix::new(
            spec,
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            None,
        )
        .unwrap();
        let jd = JointDistribution::from_events(&em).unwrap();
        for axes in [vec![Axis::A], vec![Axis::A, Axis::B], vec![]] {
            let h_t = table.conditional_entropy(&axes).unwrap();
            let h_j = jd.conditional_entropy(&axes).unwrap();
            assert!((h_t - h_j).abs() < 1e-12);
        }
        let te_t = table.transfer_entropy(SourceAxis::B).unwrap();
        let te_j = jd.transfer_entropy(SourceAxis::B).unwrap();
        assert!((te_t - te_j).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let table = ProbTable::new(spec, vec![0.125; 8]).unwrap();
        let a = table.sample_rows(100, &mut stream_rng(9, 0)).unwrap();
        let b = table.sample_rows(100, &mut stream_rng(9, 0)).unwrap();
        let c = table.sample_rows(100, &mut stream_rng(9, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_matches_cell_probabilities() {
        let spec = StateSpec::new(2, 2, 2).unwrap();
        let probs = vec![0.05, 0.0, 0.15, 0.1, 0.2, 0.25, 0.05, 0.2];
        let table = ProbTable::new(spec, probs.clone()).unwrap();
        let em = table.sample_rows(200_000, &mut stream_rng(11, 0)).unwrap();
        let jd = JointDistribution::from_events(&em).unwrap();
        for (freq, p) in jd.probabilities().iter().zip(&probs) {
            assert!((freq - p).abs() < 0.005, "freq {freq} vs p {p}");
        }
        // The zero-probability cell must never be drawn.
        assert_eq!(jd.counts()[1], 0);
    }
}
