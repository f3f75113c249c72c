//! Asymptotic tests: chi-square significance of a single Transfer Entropy
//! and the Vuong-style closeness test comparing two source models.

use serde::Serialize;

use crate::dist::{pointwise_loglik_diff, Axis, JointDistribution, SourceAxis};
use crate::error::{Result, TeError};
use crate::events::{EventMatrix, StateSpec};
use crate::special::{chi2_sf, normal_sf};

/// Degrees of freedom of the no-transfer null: n_a·(n_a_plus−1)·(n_b−1).
pub fn df_te(spec: &StateSpec) -> u64 {
    spec.n_a as u64 * (spec.n_a_plus as u64 - 1) * (spec.n_b as u64 - 1)
}

/// Centering term of the closeness test, (n_b − n_c)·n_a·(n_a_plus−1)/2;
/// antisymmetric in the two sources and possibly half-integer.
pub fn df_vuong(spec: &StateSpec) -> Result<f64> {
    let n_c = spec.n_c.ok_or_else(|| {
        TeError::InvalidInput("closeness centering needs both source axes".into())
    })?;
    Ok((spec.n_b as i64 - n_c as i64) as f64 * spec.n_a as f64 * (spec.n_a_plus as f64 - 1.0) / 2.0)
}

/// Outcome of the chi-square TE significance test.
#[derive(Debug, Clone, Serialize)]
pub struct TeTestResult {
    /// Plug-in TE estimate in nats.
    pub te: f64,
    /// Wilks statistic 2·T·TE.
    pub statistic: f64,
    /// Degrees of freedom of the null chi-square.
    pub df: u64,
    /// Upper-tail probability of the statistic.
    pub p_value: f64,
    /// Sample size.
    pub t: u64,
    /// True when T < 5·(table cells): asymptotics converge slowly and the
    /// p-value should be cross-checked against a shuffle reference.
    pub small_sample: bool,
}

/// Outcome of the closeness (Vuong) test between source models B and C.
#[derive(Debug, Clone, Serialize)]
pub struct VuongTestResult {
    /// TE difference Q = TE(B→A) − TE(C→A) = H(A⁺|A,C) − H(A⁺|A,B), nats.
    pub q_stat: f64,
    /// Log-likelihood difference ΔL = T·Q.
    pub delta_l: f64,
    /// Standard deviation of the pointwise log-likelihood differences
    /// (population divisor).
    pub omega: f64,
    /// Centering term.
    pub nu: f64,
    /// Standardized metric (ΔL − ν)/(√T·ω).
    pub v: f64,
    /// Upper-tail p for the alternative TE(B→A) > TE(C→A).
    pub p_one_sided: f64,
    /// 2·min(Φ(v), 1−Φ(v)).
    pub p_two_sided: f64,
    /// Sample size.
    pub t: u64,
}

/// Chi-square test of TE(B→A) > 0 on a pre-tabulated distribution.
pub fn te_test_from_joint(jd: &JointDistribution) -> Result<TeTestResult> {
    let spec = *jd.spec();
    if spec.n_a_plus < 2 || spec.n_a < 2 || spec.n_b < 2 {
        return Err(TeError::DegenerateAlphabet);
    }
    let te = jd.transfer_entropy(SourceAxis::B)?;
    let t = jd.t();
    let statistic = 2.0 * t as f64 * te;
    let df = df_te(&spec);
    let p_value = chi2_sf(statistic, df)?;
    let table_cells = spec.n_a_plus as u64 * spec.n_a as u64 * spec.n_b as u64;
    Ok(TeTestResult { te, statistic, df, p_value, t, small_sample: t < 5 * table_cells })
}

/// Chi-square test of TE(B→A) > 0: Wilks statistic 2T·TE against χ²(ν).
pub fn te_significance_test(em: &EventMatrix) -> Result<TeTestResult> {
    te_test_from_joint(&JointDistribution::from_events(em)?)
}

/// Closeness test between the two source models of a four-column event
/// matrix. Positive v favors B as the better predictor of the target.
pub fn vuong_compare(em: &EventMatrix) -> Result<VuongTestResult> {
    if em.spec.n_c.is_none() {
        return Err(TeError::InvalidInput("closeness test needs two source columns".into()));
    }
    if em.len() < 2 {
        return Err(TeError::SeriesTooShort(format!(
            "closeness test needs at least 2 rows, got {}",
            em.len()
        )));
    }
    let jd = JointDistribution::from_events(em)?;
    let t = jd.t();
    let tf = t as f64;
    let h_ab = jd.conditional_entropy(&[Axis::A, Axis::B])?;
    let h_ac = jd.conditional_entropy(&[Axis::A, Axis::C])?;
    let q_stat = h_ac - h_ab;
    let delta_l = tf * q_stat;
    let nu = df_vuong(&em.spec)?;

    let d = pointwise_loglik_diff(em, &jd)?;
    let mean = d.iter().sum::<f64>() / tf;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / tf;
    let omega = var.sqrt();

    let v = if omega == 0.0 {
        if delta_l == nu {
            0.0
        } else {
            return Err(TeError::DegenerateVariance { delta_l, nu });
        }
    } else {
        (delta_l - nu) / (tf.sqrt() * omega)
    };
    let p_one_sided = normal_sf(v);
    let p_two_sided = 2.0 * normal_sf(v).min(normal_sf(-v));
    Ok(VuongTestResult { q_stat, delta_l, omega, nu, v, p_one_sided, p_two_sided, t })
}
