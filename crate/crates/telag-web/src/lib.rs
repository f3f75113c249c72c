//! Browser bindings for three interactive transfer-entropy demos: null
//! calibration, delay scanning, and tied-source comparison.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! script needs no generated glue types. Bad inputs and estimation failures
//! come back as `{"error": "..."}` instead of an exception.

use serde_json::json;
use telag_core::benchgen::{
    construct_te_pair, gen_delayed_pair, gen_true_null, DelayedPairSpec, DirichletSpec,
    TePairTarget,
};
use telag_core::special::ln_gamma;
use telag_core::{
    derive_seed, df_te, lag_scan, stream_rng, te_significance_test, vuong_compare, SourceAxis,
    StateSpec, TeError,
};
use wasm_bindgen::prelude::wasm_bindgen;

fn fail(msg: impl AsRef<str>) -> String {
    json!({ "error": msg.as_ref() }).to_string()
}

/// Chi-square density, sampled for the page's reference overlay.
fn chi2_pdf(x: f64, df: u64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = df as f64 / 2.0;
    ((h - 1.0) * x.ln() - x / 2.0 - h * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// Repeatedly fits independent series and reports the scaled statistic for
/// each replicate, plus the matching chi-square density on a regular grid.
#[wasm_bindgen]
pub fn simulate_null_statistics(
    n_a_plus: u32,
    n_a: u32,
    n_b: u32,
    t: u32,
    reps: u32,
    seed: u64,
) -> String {
    for (name, v) in [("n_a_plus", n_a_plus), ("n_a", n_a), ("n_b", n_b)] {
        if !(2..=6).contains(&v) {
            return fail(format!("{name} must lie in 2..=6, got {v}"));
        }
    }
    if !(100..=100_000).contains(&t) {
        return fail(format!("t must lie in 100..=100000, got {t}"));
    }
    if !(10..=20_000).contains(&reps) {
        return fail(format!("reps must lie in 10..=20000, got {reps}"));
    }
    let dims = match StateSpec::new(n_a_plus, n_a, n_b) {
        Ok(d) => d,
        Err(e) => return fail(e.to_string()),
    };
    let nu = df_te(&dims);
    let mut stats = Vec::with_capacity(reps as usize);
    for r in 0..u64::from(reps) {
        let generated = gen_true_null(&DirichletSpec {
            alpha: 1.0,
            dims,
            t: u64::from(t),
            seed: derive_seed(seed, r),
        });
        let g = match generated {
            Ok(g) => g,
            Err(e) => return fail(e.to_string()),
        };
        match te_significance_test(&g.events) {
            Ok(res) => stats.push(res.statistic),
            Err(e) => return fail(e.to_string()),
        }
    }
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    let top = stats.iter().copied().fold(nu as f64 * 3.0, f64::max);
    let density_x: Vec<f64> = (0..=200).map(|i| top * f64::from(i) / 200.0).collect();
    let density_y: Vec<f64> = density_x.iter().map(|&x| chi2_pdf(x, nu)).collect();
    json!({
        "nu": nu,
        "mean": mean,
        "stats": stats,
        "density_x": density_x,
        "density_y": density_y,
    })
    .to_string()
}

/// Scans backward-matching shifts over a pair with a planted delay and
/// reports TE, p-value, and the detected cutoff at the 1% level.
#[wasm_bindgen]
pub fn scan_delay(
    rate_hz: f64,
    duration_s: f64,
    delay_s: f64,
    max_shift_s: f64,
    n_shifts: u32,
    seed: u64,
) -> String {
    if !(rate_hz.is_finite() && rate_hz > 0.0 && rate_hz <= 100.0) {
        return fail(format!("rate_hz must lie in (0, 100], got {rate_hz}"));
    }
    if !(duration_s.is_finite() && (10.0..=36_000.0).contains(&duration_s)) {
        return fail(format!("duration_s must lie in [10, 36000], got {duration_s}"));
    }
    if !(delay_s.is_finite() && (0.0..=100.0).contains(&delay_s)) {
        return fail(format!("delay_s must lie in [0, 100], got {delay_s}"));
    }
    if !(max_shift_s.is_finite() && max_shift_s > 0.0 && max_shift_s <= 100.0) {
        return fail(format!("max_shift_s must lie in (0, 100], got {max_shift_s}"));
    }
    if !(2..=200).contains(&n_shifts) {
        return fail(format!("n_shifts must lie in 2..=200, got {n_shifts}"));
    }
    let pair = gen_delayed_pair(&DelayedPairSpec { rate_hz, duration_s, delay_s, seed });
    let (target, source) = match pair {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let shifts: Vec<f64> =
        (1..=n_shifts).map(|i| max_shift_s * f64::from(i) / f64::from(n_shifts)).collect();
    let profile = match lag_scan(&target, &source, &shifts, 1, 0.01) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let points: Vec<serde_json::Value> = profile
        .points
        .iter()
        .map(|p| {
            json!({
                "shift": p.shift,
                "retained": p.retained,
                "valid": p.valid,
                "te": p.test.as_ref().map(|t| t.te),
                "p_value": p.test.as_ref().map(|t| t.p_value),
            })
        })
        .collect();
    json!({
        "target_events": target.len(),
        "source_events": source.len(),
        "threshold": profile.threshold,
        "cutoff_shift": profile.cutoff_shift,
        "points": points,
    })
    .to_string()
}

/// Builds a three-source table with the requested per-source transfer
/// levels, then repeatedly samples it and reports the closeness metric for
/// each replicate.
#[wasm_bindgen]
pub fn compare_tied_sources(s_b: f64, s_c: f64, t: u32, reps: u32, seed: u64) -> String {
    for (name, v) in [("s_b", s_b), ("s_c", s_c)] {
        if !(v.is_finite() && (0.0..=0.5).contains(&v)) {
            return fail(format!("{name} must lie in [0, 0.5], got {v}"));
        }
    }
    if !(100..=100_000).contains(&t) {
        return fail(format!("t must lie in 100..=100000, got {t}"));
    }
    if !(1..=5_000).contains(&reps) {
        return fail(format!("reps must lie in 1..=5000, got {reps}"));
    }
    let dims = StateSpec::with_second_source(4, 4, 4, 4).expect("static dims are valid");
    let sol = match construct_te_pair(&TePairTarget::new(s_b, s_c, dims, seed)) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let te_b = sol.table.transfer_entropy(SourceAxis::B).expect("constructed table");
    let te_c = sol.table.transfer_entropy(SourceAxis::C).expect("constructed table");
    let mut vs = Vec::with_capacity(reps as usize);
    let mut degenerate = 0u32;
    let mut first = json!(null);
    for r in 0..u64::from(reps) {
        let mut rng = stream_rng(seed, r + 1);
        let em = match sol.table.sample_rows(u64::from(t), &mut rng) {
            Ok(em) => em,
            Err(e) => return fail(e.to_string()),
        };
        match vuong_compare(&em) {
            Ok(res) => {
                if first.is_null() {
                    first = json!({
                        "v": res.v,
                        "p_two_sided": res.p_two_sided,
                        "p_one_sided": res.p_one_sided,
                        "nu": res.nu,
                    });
                }
                vs.push(res.v);
            }
            Err(TeError::DegenerateVariance { .. }) => degenerate += 1,
            Err(e) => return fail(e.to_string()),
        }
    }
    json!({
        "target_s_b": s_b,
        "target_s_c": s_c,
        "table_te_b": te_b,
        "table_te_c": te_c,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "v": vs,
        "degenerate": degenerate,
        "first": first,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        let v: serde_json::Value = serde_json::from_str(s).unwrap();
        assert!(v.get("error").is_none(), "unexpected error: {v}");
        v
    }

    #[test]
    fn null_statistics_mean_near_df() {
        let v = parse(&simulate_null_statistics(2, 2, 2, 2_000, 300, 7));
        assert_eq!(v["nu"], 2);
        let mean = v["mean"].as_f64().unwrap();
        assert!((mean - 2.0).abs() < 0.5, "mean {mean} far from nu 2");
        assert_eq!(v["stats"].as_array().unwrap().len(), 300);
        assert_eq!(v["density_x"].as_array().unwrap().len(), 201);
    }

    #[test]
    fn null_statistics_rejects_bad_dims() {
        let v: serde_json::Value =
            serde_json::from_str(&simulate_null_statistics(1, 2, 2, 2_000, 300, 7)).unwrap();
        assert!(v["error"].as_str().unwrap().contains("n_a_plus"));
    }

    #[test]
    fn scan_finds_cutoff_past_planted_delay() {
        let v = parse(&scan_delay(5.0, 600.0, 0.45, 1.0, 4, 11));
        assert_eq!(v["points"].as_array().unwrap().len(), 4);
        let cutoff = v["cutoff_shift"].as_f64().unwrap();
        assert_eq!(cutoff, 0.5, "cutoff should land on the first shift past the 0.45 s delay");
    }

    #[test]
    fn tied_sources_center_near_zero() {
        let v = parse(&compare_tied_sources(0.2, 0.2, 2_000, 60, 3));
        let vs: Vec<f64> = v["v"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(vs.len() + v["degenerate"].as_u64().unwrap() as usize, 60);
        let mean = vs.iter().sum::<f64>() / vs.len() as f64;
        assert!(mean.abs() < 0.5, "tied sources should center near zero, mean {mean}");
        let te_b = v["table_te_b"].as_f64().unwrap();
        let te_c = v["table_te_c"].as_f64().unwrap();
        assert!((te_b - 0.2).abs() < 1e-3 && (te_c - 0.2).abs() < 1e-3);
    }

    #[test]
    fn chi2_density_integrates_to_one() {
        // df = 1 is excluded: its density diverges at zero and the midpoint
        // rule cannot resolve the singularity; a spot value covers it below.
        for df in [2u64, 5, 9] {
            let (mut acc, n, top) = (0.0, 40_000, 80.0);
            for i in 0..n {
                let x = top * (i as f64 + 0.5) / n as f64;
                acc += chi2_pdf(x, df) * top / n as f64;
            }
            assert!((acc - 1.0).abs() < 1e-4, "df {df}: integral {acc}");
        }
        // exp(-1/2) / sqrt(2 pi), worked out by hand.
        assert!((chi2_pdf(1.0, 1) - 0.2419707245191434).abs() < 1e-12);
    }

    #[test]
    fn outputs_are_deterministic() {
        assert_eq!(
            simulate_null_statistics(3, 3, 2, 500, 50, 42),
            simulate_null_statistics(3, 3, 2, 500, 50, 42)
        );
        assert_eq!(scan_delay(5.0, 120.0, 0.3, 1.0, 5, 9), scan_delay(5.0, 120.0, 0.3, 1.0, 5, 9));
    }
}
