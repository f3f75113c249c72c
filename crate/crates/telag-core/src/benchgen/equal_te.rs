//! Construction of joint tables over (a⁺, a, b, c) whose two transfer
//! entropies hit prescribed values.
//!
//! The table is parametrized by softmax logits, the squared residual
//! (TE_b − S_b)² + (TE_c − S_c)² is driven to zero by a damped
//! Gauss-Newton iteration with analytic gradients, and initial logits come
//! from a Dirichlet(0.5) draw so different seeds land on different
//! solutions.

use crate::error::{Result, TeError};
use crate::events::StateSpec;
use crate::rng::stream_rng;
use crate::table::ProbTable;

use super::sample_dirichlet;

/// Target for a table whose two TEs are both `s_target`.
#[derive(Debug, Clone, Copy)]
pub struct EqualTeTarget {
    pub s_target: f64,
    /// State space; must carry both source axes.
    pub dims: StateSpec,
    /// Convergence threshold on the squared-residual objective.
    pub tolerance: f64,
    /// Total iteration budget across restarts.
    pub max_iters: u32,
    pub seed: u64,
}

impl EqualTeTarget {
    pub fn new(s_target: f64, dims: StateSpec, seed: u64) -> Self {
        Self { s_target, dims, tolerance: 1e-8, max_iters: 10_000, seed }
    }
}

/// Target for a table with two different prescribed TEs.
#[derive(Debug, Clone, Copy)]
pub struct TePairTarget {
    pub s_b: f64,
    pub s_c: f64,
    pub dims: StateSpec,
    pub tolerance: f64,
    pub max_iters: u32,
    pub seed: u64,
}

impl TePairTarget {
    pub fn new(s_b: f64, s_c: f64, dims: StateSpec, seed: u64) -> Self {
        Self { s_b, s_c, dims, tolerance: 1e-8, max_iters: 10_000, seed }
    }
}

/// A converged table together with optimizer diagnostics.
#[derive(Debug, Clone)]
pub struct EqualTeSolution {
    pub table: ProbTable,
    /// Final objective value (squared residual).
    pub residual: f64,
    /// Iterations consumed across all restarts.
    pub iterations: u32,
    /// Objective after the initial point and after every accepted step;
    /// strictly decreasing within each restart (restarts reset it).
    pub objective_trace: Vec<f64>,
}

fn softmax(theta: &[f64]) -> Vec<f64> {
    let mx = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = theta.iter().map(|&t| (t - mx).exp()).collect();
    let sum: f64 = p.iter().sum();
    for x in &mut p {
        *x /= sum;
    }
    p
}

struct Dims {
    n_ap: usize,
    n_a: usize,
    n_b: usize,
    n_c: usize,
}

fn dims4(spec: &StateSpec) -> Result<Dims> {
    let n_c = spec.n_c.ok_or_else(|| {
        TeError::InvalidInput("equal-TE construction needs both source axes".into())
    })?;
    Ok(Dims {
        n_ap: spec.n_a_plus as usize,
        n_a: spec.n_a as usize,
        n_b: spec.n_b as usize,
        n_c: n_c as usize,
    })
}

/// Both TEs of a dense positive table plus the per-cell derivative of each
/// TE with respect to the cell probability.
fn te_pair_with_grads(p: &[f64], d: &Dims) -> (f64, f64, Vec<f64>, Vec<f64>) {
    let Dims { n_ap, n_a, n_b, n_c } = *d;
    let mut q3b = vec![0.0; n_ap * n_a * n_b];
    let mut q3c = vec![0.0; n_ap * n_a * n_c];
    let mut r2b = vec![0.0; n_a * n_b];
    let mut r2c = vec![0.0; n_a * n_c];
    let mut s2 = vec![0.0; n_ap * n_a];
    let mut u1 = vec![0.0; n_a];
    let mut idx = 0;
    for ap in 0..n_ap {
        for a in 0..n_a {
            for b in 0..n_b {
                for c in 0..n_c {
                    let x = p[idx];
                    idx += 1;
                    q3b[(ap * n_a + a) * n_b + b] += x;
                    q3c[(ap * n_a + a) * n_c + c] += x;
                    r2b[a * n_b + b] += x;
                    r2c[a * n_c + c] += x;
                    s2[ap * n_a + a] += x;
                    u1[a] += x;
                }
            }
        }
    }
    let mut te_b = 0.0;
    for ap in 0..n_ap {
        for a in 0..n_a {
            for b in 0..n_b {
                let q = q3b[(ap * n_a + a) * n_b + b];
                if q > 0.0 {
                    te_b += q * ((q * u1[a]) / (r2b[a * n_b + b] * s2[ap * n_a + a])).ln();
                }
            }
        }
    }
    let mut te_c = 0.0;
    for ap in 0..n_ap {
        for a in 0..n_a {
            for c in 0..n_c {
                let q = q3c[(ap * n_a + a) * n_c + c];
                if q > 0.0 {
                    te_c += q * ((q * u1[a]) / (r2c[a * n_c + c] * s2[ap * n_a + a])).ln();
                }
            }
        }
    }
    let mut g_b = vec![0.0; p.len()];
    let mut g_c = vec![0.0; p.len()];
    let mut idx = 0;
    for ap in 0..n_ap {
        for a in 0..n_a {
            for b in 0..n_b {
                for c in 0..n_c {
                    g_b[idx] = ((q3b[(ap * n_a + a) * n_b + b] * u1[a])
                        / (r2b[a * n_b + b] * s2[ap * n_a + a]))
                        .ln();
                    g_c[idx] = ((q3c[(ap * n_a + a) * n_c + c] * u1[a])
                        / (r2c[a * n_c + c] * s2[ap * n_a + a]))
                        .ln();
                    idx += 1;
                }
            }
        }
    }
    (te_b, te_c, g_b, g_c)
}

/// Squared-residual objective on softmax logits.
pub fn objective(theta: &[f64], dims: &StateSpec, s_b: f64, s_c: f64) -> Result<f64> {
    let d = dims4(dims)?;
    if theta.len() as u64 != dims.cells() {
        return Err(TeError::InvalidInput("logit vector length does not match state space".into()));
    }
    let p = softmax(theta);
    let (te_b, te_c, _, _) = te_pair_with_grads(&p, &d);
    Ok((te_b - s_b).powi(2) + (te_c - s_c).powi(2))
}

/// Analytic gradient of [`objective`] with respect to the logits.
pub fn objective_gradient(theta: &[f64], dims: &StateSpec, s_b: f64, s_c: f64) -> Result<Vec<f64>> {
    let d = dims4(dims)?;
    if theta.len() as u64 != dims.cells() {
        return Err(TeError::InvalidInput("logit vector length does not match state space".into()));
    }
    let p = softmax(theta);
    let (te_b, te_c, g_b, g_c) = te_pair_with_grads(&p, &d);
    let (r_b, r_c) = (te_b - s_b, te_c - s_c);
    let df_dp: Vec<f64> =
        g_b.iter().zip(&g_c).map(|(&gb, &gc)| 2.0 * r_b * gb + 2.0 * r_c * gc).collect();
    let dot: f64 = p.iter().zip(&df_dp).map(|(&pi, &gi)| pi * gi).sum();
    Ok(p.iter().zip(&df_dp).map(|(&pi, &gi)| pi * (gi - dot)).collect())
}

/// Builds a table whose two TEs both equal `s_target` within tolerance.
pub fn construct_equal_te(target: &EqualTeTarget) -> Result<EqualTeSolution> {
    construct_te_pair(&TePairTarget {
        s_b: target.s_target,
        s_c: target.s_target,
        dims: target.dims,
        tolerance: target.tolerance,
        max_iters: target.max_iters,
        seed: target.seed,
    })
}

/// Builds a table with TE_b = s_b and TE_c = s_c within tolerance, by
/// damped Gauss-Newton over softmax logits with Dirichlet(0.5) restarts.
pub fn construct_te_pair(target: &TePairTarget) -> Result<EqualTeSolution> {
    let d = dims4(&target.dims)?;
    if !(target.tolerance > 0.0) {
        return Err(TeError::InvalidInput("tolerance must be positive".into()));
    }
    for (s, name) in [(target.s_b, "first"), (target.s_c, "second")] {
        if !(s >= 0.0) {
            return Err(TeError::Domain(format!("{name} TE target must be >= 0, got {s}")));
        }
        let cap = (d.n_ap as f64).ln();
        if s >= cap {
            return Err(TeError::Domain(format!(
                "{name} TE target {s} is not attainable: needs to stay below ln(n_a_plus) = {cap:.6}"
            )));
        }
    }
    let cells = target.dims.cells() as usize;
    let mut iterations = 0u32;
    let mut best_residual = f64::INFINITY;

    const MAX_RESTARTS: u64 = 8;
    for attempt in 0..MAX_RESTARTS {
        if iterations >= target.max_iters {
            break;
        }
        let mut rng = stream_rng(target.seed, attempt);
        let p0 = sample_dirichlet(0.5, cells, &mut rng)?;
        let mut theta: Vec<f64> = p0.iter().map(|&p| p.max(1e-290).ln()).collect();
        let (mut p, mut eval) = {
            let p = softmax(&theta);
            let e = te_pair_with_grads(&p, &d);
            (p, e)
        };
        let mut f = (eval.0 - target.s_b).powi(2) + (eval.1 - target.s_c).powi(2);
        let mut trace = vec![f];
        let mut lambda = 1e-3;

        while iterations < target.max_iters {
            if f <= target.tolerance {
                let table = ProbTable::new(target.dims, p)?;
                best_residual = f;
                return Ok(EqualTeSolution {
                    table,
                    residual: best_residual,
                    iterations,
                    objective_trace: trace,
                });
            }
            let (te_b, te_c, g_b, g_c) = (&eval.0, &eval.1, &eval.2, &eval.3);
            let r = [te_b - target.s_b, te_c - target.s_c];
            // Jacobian of the residuals w.r.t. logits, rows J0, J1.
            let dot_b: f64 = p.iter().zip(g_b).map(|(&pi, &gi)| pi * gi).sum();
            let dot_c: f64 = p.iter().zip(g_c).map(|(&pi, &gi)| pi * gi).sum();
            let j0: Vec<f64> = p.iter().zip(g_b).map(|(&pi, &gi)| pi * (gi - dot_b)).collect();
            let j1: Vec<f64> = p.iter().zip(g_c).map(|(&pi, &gi)| pi * (gi - dot_c)).collect();
            let a00: f64 = j0.iter().map(|x| x * x).sum();
            let a01: f64 = j0.iter().zip(&j1).map(|(x, y)| x * y).sum();
            let a11: f64 = j1.iter().map(|x| x * x).sum();

            let mut stepped = false;
            while iterations < target.max_iters {
                iterations += 1;
                // Solve (J Jᵀ + λI) y = r, then step along -Jᵀ y.
                let (b00, b01, b11) = (a00 + lambda, a01, a11 + lambda);
                let det = b00 * b11 - b01 * b01;
                if det.abs() < 1e-300 {
                    break;
                }
                let y0 = (b11 * r[0] - b01 * r[1]) / det;
                let y1 = (b00 * r[1] - b01 * r[0]) / det;
                let theta_new: Vec<f64> = theta
                    .iter()
                    .zip(j0.iter().zip(&j1))
                    .map(|(&t, (&a, &b))| t - (a * y0 + b * y1))
                    .collect();
                let p_new = softmax(&theta_new);
                let eval_new = te_pair_with_grads(&p_new, &d);
                let f_new = (eval_new.0 - target.s_b).powi(2) + (eval_new.1 - target.s_c).powi(2);
                if f_new < f {
                    theta = theta_new;
                    p = p_new;
                    eval = eval_new;
                    f = f_new;
                    trace.push(f);
                    lambda = (lambda / 3.0).max(1e-12);
                    stepped = true;
                    break;
                }
                lambda *= 10.0;
                if lambda > 1e14 {
                    break;
                }
            }
            if !stepped {
                break;
            }
        }
        best_residual = best_residual.min(f);
    }
    Err(TeError::NonConvergence { iterations, residual: best_residual })
}
