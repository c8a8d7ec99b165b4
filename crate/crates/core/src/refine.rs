//! Gradient refinement of a piecewise-linear warp.
//!
//! The warp is parametrized by its values `g_k = γ(t_k)` on the uniform grid.
//! For a piecewise-constant `q1` the objective `F(γ) = ‖q0 - q1 * γ‖²` has the
//! closed form
//!
//! ```text
//! F = ‖q0‖² + ‖q1‖² - 2 Σ_k q0_k · (Φ(g_{k+1}) - Φ(g_k)) / sqrt(N (g_{k+1} - g_k))
//! ```
//!
//! with `Φ(x) = ∫_0^x q1` piecewise linear, so `F` is continuous in the node
//! values and its gradient is available analytically. Descent is projected onto
//! the monotone warps with fixed endpoints and uses Armijo backtracking.

use crate::dp::{MatchDiagnostics, MatchResult};
use crate::error::Result;
use crate::srv::SrvFunction;
use crate::warp::Reparametrization;

const ARMIJO: f64 = 1e-4;
const REL_TOL: f64 = 1e-10;
const MAX_BACKTRACK: usize = 40;
/// Predicted decreases below this fraction of `‖q0‖² + ‖q1‖²` are rounding noise.
const NOISE: f64 = 1e-13;

struct Objective<'a> {
    q0: &'a SrvFunction,
    q1: &'a SrvFunction,
    /// prefix[c] = h Σ_{m<c} q1_m
    prefix: Vec<f64>,
    norms: f64,
}

impl<'a> Objective<'a> {
    fn new(q0: &'a SrvFunction, q1: &'a SrvFunction) -> Self {
        let n = q1.intervals();
        let dim = q1.dim();
        let h = 1.0 / n as f64;
        let mut prefix = vec![0.0; (n + 1) * dim];
        for c in 0..n {
            for d in 0..dim {
                prefix[(c + 1) * dim + d] = prefix[c * dim + d] + h * q1.value(c)[d];
            }
        }
        Self {
            q0,
            q1,
            prefix,
            norms: q0.norm_squared() + q1.norm_squared(),
        }
    }

    fn n(&self) -> usize {
        self.q0.intervals()
    }

    fn cell(&self, x: f64) -> usize {
        let n = self.n();
        ((x * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    fn cum(&self, x: f64, out: &mut [f64]) {
        let dim = self.q1.dim();
        let c = self.cell(x);
        let off = x - c as f64 / self.n() as f64;
        for (d, o) in out.iter_mut().enumerate() {
            *o = self.prefix[c * dim + d] + off * self.q1.value(c)[d];
        }
    }

    fn cross(&self, k: usize, a: f64, b: f64, ca: &[f64], cb: &[f64]) -> f64 {
        let span = b - a;
        if span <= 0.0 {
            return 0.0;
        }
        let dot: f64 = self
            .q0
            .value(k)
            .iter()
            .zip(ca.iter().zip(cb))
            .map(|(x, (p, q))| x * (q - p))
            .sum();
        dot / (self.n() as f64 * span).sqrt()
    }

    fn value(&self, g: &[f64]) -> f64 {
        let dim = self.q1.dim();
        let mut ca = vec![0.0; dim];
        let mut cb = vec![0.0; dim];
        self.cum(g[0], &mut ca);
        let mut cross = 0.0;
        for k in 0..self.n() {
            self.cum(g[k + 1], &mut cb);
            cross += self.cross(k, g[k], g[k + 1], &ca, &cb);
            std::mem::swap(&mut ca, &mut cb);
        }
        self.norms - 2.0 * cross
    }

    fn gradient(&self, g: &[f64]) -> Vec<f64> {
        let n = self.n();
        let dim = self.q1.dim();
        let min_span = 1e-6 / n as f64;
        let mut grad = vec![0.0; n + 1];
        let mut ca = vec![0.0; dim];
        let mut cb = vec![0.0; dim];
        for k in 0..n {
            let (a, b) = (g[k], g[k + 1]);
            self.cum(a, &mut ca);
            self.cum(b, &mut cb);
            let span = (b - a).max(min_span);
            let q0 = self.q0.value(k);
            let dot_s: f64 = q0.iter().zip(ca.iter().zip(&cb)).map(|(x, (p, q))| x * (q - p)).sum();
            let dot_b: f64 = q0.iter().zip(self.q1.value(self.cell(b))).map(|(x, y)| x * y).sum();
            let dot_a: f64 = q0.iter().zip(self.q1.value(self.cell(a))).map(|(x, y)| x * y).sum();
            let inv = 1.0 / (n as f64 * span).sqrt();
            let half = dot_s / (2.0 * span);
            // F = norms - 2 Σ T_k
            grad[k + 1] -= 2.0 * inv * (dot_b - half);
            grad[k] -= 2.0 * inv * (half - dot_a);
        }
        grad[0] = 0.0;
        grad[n] = 0.0;
        grad
    }
}

/// Sobolev-type preconditioning: solves `L p = grad` on the interior nodes,
/// `L = tridiag(-1, 2, -1) + I / n`, by the Thomas algorithm.
fn smooth(grad: &[f64]) -> Vec<f64> {
    let n = grad.len() - 1;
    let mut out = vec![0.0; n + 1];
    if n < 2 {
        return out;
    }
    let m = n - 1;
    let diag = 2.0 + 1.0 / n as f64;
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = -1.0 / diag;
    d[0] = grad[1] / diag;
    for i in 1..m {
        let denom = diag + c[i - 1];
        c[i] = -1.0 / denom;
        d[i] = (grad[i + 1] + d[i - 1]) / denom;
    }
    out[m] = d[m - 1];
    for i in (0..m - 1).rev() {
        out[i + 1] = d[i] - c[i] * out[i + 2];
    }
    out
}

fn line_search(
    obj: &Objective<'_>,
    g: &[f64],
    grad: &[f64],
    dir: &[f64],
    energy: f64,
    alpha: &mut f64,
    trial: &mut [f64],
) -> Option<f64> {
    for _ in 0..MAX_BACKTRACK {
        for ((t, x), d) in trial.iter_mut().zip(g).zip(dir) {
            *t = x - *alpha * d;
        }
        project(trial);
        let decrease: f64 = grad.iter().zip(g.iter().zip(trial.iter())).map(|(d, (x, t))| d * (x - t)).sum();
        if decrease > NOISE * obj.norms {
            let e = obj.value(trial);
            if e <= energy - ARMIJO * decrease {
                return Some(e);
            }
        }
        *alpha *= 0.5;
    }
    None
}

fn project(g: &mut [f64]) {
    let n = g.len() - 1;
    g[0] = 0.0;
    g[n] = 1.0;
    for k in 1..n {
        g[k] = g[k].clamp(g[k - 1], 1.0);
    }
}

/// Projected gradient descent on `‖q0 - q1 * γ‖²` over the interior node
/// values of a warp on the uniform grid, starting from `gamma0`.
///
/// The returned energy never exceeds the energy of `gamma0` sampled on the grid.
pub fn gradient_refine(
    q0: &SrvFunction,
    q1: &SrvFunction,
    gamma0: &Reparametrization,
    max_iter: usize,
    step: f64,
) -> Result<MatchResult> {
    q0.check_compatible(q1)?;
    let obj = Objective::new(q0, q1);
    let n = q0.intervals();
    let mut g = gamma0.grid_values(n);
    let mut energy = obj.value(&g);
    let floor = 1e-14 * obj.norms;
    let mut diag = MatchDiagnostics {
        energy_trace: vec![energy],
        ..Default::default()
    };
    let mut alpha = step;
    let mut trial = vec![0.0; n + 1];

    for _ in 0..max_iter {
        if energy <= floor {
            break;
        }
        diag.iterations += 1;
        let grad = obj.gradient(&g);
        if grad.iter().all(|x| *x == 0.0) {
            break;
        }
        // the smoothed direction can stall at kinks of Φ; fall back to the raw gradient
        let accepted = line_search(&obj, &g, &grad, &smooth(&grad), energy, &mut alpha, &mut trial)
            .or_else(|| {
                alpha = step;
                line_search(&obj, &g, &grad, &grad, energy, &mut alpha, &mut trial)
            });
        let Some(e) = accepted else { break };
        let rel = (energy - e) / energy.abs().max(f64::MIN_POSITIVE);
        std::mem::swap(&mut g, &mut trial);
        energy = e;
        diag.accepted_steps += 1;
        diag.energy_trace.push(energy);
        alpha *= 2.0;
        if rel < REL_TOL {
            break;
        }
    }

    let energy = energy.max(0.0);
    Ok(MatchResult {
        gamma: Reparametrization::from_grid_values(&g)?,
        energy,
        distance: energy.sqrt(),
        path: Vec::new(),
        diagnostics: diag,
    })
}

/// `‖q0 - q1 * γ‖²` for the warp with grid values `γ(t_k)`, as minimized by
/// [`gradient_refine`].
pub fn warp_energy(q0: &SrvFunction, q1: &SrvFunction, gamma: &Reparametrization) -> Result<f64> {
    q0.check_compatible(q1)?;
    let obj = Objective::new(q0, q1);
    Ok(obj.value(&gamma.grid_values(q0.intervals())).max(0.0))
}
