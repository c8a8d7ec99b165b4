//! Closed curves: projection onto the closed-curve submanifold and
//! projected geodesics.
//!
//! The closure residual of an SRV function is `G(q) = ∫ |q| q`, i.e.
//! `c(1) - c(0)`. Projection runs Gauss–Newton on `G`, taking at each step the
//! minimum-norm correction `δ = -Jᵀ (J Jᵀ)⁻¹ G` with `J` the derivative of `G`;
//! `J Jᵀ` is only `d x d`.

use nalgebra::{DMatrix, DVector};

use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::shape::{geodesic_open, GeodesicPath};
use crate::srv::{srv_inverse, srv_transform, SrvFunction};

pub const DEFAULT_CLOSURE_TOL: f64 = 1e-8;
pub const DEFAULT_PROJECTION_ITERS: usize = 100;

/// Projected curves shorter than this fraction of the input count as collapsed.
const COLLAPSE_RATIO: f64 = 1e-3;

/// `c(1) - c(0)` of `Q⁻¹(q)`, accumulated in the same order as [`srv_inverse`].
fn residual(q: &SrvFunction, start: &[f64]) -> Vec<f64> {
    let h = 1.0 / q.intervals() as f64;
    let mut cur = start.to_vec();
    for v in q.values() {
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (c, x) in cur.iter_mut().zip(v) {
            *c += h * len * x;
        }
    }
    cur.iter().zip(start).map(|(a, b)| a - b).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimum-norm Gauss–Newton correction for the closure residual `g`.
fn correction(q: &SrvFunction, g: &[f64]) -> Option<Vec<f64>> {
    let d = q.dim();
    let h = 1.0 / q.intervals() as f64;
    // J_k = h (|q| I + q qᵀ / |q|), so J_k J_kᵀ = h² (|q|² I + 3 q qᵀ)
    let mut a = DMatrix::<f64>::zeros(d, d);
    for v in q.values() {
        let sq: f64 = v.iter().map(|x| x * x).sum();
        for r in 0..d {
            a[(r, r)] += h * h * sq;
            for c in 0..d {
                a[(r, c)] += 3.0 * h * h * v[r] * v[c];
            }
        }
    }
    let lambda = a.lu().solve(&DVector::from_column_slice(g))?;
    if lambda.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let mut delta = Vec::with_capacity(q.as_slice().len());
    for v in q.values() {
        let len = norm(v);
        let dot: f64 = v.iter().zip(lambda.iter()).map(|(x, l)| x * l).sum();
        for (r, x) in v.iter().enumerate() {
            let jl = if len > 0.0 { h * (len * lambda[r] + x * dot / len) } else { 0.0 };
            delta.push(-jl);
        }
    }
    Some(delta)
}

/// Moves `Q(c)` to a nearby SRV function whose curve closes up to `tol`.
///
/// Fails with [`Error::ProjectionDiverged`] when the residual does not drop
/// below `tol` within `max_iter` steps or the curve collapses toward a point.
pub fn project_closed(c: &SampledCurve, tol: f64, max_iter: usize) -> Result<SampledCurve> {
    let start = c.point(0).to_vec();
    let mut q = srv_transform(c);
    let mut g = residual(&q, &start);
    let mut gnorm = norm(&g);
    if gnorm < tol {
        return Ok(c.clone().with_closed(true));
    }
    let initial_length = c.length();
    let diverged = |iterations, residual| Error::ProjectionDiverged { iterations, residual };
    let mut iterations = 0;
    while gnorm >= tol {
        if iterations == max_iter {
            return Err(diverged(iterations, gnorm));
        }
        iterations += 1;
        let delta = correction(&q, &g).ok_or(diverged(iterations, gnorm))?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let values: Vec<f64> = q.as_slice().iter().zip(&delta).map(|(a, b)| a + step * b).collect();
            let trial = SrvFunction::new(q.dim(), values, start.clone())?;
            let tg = residual(&trial, &start);
            let tn = norm(&tg);
            if tn < gnorm {
                q = trial;
                g = tg;
                gnorm = tn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(diverged(iterations, gnorm));
        }
    }
    let out = srv_inverse(&q).with_closed(true);
    if out.length() < COLLAPSE_RATIO * initial_length {
        return Err(diverged(iterations, gnorm));
    }
    Ok(out)
}

/// Open-curve geodesic with every slice projected onto the closed curves.
pub fn geodesic_closed(c0: &SampledCurve, c1: &SampledCurve, steps: usize) -> Result<GeodesicPath> {
    let close = |c: &SampledCurve| -> Result<SampledCurve> {
        if c.closure_gap() < DEFAULT_CLOSURE_TOL {
            Ok(c.clone().with_closed(true))
        } else {
            project_closed(c, DEFAULT_CLOSURE_TOL, DEFAULT_PROJECTION_ITERS)
        }
    };
    let (c0, c1) = (close(c0)?, close(c1)?);
    let mut path = geodesic_open(&c0, &c1, steps)?;
    let last = path.curves.len() - 1;
    for (j, curve) in path.curves.iter_mut().enumerate() {
        if j != 0 && j != last {
            *curve = project_closed(curve, DEFAULT_CLOSURE_TOL, DEFAULT_PROJECTION_ITERS)?;
        }
    }
    Ok(path)
}
