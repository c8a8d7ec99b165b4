//! Geodesics and distances between curves in R^d, parametrized and modulo
//! rotations and reparametrizations.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::curve::{apply_reparam_curve, SampledCurve};
use crate::dp::{dp_match, DpConfig};
use crate::error::{dim_mismatch, Error, Result};
use crate::procrustes::procrustes_srv;
use crate::refine::gradient_refine;
use crate::srv::{apply_reparam_srv, l2_distance, srv_inverse, srv_transform, SrvFunction};
use crate::warp::Reparametrization;

/// Stop the alternation once a round improves the energy by less than this.
const ROUND_TOL: f64 = 1e-8;

/// A discrete path of curves at times `j / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub curves: Vec<SampledCurve>,
    pub times: Vec<f64>,
}

impl GeodesicPath {
    pub(crate) fn times(steps: usize) -> Vec<f64> {
        (0..=steps).map(|j| j as f64 / steps as f64).collect()
    }

    /// Sum of L² distances between the SRV functions of consecutive curves.
    pub fn srv_length(&self) -> Result<f64> {
        let qs: Vec<SrvFunction> = self.curves.iter().map(srv_transform).collect();
        qs.windows(2).map(|w| l2_distance(&w[0], &w[1])).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMatchOptions {
    pub quotient_rotation: bool,
    pub quotient_reparam: bool,
    pub outer_iters: usize,
    pub dp: DpConfig,
    /// Polish each DP warp with [`gradient_refine`].
    pub refine: bool,
    pub refine_iters: usize,
    /// Closed curves: try every `seed_stride`-th cyclic shift of the second curve.
    pub seed_stride: usize,
}

impl Default for ShapeMatchOptions {
    fn default() -> Self {
        Self {
            quotient_rotation: true,
            quotient_reparam: true,
            outer_iters: 5,
            dp: DpConfig::default(),
            refine: false,
            refine_iters: 200,
            seed_stride: 1,
        }
    }
}

impl ShapeMatchOptions {
    /// No quotient at all; [`dist_shape`] then equals [`dist_param`].
    pub fn parametrized() -> Self {
        Self {
            quotient_rotation: false,
            quotient_reparam: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDistanceResult {
    pub distance: f64,
    pub rotation: DMatrix<f64>,
    pub gamma: Reparametrization,
    pub seed_shift: usize,
    pub energy_trace: Vec<f64>,
}

fn check_pair(c0: &SampledCurve, c1: &SampledCurve) -> Result<()> {
    if c0.dim() != c1.dim() || c0.intervals() != c1.intervals() {
        return Err(dim_mismatch(
            format!("N={} d={}", c0.intervals(), c0.dim()),
            format!("N={} d={}", c1.intervals(), c1.dim()),
        ));
    }
    Ok(())
}

/// `c(t) = Q⁻¹((1 - t) Q(c0) + t Q(c1))` with the starting points joined by a
/// straight line.
pub fn geodesic_open(c0: &SampledCurve, c1: &SampledCurve, steps: usize) -> Result<GeodesicPath> {
    check_pair(c0, c1)?;
    if steps == 0 {
        return Err(Error::InvalidCurve("a geodesic needs at least one step".into()));
    }
    let (q0, q1) = (srv_transform(c0), srv_transform(c1));
    let times = GeodesicPath::times(steps);
    let mut curves = Vec::with_capacity(steps + 1);
    for (j, &t) in times.iter().enumerate() {
        let curve = if j == 0 {
            c0.clone()
        } else if j == steps {
            c1.clone()
        } else {
            srv_inverse(&q0.lerp(&q1, t)?)
        };
        curves.push(curve.with_closed(c0.is_closed() && c1.is_closed()));
    }
    Ok(GeodesicPath { curves, times })
}

/// Parametrized SRV distance `‖Q(c0) - Q(c1)‖`.
pub fn dist_param(c0: &SampledCurve, c1: &SampledCurve) -> Result<f64> {
    check_pair(c0, c1)?;
    l2_distance(&srv_transform(c0), &srv_transform(c1))
}

/// DP warp of `q1` onto `q0`, optionally polished by gradient refinement.
pub(crate) fn optimal_warp(
    q0: &SrvFunction,
    q1: &SrvFunction,
    dp: &DpConfig,
    refine: bool,
    refine_iters: usize,
) -> Result<Reparametrization> {
    let m = dp_match(q0, q1, dp)?;
    if !refine {
        return Ok(m.gamma);
    }
    let step = 1.0 / q0.intervals() as f64;
    Ok(gradient_refine(q0, q1, &m.gamma, refine_iters, step)?.gamma)
}

#[derive(Debug, Clone)]
pub(crate) struct SrvAlignment {
    pub rotation: DMatrix<f64>,
    pub gamma: Reparametrization,
    pub energy: f64,
    pub trace: Vec<f64>,
}

impl SrvAlignment {
    /// `R (q1 * γ)`.
    pub fn apply(&self, q1: &SrvFunction) -> Result<SrvFunction> {
        apply_reparam_srv(q1, &self.gamma).transformed(&self.rotation)
    }
}

/// Alternating minimization of `‖q0 - R (q1 * γ)‖²` over rotations and warps.
/// The best candidate seen after any half-step is kept, so the energy never
/// exceeds the unaligned one.
pub(crate) fn align_srv(q0: &SrvFunction, q1: &SrvFunction, opts: &ShapeMatchOptions) -> Result<SrvAlignment> {
    q0.check_compatible(q1)?;
    let d = q0.dim();
    let energy_of = |r: &DMatrix<f64>, warped: &SrvFunction| -> Result<f64> {
        Ok(l2_distance(q0, &warped.transformed(r)?)?.powi(2))
    };
    let mut rotation = DMatrix::<f64>::identity(d, d);
    let mut gamma = Reparametrization::identity();
    let mut warped = q1.clone();
    let mut best = SrvAlignment {
        rotation: rotation.clone(),
        gamma: gamma.clone(),
        energy: energy_of(&rotation, &warped)?,
        trace: Vec::new(),
    };
    best.trace.push(best.energy);
    if !opts.quotient_rotation && !opts.quotient_reparam {
        return Ok(best);
    }
    let consider = |best: &mut SrvAlignment, r: &DMatrix<f64>, g: &Reparametrization, e: f64| {
        if e < best.energy {
            best.rotation = r.clone();
            best.gamma = g.clone();
            best.energy = e;
        }
    };
    let mut previous = best.energy;
    for round in 0..opts.outer_iters.max(1) {
        if opts.quotient_rotation {
            match procrustes_srv(q0, &warped) {
                Ok(r) => rotation = r,
                Err(Error::DegenerateCovariance) => {}
                Err(e) => return Err(e),
            }
            let e = energy_of(&rotation, &warped)?;
            consider(&mut best, &rotation, &gamma, e);
        }
        if opts.quotient_reparam {
            let rotated = q1.transformed(&rotation)?;
            gamma = optimal_warp(q0, &rotated, &opts.dp, opts.refine, opts.refine_iters)?;
            warped = apply_reparam_srv(q1, &gamma);
            let e = energy_of(&rotation, &warped)?;
            consider(&mut best, &rotation, &gamma, e);
        }
        best.trace.push(best.energy);
        if round >= 1 && previous - best.energy < ROUND_TOL {
            break;
        }
        previous = best.energy;
    }
    Ok(best)
}

/// Shape distance modulo the quotients selected in `opts`. Translations are
/// always factored out since the SRV transform ignores the starting point.
/// For closed curves the alternation runs for every `seed_stride`-th cyclic
/// shift of `c1` and the best shift wins (smallest shift on ties).
pub fn dist_shape(c0: &SampledCurve, c1: &SampledCurve, opts: &ShapeMatchOptions) -> Result<ShapeDistanceResult> {
    check_pair(c0, c1)?;
    if c0.is_closed() != c1.is_closed() {
        return Err(Error::InvalidCurve("cannot compare an open curve with a closed one".into()));
    }
    let q0 = srv_transform(c0);
    let shifts: Vec<usize> = if c0.is_closed() && (opts.quotient_reparam || opts.quotient_rotation) {
        (0..c1.intervals()).step_by(opts.seed_stride.max(1)).collect()
    } else {
        vec![0]
    };
    let results: Vec<Result<(usize, SrvAlignment)>> = shifts
        .par_iter()
        .map(|&s| {
            let q1 = srv_transform(&c1.cyclic_shift(s));
            align_srv(&q0, &q1, opts).map(|a| (s, a))
        })
        .collect();
    let mut best: Option<(usize, SrvAlignment)> = None;
    for r in results {
        let (s, a) = r?;
        if best.as_ref().is_none_or(|(_, b)| a.energy < b.energy) {
            best = Some((s, a));
        }
    }
    let (seed_shift, a) = best.expect("at least one shift");
    Ok(ShapeDistanceResult {
        distance: a.energy.max(0.0).sqrt(),
        rotation: a.rotation,
        gamma: a.gamma,
        seed_shift,
        energy_trace: a.trace,
    })
}

/// The second curve moved into optimal position: `R (shift(c1) ∘ γ)`.
pub fn aligned_curve(c1: &SampledCurve, result: &ShapeDistanceResult) -> Result<SampledCurve> {
    let shifted = c1.cyclic_shift(result.seed_shift);
    apply_reparam_curve(&shifted, &result.gamma).transformed(&result.rotation)
}
