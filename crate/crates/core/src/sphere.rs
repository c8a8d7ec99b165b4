//! Curves on the unit sphere S² = SO(3)/SO(2): horizontal lifts, the product
//! distance minimized over the fiber, its geodesics, and the cheaper variant
//! that transports SRV values to one reference tangent plane.
//!
//! The base point is `p₀ = e₃` and the fiber group is the rotations about it.
//! Lifted SRV values are stored as 3-vectors `a` with `q = hat(a)`, so
//! `‖q‖_F² = 2|a|²` and a horizontal `q` has `a₃ = 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::curve::SampledCurve;
use crate::error::{dim_mismatch, Error, Result};
use crate::lie::{ensure_rotation, expm, hat, log_rotation, RotationCurve, WarpedDistance};
use crate::shape::{align_srv, optimal_warp, GeodesicPath, ShapeMatchOptions};
use crate::srv::{apply_reparam_srv, l2_distance, SrvFunction};
use crate::warp::Reparametrization;

pub const BASE_POINT: [f64; 3] = [0.0, 0.0, 1.0];
const UNIT_TOL: f64 = 1e-10;
/// Inputs off the sphere by less than this are renormalized on load.
pub const SPHERE_PROJECTION_TOL: f64 = 1e-6;
const ANTIPODAL_STEP_TOL: f64 = 1e-9;
const ANTIPODAL_REFERENCE_TOL: f64 = 1e-6;
const FIBER_GRID: usize = 720;
const FIBER_CANDIDATES: usize = 4;
const FIBER_TOL: f64 = 1e-10;
const ROUND_TOL: f64 = 1e-8;

type V3 = [f64; 3];

fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(a: &V3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn mat_vec(m: &DMatrix<f64>, v: &V3) -> V3 {
    [
        m[(0, 0)] * v[0] + m[(0, 1)] * v[1] + m[(0, 2)] * v[2],
        m[(1, 0)] * v[0] + m[(1, 1)] * v[1] + m[(1, 2)] * v[2],
        m[(2, 0)] * v[0] + m[(2, 1)] * v[1] + m[(2, 2)] * v[2],
    ]
}

fn mat_t_vec(m: &DMatrix<f64>, v: &V3) -> V3 {
    [
        m[(0, 0)] * v[0] + m[(1, 0)] * v[1] + m[(2, 0)] * v[2],
        m[(0, 1)] * v[0] + m[(1, 1)] * v[1] + m[(2, 1)] * v[2],
        m[(0, 2)] * v[0] + m[(1, 2)] * v[1] + m[(2, 2)] * v[2],
    ]
}

/// Angle between unit vectors, accurate near 0 and π.
fn angle_between(a: &V3, b: &V3) -> f64 {
    norm3(&cross(a, b)).atan2(dot(a, b))
}

/// Rotation by `theta` about the base point.
pub fn fiber_rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
}

/// `Rz(-θ) a`, i.e. `yᵀ a` for `y = fiber_rotation(θ)`.
fn unrotate(theta: f64, a: &[f64]) -> V3 {
    let (s, c) = theta.sin_cos();
    [c * a[0] + s * a[1], -s * a[0] + c * a[1], a[2]]
}

/// Sampled curve on S².
#[derive(Debug, Clone, PartialEq)]
pub struct SphereCurve {
    curve: SampledCurve,
}

impl SphereCurve {
    pub fn new(curve: SampledCurve) -> Result<Self> {
        if curve.dim() != 3 {
            return Err(dim_mismatch(3, curve.dim()));
        }
        for (i, x) in curve.points().enumerate() {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !((r - 1.0).abs() < UNIT_TOL) {
                return Err(Error::InvalidCurve(format!("sample {i} has norm {r}, not on the unit sphere")));
            }
        }
        Ok(Self { curve })
    }

    /// Renormalizes samples that are off the sphere by less than
    /// [`SPHERE_PROJECTION_TOL`].
    pub fn projected(curve: SampledCurve) -> Result<Self> {
        if curve.dim() != 3 {
            return Err(dim_mismatch(3, curve.dim()));
        }
        let closed = curve.is_closed();
        let mut data = curve.into_data();
        for (i, x) in data.chunks_exact_mut(3).enumerate() {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !((r - 1.0).abs() < SPHERE_PROJECTION_TOL) {
                return Err(Error::InvalidCurve(format!("sample {i} has norm {r}, not on the unit sphere")));
            }
            for v in x.iter_mut() {
                *v /= r;
            }
        }
        Self::new(SampledCurve::new(3, data, closed)?)
    }

    pub fn from_fn<F: FnMut(f64) -> Vec<f64>>(intervals: usize, f: F) -> Result<Self> {
        Self::projected(SampledCurve::from_fn(intervals, false, f)?)
    }

    pub fn curve(&self) -> &SampledCurve {
        &self.curve
    }

    pub fn into_curve(self) -> SampledCurve {
        self.curve
    }

    pub fn intervals(&self) -> usize {
        self.curve.intervals()
    }

    pub fn point(&self, i: usize) -> V3 {
        let p = self.curve.point(i);
        [p[0], p[1], p[2]]
    }

    /// `g · c(u)` pointwise.
    pub fn rotated(&self, g: &DMatrix<f64>) -> Result<Self> {
        Self::projected(self.curve.transformed(g)?)
    }

    /// Samples of `c ∘ γ` with great-circle interpolation between samples.
    pub fn reparametrized(&self, gamma: &Reparametrization) -> Result<Self> {
        let n = self.intervals();
        let pts: Vec<Vec<f64>> = (0..=n)
            .map(|i| {
                let x = gamma.eval(i as f64 / n as f64) * n as f64;
                let k = (x.floor() as usize).min(n - 1);
                slerp(&self.point(k), &self.point(k + 1), x - k as f64).to_vec()
            })
            .collect();
        Self::projected(SampledCurve::from_points(&pts, self.curve.is_closed())?)
    }
}

fn slerp(a: &V3, b: &V3, s: f64) -> V3 {
    let omega = angle_between(a, b);
    if omega < 1e-12 {
        return *a;
    }
    let (wa, wb) = (((1.0 - s) * omega).sin() / omega.sin(), (s * omega).sin() / omega.sin());
    [wa * a[0] + wb * b[0], wa * a[1] + wb * b[1], wa * a[2] + wb * b[2]]
}

/// Rotation taking the base point to `x` about the axis `p₀ × x`; the
/// antipode uses a half turn about e₁.
pub fn canonical_frame(x: &V3) -> DMatrix<f64> {
    let axis = cross(&BASE_POINT, x);
    let s = norm3(&axis);
    if s == 0.0 {
        return if x[2] > 0.0 {
            DMatrix::identity(3, 3)
        } else {
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, -1.0]))
        };
    }
    let theta = s.atan2(x[2]);
    expm(&hat(scale(&axis, theta / s)))
}

/// Lift and SRV values of a sphere curve; `omega[k]` is the rotation vector
/// of the step `R_kᵀ R_{k+1}`.
fn lift_steps(c: &SphereCurve, frame0: Option<&DMatrix<f64>>) -> Result<(Vec<DMatrix<f64>>, Vec<V3>)> {
    let x0 = c.point(0);
    let frame = match frame0 {
        Some(f) => {
            let f = ensure_rotation(f)?;
            if f.nrows() != 3 {
                return Err(dim_mismatch(3, f.nrows()));
            }
            let p = mat_vec(&f, &BASE_POINT);
            if norm3(&[p[0] - x0[0], p[1] - x0[1], p[2] - x0[2]]) > 1e-8 {
                return Err(Error::InvalidCurve("initial frame does not map the base point to c(0)".into()));
            }
            f
        }
        None => canonical_frame(&x0),
    };
    let n = c.intervals();
    let mut frames = Vec::with_capacity(n + 1);
    let mut omegas = Vec::with_capacity(n);
    frames.push(frame);
    for k in 0..n {
        let r = &frames[k];
        let w = mat_t_vec(r, &c.point(k + 1));
        let axis = cross(&BASE_POINT, &w);
        let s = norm3(&axis);
        let phi = s.atan2(w[2]);
        if phi > PI - ANTIPODAL_STEP_TOL {
            return Err(Error::AntipodalStep { index: k });
        }
        let omega = if s > 0.0 { scale(&axis, phi / s) } else { [0.0; 3] };
        let next = r * expm(&hat(omega));
        frames.push(next);
        omegas.push(omega);
    }
    Ok((frames, omegas))
}

/// Horizontal curve in SO(3) over `c`: `R(0) = frame0` (or the canonical
/// frame), and each step rotates about an axis orthogonal to the base point
/// so that `R_{k+1} p₀ = c_{k+1}`.
pub fn horizontal_lift(c: &SphereCurve, frame0: Option<&DMatrix<f64>>) -> Result<RotationCurve> {
    RotationCurve::new(lift_steps(c, frame0)?.0)
}

/// `π(R) = R p₀` applied to every sample.
pub fn project_to_sphere(r: &RotationCurve) -> Result<SphereCurve> {
    let pts: Vec<Vec<f64>> = r.samples().iter().map(|m| mat_vec(m, &BASE_POINT).to_vec()).collect();
    SphereCurve::projected(SampledCurve::from_points(&pts, false)?)
}

/// SRV representation of the horizontal lift: start frame and the vectors
/// `a_k` with `q_k = hat(a_k)` orthogonal to the fiber direction.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSrv {
    start_frame: DMatrix<f64>,
    values: SrvFunction,
}

impl HomogeneousSrv {
    pub fn new(c: &SphereCurve) -> Result<Self> {
        Self::with_frame(c, None)
    }

    pub fn with_frame(c: &SphereCurve, frame0: Option<&DMatrix<f64>>) -> Result<Self> {
        let (frames, omegas) = lift_steps(c, frame0)?;
        let n = omegas.len() as f64;
        let mut values = Vec::with_capacity(3 * omegas.len());
        for w in &omegas {
            let v = scale(w, n);
            let fro = std::f64::consts::SQRT_2 * norm3(&v);
            let a = if fro > 0.0 { scale(&v, 1.0 / fro.sqrt()) } else { [0.0; 3] };
            values.extend_from_slice(&a);
        }
        let basepoint = c.point(0).to_vec();
        Ok(Self {
            start_frame: frames[0].clone(),
            values: SrvFunction::new(3, values, basepoint)?,
        })
    }

    pub fn start_frame(&self) -> &DMatrix<f64> {
        &self.start_frame
    }

    pub fn vectors(&self) -> &SrvFunction {
        &self.values
    }

    /// `q_k` as antisymmetric matrices.
    pub fn q_matrices(&self) -> Vec<DMatrix<f64>> {
        self.values.values().map(|a| hat([a[0], a[1], a[2]])).collect()
    }

    /// Integrates `R_{k+1} = R_k exp(h ‖q_k‖ q_k)` and projects through `π`.
    pub fn to_curve(&self) -> Result<SphereCurve> {
        integrate(&self.start_frame, &self.values)
    }
}

fn integrate(start: &DMatrix<f64>, a: &SrvFunction) -> Result<SphereCurve> {
    let h = 1.0 / a.intervals() as f64;
    let mut r = start.clone();
    let mut pts = Vec::with_capacity(a.intervals() + 1);
    pts.push(mat_vec(&r, &BASE_POINT).to_vec());
    for v in a.values() {
        let v = [v[0], v[1], v[2]];
        let fro = std::f64::consts::SQRT_2 * norm3(&v);
        r = &r * expm(&hat(scale(&v, h * fro)));
        pts.push(mat_vec(&r, &BASE_POINT).to_vec());
    }
    SphereCurve::projected(SampledCurve::from_points(&pts, false)?)
}

/// Objective over the fiber angle θ:
/// `‖log(F0ᵀ F1 y)‖_F² + h Σ ‖q0_k - yᵀ q1_k y‖_F²` with `y = fiber_rotation(θ)`.
/// The sum is `2h Σ |a0 - yᵀ a1|²`, a trigonometric polynomial of degree one.
#[derive(Debug, Clone)]
pub struct FiberProblem {
    relative: DMatrix<f64>,
    constant: f64,
    cos_coeff: f64,
    sin_coeff: f64,
}

impl FiberProblem {
    pub fn new(s0: &HomogeneousSrv, s1: &HomogeneousSrv) -> Result<Self> {
        Self::from_parts(&s0.start_frame, &s0.values, &s1.start_frame, &s1.values)
    }

    pub(crate) fn from_parts(f0: &DMatrix<f64>, a0: &SrvFunction, f1: &DMatrix<f64>, a1: &SrvFunction) -> Result<Self> {
        a0.check_compatible(a1)?;
        let h = 1.0 / a0.intervals() as f64;
        let (mut sq, mut cc, mut ss) = (0.0, 0.0, 0.0);
        for (x, y) in a0.values().zip(a1.values()) {
            sq += x.iter().map(|v| v * v).sum::<f64>() + y.iter().map(|v| v * v).sum::<f64>();
            // a0 · Rz(-θ) a1 = cos θ (x₀y₀ + x₁y₁) + sin θ (x₀y₁ - x₁y₀) + x₂y₂
            cc += x[0] * y[0] + x[1] * y[1];
            ss += x[0] * y[1] - x[1] * y[0];
            sq -= 2.0 * x[2] * y[2];
        }
        Ok(Self {
            relative: f0.transpose() * f1,
            constant: 2.0 * h * sq,
            cos_coeff: -4.0 * h * cc,
            sin_coeff: -4.0 * h * ss,
        })
    }

    pub fn objective(&self, theta: f64) -> f64 {
        let m = &self.relative * fiber_rotation(theta);
        let w = crate::lie::vee(&m);
        let angle = norm3(&w).atan2(0.5 * (m.trace() - 1.0));
        let (s, c) = theta.sin_cos();
        let srv = self.constant + self.cos_coeff * c + self.sin_coeff * s;
        2.0 * angle * angle + srv.max(0.0)
    }

    /// Grid search over [`FIBER_GRID`] angles, then golden-section refinement
    /// around the best local minima. Returns `(minimum, θ*)` with `θ* ∈ [0, 2π)`.
    pub fn minimize(&self) -> (f64, f64) {
        let step = 2.0 * PI / FIBER_GRID as f64;
        let values: Vec<f64> = (0..FIBER_GRID).map(|i| self.objective(i as f64 * step)).collect();
        let mut minima: Vec<usize> = (0..FIBER_GRID)
            .filter(|&i| {
                let prev = values[(i + FIBER_GRID - 1) % FIBER_GRID];
                let next = values[(i + 1) % FIBER_GRID];
                values[i] <= prev && values[i] <= next
            })
            .collect();
        minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        minima.truncate(FIBER_CANDIDATES);
        let mut best = (values[minima[0]], minima[0] as f64 * step);
        for &i in &minima {
            let center = i as f64 * step;
            let (t, v) = golden_section(|t| self.objective(t), center - step, center + step, FIBER_TOL);
            if v < best.0 {
                best = (v, t);
            }
        }
        let mut theta = best.1.rem_euclid(2.0 * PI);
        if theta >= 2.0 * PI {
            theta = 0.0;
        }
        (best.0, theta)
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn check_pair(c0: &SphereCurve, c1: &SphereCurve) -> Result<()> {
    if c0.intervals() != c1.intervals() {
        return Err(dim_mismatch(format!("N={}", c0.intervals()), format!("N={}", c1.intervals())));
    }
    Ok(())
}

/// Distance between sphere curves through their horizontal lifts, minimized
/// over the fiber. Returns `(distance, θ*)`.
pub fn dist_sphere_homogeneous(c0: &SphereCurve, c1: &SphereCurve) -> Result<(f64, f64)> {
    check_pair(c0, c1)?;
    let problem = FiberProblem::new(&HomogeneousSrv::new(c0)?, &HomogeneousSrv::new(c1)?)?;
    let (value, theta) = problem.minimize();
    Ok((value.max(0.0).sqrt(), theta))
}

/// A discrete path of sphere curves at times `j / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePath {
    pub curves: Vec<SphereCurve>,
    pub times: Vec<f64>,
}

/// Geodesic in the lifted product space after fiber alignment, projected
/// back to the sphere slice by slice.
pub fn geodesic_sphere_homogeneous(c0: &SphereCurve, c1: &SphereCurve, steps: usize) -> Result<SpherePath> {
    check_pair(c0, c1)?;
    if steps == 0 {
        return Err(Error::InvalidCurve("a geodesic needs at least one step".into()));
    }
    let (s0, s1) = (HomogeneousSrv::new(c0)?, HomogeneousSrv::new(c1)?);
    let (_, theta) = FiberProblem::new(&s0, &s1)?.minimize();
    let start1 = &s1.start_frame * fiber_rotation(theta);
    let a1: Vec<f64> = s1.values.values().flat_map(|a| unrotate(theta, a)).collect();
    let a1 = SrvFunction::from_values(3, a1)?;
    geodesic_between(c0, c1, &s0.start_frame, &s0.values, &start1, &a1, steps)
}

fn geodesic_between(
    c0: &SphereCurve,
    c1: &SphereCurve,
    f0: &DMatrix<f64>,
    a0: &SrvFunction,
    f1: &DMatrix<f64>,
    a1: &SrvFunction,
    steps: usize,
) -> Result<SpherePath> {
    let rel = log_rotation(&(f0.transpose() * f1))?;
    let times = GeodesicPath::times(steps);
    let mut curves = Vec::with_capacity(steps + 1);
    for (j, &t) in times.iter().enumerate() {
        let curve = if j == 0 {
            c0.clone()
        } else if j == steps {
            c1.clone()
        } else {
            integrate(&(f0 * expm(&(&rel * t))), &a0.lerp(a1, t)?)?
        };
        curves.push(curve);
    }
    Ok(SpherePath { curves, times })
}

/// Result of [`dist_sphere_shape`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphereShapeResult {
    pub distance: f64,
    pub fiber_angle: f64,
    pub gamma: Reparametrization,
    pub energy_trace: Vec<f64>,
}

/// Homogeneous distance minimized over the fiber and over warps of `c1`,
/// alternating the fiber search with DP on the lifted SRV vectors.
pub fn dist_sphere_shape(c0: &SphereCurve, c1: &SphereCurve, opts: &ShapeMatchOptions) -> Result<SphereShapeResult> {
    check_pair(c0, c1)?;
    let (s0, s1) = (HomogeneousSrv::new(c0)?, HomogeneousSrv::new(c1)?);
    let problem_for = |a1: &SrvFunction| FiberProblem::from_parts(&s0.start_frame, &s0.values, &s1.start_frame, a1);
    let (e0, t0) = problem_for(&s1.values)?.minimize();
    let mut best = SphereShapeResult {
        distance: e0,
        fiber_angle: t0,
        gamma: Reparametrization::identity(),
        energy_trace: vec![e0],
    };
    if opts.quotient_reparam {
        let mut theta = t0;
        let mut previous = e0;
        for round in 0..opts.outer_iters.max(1) {
            let turned: Vec<f64> = s1.values.values().flat_map(|a| unrotate(theta, a)).collect();
            let turned = SrvFunction::from_values(3, turned)?;
            let gamma = optimal_warp(&s0.values, &turned, &opts.dp, opts.refine, opts.refine_iters)?;
            let warped = apply_reparam_srv(&s1.values, &gamma);
            let problem = problem_for(&warped)?;
            let e = problem.objective(theta);
            if e < best.distance {
                best.distance = e;
                best.gamma = gamma.clone();
                best.fiber_angle = theta;
            }
            let (e, t) = problem.minimize();
            theta = t;
            if e < best.distance {
                best.distance = e;
                best.gamma = gamma;
                best.fiber_angle = t;
            }
            best.energy_trace.push(best.distance);
            if round >= 1 && previous - best.distance < ROUND_TOL {
                break;
            }
            previous = best.distance;
        }
    }
    best.distance = best.distance.max(0.0).sqrt();
    Ok(best)
}

/// Reference point for the transported variant: the normalized mean of all
/// samples of both curves.
pub fn default_reference(c0: &SphereCurve, c1: &SphereCurve) -> Result<V3> {
    crate::stats::mean_direction([c0.curve(), c1.curve()])
}

/// Parallel transport of `v ∈ T_x S²` to `T_p S²` along the minimizing great circle.
fn transport(x: &V3, p: &V3, v: &V3) -> V3 {
    let f = dot(p, v) / (1.0 + dot(x, p));
    [v[0] - f * (x[0] + p[0]), v[1] - f * (x[1] + p[1]), v[2] - f * (x[2] + p[2])]
}

/// `Log_x(y)`: tangent at `x` pointing to `y` with length the arc distance.
fn sphere_log(x: &V3, y: &V3) -> V3 {
    let d = dot(x, y);
    let perp = [y[0] - d * x[0], y[1] - d * x[1], y[2] - d * x[2]];
    let len = norm3(&perp);
    if len == 0.0 {
        return [0.0; 3];
    }
    scale(&perp, angle_between(x, y) / len)
}

/// SRV values `c'/√|c'|`, each transported from `c(t_k)` to the tangent
/// plane at `p`. The result lives in `T_p S²`; its basepoint is `c(0)`.
pub fn tsrv_reference(c: &SphereCurve, p: &V3) -> Result<SrvFunction> {
    if !((norm3(p) - 1.0).abs() < UNIT_TOL) {
        return Err(Error::InvalidCurve(format!("reference point has norm {}", norm3(p))));
    }
    let n = c.intervals();
    for i in 0..=n {
        if angle_between(&c.point(i), p) > PI - ANTIPODAL_REFERENCE_TOL {
            return Err(Error::AntipodalReference { index: i });
        }
    }
    let mut values = Vec::with_capacity(3 * n);
    for k in 0..n {
        let (x, y) = (c.point(k), c.point(k + 1));
        if angle_between(&x, &y) > PI - ANTIPODAL_STEP_TOL {
            return Err(Error::AntipodalStep { index: k });
        }
        let v = scale(&sphere_log(&x, &y), n as f64);
        let speed = norm3(&v);
        let q = if speed > 0.0 { scale(&v, 1.0 / speed.sqrt()) } else { [0.0; 3] };
        values.extend_from_slice(&transport(&x, p, &q));
    }
    SrvFunction::new(3, values, c.point(0).to_vec())
}

/// L² distance of the transported SRV functions.
pub fn dist_tsrv(c0: &SphereCurve, c1: &SphereCurve, p: &V3) -> Result<f64> {
    check_pair(c0, c1)?;
    l2_distance(&tsrv_reference(c0, p)?, &tsrv_reference(c1, p)?)
}

/// [`dist_tsrv`] minimized over warps of `c1`.
pub fn dist_tsrv_shape(c0: &SphereCurve, c1: &SphereCurve, p: &V3, opts: &ShapeMatchOptions) -> Result<WarpedDistance> {
    check_pair(c0, c1)?;
    let opts = ShapeMatchOptions {
        quotient_rotation: false,
        ..opts.clone()
    };
    let a = align_srv(&tsrv_reference(c0, p)?, &tsrv_reference(c1, p)?, &opts)?;
    Ok(WarpedDistance {
        distance: a.energy.max(0.0).sqrt(),
        gamma: a.gamma,
        energy_trace: a.trace,
    })
}
