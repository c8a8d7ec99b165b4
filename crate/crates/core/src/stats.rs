//! Pairwise distance matrices and the aligned SRV mean.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::curve::SampledCurve;
use crate::error::{dim_mismatch, Error, Result};
use crate::lie::{dist_lie, dist_lie_shape, RotationCurve};
use crate::shape::{align_srv, dist_param, dist_shape, ShapeMatchOptions, SrvAlignment};
use crate::sphere::{dist_sphere_homogeneous, dist_sphere_shape, dist_tsrv, dist_tsrv_shape, SphereCurve};
use crate::srv::{l2_distance, srv_inverse, srv_transform, SrvFunction};

/// Where the sample values of a [`SampledCurve`] live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Points in R^d.
    Rd,
    /// Rotations, stored as row-major flattened n×n matrices.
    SoN,
    /// Unit vectors in R³, compared through horizontal lifts to SO(3).
    S2,
    /// Unit vectors in R³, compared through SRV values transported to one tangent plane.
    S2Tsrv,
}

/// A distance between sampled curves: the space, whether to quotient by the
/// group actions, and the matching options.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceKind {
    pub space: Space,
    pub shape: bool,
    pub opts: ShapeMatchOptions,
    /// Tangent plane for [`Space::S2Tsrv`]; defaults to the normalized mean of the samples.
    pub reference: Option<[f64; 3]>,
}

impl DistanceKind {
    pub fn new(space: Space, shape: bool) -> Self {
        Self {
            space,
            shape,
            opts: ShapeMatchOptions::default(),
            reference: None,
        }
    }

    pub fn label(&self) -> &'static str {
        match (self.space, self.shape) {
            (Space::Rd, false) => "param",
            (Space::Rd, true) => "shape",
            (Space::SoN, _) => "lie",
            (Space::S2, _) => "sphere",
            (Space::S2Tsrv, _) => "tsrv",
        }
    }
}

/// Reads a flattened SO(n) curve, snapping small orthogonality defects.
pub fn rotation_curve(c: &SampledCurve) -> Result<RotationCurve> {
    let n = (c.dim() as f64).sqrt().round() as usize;
    if n * n != c.dim() {
        return Err(Error::InvalidCurve(format!("{} entries per sample is not a square matrix", c.dim())));
    }
    RotationCurve::projected(c.points().map(|p| DMatrix::from_row_slice(n, n, p)).collect())
}

/// Normalized mean of all samples, used as the transport reference.
pub fn mean_direction<'a>(curves: impl IntoIterator<Item = &'a SampledCurve>) -> Result<[f64; 3]> {
    let mut m = [0.0; 3];
    for c in curves {
        if c.dim() != 3 {
            return Err(dim_mismatch(3, c.dim()));
        }
        for p in c.points() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    let len = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    if !(len > 1e-8) {
        return Err(Error::InvalidCurve("sample mean vanishes; pass an explicit reference point".into()));
    }
    Ok([m[0] / len, m[1] / len, m[2] / len])
}

/// The distance selected by `kind`.
pub fn distance(c0: &SampledCurve, c1: &SampledCurve, kind: &DistanceKind) -> Result<f64> {
    match kind.space {
        Space::Rd if kind.shape => Ok(dist_shape(c0, c1, &kind.opts)?.distance),
        Space::Rd => dist_param(c0, c1),
        Space::SoN => {
            let (r0, r1) = (rotation_curve(c0)?, rotation_curve(c1)?);
            if kind.shape {
                Ok(dist_lie_shape(&r0, &r1, &kind.opts)?.distance)
            } else {
                dist_lie(&r0, &r1)
            }
        }
        Space::S2 => {
            let (s0, s1) = (SphereCurve::projected(c0.clone())?, SphereCurve::projected(c1.clone())?);
            if kind.shape {
                Ok(dist_sphere_shape(&s0, &s1, &kind.opts)?.distance)
            } else {
                Ok(dist_sphere_homogeneous(&s0, &s1)?.0)
            }
        }
        Space::S2Tsrv => {
            let (s0, s1) = (SphereCurve::projected(c0.clone())?, SphereCurve::projected(c1.clone())?);
            let p = match kind.reference {
                Some(p) => p,
                None => mean_direction([c0, c1])?,
            };
            if kind.shape {
                Ok(dist_tsrv_shape(&s0, &s1, &p, &kind.opts)?.distance)
            } else {
                dist_tsrv(&s0, &s1, &p)
            }
        }
    }
}

/// Symmetric matrix of pairwise distances with its mode label.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub values: DMatrix<f64>,
    pub label: &'static str,
}

/// Distances for `i < j`, mirrored below the diagonal; the diagonal is zero.
/// Quotient distances are only approximately symmetric, so the upper
/// triangle is the one computed. With [`Space::S2Tsrv`] and no reference
/// point, one common reference is taken from all curves.
pub fn distance_matrix(curves: &[SampledCurve], kind: &DistanceKind) -> Result<DistanceMatrix> {
    if let Some(first) = curves.first() {
        for c in curves {
            if c.dim() != first.dim() || c.intervals() != first.intervals() {
                return Err(dim_mismatch(
                    format!("N={} d={}", first.intervals(), first.dim()),
                    format!("N={} d={}", c.intervals(), c.dim()),
                ));
            }
        }
    }
    let mut kind = kind.clone();
    if kind.space == Space::S2Tsrv && kind.reference.is_none() && !curves.is_empty() {
        kind.reference = Some(mean_direction(curves)?);
    }
    let m = curves.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let found: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| distance(&curves[i], &curves[j], &kind))
        .collect();
    let mut values = DMatrix::zeros(m, m);
    for (&(i, j), d) in pairs.iter().zip(found) {
        let d = d?;
        if !d.is_finite() {
            return Err(Error::Validation(format!("distance between curves {i} and {j} is not finite")));
        }
        values[(i, j)] = d;
        values[(j, i)] = d;
    }
    Ok(DistanceMatrix {
        values,
        label: kind.label(),
    })
}

/// Result of [`srv_mean`]: the template and the sum of squared aligned
/// distances to each successive template.
#[derive(Debug, Clone, PartialEq)]
pub struct SrvMean {
    pub curve: SampledCurve,
    pub objective: Vec<f64>,
}

struct Aligned {
    shift: usize,
    alignment: SrvAlignment,
}

/// Alignment of curve `c` to the template, trying every `seed_stride`-th
/// start point for closed curves and reusing `previous` when it is still better.
fn align_to(template: &SrvFunction, c: &SampledCurve, opts: &ShapeMatchOptions, previous: Option<&Aligned>) -> Result<Aligned> {
    let shifts: Vec<usize> = if c.is_closed() && (opts.quotient_reparam || opts.quotient_rotation) {
        (0..c.intervals()).step_by(opts.seed_stride.max(1)).collect()
    } else {
        vec![0]
    };
    let mut best: Option<Aligned> = None;
    for shift in shifts {
        let q = srv_transform(&c.cyclic_shift(shift));
        let alignment = align_srv(template, &q, opts)?;
        if best.as_ref().is_none_or(|b| alignment.energy < b.alignment.energy) {
            best = Some(Aligned { shift, alignment });
        }
    }
    let mut best = best.expect("at least one shift");
    if let Some(prev) = previous {
        let q = srv_transform(&c.cyclic_shift(prev.shift));
        let e = l2_distance(template, &prev.alignment.apply(&q)?)?.powi(2);
        if e <= best.alignment.energy {
            best = Aligned {
                shift: prev.shift,
                alignment: SrvAlignment {
                    energy: e,
                    ..prev.alignment.clone()
                },
            };
        }
    }
    Ok(best)
}

/// Iterated alignment and averaging in SRV space, starting from the first curve.
pub fn srv_mean(curves: &[SampledCurve], iters: usize, opts: &ShapeMatchOptions) -> Result<SrvMean> {
    let first = curves.first().ok_or_else(|| Error::InvalidCurve("the mean needs at least one curve".into()))?;
    for c in curves {
        if c.dim() != first.dim() || c.intervals() != first.intervals() {
            return Err(dim_mismatch(
                format!("N={} d={}", first.intervals(), first.dim()),
                format!("N={} d={}", c.intervals(), c.dim()),
            ));
        }
    }
    if curves.len() == 1 {
        return Ok(SrvMean {
            curve: first.clone(),
            objective: vec![0.0],
        });
    }
    let closed = curves.iter().all(|c| c.is_closed());
    let d = first.dim();
    let mut basepoint = vec![0.0; d];
    for c in curves {
        for (b, x) in basepoint.iter_mut().zip(c.point(0)) {
            *b += x / curves.len() as f64;
        }
    }
    let mut template_curve = first.clone();
    let mut template = srv_transform(first);
    let mut aligned: Vec<Option<Aligned>> = curves.iter().map(|_| None).collect();
    let mut objective = Vec::with_capacity(iters + 1);
    for it in 0..=iters {
        let next: Vec<Result<Aligned>> = curves
            .par_iter()
            .zip(aligned.par_iter())
            .map(|(c, prev)| align_to(&template, c, opts, prev.as_ref()))
            .collect();
        aligned = next.into_iter().map(|r| r.map(Some)).collect::<Result<Vec<_>>>()?;
        objective.push(aligned.iter().flatten().map(|a| a.alignment.energy).sum());
        if it == iters {
            break;
        }
        let mut sum = vec![0.0; template.as_slice().len()];
        for (c, a) in curves.iter().zip(aligned.iter().flatten()) {
            let q = a.alignment.apply(&srv_transform(&c.cyclic_shift(a.shift)))?;
            for (s, v) in sum.iter_mut().zip(q.as_slice()) {
                *s += v;
            }
        }
        for s in sum.iter_mut() {
            *s /= curves.len() as f64;
        }
        template = SrvFunction::new(d, sum, basepoint.clone())?;
        template_curve = srv_inverse(&template).with_closed(closed);
    }
    Ok(SrvMean {
        curve: template_curve,
        objective,
    })
}
