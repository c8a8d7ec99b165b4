//! Uniformly sampled curves in R^d.

use crate::error::{Error, Result};
use crate::warp::Reparametrization;

/// A curve in R^d sampled at `N + 1` points of the uniform grid `t_i = i / N`.
///
/// Points are stored contiguously, `dim` coordinates per sample. A closed curve
/// keeps its last sample; the closure gap `|c(1) - c(0)|` is not forced to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    dim: usize,
    data: Vec<f64>,
    closed: bool,
}

impl SampledCurve {
    pub fn new(dim: usize, data: Vec<f64>, closed: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCurve("dimension must be positive".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidCurve(format!(
                "{} coordinates do not split into points of dimension {dim}",
                data.len()
            )));
        }
        if data.len() / dim < 2 {
            return Err(Error::InvalidCurve("a curve needs at least 2 samples".into()));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidCurve(format!(
                "non-finite coordinate in sample {}",
                pos / dim
            )));
        }
        Ok(Self { dim, data, closed })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P], closed: bool) -> Result<Self> {
        let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::InvalidCurve(format!(
                    "sample {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            data.extend_from_slice(p);
        }
        Self::new(dim, data, closed)
    }

    /// Samples `f` on the uniform grid with `n` intervals.
    pub fn from_fn<F>(n: usize, closed: bool, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Vec<f64>,
    {
        let points: Vec<Vec<f64>> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        Self::from_points(&points, closed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid intervals `N`.
    pub fn intervals(&self) -> usize {
        self.data.len() / self.dim - 1
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn with_closed(mut self, closed: bool) -> Self {
        self.closed = closed;
        self
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// `|c(1) - c(0)|`.
    pub fn closure_gap(&self) -> f64 {
        let last = self.intervals();
        dist(self.point(last), self.point(0))
    }

    /// Total chord length of the polyline.
    pub fn length(&self) -> f64 {
        self.data
            .chunks_exact(self.dim)
            .zip(self.data.chunks_exact(self.dim).skip(1))
            .map(|(a, b)| dist(a, b))
            .sum()
    }

    /// Adds `offset` to every sample.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(crate::error::dim_mismatch(self.dim, offset.len()));
        }
        let mut data = self.data.clone();
        for p in data.chunks_exact_mut(self.dim) {
            for (x, o) in p.iter_mut().zip(offset) {
                *x += o;
            }
        }
        Ok(Self { data, ..self.clone() })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|x| x * s).collect(),
            ..self.clone()
        }
    }

    /// Applies the row-major `dim x dim` matrix `m` to every sample.
    pub fn transformed(&self, m: &nalgebra::DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(crate::error::dim_mismatch(
                format!("{0}x{0}", self.dim),
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        let mut data = vec![0.0; self.data.len()];
        for (out, p) in data
            .chunks_exact_mut(self.dim)
            .zip(self.data.chunks_exact(self.dim))
        {
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..self.dim).map(|c| m[(r, c)] * p[c]).sum();
            }
        }
        Ok(Self { data, ..self.clone() })
    }

    /// Evaluates the piecewise-linear interpolant at parameter `u` in `[0, 1]`.
    pub fn eval(&self, u: f64) -> Vec<f64> {
        let n = self.intervals();
        let x = (u.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let k = (x.floor() as usize).min(n - 1);
        let frac = x - k as f64;
        let (a, b) = (self.point(k), self.point(k + 1));
        a.iter().zip(b).map(|(a, b)| a + frac * (b - a)).collect()
    }

    /// Cyclic shift of the first `N` samples of a closed curve; the last sample
    /// is set equal to the new first one. Shift 0 returns the curve unchanged.
    pub fn cyclic_shift(&self, shift: usize) -> Self {
        let n = self.intervals();
        if shift % n == 0 {
            return self.clone();
        }
        let mut data = Vec::with_capacity(self.data.len());
        for k in 0..=n {
            data.extend_from_slice(self.point((k + shift) % n));
        }
        Self { data, ..self.clone() }
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Resamples `c` at `m + 1` points equally spaced in cumulative chord length.
pub fn resample_arclength(c: &SampledCurve, m: usize) -> Result<SampledCurve> {
    if m == 0 {
        return Err(Error::InvalidCurve("resample count must be positive".into()));
    }
    let mut cum = Vec::with_capacity(c.len());
    cum.push(0.0);
    for k in 0..c.intervals() {
        let last = cum[k];
        cum.push(last + dist(c.point(k), c.point(k + 1)));
    }
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return Err(Error::ZeroLengthCurve);
    }
    let dim = c.dim();
    let mut data = Vec::with_capacity((m + 1) * dim);
    data.extend_from_slice(c.point(0));
    for i in 1..m {
        let s = total * i as f64 / m as f64;
        // first segment whose end lies at or beyond s
        let seg = cum.partition_point(|&x| x < s).clamp(1, c.intervals()) - 1;
        let len = cum[seg + 1] - cum[seg];
        let frac = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        let (a, b) = (c.point(seg), c.point(seg + 1));
        data.extend(a.iter().zip(b).map(|(a, b)| a + frac * (b - a)));
    }
    data.extend_from_slice(c.point(c.intervals()));
    SampledCurve::new(dim, data, c.is_closed())
}

/// `c ∘ γ` on the same uniform grid, by linear interpolation of `c` at `γ(t_k)`.
pub fn apply_reparam_curve(c: &SampledCurve, gamma: &Reparametrization) -> SampledCurve {
    let n = c.intervals();
    let mut data = Vec::with_capacity(c.as_slice().len());
    data.extend_from_slice(c.point(0));
    for k in 1..n {
        data.extend(c.eval(gamma.eval(k as f64 / n as f64)));
    }
    data.extend_from_slice(c.point(n));
    SampledCurve {
        dim: c.dim(),
        data,
        closed: c.is_closed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn rejects_degenerate_input() {
        assert!(SampledCurve::from_points(&[[0.0, 0.0]], false).is_err());
        assert!(SampledCurve::new(2, vec![0.0, 0.0, f64::NAN, 1.0], false).is_err());
        assert!(SampledCurve::new(2, vec![0.0, 0.0, 1.0], false).is_err());
    }

    #[test]
    fn resample_nonuniform_line() {
        let c = SampledCurve::from_points(&[[0.0, 0.0], [0.1, 0.0], [0.15, 0.0], [1.0, 0.0]], false)
            .unwrap();
        let r = resample_arclength(&c, 4).unwrap();
        assert_eq!(r.len(), 5);
        for (k, p) in r.points().enumerate() {
            assert_abs_diff_eq!(p[0], k as f64 / 4.0, epsilon = 1e-15);
            assert_eq!(p[1], 0.0);
        }
    }

    #[test]
    fn resample_is_idempotent_on_arclength_curves() {
        let c = SampledCurve::from_fn(16, false, |u| {
            let a = u * 2.0;
            vec![a.cos(), a.sin()]
        })
        .unwrap();
        let r = resample_arclength(&c, 16).unwrap();
        for (p, q) in c.points().zip(r.points()) {
            assert_abs_diff_eq!(p[0], q[0], epsilon = 1e-12);
            assert_abs_diff_eq!(p[1], q[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn resample_quarter_circle_matches_arc_positions() {
        // dense, deliberately nonuniform input sampling
        let c = SampledCurve::from_fn(20_000, false, |u| {
            let a = FRAC_PI_2 * u * u;
            vec![a.cos(), a.sin()]
        })
        .unwrap();
        let r = resample_arclength(&c, 100).unwrap();
        let chords: Vec<f64> = (0..100).map(|k| dist(r.point(k), r.point(k + 1))).collect();
        let mean = chords.iter().sum::<f64>() / 100.0;
        for ch in &chords {
            assert!(((ch - mean) / mean).abs() < 1e-6);
        }
        for (k, p) in r.points().enumerate() {
            let a = FRAC_PI_2 * k as f64 / 100.0;
            assert_abs_diff_eq!(p[0], a.cos(), epsilon = 1e-6);
            assert_abs_diff_eq!(p[1], a.sin(), epsilon = 1e-6);
        }
    }

    #[test]
    fn resample_zero_length() {
        let c = SampledCurve::from_points(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]], false).unwrap();
        assert_eq!(resample_arclength(&c, 3), Err(Error::ZeroLengthCurve));
    }

    #[test]
    fn reparam_curve_identity_and_square() {
        let c = SampledCurve::from_fn(8, false, |u| vec![u, 0.0]).unwrap();
        assert_eq!(apply_reparam_curve(&c, &Reparametrization::identity()), c);
        let g = Reparametrization::from_fn(8, |u| u * u).unwrap();
        let w = apply_reparam_curve(&c, &g);
        for (k, p) in w.points().enumerate() {
            let t = k as f64 / 8.0;
            assert_abs_diff_eq!(p[0], t * t, epsilon = 1e-15);
        }
    }

    #[test]
    fn reparam_curve_roundtrip_error_shrinks() {
        let err = |n: usize| {
            let c = SampledCurve::from_fn(n, false, |u| {
                vec![(3.0 * u).sin(), (2.0 * u).cos()]
            })
            .unwrap();
            let g = Reparametrization::from_fn(n, |u| (u + u * u) / 2.0).unwrap();
            let back = apply_reparam_curve(&apply_reparam_curve(&c, &g), &g.inverse().unwrap());
            c.points()
                .zip(back.points())
                .map(|(a, b)| dist(a, b))
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(32), err(64), err(128));
        assert!(e2 < e1 && e3 < e2, "{e1} {e2} {e3}");
        assert!(e3 < 1e-2);
    }

    #[test]
    fn cyclic_shift_closes() {
        let c = SampledCurve::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], true)
            .unwrap();
        let s = c.cyclic_shift(1);
        assert_eq!(s.point(0), &[1.0, 0.0]);
        assert_eq!(s.point(3), &[1.0, 0.0]);
        assert_eq!(c.cyclic_shift(0), c);
    }
}
