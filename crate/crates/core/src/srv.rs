//! The square-root velocity transform on piecewise-linear curves.
//!
//! A sampled curve is treated as piecewise linear, so its SRV function is
//! constant on every grid interval: `q_k = Δc_k / sqrt(|Δc_k| h)` with
//! `h = 1 / N`. Zero-length intervals map to `q_k = 0`. With this
//! discretization the transform and its inverse are exact inverses and the
//! rectangle rule integrates every L² quantity exactly.

use nalgebra::DMatrix;

use crate::curve::SampledCurve;
use crate::error::{dim_mismatch, Error, Result};
use crate::warp::Reparametrization;

/// Piecewise-constant SRV representation on the uniform grid, plus the
/// starting point of the curve it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SrvFunction {
    dim: usize,
    values: Vec<f64>,
    basepoint: Vec<f64>,
}

impl SrvFunction {
    pub fn new(dim: usize, values: Vec<f64>, basepoint: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.is_empty() || values.len() % dim != 0 {
            return Err(Error::InvalidCurve(format!(
                "{} SRV values do not form intervals of dimension {dim}",
                values.len()
            )));
        }
        if basepoint.len() != dim {
            return Err(dim_mismatch(dim, basepoint.len()));
        }
        if values.iter().chain(&basepoint).any(|x| !x.is_finite()) {
            return Err(Error::InvalidCurve("non-finite SRV value".into()));
        }
        Ok(Self {
            dim,
            values,
            basepoint,
        })
    }

    /// Zero basepoint; for SRV functions whose start is irrelevant.
    pub fn from_values(dim: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(dim, values, vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn basepoint(&self) -> &[f64] {
        &self.basepoint
    }

    pub fn with_basepoint(mut self, basepoint: Vec<f64>) -> Result<Self> {
        if basepoint.len() != self.dim {
            return Err(dim_mismatch(self.dim, basepoint.len()));
        }
        self.basepoint = basepoint;
        Ok(self)
    }

    /// L² norm, `sqrt(h Σ |q_k|²)`.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>() / self.intervals() as f64
    }

    /// `(1 - t) self + t other`, values and basepoints alike.
    pub fn lerp(&self, other: &SrvFunction, t: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
        };
        Ok(Self {
            dim: self.dim,
            values: mix(&self.values, &other.values),
            basepoint: mix(&self.basepoint, &other.basepoint),
        })
    }

    /// Applies the `dim x dim` matrix `m` to every value (and the basepoint).
    pub fn transformed(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(dim_mismatch(
                format!("{0}x{0}", self.dim),
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..self.dim)
                .map(|r| (0..self.dim).map(|c| m[(r, c)] * v[c]).sum())
                .collect()
        };
        Ok(Self {
            dim: self.dim,
            values: self.values.chunks_exact(self.dim).flat_map(apply).collect(),
            basepoint: apply(&self.basepoint),
        })
    }

    pub(crate) fn check_compatible(&self, other: &SrvFunction) -> Result<()> {
        if self.dim != other.dim || self.intervals() != other.intervals() {
            return Err(dim_mismatch(
                format!("N={} d={}", self.intervals(), self.dim),
                format!("N={} d={}", other.intervals(), other.dim),
            ));
        }
        Ok(())
    }
}

/// `q_k = Δc_k / sqrt(|Δc_k| h)`, zero on constant intervals.
pub fn srv_transform(c: &SampledCurve) -> SrvFunction {
    let n = c.intervals();
    let dim = c.dim();
    let h = 1.0 / n as f64;
    let mut values = Vec::with_capacity(n * dim);
    let mut delta = vec![0.0; dim];
    for k in 0..n {
        let (a, b) = (c.point(k), c.point(k + 1));
        for ((d, x), y) in delta.iter_mut().zip(a).zip(b) {
            *d = y - x;
        }
        let len = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            values.extend(std::iter::repeat_n(0.0, dim));
        } else {
            let scale = 1.0 / (len * h).sqrt();
            values.extend(delta.iter().map(|x| x * scale));
        }
    }
    SrvFunction {
        dim,
        values,
        basepoint: c.point(0).to_vec(),
    }
}

/// `c_{k+1} = c_k + h |q_k| q_k`, starting from the basepoint.
pub fn srv_inverse(q: &SrvFunction) -> SampledCurve {
    let n = q.intervals();
    let dim = q.dim();
    let h = 1.0 / n as f64;
    let mut data = Vec::with_capacity((n + 1) * dim);
    data.extend_from_slice(&q.basepoint);
    let mut cur = q.basepoint.clone();
    for v in q.values() {
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (c, x) in cur.iter_mut().zip(v) {
            *c += h * len * x;
        }
        data.extend_from_slice(&cur);
    }
    SampledCurve::new(dim, data, false).expect("finite SRV values integrate to a finite curve")
}

/// `sqrt(h Σ |q0_k - q1_k|²)`; basepoints are ignored.
pub fn l2_distance(q0: &SrvFunction, q1: &SrvFunction) -> Result<f64> {
    q0.check_compatible(q1)?;
    let sum: f64 = q0
        .values
        .iter()
        .zip(&q1.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / q0.intervals() as f64).sqrt())
}

/// `(q * γ)(u) = sqrt(γ'(u)) q(γ(u))`, evaluated at interval midpoints.
pub fn apply_reparam_srv(q: &SrvFunction, gamma: &Reparametrization) -> SrvFunction {
    let n = q.intervals();
    let dim = q.dim();
    let mut values = Vec::with_capacity(n * dim);
    for k in 0..n {
        let mid = (k as f64 + 0.5) / n as f64;
        let scale = gamma.slope(mid).max(0.0).sqrt();
        let idx = ((gamma.eval(mid) * n as f64).floor() as usize).min(n - 1);
        values.extend(q.value(idx).iter().map(|x| x * scale));
    }
    SrvFunction {
        dim,
        values,
        basepoint: q.basepoint.clone(),
    }
}
