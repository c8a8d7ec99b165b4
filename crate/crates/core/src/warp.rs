//! Piecewise-linear monotone warps of `[0, 1]`.

use crate::error::{Error, Result};

/// A nondecreasing piecewise-linear map `γ` of `[0, 1]` with `γ(0) = 0` and
/// `γ(1) = 1`, stored as nodes `(u_k, γ_k)` with strictly increasing `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparametrization {
    nodes: Vec<(f64, f64)>,
}

impl Reparametrization {
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidReparametrization(m.to_string()));
        if nodes.len() < 2 {
            return bad("at least two nodes are required");
        }
        if nodes.iter().any(|(u, g)| !u.is_finite() || !g.is_finite()) {
            return bad("non-finite node");
        }
        let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
        if first != (0.0, 0.0) || last != (1.0, 1.0) {
            return bad("endpoints must be (0,0) and (1,1)");
        }
        for w in nodes.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("node abscissae must be strictly increasing");
            }
            if w[1].1 < w[0].1 {
                return bad("warp values must be nondecreasing");
            }
        }
        Ok(Self { nodes })
    }

    pub fn identity() -> Self {
        Self {
            nodes: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    /// Nodes on the uniform grid with `n` intervals, `γ_k = f(k / n)`.
    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        let nodes = (0..=n)
            .map(|k| {
                let u = k as f64 / n as f64;
                let g = if k == 0 {
                    0.0
                } else if k == n {
                    1.0
                } else {
                    f(u)
                };
                (u, g)
            })
            .collect();
        Self::new(nodes)
    }

    /// Builds a warp from grid values `γ_k` at `u_k = k / n`, where `n = values.len() - 1`.
    pub fn from_grid_values(values: &[f64]) -> Result<Self> {
        let n = values.len().saturating_sub(1);
        if n == 0 {
            return Err(Error::InvalidReparametrization("too few grid values".into()));
        }
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(k, &g)| (k as f64 / n as f64, g))
                .collect(),
        )
    }

    /// Builds a warp from lattice vertices `(i, j)` on an `n x n` grid.
    pub fn from_lattice_path(path: &[(usize, usize)], n: usize) -> Result<Self> {
        Self::new(
            path.iter()
                .map(|&(i, j)| (i as f64 / n as f64, j as f64 / n as f64))
                .collect(),
        )
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    fn segment(&self, u: f64) -> usize {
        // index of the segment [u_s, u_{s+1}) containing u, right-continuous
        let s = self.nodes.partition_point(|&(x, _)| x <= u);
        s.clamp(1, self.nodes.len() - 1) - 1
    }

    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let s = self.segment(u);
        let ((u0, g0), (u1, g1)) = (self.nodes[s], self.nodes[s + 1]);
        let frac = (u - u0) / (u1 - u0);
        (g0 + frac * (g1 - g0)).clamp(0.0, 1.0)
    }

    /// Slope of the linear piece containing `u` (right derivative at nodes).
    pub fn slope(&self, u: f64) -> f64 {
        let s = self.segment(u.clamp(0.0, 1.0));
        let ((u0, g0), (u1, g1)) = (self.nodes[s], self.nodes[s + 1]);
        (g1 - g0) / (u1 - u0)
    }

    /// Values `γ(k / n)` for `k = 0..=n`.
    pub fn grid_values(&self, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|k| match k {
                0 => 0.0,
                _ if k == n => 1.0,
                _ => self.eval(k as f64 / n as f64),
            })
            .collect()
    }

    /// Piecewise-linear inverse; requires a strictly increasing warp.
    pub fn inverse(&self) -> Result<Self> {
        if self.nodes.windows(2).any(|w| w[1].1 <= w[0].1) {
            return Err(Error::InvalidReparametrization(
                "warp with flat pieces has no inverse".into(),
            ));
        }
        Self::new(self.nodes.iter().map(|&(u, g)| (g, u)).collect())
    }

    /// `self ∘ inner`, sampled at the union of the node abscissae of `inner`
    /// and the preimages of `self`'s nodes.
    pub fn compose(&self, inner: &Reparametrization) -> Result<Self> {
        let mut us: Vec<f64> = inner.nodes.iter().map(|n| n.0).collect();
        for &(v, _) in &self.nodes {
            // preimage of v under inner, first abscissa where inner reaches v
            for w in inner.nodes.windows(2) {
                let ((u0, g0), (u1, g1)) = (w[0], w[1]);
                if g0 < v && v < g1 {
                    us.push(u0 + (v - g0) / (g1 - g0) * (u1 - u0));
                    break;
                }
            }
        }
        us.sort_by(f64::total_cmp);
        us.dedup();
        Self::new(
            us.into_iter()
                .map(|u| {
                    let g = if u == 0.0 {
                        0.0
                    } else if u == 1.0 {
                        1.0
                    } else {
                        self.eval(inner.eval(u))
                    };
                    (u, g)
                })
                .collect(),
        )
    }

    pub fn is_identity(&self) -> bool {
        self.nodes.iter().all(|(u, g)| u == g)
    }
}
