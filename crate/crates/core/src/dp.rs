//! Dynamic programming over monotone lattice paths.
//!
//! Vertices are pairs `(i, j)` of grid indices; a path from `(0, 0)` to
//! `(N, N)` is the graph of a piecewise-linear warp applied to the second
//! curve. The energy of a path is additive over its segments, so the optimum
//! can be found by a forward sweep over `i` and recovered by backtracking.

use crate::error::{Error, Result};
use crate::srv::SrvFunction;
use crate::warp::Reparametrization;

/// Search configuration of [`dp_match`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpConfig {
    /// Side of the predecessor square; slopes range over `[1/W, W]`.
    pub neighborhood_width: usize,
    /// Restricts admissible vertices to `|i - j| <= strip`.
    pub strip_halfwidth: Option<usize>,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            neighborhood_width: 3,
            strip_halfwidth: None,
        }
    }
}

impl DpConfig {
    pub fn with_width(neighborhood_width: usize) -> Self {
        Self {
            neighborhood_width,
            ..Self::default()
        }
    }
}

/// Per-call diagnostics of an optimizer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchDiagnostics {
    pub iterations: usize,
    pub accepted_steps: usize,
    pub energy_trace: Vec<f64>,
}

/// Optimal warp of the second SRV function with its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub gamma: Reparametrization,
    pub energy: f64,
    pub distance: f64,
    /// Lattice vertices of the path, for DP results.
    pub path: Vec<(usize, usize)>,
    pub diagnostics: MatchDiagnostics,
}

/// Energy of the linear lattice segment `(k, l) -> (i, j)`:
/// `(1/N) Σ_{m=k}^{i-1} |q0(t_m) - sqrt(s) q1(γ_lin(t_m))|²`.
pub fn dp_segment_energy(
    q0: &SrvFunction,
    q1: &SrvFunction,
    from: (usize, usize),
    to: (usize, usize),
) -> Result<f64> {
    let (k, l) = from;
    let (i, j) = to;
    let n = q0.intervals();
    if k >= i || l > j || i > n || j > n {
        return Err(Error::InvalidSegment { from, to });
    }
    q0.check_compatible(q1)?;
    Ok(segment_energy(q0.as_slice(), q1.as_slice(), q0.dim(), n, k, l, i, j))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn segment_energy(
    q0: &[f64],
    q1: &[f64],
    dim: usize,
    n: usize,
    k: usize,
    l: usize,
    i: usize,
    j: usize,
) -> f64 {
    let di = i - k;
    let dj = j - l;
    let root = (dj as f64 / di as f64).sqrt();
    let mut sum = 0.0;
    for m in k..i {
        // γ_lin(t_m) in index units is l + dj (m - k) / di; floor it exactly
        let idx = (l + dj * (m - k) / di).min(n - 1);
        let a = &q0[m * dim..(m + 1) * dim];
        let b = &q1[idx * dim..(idx + 1) * dim];
        for (x, y) in a.iter().zip(b) {
            let d = x - root * y;
            sum += d * d;
        }
    }
    sum / n as f64
}

/// Minimal-energy monotone lattice path. Predecessors of `(i, j)` are the
/// `W x W` square with upper-right corner `(i-1, j-1)` together with the
/// horizontal predecessors `(k, j)`, `i - W <= k < i`. Ties go to the
/// lexicographically smallest predecessor.
pub fn dp_match(q0: &SrvFunction, q1: &SrvFunction, cfg: &DpConfig) -> Result<MatchResult> {
    q0.check_compatible(q1)?;
    if cfg.neighborhood_width == 0 {
        return Err(Error::InvalidSegment {
            from: (0, 0),
            to: (0, 0),
        });
    }
    let n = q0.intervals();
    let w = cfg.neighborhood_width;
    let dim = q0.dim();
    let (a, b) = (q0.as_slice(), q1.as_slice());
    let side = n + 1;
    let admissible = |i: usize, j: usize| cfg.strip_halfwidth.is_none_or(|s| i.abs_diff(j) <= s);

    let mut energy = vec![f64::INFINITY; side * side];
    let mut pred = vec![u32::MAX; side * side];
    energy[0] = 0.0;

    for i in 1..=n {
        let k_lo = i.saturating_sub(w);
        for j in 0..=n {
            if !admissible(i, j) {
                continue;
            }
            let l_lo = j.saturating_sub(w);
            let mut best = f64::INFINITY;
            let mut best_pred = u32::MAX;
            for k in k_lo..i {
                for l in l_lo..=j {
                    let prev = energy[k * side + l];
                    if !prev.is_finite() {
                        continue;
                    }
                    let e = prev + segment_energy(a, b, dim, n, k, l, i, j);
                    if e < best {
                        best = e;
                        best_pred = (k * side + l) as u32;
                    }
                }
            }
            energy[i * side + j] = best;
            pred[i * side + j] = best_pred;
        }
    }

    let total = energy[n * side + n];
    if !total.is_finite() {
        return Err(Error::NoPath);
    }
    let mut path = vec![(n, n)];
    let mut cur = n * side + n;
    while cur != 0 {
        let p = pred[cur] as usize;
        path.push((p / side, p % side));
        cur = p;
    }
    path.reverse();
    let gamma = Reparametrization::from_lattice_path(&path, n)?;
    Ok(MatchResult {
        gamma,
        energy: total,
        distance: total.sqrt(),
        path,
        diagnostics: MatchDiagnostics {
            iterations: n,
            accepted_steps: 0,
            energy_trace: vec![total],
        },
    })
}

/// Sum of segment energies along a lattice path, accumulated left to right.
pub fn path_energy(q0: &SrvFunction, q1: &SrvFunction, path: &[(usize, usize)]) -> Result<f64> {
    path.windows(2).try_fold(0.0, |acc, w| {
        Ok(acc + dp_segment_energy(q0, q1, w[0], w[1])?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srv::l2_distance;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant(n: usize, v: [f64; 2]) -> SrvFunction {
        SrvFunction::from_values(2, v.repeat(n)).unwrap()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> SrvFunction {
        SrvFunction::from_values(2, (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn segment_examples() {
        let q = constant(8, [0.7, -0.2]);
        assert_eq!(dp_segment_energy(&q, &q, (2, 2), (5, 5)).unwrap(), 0.0);

        let zero = constant(8, [0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random(8, &mut rng);
        let expect: f64 = (1..4)
            .map(|m| r.value(m).iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            / 8.0;
        assert_abs_diff_eq!(
            dp_segment_energy(&r, &zero, (1, 2), (4, 6)).unwrap(),
            expect,
            epsilon = 1e-15
        );

        let e1 = constant(8, [1.0, 0.0]);
        let e2 = constant(8, [0.0, 1.0]);
        assert_abs_diff_eq!(
            dp_segment_energy(&e1, &e2, (0, 0), (8, 8)).unwrap(),
            2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn segment_matches_direct_formula() {
        // independent evaluation with real-valued γ_lin and floor lookup
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let (q0, q1) = (random(n, &mut rng), random(n, &mut rng));
        for &((k, l), (i, j)) in &[((0, 0), (3, 1)), ((2, 5), (3, 8)), ((4, 4), (10, 6)), ((1, 7), (5, 7))] {
            let h = 1.0 / n as f64;
            let (tk, tl, ti, tj) = (k as f64 * h, l as f64 * h, i as f64 * h, j as f64 * h);
            let s = (tj - tl) / (ti - tk);
            let mut sum = 0.0;
            for m in k..i {
                let g = tl + s * (m as f64 * h - tk);
                let idx = (((g * n as f64) + 1e-9).floor() as usize).min(n - 1);
                for d in 0..2 {
                    let diff = q0.value(m)[d] - s.sqrt() * q1.value(idx)[d];
                    sum += diff * diff;
                }
            }
            assert_abs_diff_eq!(
                dp_segment_energy(&q0, &q1, (k, l), (i, j)).unwrap(),
                sum * h,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn invalid_segments() {
        let q = constant(4, [1.0, 0.0]);
        assert!(matches!(
            dp_segment_energy(&q, &q, (2, 0), (2, 3)),
            Err(Error::InvalidSegment { .. })
        ));
        assert!(matches!(
            dp_segment_energy(&q, &q, (1, 3), (2, 2)),
            Err(Error::InvalidSegment { .. })
        ));
    }

    #[test]
    fn identical_inputs_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random(32, &mut rng);
        let m = dp_match(&q, &q, &DpConfig::default()).unwrap();
        assert_eq!(m.energy, 0.0);
        assert!(m.gamma.is_identity());
        assert_eq!(m.path.first(), Some(&(0, 0)));
    }

    #[test]
    fn energy_bounded_by_parametrized_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let (q0, q1) = (random(24, &mut rng), random(24, &mut rng));
            let m = dp_match(&q0, &q1, &DpConfig::default()).unwrap();
            let d = l2_distance(&q0, &q1).unwrap();
            assert!(m.energy <= d * d + 1e-12);
            assert_abs_diff_eq!(m.distance * m.distance, m.energy, epsilon = 1e-12);
            let again = path_energy(&q0, &q1, &m.path).unwrap();
            assert_abs_diff_eq!(again, m.energy, epsilon = 1e-10);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (q0, q1) = (random(40, &mut rng), random(40, &mut rng));
        let a = dp_match(&q0, &q1, &DpConfig::default()).unwrap();
        let b = dp_match(&q0, &q1, &DpConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn narrow_strip_keeps_diagonal() {
        let q = constant(6, [1.0, 0.0]);
        let cfg = DpConfig {
            neighborhood_width: 1,
            strip_halfwidth: Some(0),
        };
        // W = 1 with a zero strip still admits the diagonal
        assert!(dp_match(&q, &q, &cfg).is_ok());
        let cfg = DpConfig {
            neighborhood_width: 3,
            strip_halfwidth: Some(0),
        };
        assert!(dp_match(&q, &q, &cfg).is_ok());
    }

    #[test]
    fn strip_restricts_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (q0, q1) = (random(30, &mut rng), random(30, &mut rng));
        let cfg = DpConfig {
            neighborhood_width: 3,
            strip_halfwidth: Some(2),
        };
        let m = dp_match(&q0, &q1, &cfg).unwrap();
        assert!(m.path.iter().all(|&(i, j)| i.abs_diff(j) <= 2));
        let full = dp_match(&q0, &q1, &DpConfig::default()).unwrap();
        assert!(full.energy <= m.energy);
    }

    #[test]
    fn zero_strip_forces_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (q0, q1) = (random(10, &mut rng), random(10, &mut rng));
        let cfg = DpConfig {
            neighborhood_width: 3,
            strip_halfwidth: Some(0),
        };
        let m = dp_match(&q0, &q1, &cfg).unwrap();
        assert!(m.gamma.is_identity());
        let d = l2_distance(&q0, &q1).unwrap();
        assert_abs_diff_eq!(m.energy, d * d, epsilon = 1e-12);
    }
}
