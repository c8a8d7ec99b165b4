//! Curves in SO(n): matrix exponential and logarithm, the left-trivialized
//! SRV map, the product distance and its geodesics.

use nalgebra::DMatrix;

use crate::error::{dim_mismatch, Error, Result};
use crate::procrustes::orthogonality_defect;
use crate::shape::{align_srv, GeodesicPath, ShapeMatchOptions};
use crate::srv::SrvFunction;
use crate::warp::Reparametrization;

/// Samples with an orthogonality defect below this are accepted as is.
pub const ROTATION_TOL: f64 = 1e-8;
/// Samples with a defect up to this are snapped to the nearest rotation.
pub const PROJECTION_TOL: f64 = 1e-6;
const ANTISYMMETRY_TOL: f64 = 1e-10;
/// Rotation angles closer than this to π have no unique principal logarithm.
const LOG_BRANCH_TOL: f64 = 1e-9;

fn eye(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

fn antisymmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

fn is_antisymmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    a.is_square() && (a + a.transpose()).norm() <= tol * (1.0 + a.norm())
}

/// Nearest rotation in the Frobenius norm (polar factor with `det = +1`).
pub fn nearest_rotation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let svd = m.clone().svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut sign = eye(n);
    if (&u * &v_t).determinant() < 0.0 {
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        sign[(imin, imin)] = -1.0;
    }
    u * sign * v_t
}

/// Accepts `r` as a rotation, snapping small defects onto SO(n).
pub fn ensure_rotation(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !r.is_square() || r.nrows() == 0 {
        return Err(Error::InvalidCurve(format!("{}x{} sample is not a square matrix", r.nrows(), r.ncols())));
    }
    let defect = orthogonality_defect(r);
    if !defect.is_finite() || defect > PROJECTION_TOL {
        return Err(Error::NotARotation { defect });
    }
    if r.determinant() <= 0.0 {
        return Err(Error::NotARotation { defect });
    }
    if defect < ROTATION_TOL {
        Ok(r.clone())
    } else {
        Ok(nearest_rotation(r))
    }
}

/// Skew matrix of a 3-vector: `hat(w) x = w × x`.
pub fn hat(w: [f64; 3]) -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0])
}

/// Inverse of [`hat`] applied to the antisymmetric part.
pub fn vee(a: &DMatrix<f64>) -> [f64; 3] {
    [
        0.5 * (a[(2, 1)] - a[(1, 2)]),
        0.5 * (a[(0, 2)] - a[(2, 0)]),
        0.5 * (a[(1, 0)] - a[(0, 1)]),
    ]
}

/// `sin θ / θ` and `(1 - cos θ) / θ²`, stable near zero.
fn rodrigues_coeffs(theta: f64) -> (f64, f64) {
    if theta < 1e-4 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    }
}

/// Matrix exponential. Antisymmetric 2x2 and 3x3 inputs use the closed
/// forms; everything else goes through scaling and squaring with a
/// diagonal Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, a[(0, 0)].exp());
    }
    if n == 2 && is_antisymmetric(a, 1e-14) {
        let t = 0.5 * (a[(1, 0)] - a[(0, 1)]);
        let (s, c) = t.sin_cos();
        return DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    }
    if n == 3 && is_antisymmetric(a, 1e-14) {
        let k = antisymmetric_part(a);
        let w = vee(&k);
        let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        let (s, c) = rodrigues_coeffs(theta);
        return eye(3) + &k * s + &k * &k * c;
    }
    expm_pade(a)
}

fn expm_pade(a: &DMatrix<f64>) -> DMatrix<f64> {
    const ORDER: usize = 8;
    let n = a.nrows();
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(squarings);
    // c_k = (2m - k)! m! / ((2m)! k! (m - k)!)
    let mut coeff = 1.0;
    let mut num = eye(n);
    let mut den = eye(n);
    let mut power = eye(n);
    for k in 1..=ORDER {
        coeff *= (ORDER + 1 - k) as f64 / (k * (2 * ORDER + 1 - k)) as f64;
        power = &power * &b;
        num += &power * coeff;
        den += &power * (if k % 2 == 0 { coeff } else { -coeff });
    }
    let mut x = den.lu().solve(&num).expect("Padé denominator is invertible for small arguments");
    for _ in 0..squarings {
        x = &x * &x;
    }
    x
}

/// Principal logarithm of a rotation, an antisymmetric matrix.
pub fn log_rotation(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = ensure_rotation(r)?;
    let n = r.nrows();
    match n {
        1 => Ok(DMatrix::zeros(1, 1)),
        2 => {
            let t = (r[(1, 0)] - r[(0, 1)]).atan2(r[(0, 0)] + r[(1, 1)]);
            if std::f64::consts::PI - t.abs() < LOG_BRANCH_TOL {
                return Err(Error::LogUndefined);
            }
            Ok(DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]))
        }
        3 => log_so3(&r).map(hat),
        _ => log_general(&r),
    }
}

/// Rotation vector of a 3x3 rotation.
fn log_so3(r: &DMatrix<f64>) -> Result<[f64; 3]> {
    let w = vee(r);
    let s = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if std::f64::consts::PI - theta < LOG_BRANCH_TOL {
        return Err(Error::LogUndefined);
    }
    if theta < 1e-4 {
        // θ / sin θ ≈ 1 + θ²/6
        let f = 1.0 + theta * theta / 6.0;
        return Ok([w[0] * f, w[1] * f, w[2] * f]);
    }
    if theta < 3.0 {
        let f = theta / s;
        return Ok([w[0] * f, w[1] * f, w[2] * f]);
    }
    // near π the antisymmetric part is tiny: read the axis off the symmetric part
    let b = (r + r.transpose()) * 0.5 - eye(3) * c;
    let col = (0..3).max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)])).unwrap();
    let mut axis = [b[(0, col)], b[(1, col)], b[(2, col)]];
    let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    for x in axis.iter_mut() {
        *x /= len;
    }
    if axis[0] * w[0] + axis[1] * w[1] + axis[2] * w[2] < 0.0 {
        for x in axis.iter_mut() {
            *x = -*x;
        }
    }
    Ok([axis[0] * theta, axis[1] * theta, axis[2] * theta])
}

/// Inverse scaling and squaring: repeated square roots bring `R` close to
/// the identity, where `log R = 2 atanh((R - I)(R + I)⁻¹)` converges quickly.
fn log_general(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = r.nrows();
    let smallest = (r + eye(n)).singular_values().min();
    if smallest < LOG_BRANCH_TOL {
        return Err(Error::LogUndefined);
    }
    let mut x = r.clone();
    let mut roots = 0;
    while (&x - eye(n)).norm() > 0.25 && roots < 60 {
        x = sqrt_denman_beavers(&x)?;
        roots += 1;
    }
    let inv = (&x + eye(n)).try_inverse().ok_or(Error::LogUndefined)?;
    let z = (&x - eye(n)) * inv;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z.clone();
    for k in 1..200 {
        term = &term * &z2;
        let add = &term / (2 * k + 1) as f64;
        let size = add.norm();
        sum += add;
        if size < 1e-18 * (1.0 + sum.norm()) {
            break;
        }
    }
    Ok(antisymmetric_part(&(sum * 2f64.powi(roots + 1))))
}

fn sqrt_denman_beavers(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = eye(n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse().ok_or(Error::LogUndefined)?;
        let zi = z.clone().try_inverse().ok_or(Error::LogUndefined)?;
        let ny = (&y + zi) * 0.5;
        let nz = (&z + yi) * 0.5;
        let change = (&ny - &y).norm();
        y = ny;
        z = nz;
        if change < 1e-15 * y.norm() {
            break;
        }
    }
    Ok(y)
}

/// A sampled curve `R_0, …, R_N` in SO(n).
#[derive(Debug, Clone, PartialEq)]
pub struct RotationCurve {
    n: usize,
    samples: Vec<DMatrix<f64>>,
}

impl RotationCurve {
    pub fn new(samples: Vec<DMatrix<f64>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidCurve(format!("need at least 2 samples, got {}", samples.len())));
        }
        let n = samples[0].nrows();
        for (i, r) in samples.iter().enumerate() {
            if r.nrows() != n || r.ncols() != n {
                return Err(dim_mismatch(format!("{n}x{n}"), format!("{}x{} at sample {i}", r.nrows(), r.ncols())));
            }
            let defect = orthogonality_defect(r);
            if !(defect < ROTATION_TOL) || r.determinant() <= 0.0 {
                return Err(Error::NotARotation { defect });
            }
        }
        Ok(Self { n, samples })
    }

    /// Like [`RotationCurve::new`] but snaps samples with a defect below
    /// [`PROJECTION_TOL`] onto SO(n).
    pub fn projected(samples: Vec<DMatrix<f64>>) -> Result<Self> {
        let fixed = samples.iter().map(ensure_rotation).collect::<Result<Vec<_>>>()?;
        Self::new(fixed)
    }

    pub fn from_fn<F: FnMut(f64) -> DMatrix<f64>>(intervals: usize, mut f: F) -> Result<Self> {
        Self::new((0..=intervals).map(|i| f(i as f64 / intervals as f64)).collect())
    }

    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &DMatrix<f64> {
        &self.samples[i]
    }

    /// `g · c(u)` pointwise.
    pub fn left_multiplied(&self, g: &DMatrix<f64>) -> Result<Self> {
        Self::new(self.samples.iter().map(|r| g * r).collect())
    }

    /// Geodesic interpolation between neighbouring samples.
    pub fn eval(&self, u: f64) -> Result<DMatrix<f64>> {
        let n = self.intervals();
        let x = u.clamp(0.0, 1.0) * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        let s = x - k as f64;
        let a = &self.samples[k];
        if s == 0.0 {
            return Ok(a.clone());
        }
        let rel = log_rotation(&(a.transpose() * &self.samples[k + 1]))?;
        Ok(a * expm(&(rel * s)))
    }

    /// Samples of `c ∘ γ` on the same grid.
    pub fn reparametrized(&self, gamma: &Reparametrization) -> Result<Self> {
        let n = self.intervals();
        let samples = (0..=n)
            .map(|i| self.eval(gamma.eval(i as f64 / n as f64)))
            .collect::<Result<Vec<_>>>()?;
        Self::projected(samples)
    }
}

/// SRV representation `(c(0), q)` of a rotation curve; each `q_k` lies in so(n).
#[derive(Debug, Clone, PartialEq)]
pub struct LieSrv {
    start: DMatrix<f64>,
    q: Vec<DMatrix<f64>>,
}

impl LieSrv {
    pub fn new(start: DMatrix<f64>, q: Vec<DMatrix<f64>>) -> Result<Self> {
        let start = ensure_rotation(&start)?;
        let n = start.nrows();
        if q.is_empty() {
            return Err(Error::InvalidCurve("an SRV function needs at least one interval".into()));
        }
        for a in &q {
            if a.nrows() != n || a.ncols() != n {
                return Err(dim_mismatch(format!("{n}x{n}"), format!("{}x{}", a.nrows(), a.ncols())));
            }
            if (a + a.transpose()).norm() >= ANTISYMMETRY_TOL {
                return Err(Error::InvalidCurve("SRV value is not antisymmetric".into()));
            }
        }
        Ok(Self { start, q })
    }

    pub fn start(&self) -> &DMatrix<f64> {
        &self.start
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.q
    }

    pub fn intervals(&self) -> usize {
        self.q.len()
    }

    /// Values as flat `n²`-vectors; the Euclidean inner product is the trace one.
    pub(crate) fn flattened(&self) -> SrvFunction {
        let n = self.start.nrows();
        let values: Vec<f64> = self.q.iter().flat_map(|a| a.iter().copied().collect::<Vec<_>>()).collect();
        SrvFunction::from_values(n * n, values).expect("nonempty")
    }
}

/// Left-trivialized SRV map: `v_k = log(R_kᵀ R_{k+1}) / h`, `q_k = v_k / √‖v_k‖`.
pub fn qmap_lie(c: &RotationCurve) -> Result<LieSrv> {
    let n = c.intervals() as f64;
    let mut q = Vec::with_capacity(c.intervals());
    for w in c.samples.windows(2) {
        let v = antisymmetric_part(&log_rotation(&(w[0].transpose() * &w[1]))?) * n;
        let len = v.norm();
        q.push(if len > 0.0 { v / len.sqrt() } else { DMatrix::zeros(c.n, c.n) });
    }
    Ok(LieSrv { start: c.samples[0].clone(), q })
}

/// `R_0 = start`, `R_{k+1} = R_k exp(h ‖q_k‖ q_k)`.
pub fn qmap_lie_inverse(s: &LieSrv) -> RotationCurve {
    let h = 1.0 / s.q.len() as f64;
    let mut samples = Vec::with_capacity(s.q.len() + 1);
    let mut cur = s.start.clone();
    samples.push(cur.clone());
    for a in &s.q {
        cur = &cur * expm(&(a * (h * a.norm())));
        samples.push(cur.clone());
    }
    RotationCurve { n: s.start.nrows(), samples }
}

fn check_pair(c0: &RotationCurve, c1: &RotationCurve) -> Result<()> {
    if c0.n != c1.n || c0.intervals() != c1.intervals() {
        return Err(dim_mismatch(
            format!("N={} n={}", c0.intervals(), c0.n),
            format!("N={} n={}", c1.intervals(), c1.n),
        ));
    }
    Ok(())
}

fn srv_distance_squared(s0: &LieSrv, s1: &LieSrv) -> f64 {
    let h = 1.0 / s0.q.len() as f64;
    h * s0.q.iter().zip(&s1.q).map(|(a, b)| (a - b).norm_squared()).sum::<f64>()
}

/// `√(‖log(c0(0)ᵀ c1(0))‖² + ‖q0 - q1‖²)`.
pub fn dist_lie(c0: &RotationCurve, c1: &RotationCurve) -> Result<f64> {
    check_pair(c0, c1)?;
    let (s0, s1) = (qmap_lie(c0)?, qmap_lie(c1)?);
    let start = log_rotation(&(s0.start.transpose() * &s1.start))?.norm_squared();
    Ok((start + srv_distance_squared(&s0, &s1)).sqrt())
}

/// A discrete path of rotation curves at times `j / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPath {
    pub curves: Vec<RotationCurve>,
    pub times: Vec<f64>,
}

/// Product geodesic: the start point moves along the SO(n) geodesic and the
/// SRV function along the straight line.
pub fn geodesic_lie(c0: &RotationCurve, c1: &RotationCurve, steps: usize) -> Result<RotationPath> {
    check_pair(c0, c1)?;
    if steps == 0 {
        return Err(Error::InvalidCurve("a geodesic needs at least one step".into()));
    }
    let (s0, s1) = (qmap_lie(c0)?, qmap_lie(c1)?);
    let rel = log_rotation(&(s0.start.transpose() * &s1.start))?;
    let times = GeodesicPath::times(steps);
    let curves = times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            if j == 0 {
                return c0.clone();
            }
            if j == steps {
                return c1.clone();
            }
            let start = &s0.start * expm(&(&rel * t));
            let q = s0.q.iter().zip(&s1.q).map(|(a, b)| a * (1.0 - t) + b * t).collect();
            qmap_lie_inverse(&LieSrv { start, q })
        })
        .collect();
    Ok(RotationPath { curves, times })
}

/// Distance modulo simultaneous reparametrization of the second curve.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedDistance {
    pub distance: f64,
    pub gamma: Reparametrization,
    pub energy_trace: Vec<f64>,
}

/// [`dist_lie`] minimized over warps of `c1`. The start term does not depend
/// on the warp, so only the SRV part goes through the DP alignment.
pub fn dist_lie_shape(c0: &RotationCurve, c1: &RotationCurve, opts: &ShapeMatchOptions) -> Result<WarpedDistance> {
    check_pair(c0, c1)?;
    let (s0, s1) = (qmap_lie(c0)?, qmap_lie(c1)?);
    let start = log_rotation(&(s0.start.transpose() * &s1.start))?.norm_squared();
    let opts = ShapeMatchOptions {
        quotient_rotation: false,
        ..opts.clone()
    };
    let a = align_srv(&s0.flattened(), &s1.flattened(), &opts)?;
    Ok(WarpedDistance {
        distance: (start + a.energy).max(0.0).sqrt(),
        gamma: a.gamma,
        energy_trace: a.trace.iter().map(|e| start + e).collect(),
    })
}
