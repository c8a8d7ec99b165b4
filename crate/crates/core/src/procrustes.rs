//! Optimal rotation between SRV functions.

use nalgebra::DMatrix;

use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::srv::{srv_transform, SrvFunction};

/// Rotation `R ∈ SO(d)` minimizing `‖q0 - R q1‖²`, from the SVD of the
/// cross-covariance `Σ_k q0_k q1_kᵀ` with the sign of the last singular
/// direction flipped when needed to keep `det R = +1`.
pub fn procrustes_srv(q0: &SrvFunction, q1: &SrvFunction) -> Result<DMatrix<f64>> {
    q0.check_compatible(q1)?;
    let d = q0.dim();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (a, b) in q0.values().zip(q1.values()) {
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] += a[r] * b[c];
            }
        }
    }
    rotation_from_covariance(m, q0.norm() * q1.norm() * q0.intervals() as f64)
}

/// Procrustes rotation of the SRV functions of two curves; see [`procrustes_srv`].
pub fn procrustes_align(c0: &SampledCurve, c1: &SampledCurve) -> Result<DMatrix<f64>> {
    procrustes_srv(&srv_transform(c0), &srv_transform(c1))
}

pub(crate) fn rotation_from_covariance(m: DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
    let d = m.nrows();
    if d == 1 {
        return Ok(DMatrix::identity(1, 1));
    }
    let svd = m.svd(true, true);
    let max_sv = svd.singular_values.max();
    if !max_sv.is_finite() || max_sv <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateCovariance);
    }
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut sign = DMatrix::<f64>::identity(d, d);
    if (&u * &v_t).determinant() < 0.0 {
        // flip the direction of the smallest singular value
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        sign[(imin, imin)] = -1.0;
    }
    Ok(u * sign * v_t)
}

/// `‖RᵀR - I‖_F`.
pub fn orthogonality_defect(r: &DMatrix<f64>) -> f64 {
    (r.transpose() * r - DMatrix::<f64>::identity(r.nrows(), r.ncols())).norm()
}
