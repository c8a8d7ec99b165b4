//! Elastic shape analysis of curves with the square-root velocity (SRV) transform.
//!
//! Curves in R^d are compared through `q = c' / √|c'|`, under which the
//! elastic metric becomes the flat L² metric. Distances modulo rotations and
//! reparametrizations come from Procrustes alignment and dynamic programming
//! over piecewise-linear warps. The same machinery extends to curves in
//! SO(n) and on the sphere S².

pub mod closed;
pub mod curve;
pub mod dp;
pub mod error;
pub mod io;
pub mod lie;
pub mod procrustes;
pub mod refine;
pub mod shape;
pub mod sphere;
pub mod srv;
pub mod stats;
pub mod warp;

pub use closed::{geodesic_closed, project_closed};
pub use curve::{apply_reparam_curve, resample_arclength, SampledCurve};
pub use dp::{dp_match, dp_segment_energy, path_energy, DpConfig, MatchDiagnostics, MatchResult};
pub use error::{Error, Result};
pub use lie::{
    dist_lie, dist_lie_shape, expm, geodesic_lie, log_rotation, qmap_lie, qmap_lie_inverse, LieSrv, RotationCurve,
    RotationPath, WarpedDistance,
};
pub use procrustes::{orthogonality_defect, procrustes_align, procrustes_srv};
pub use refine::{gradient_refine, warp_energy};
pub use shape::{
    aligned_curve, dist_param, dist_shape, geodesic_open, GeodesicPath, ShapeDistanceResult, ShapeMatchOptions,
};
pub use sphere::{
    dist_sphere_homogeneous, dist_sphere_shape, dist_tsrv, dist_tsrv_shape, geodesic_sphere_homogeneous,
    horizontal_lift, tsrv_reference, FiberProblem, HomogeneousSrv, SphereCurve, SpherePath, SphereShapeResult,
};
pub use srv::{apply_reparam_srv, l2_distance, srv_inverse, srv_transform, SrvFunction};
pub use stats::{distance, distance_matrix, srv_mean, DistanceKind, DistanceMatrix, Space, SrvMean};
pub use warp::Reparametrization;
