use elastica::lie::hat;
use elastica::sphere::SphereCurve;
use elastica::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::PI;

fn fourier_curve(n: usize, coeffs: &[f64]) -> SampledCurve {
    SampledCurve::from_fn(n, false, |u| {
        (0..2)
            .map(|c| {
                let mut x = coeffs[c] * u;
                for k in 0..3 {
                    let f = (k + 1) as f64 * PI * u;
                    x += coeffs[2 + 6 * c + 2 * k] * f.sin() + coeffs[3 + 6 * c + 2 * k] * f.cos();
                }
                x
            })
            .collect()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.6f64..0.6, 14)
}

fn rot2(a: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()])
}

fn sphere_curve(n: usize, p: &[f64]) -> SphereCurve {
    SphereCurve::from_fn(n, |u| {
        let th = 0.8 + p[0] * u + 0.3 * p[1] * (PI * u).sin();
        let ph = p[2] * 2.0 + p[3] * 2.0 * u + 0.4 * p[4] * (2.0 * PI * u).sin();
        vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn curve_roundtrip_is_exact_up_to_rounding(c in coeffs()) {
        let curve = fourier_curve(40, &c);
        let back = srv_inverse(&srv_transform(&curve));
        for (a, b) in curve.as_slice().iter().zip(back.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn srv_distance_ignores_translation(c in coeffs(), d in coeffs(), v in prop::collection::vec(-9.0f64..9.0, 2)) {
        let (a, b) = (fourier_curve(32, &c), fourier_curve(32, &d));
        let plain = dist_param(&a, &b).unwrap();
        let moved = dist_param(&a.translated(&v).unwrap(), &b).unwrap();
        prop_assert!((plain - moved).abs() < 1e-12);
    }

    #[test]
    fn srv_norm_scales_with_root(c in coeffs(), s in 0.1f64..10.0) {
        let a = fourier_curve(32, &c);
        let ratio = srv_transform(&a.scaled(s)).norm() / srv_transform(&a).norm();
        prop_assert!((ratio - s.sqrt()).abs() < 1e-12 * s.sqrt());
    }

    #[test]
    fn dp_is_no_worse_than_diagonal_and_backtracks(c in coeffs(), d in coeffs(), w in 1usize..5) {
        let (q0, q1) = (srv_transform(&fourier_curve(24, &c)), srv_transform(&fourier_curve(24, &d)));
        let m = dp_match(&q0, &q1, &DpConfig::with_width(w)).unwrap();
        prop_assert!(m.energy <= l2_distance(&q0, &q1).unwrap().powi(2) + 1e-12);
        prop_assert!((path_energy(&q0, &q1, &m.path).unwrap() - m.energy).abs() < 1e-10);
        let again = dp_match(&q0, &q1, &DpConfig::with_width(w)).unwrap();
        prop_assert_eq!(again.path, m.path);
        prop_assert_eq!(again.energy, m.energy);
    }

    #[test]
    fn refinement_never_increases_energy(c in coeffs(), d in coeffs()) {
        let (q0, q1) = (srv_transform(&fourier_curve(32, &c)), srv_transform(&fourier_curve(32, &d)));
        let m = dp_match(&q0, &q1, &DpConfig::default()).unwrap();
        let start = warp_energy(&q0, &q1, &m.gamma).unwrap();
        let r = gradient_refine(&q0, &q1, &m.gamma, 50, 1.0 / 32.0).unwrap();
        prop_assert!(r.energy <= start);
        prop_assert!((warp_energy(&q0, &q1, &r.gamma).unwrap() - r.energy).abs() < 1e-10);
    }

    #[test]
    fn shape_distance_bounded_by_param(c in coeffs(), d in coeffs()) {
        let (a, b) = (fourier_curve(32, &c), fourier_curve(32, &d));
        let shape = dist_shape(&a, &b, &ShapeMatchOptions::default()).unwrap().distance;
        prop_assert!(shape <= dist_param(&a, &b).unwrap());
    }

    #[test]
    fn shape_distance_is_rotation_invariant(c in coeffs(), d in coeffs(), angle in -PI..PI) {
        let (a, b) = (fourier_curve(32, &c), fourier_curve(32, &d));
        let opts = ShapeMatchOptions::default();
        let plain = dist_shape(&a, &b, &opts).unwrap().distance;
        let turned = dist_shape(&a, &b.transformed(&rot2(angle)).unwrap(), &opts).unwrap().distance;
        prop_assert!((plain - turned).abs() < 1e-8, "{} vs {}", plain, turned);
    }

    #[test]
    fn lie_inverse_stays_orthogonal(w in prop::collection::vec(-1.5f64..1.5, 9)) {
        let (a, b) = (hat([w[0], w[1], w[2]]), hat([w[3], w[4], w[5]]));
        let g = expm(&hat([w[6], w[7], w[8]]));
        let c = RotationCurve::from_fn(16, |u| &g * expm(&(&a * u)) * expm(&(&b * (u * u)))).unwrap();
        let back = qmap_lie_inverse(&qmap_lie(&c).unwrap());
        for s in back.samples() {
            prop_assert!(orthogonality_defect(s) < 1e-8);
        }
    }

    #[test]
    fn homogeneous_distance_is_left_invariant(p in prop::collection::vec(-1.0f64..1.0, 10), w in prop::collection::vec(-2.0f64..2.0, 3)) {
        let (c0, c1) = (sphere_curve(32, &p[..5]), sphere_curve(32, &p[5..]));
        let g = expm(&hat([w[0], w[1], w[2]]));
        let (d, _) = dist_sphere_homogeneous(&c0, &c1).unwrap();
        let (dg, _) = dist_sphere_homogeneous(&c0.rotated(&g).unwrap(), &c1.rotated(&g).unwrap()).unwrap();
        prop_assert!((d - dg).abs() < 1e-8);
    }

    #[test]
    fn transport_preserves_pointwise_norms(p in prop::collection::vec(-1.0f64..1.0, 5)) {
        let c = sphere_curve(32, &p);
        let q = tsrv_reference(&c, &[0.0, 0.0, 1.0]).unwrap();
        let n = c.intervals() as f64;
        for (k, v) in q.values().enumerate() {
            let (x, y) = (c.point(k), c.point(k + 1));
            let cross = [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
            let sin = cross.iter().map(|t| t * t).sum::<f64>().sqrt();
            let angle = sin.atan2(x[0] * y[0] + x[1] * y[1] + x[2] * y[2]);
            let expected = (angle * n).sqrt();
            let got = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            prop_assert!((got - expected).abs() < 1e-12 * expected.max(1.0), "{} vs {}", got, expected);
        }
    }
}

#[test]
fn recovers_rotated_and_warped_copy() {
    let base = |u: f64| vec![(1.5 * u).cos(), (1.5 * u).sin() + 0.2 * u * u];
    let warp = Reparametrization::new(vec![(0.0, 0.0), (0.25, 0.5), (0.5, 0.625), (0.75, 0.75), (1.0, 1.0)]).unwrap();
    let c0 = SampledCurve::from_fn(256, false, base).unwrap();
    let c1 = SampledCurve::from_fn(256, false, |u| base(warp.eval(u))).unwrap().transformed(&rot2(0.9)).unwrap();
    let r = dist_shape(&c0, &c1, &ShapeMatchOptions::default()).unwrap();
    assert!(r.distance < 1e-2, "{}", r.distance);
    assert!((r.rotation.clone() - rot2(-0.9)).norm() < 1e-2);
}

#[test]
fn shape_distance_is_nearly_symmetric() {
    let pairs = [
        (vec![0.4, 0.1, 0.3, 0.0, -0.2, 0.1, 0.0, 0.0, 0.2, -0.1, 0.1, 0.0, 0.0, 0.1], vec![0.5, -0.2, 0.1, 0.2, 0.0, -0.1, 0.1, 0.0, -0.3, 0.0, 0.2, 0.1, 0.0, 0.0]),
        (vec![0.3, 0.3, -0.2, 0.1, 0.1, 0.0, 0.0, 0.1, 0.2, 0.0, -0.1, 0.1, 0.0, 0.0], vec![0.1, 0.5, 0.2, -0.1, 0.0, 0.2, 0.0, 0.0, 0.1, 0.1, 0.0, -0.2, 0.1, 0.0]),
    ];
    for (c, d) in pairs {
        let (a, b) = (fourier_curve(256, &c), fourier_curve(256, &d));
        let opts = ShapeMatchOptions::default();
        let ab = dist_shape(&a, &b, &opts).unwrap().distance;
        let ba = dist_shape(&b, &a, &opts).unwrap().distance;
        assert!((ab - ba).abs() < 5e-2 * ab.max(ba), "{ab} vs {ba}");
    }
}

#[test]
fn param_matrix_matches_direct_calls() {
    let curves: Vec<SampledCurve> = (0..5)
        .map(|i| fourier_curve(24, &(0..14).map(|k| ((i * 14 + k) as f64 * 0.37).sin() * 0.5).collect::<Vec<_>>()))
        .collect();
    let m = distance_matrix(&curves, &DistanceKind::new(Space::Rd, false)).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(m.values[(i, j)], if i == j { 0.0 } else { dist_param(&curves[i.min(j)], &curves[i.max(j)]).unwrap() });
            for k in 0..5 {
                assert!(m.values[(i, k)] <= m.values[(i, j)] + m.values[(j, k)] + 1e-12);
            }
        }
    }
}
