use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use randers::equivalence::la3_residual;
use randers::expr::ScalarExpression;
use randers::geometry::{sectional_curvature, ChartDomain, MetricField, OneFormField};
use randers::randers::{Direction, RandersMetric, SampledCurve};

/// Expressions built from bounded pieces, so values and derivatives stay
/// moderate on `[-1, 1]²` and finite differences are a fair oracle.
fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        (-2.0f64..2.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} / (1 + ({b})^2)")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("atan({a})")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("log(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("exp(-({a})^2)")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| seed[i * n + j]);
    &a * a.transpose() + DMatrix::identity(n, n)
}

fn skew(n: usize, seed: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| seed[i * n + j]);
    &a - a.transpose()
}

fn constant_metric(g: &DMatrix<f64>, omega: &[f64]) -> RandersMetric {
    let n = g.nrows();
    let rows: Vec<Vec<String>> = (0..n).map(|i| (0..n).map(|j| format!("{:e}", g[(i, j)])).collect()).collect();
    let w: Vec<String> = omega.iter().map(|c| format!("{c:e}")).collect();
    RandersMetric::with_resolution(
        MetricField::parse(&rows).unwrap(),
        OneFormField::parse(&w).unwrap(),
        ChartDomain::cube(n, -1.0, 1.0).unwrap(),
        3,
    )
    .unwrap()
}

/// The circle of radius `r` about the origin, traversed once and
/// reparameterized by a monotone warp.
fn circle(r: f64, warp: f64, m: usize) -> SampledCurve {
    let tau = std::f64::consts::TAU;
    let (mut t, mut points, mut velocities) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..=m {
        let u = k as f64 / m as f64;
        // s(u) = tau (u + warp sin(2πu) / 2π), monotone for |warp| < 1.
        let s = tau * (u + warp * (tau * u).sin() / tau);
        let ds = tau * (1.0 + warp * (tau * u).cos());
        t.push(u);
        points.push(vec![r * s.cos(), r * s.sin()]);
        velocities.push(vec![-r * s.sin() * ds, r * s.cos() * ds]);
    }
    SampledCurve { t, points, velocities }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jets_match_finite_differences(src in expression(), x in -0.9f64..0.9, y in -0.9f64..0.9) {
        let e = ScalarExpression::parse(&src, 2).unwrap();
        let again = ScalarExpression::parse(&e.pretty(), 2).unwrap();
        prop_assert_eq!(again.eval(&[x, y]).unwrap(), e.eval(&[x, y]).unwrap());
        let jet = e.eval_jet2(&[x, y]).unwrap();
        prop_assert!((jet.value() - e.eval(&[x, y]).unwrap()).abs() <= 1e-14 * jet.value().abs().max(1.0));
        let h = 1e-4;
        for k in 0..2 {
            let shift = |d: f64| { let mut p = [x, y]; p[k] += d; p };
            let d = |h: f64| (e.eval(&shift(h)).unwrap() - e.eval(&shift(-h)).unwrap()) / (2.0 * h);
            let fd = (4.0 * d(h / 2.0) - d(h)) / 3.0;
            let g = jet.gradient()[k];
            prop_assert!((g - fd).abs() <= 1e-6 * g.abs().max(1.0), "{src}: d{k} jet {g} fd {fd}");
            for l in 0..2 {
                let dl = |p: [f64; 2]| e.eval_jet1(&p).unwrap().gradient()[l];
                let fd2 = (dl(shift(h)) - dl(shift(-h))) / (2.0 * h);
                let hk = jet.hessian(k, l);
                prop_assert!((hk - fd2).abs() <= 1e-5 * hk.abs().max(1.0), "{src}: d{k}d{l} jet {hk} fd {fd2}");
            }
        }
    }

    #[test]
    fn metric_is_positively_homogeneous(
        seed in prop::collection::vec(-1.0f64..1.0, 9),
        w in prop::collection::vec(-0.3f64..0.3, 3),
        xi in prop::collection::vec(-2.0f64..2.0, 3),
        lambda in 0.01f64..50.0,
    ) {
        prop_assume!(xi.iter().any(|c| c.abs() > 1e-3));
        let f = constant_metric(&spd(3, &seed), &w);
        let p = [0.1, -0.2, 0.3];
        let scaled: Vec<f64> = xi.iter().map(|c| lambda * c).collect();
        let (a, b) = (f.eval(&p, &xi).unwrap(), f.eval(&p, &scaled).unwrap());
        prop_assert!((b - lambda * a).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn validity_implies_positivity(
        seed in prop::collection::vec(-1.0f64..1.0, 4),
        dir in prop::collection::vec(-1.0f64..1.0, 2),
        norm in 0.0f64..0.999,
        xi in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        prop_assume!(dir.iter().any(|c| c.abs() > 1e-3) && xi.iter().any(|c| c.abs() > 1e-6));
        let g = spd(2, &seed);
        // Scale ω so its dual g-norm equals `norm`.
        let d = DVector::from_column_slice(&dir);
        let dual = d.dot(&(g.clone().try_inverse().unwrap() * &d)).sqrt();
        let w: Vec<f64> = dir.iter().map(|c| c * norm / dual).collect();
        let f = constant_metric(&g, &w);
        prop_assert!(f.form_norm(&[0.0, 0.0]).unwrap() < 1.0);
        prop_assert!(f.eval(&[0.0, 0.0], &xi).unwrap() > 0.0);
    }

    #[test]
    fn length_ignores_reparameterization(warp in -0.6f64..0.6, r in 0.2f64..0.8) {
        let f = constant_metric(&spd(2, &[0.3, 0.1, -0.2, 0.4]), &[0.2, -0.1]);
        let plain = f.curve_length(&circle(r, 0.0, 400), Direction::Forward).unwrap();
        let warped = f.curve_length(&circle(r, warp, 400), Direction::Forward).unwrap();
        prop_assert!((plain.value - warped.value).abs() <= 1e-7 * plain.value);
    }

    #[test]
    fn la3_is_even_and_scale_free(
        gs in prop::collection::vec(-1.0f64..1.0, 9),
        hs in prop::collection::vec(-1.0f64..1.0, 9),
        ls in prop::collection::vec(-1.0f64..1.0, 9),
        ms in prop::collection::vec(-1.0f64..1.0, 9),
        v in prop::collection::vec(-1.0f64..1.0, 3),
        c in 0.1f64..10.0,
    ) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-2));
        let (g, g_bar, l, l_bar) = (spd(3, &gs), spd(3, &hs), skew(3, &ls), skew(3, &ms));
        let v = DVector::from_vec(v);
        let r = la3_residual(&g, &g_bar, &l, &l_bar, &v).unwrap();
        let neg = la3_residual(&g, &g_bar, &l, &l_bar, &(-&v)).unwrap();
        let scaled = la3_residual(&g, &g_bar, &l, &l_bar, &(&v * c)).unwrap();
        prop_assert!((r - neg).abs() <= 1e-12);
        prop_assert!((r - scaled).abs() <= 1e-10);
        prop_assert!(r.abs() <= 1.0);
    }

    #[test]
    fn sectional_curvature_depends_only_on_the_plane(
        p in prop::collection::vec(-0.8f64..0.8, 3),
        u in prop::collection::vec(-1.0f64..1.0, 3),
        v in prop::collection::vec(-1.0f64..1.0, 3),
        m in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.1);
        let g = MetricField::parse(&[
            vec!["2 + sin(x1*x2)", "0.3*x3", "0"],
            vec!["0.3*x3", "1 + x1^2", "0.2*cos(x2)"],
            vec!["0", "0.2*cos(x2)", "exp(0.5*x3)"],
        ])
        .unwrap();
        let (ud, vd) = (DVector::from_column_slice(&u), DVector::from_column_slice(&v));
        prop_assume!(ud.cross(&vd).norm() > 0.05 * ud.norm() * vd.norm());
        let a: Vec<f64> = (0..3).map(|i| m[0] * u[i] + m[1] * v[i]).collect();
        let b: Vec<f64> = (0..3).map(|i| m[2] * u[i] + m[3] * v[i]).collect();
        let k1 = sectional_curvature(&g, &p, &u, &v).unwrap();
        let k2 = sectional_curvature(&g, &p, &a, &b).unwrap();
        let k3 = sectional_curvature(&g, &p, &v, &u).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-8 * k1.abs().max(1.0), "{k1} vs {k2}");
        prop_assert!((k1 - k3).abs() <= 1e-10 * k1.abs().max(1.0));
    }

    #[test]
    fn forward_minus_backward_is_twice_the_flux(c in -0.4f64..0.4, r in 0.1f64..0.5, warp in -0.5f64..0.5) {
        // ω = c(−x2, x1) has dω = 2c dx1∧dx2, so ∮ω = 2c · πr².
        let f = RandersMetric::with_resolution(
            MetricField::identity(2),
            OneFormField::parse(&[format!("{}*x2", -c), format!("{c}*x1")]).unwrap(),
            ChartDomain::cube(2, -1.0, 1.0).unwrap(),
            5,
        )
        .unwrap();
        let loop_ = circle(r, warp, 600);
        let fwd = f.curve_length(&loop_, Direction::Forward).unwrap().value;
        let bwd = f.curve_length(&loop_, Direction::Backward).unwrap().value;
        let flux = 2.0 * c * std::f64::consts::PI * r * r;
        prop_assert!((fwd - bwd - 2.0 * flux).abs() <= 1e-9, "{} vs {}", fwd - bwd, 2.0 * flux);
    }
}
