//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use randers::equivalence::{
    average_form, classify_point, flatness_check, global_verdict, la3_residual, sample_directions,
    Outcome, PointCase, Tolerances,
};
use randers::expr::ScalarExpression;
use randers::gallery::{self, INSTANCE_IDS};
use randers::geodesic::{
    curves_coincide, geodesic_rhs, integrate, magnetic_rhs, ode_residual, reverse_curve, CurveMode, Orientation,
};
use randers::geometry::{ChartDomain, MetricField, OneFormField, SkewMatrix};
use randers::randers::{homothety_check, Diffeomorphism, RandersMetric};

type Check = Result<String, String>;

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut l = SkewMatrix::zeros(n);
    for i in 0..n {
        for k in (i + 1)..n {
            l.set(i, k, rng.random_range(-1.0..1.0));
        }
    }
    l.to_matrix()
}

fn random_alpha(rng: &mut ChaCha8Rng) -> f64 {
    let a = rng.random_range(0.1..3.0);
    if rng.random_bool(0.5) {
        -a
    } else {
        a
    }
}

/// Constant metric `g` with a linear form whose skew field is `l`, on a
/// small cube where the form stays short.
fn constant_metric(g: &DMatrix<f64>, l: &DMatrix<f64>) -> RandersMetric {
    let n = g.nrows();
    let metric = MetricField::parse(
        &(0..n).map(|i| (0..n).map(|j| format!("{}", g[(i, j)])).collect::<Vec<_>>()).collect::<Vec<_>>(),
    )
    .unwrap();
    // ω_i = ½ L_ik x^k has skew field L
    let omega: Vec<String> = (0..n)
        .map(|i| (0..n).map(|k| format!("({})*x{}", 0.5 * l[(i, k)], k + 1)).collect::<Vec<_>>().join(" + "))
        .collect();
    RandersMetric::with_resolution(
        metric,
        OneFormField::parse(&omega).unwrap(),
        ChartDomain::cube(n, -0.2, 0.2).unwrap(),
        4,
    )
    .unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, domain: &ChartDomain, shrink: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = domain
            .bounds()
            .map(|(a, b)| {
                let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0 * shrink);
                rng.random_range(mid - half..mid + half)
            })
            .collect();
        if domain.is_admissible(&p) {
            return p;
        }
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 0.01 {
            return v;
        }
    }
}

/// Every metric in the gallery, including the second metric of pairs.
fn gallery_metrics() -> Vec<(String, RandersMetric)> {
    let mut out = Vec::new();
    for id in INSTANCE_IDS {
        let inst = gallery::build(id).unwrap();
        out.push((id.to_string(), inst.metric));
        if let Some(b) = inst.metric_bar {
            out.push((format!("{id}/bar"), b));
        }
    }
    out
}

fn within(elapsed: Duration, limit: f64) -> Check {
    if elapsed.as_secs_f64() <= limit {
        Ok(String::new())
    } else {
        Err(format!("took {:.2}s, limit {limit}s", elapsed.as_secs_f64()))
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let n = 2 + k % 3;
        let g = random_spd(&mut rng, n);
        let l = random_skew(&mut rng, n);
        let alpha = random_alpha(&mut rng);
        let (g_bar, l_bar) = (&g * (alpha * alpha), &l * alpha);
        for v in sample_directions(n, k as u64) {
            worst = worst.max(la3_residual(&g, &g_bar, &l, &l_bar, &v).map_err(|e| e.to_string())?.abs());
        }
    }
    within(start.elapsed(), 5.0)?;
    if worst <= 1e-10 {
        Ok(format!("max |la3| = {worst:.2e} over 200 instances"))
    } else {
        Err(format!("max |la3| = {worst:.2e}"))
    }
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tol = Tolerances::default();
    let (mut inconsistent, mut closed, mut false_proportional) = (0, 0, 0);
    for k in 0..200 {
        let n = 2 + k % 2;
        let g = random_spd(&mut rng, n);
        let g_bar = random_spd(&mut rng, n);
        let fit = g_bar.dot(&g) / g.dot(&g);
        if (&g_bar - &g * fit).amax() / g.amax() < 1e-3 {
            continue;
        }
        let l = random_skew(&mut rng, n);
        // half of the cases use the most deceptive second field, α L
        let l_bar = if k % 2 == 0 { &l * random_alpha(&mut rng) } else { random_skew(&mut rng, n) };
        let f = constant_metric(&g, &(&l * 0.5));
        let f_bar = constant_metric(&g_bar, &(&l_bar * 0.5));
        let p = vec![0.05; n];
        let dirs = sample_directions(n, 42);
        match classify_point(&f, &f_bar, &p, &dirs, &tol, 1e-9).map_err(|e| e.to_string())?.case {
            PointCase::Proportional { .. } => false_proportional += 1,
            PointCase::BothClosed => closed += 1,
            PointCase::Inconsistent => inconsistent += 1,
        }
    }
    within(start.elapsed(), 5.0)?;
    if false_proportional == 0 && inconsistent + closed > 190 {
        Ok(format!("{inconsistent} inconsistent, {closed} both-closed, 0 proportional"))
    } else {
        Err(format!("{false_proportional} false proportional verdicts ({inconsistent} inconsistent)"))
    }
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let inst = gallery::build("trivial-pair").map_err(|e| e.to_string())?;
    let grid = inst.metric.domain().uniform_grid(33).unwrap();
    let v = global_verdict(
        &inst.metric,
        inst.metric_bar.as_ref().unwrap(),
        &grid,
        CurveMode::Oriented,
        &Tolerances::default(),
        42,
    )
    .map_err(|e| e.to_string())?;
    within(start.elapsed(), 10.0)?;
    let c = v.constant.unwrap_or(f64::NAN);
    let closed = v.residuals.closedness_max.unwrap_or(f64::INFINITY);
    if v.outcome == Outcome::ProportionalGlobal && (c - 2.0).abs() <= 1e-6 && closed <= 1e-8 {
        Ok(format!("const = {c}, closedness = {closed:.2e}"))
    } else {
        Err(format!("{:?}, const {c}, closedness {closed:.2e}", v.outcome))
    }
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let inst = gallery::build("example-2").map_err(|e| e.to_string())?;
    let (f, f_bar) = (&inst.metric, inst.metric_bar.as_ref().unwrap());
    let grid = f.domain().uniform_grid(65).unwrap();
    let tol = Tolerances::default();
    let un = global_verdict(f, f_bar, &grid, CurveMode::Unoriented, &tol, 42).map_err(|e| e.to_string())?;
    let or = global_verdict(f, f_bar, &grid, CurveMode::Oriented, &tol, 42).map_err(|e| e.to_string())?;
    within(start.elapsed(), 30.0)?;
    let signs: Vec<Option<i8>> = un.components.iter().map(|c| c.sign).collect();
    let opposite = signs.len() == 2 && signs.contains(&Some(1)) && signs.contains(&Some(-1));
    if un.outcome == Outcome::MixedSigns && opposite && or.outcome == Outcome::Refuted {
        Ok(format!("unoriented MixedSigns {signs:?}, oriented Refuted"))
    } else {
        Err(format!("unoriented {:?} {signs:?}, oriented {:?}", un.outcome, or.outcome))
    }
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let mut traces = 0;
    for (name, f) in gallery_metrics() {
        let n = f.dimension();
        for _ in 0..20 {
            let p = random_point(&mut rng, f.domain(), 0.6);
            let v = random_direction(&mut rng, n);
            for orientation in [Orientation::Forward, Orientation::Backward] {
                let c = integrate(&f, &p, &v, orientation, 0.5, 1e-3).map_err(|e| format!("{name}: {e}"))?;
                let r = reverse_curve(&c);
                let res = ode_residual(&f, &r, orientation.flipped()).map_err(|e| format!("{name}: {e}"))?;
                worst = worst.max(res);
                traces += 1;
                if orientation == Orientation::Forward && !c.truncated {
                    // backward trace from the reversed end state retraces the curve
                    let last = c.samples.last().unwrap();
                    let back_v: Vec<f64> = last.v.iter().map(|x| -x).collect();
                    let b = integrate(&f, &last.x, &back_v, Orientation::Backward, 0.5, 1e-3)
                        .map_err(|e| format!("{name}: {e}"))?;
                    for (s, t) in b.samples.iter().zip(r.samples.iter()) {
                        let d = s.x.iter().zip(&t.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        gap = gap.max(d);
                    }
                }
            }
        }
    }
    if worst <= 1e-6 && gap <= 1e-6 {
        Ok(format!("{traces} traces, max ODE residual {worst:.2e}, retrace gap {gap:.2e}"))
    } else {
        Err(format!("max ODE residual {worst:.2e}, retrace gap {gap:.2e}"))
    }
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for (name, f) in gallery_metrics() {
        let reversed = f.reversed();
        for _ in 0..1000 {
            let p = random_point(&mut rng, f.domain(), 1.0);
            let v = random_direction(&mut rng, f.dimension());
            let e = geodesic_rhs(&f, &p, &v, Orientation::Forward).map_err(|e| format!("{name}: {e}"))?;
            let m = magnetic_rhs(f.g(), f.omega(), &p, &v).map_err(|e| format!("{name}: {e}"))?;
            let eb = geodesic_rhs(&f, &p, &v, Orientation::Backward).map_err(|e| format!("{name}: {e}"))?;
            let mb = magnetic_rhs(f.g(), reversed.omega(), &p, &v).map_err(|e| format!("{name}: {e}"))?;
            worst = worst.max((e - m).amax()).max((eb - mb).amax());
        }
    }
    // constant field B = 2: circle of radius 1/2 about the origin
    let circle = RandersMetric::new(
        MetricField::identity(2),
        OneFormField::parse(&["-x2", "x1"]).unwrap(),
        ChartDomain::cube(2, -0.7, 0.7).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let c = integrate(&circle, &[0.5, 0.0], &[0.0, -1.0], Orientation::Forward, PI, 1e-3).map_err(|e| e.to_string())?;
    let radial = c
        .samples
        .iter()
        .map(|s| ((s.x[0].hypot(s.x[1]) - 0.5) / 0.5).abs())
        .fold(0.0, f64::max);
    let end = c.end();
    let closure = (end[0] - 0.5).hypot(end[1]) / 0.5;
    if worst <= 1e-10 && radial <= 1e-5 && closure <= 1e-5 && !c.truncated {
        Ok(format!("rhs gap {worst:.2e}, radius error {radial:.2e}, closure {closure:.2e}"))
    } else {
        Err(format!("rhs gap {worst:.2e}, radius error {radial:.2e}, closure {closure:.2e}"))
    }
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inst = gallery::build("trivial-pair").map_err(|e| e.to_string())?;
    let (f, f_bar) = (&inst.metric, inst.metric_bar.as_ref().unwrap());
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_point(&mut rng, f.domain(), 0.5);
        let v = random_direction(&mut rng, 2);
        // F̄ has g-speed 1/2 at unit ḡ-speed, so trace it twice as long
        let a = integrate(f, &p, &v, Orientation::Forward, 0.5, 1e-3).map_err(|e| e.to_string())?;
        let b = integrate(f_bar, &p, &v, Orientation::Forward, 1.0, 1e-3).map_err(|e| e.to_string())?;
        let (ok, d) = curves_coincide(&a, &b, CurveMode::Oriented).map_err(|e| e.to_string())?;
        let rel = d / a.chord_length().min(b.chord_length());
        worst = worst.max(rel);
        if !ok {
            return Err(format!("curves differ at {p:?}: gap {d:.2e}"));
        }
    }
    Ok(format!("20 pairs coincide, worst gap / arclength {worst:.2e}"))
}

fn criterion_8() -> Check {
    let tol = Tolerances::default();
    let mut details = Vec::new();
    for (id, expect) in [
        ("flat-riemannian", true),
        ("flat-closed-form", true),
        ("sphere", true),
        ("hyperbolic", true),
        ("constant-field", false),
        ("example-2", false),
    ] {
        let inst = gallery::build(id).map_err(|e| e.to_string())?;
        let grid = inst.metric.domain().uniform_grid(inst.grid).unwrap();
        let r = flatness_check(&inst.metric, &grid, &tol).map_err(|e| e.to_string())?;
        if r.projectively_flat != expect {
            return Err(format!("{id}: projectively_flat = {}", r.projectively_flat));
        }
        if expect && r.curvature_spread > 1e-6 {
            return Err(format!("{id}: curvature spread {:.2e}", r.curvature_spread));
        }
        if !expect && r.witness.is_none() {
            return Err(format!("{id}: no witness point"));
        }
        details.push(format!("{id} K={:.3}", r.curvature));
    }
    Ok(details.join(", "))
}

fn criterion_9() -> Check {
    let f = RandersMetric::new(
        MetricField::identity(2),
        OneFormField::parse(&["0.1*x2", "0"]).unwrap(),
        ChartDomain::cube(2, -4.0, 4.0).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let samples: Vec<Vec<f64>> = ChartDomain::cube(2, -1.5, 1.5).unwrap().uniform_grid(9).unwrap().admissible_points();
    let check = |map: [&str; 2]| homothety_check(&f, &Diffeomorphism::parse(&map).unwrap(), &samples);
    let mut err: f64 = 0.0;
    for (map, c) in [
        (["x1", "x2"], 1.0),
        (["cos(0.7)*x1 - sin(0.7)*x2", "sin(0.7)*x1 + cos(0.7)*x2"], 1.0),
        (["2*x1", "2*x2"], 2.0),
        (["0.5*x1 + 1", "0.5*x2 - 0.5"], 0.5),
    ] {
        let r = check(map).map_err(|e| e.to_string())?;
        if !r.is_homothety {
            return Err(format!("{map:?} not detected"));
        }
        err = err.max((r.constant - c).abs());
    }
    let shear = check(["x1 + 0.5*x2", "x2"]).map_err(|e| e.to_string())?;
    if err <= 1e-8 && !shear.is_homothety {
        Ok(format!("const error {err:.2e}, shear rejected (fit residual {:.2e})", shear.fit_residual))
    } else {
        Err(format!("const error {err:.2e}, shear detected: {}", shear.is_homothety))
    }
}

fn criterion_10() -> Check {
    let corpus = include_str!("data/expressions.tsv");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut count, mut worst) = (0, 0.0f64);
    for line in corpus.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (arity, src) = line.split_once('\t').ok_or("bad corpus line")?;
        let n: usize = arity.parse().map_err(|_| "bad arity")?;
        let e = ScalarExpression::parse(src, n).map_err(|err| format!("{src}: {err}"))?;
        let again = ScalarExpression::parse(&e.pretty(), n).map_err(|err| format!("{}: {err}", e.pretty()))?;
        if again.node() != e.node() {
            return Err(format!("round trip changed {src}"));
        }
        for _ in 0..5 {
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jet = e.eval_jet1(&p).map_err(|err| format!("{src}: {err}"))?;
            for k in 0..n {
                let h = 1e-6;
                let (mut a, mut b) = (p.clone(), p.clone());
                a[k] += h;
                b[k] -= h;
                let fd = (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h);
                let rel = (jet.gradient()[k] - fd).abs() / jet.gradient()[k].abs().max(1.0);
                worst = worst.max(rel);
            }
        }
        count += 1;
    }
    let malformed = [
        ("x1 +", 4),
        ("(x1 + x2", 8),
        ("x1 + x2)", 7),
        ("y + 1", 0),
        ("x1 + x3", 5),
        ("x1 * * x2", 5),
        ("sin()", 4),
        ("x1 ^ x2", 5),
        ("x1 $ 2", 3),
        ("", 0),
    ];
    for (src, offset) in malformed {
        match ScalarExpression::parse(src, 2) {
            Err(e) if e.offset == offset => {}
            other => return Err(format!("{src:?}: expected error at {offset}, got {other:?}")),
        }
    }
    if count == 100 && worst <= 1e-6 {
        Ok(format!("{count} round trips, gradient gap {worst:.2e}, {} malformed inputs located", malformed.len()))
    } else {
        Err(format!("{count} expressions, gradient gap {worst:.2e}"))
    }
}

fn criterion_11() -> Check {
    let domain = ChartDomain::cube(2, -1.0, 1.0).unwrap();
    let points = domain.uniform_grid(33).unwrap().admissible_points();
    let invariant = "0.2*x1*x2";
    let exact = ScalarExpression::parse("0.1*x1*cos(x2)", 2).unwrap();
    let d = OneFormField::differential(&exact).map_err(|e| e.to_string())?;
    let omega = OneFormField::parse(&[
        format!("{invariant} + {}", d.component(0).pretty()),
        format!("0.2*x1^2 + {}", d.component(1).pretty()),
    ])
    .map_err(|e| e.to_string())?;
    let group = [Diffeomorphism::identity(2), Diffeomorphism::parse(&["-x1", "x2"]).unwrap()];
    let r = average_form(&omega, &group, &domain, &points).map_err(|e| e.to_string())?;
    let axis = points
        .iter()
        .zip(&r.values)
        .filter(|(p, _)| p[0] == 0.0)
        .map(|(_, w)| w[0].abs().max(w[1].abs()))
        .fold(0.0, f64::max);
    if r.closedness_residual <= 1e-8 && r.invariance_residual <= 1e-8 && axis == 0.0 {
        Ok(format!(
            "closedness {:.2e}, invariance {:.2e}, averaged form vanishes on the axis",
            r.closedness_residual, r.invariance_residual
        ))
    } else {
        Err(format!("closedness {:.2e}, invariance {:.2e}, axis {axis:.2e}", r.closedness_residual, r.invariance_residual))
    }
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 11] = [
        ("dichotomy identity", criterion_1),
        ("dichotomy converse", criterion_2),
        ("proportional pair regression", criterion_3),
        ("two-ball counterexample", criterion_4),
        ("reversal duality", criterion_5),
        ("magnetic oracle", criterion_6),
        ("trivial-equivalence dynamics", criterion_7),
        ("flatness discrimination", criterion_8),
        ("homothety detection", criterion_9),
        ("parser and jets", criterion_10),
        ("finite-group averaging", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
