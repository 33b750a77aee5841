//! Forward and backward geodesics of a Randers metric, traced at unit
//! `g`-speed with classical RK4.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{skew_from_jacobian, Christoffel, MetricField, OneFormField};
use crate::randers::RandersMetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Forward,
    Backward,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Backward,
            Orientation::Backward => Orientation::Forward,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Backward => -1.0,
        }
    }
}

/// Acceleration of the geodesic through `(p, v)`:
/// `ẍ^j = −Γ^j_kp v^k v^p ∓ sqrt(g(v, v)) g^{ij} L_ik v^k`, minus for forward.
pub fn geodesic_rhs(f: &RandersMetric, p: &[f64], v: &[f64], orientation: Orientation) -> Result<DVector<f64>> {
    f.domain().check_admissible(p)?;
    if v.iter().all(|c| *c == 0.0) {
        return Err(Error::ZeroVector);
    }
    let m = f.g().eval_metric(p)?;
    let gamma = Christoffel::from_eval(&m);
    let vv = DVector::from_column_slice(v);
    let speed = vv.dot(&(&m.g * &vv)).sqrt();
    let l = f.omega().exterior_derivative(p)?;
    let force = &m.inv * l.apply(&vv);
    Ok(-gamma.contract(&vv, &vv) - force * (orientation.sign() * speed))
}

/// Lorentz-force form of the same equation, `∇_v v = Y(v)`, computed from
/// lowered Christoffel symbols, a Cholesky solve and the field
/// `Ω_ik = ∂_i A_k − ∂_k A_i` of the potential `A`:
/// `g(∇_v v, w) = |v|_g Ω(w, v)`.
///
/// Backward geodesics of `F` are the trajectories for the negated potential.
pub fn magnetic_rhs(g: &MetricField, potential: &OneFormField, p: &[f64], v: &[f64]) -> Result<DVector<f64>> {
    let n = g.dimension();
    if v.iter().all(|c| *c == 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut gm = DMatrix::zeros(n, n);
    let mut dg = vec![DMatrix::zeros(n, n); n];
    for i in 0..n {
        for j in 0..n {
            let jet = g.entry(i, j).eval_jet1(p)?;
            gm[(i, j)] = jet.value();
            for (k, d) in dg.iter_mut().enumerate() {
                d[(i, j)] = jet.gradient()[k];
            }
        }
    }
    let chol = Cholesky::new(gm.clone()).ok_or_else(|| Error::Degenerate { point: p.to_vec() })?;
    let (_, jac) = potential.jacobian(p)?;
    // skew_from_jacobian gives ∂_k A_i − ∂_i A_k; the field is its negative
    let field = -skew_from_jacobian(&jac).to_matrix();
    let vv = DVector::from_column_slice(v);
    let speed = vv.dot(&(&gm * &vv)).sqrt();
    let lowered = DVector::from_fn(n, |w, _| {
        let mut christoffel = 0.0;
        for k in 0..n {
            for q in 0..n {
                christoffel += (dg[q][(w, k)] - 0.5 * dg[w][(k, q)]) * v[k] * v[q];
            }
        }
        let lorentz: f64 = (0..n).map(|k| field[(w, k)] * v[k]).sum();
        speed * lorentz - christoffel
    });
    Ok(chol.solve(&lowered))
}

/// One sample of a traced curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// A traced geodesic with its integrator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicCurve {
    pub orientation: Orientation,
    pub samples: Vec<CurveSample>,
    pub step: f64,
    pub method: &'static str,
    /// Set when the trace left the admissible set before reaching `T`.
    pub truncated: bool,
    pub source: String,
}

impl GeodesicCurve {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> &[f64] {
        &self.samples[0].x
    }

    pub fn end(&self) -> &[f64] {
        &self.samples[self.samples.len() - 1].x
    }

    /// Chart-Euclidean polygonal length.
    pub fn chord_length(&self) -> f64 {
        self.samples.windows(2).map(|w| dist(&w[0].x, &w[1].x)).sum()
    }

    /// Worst relative deviation of the `g`-speed from 1.
    pub fn speed_drift(&self, g: &MetricField) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            worst = worst.max((g_norm(g, &s.x, &s.v)? - 1.0).abs());
        }
        Ok(worst)
    }

    /// Writes `t,x1..xn,v1..vn,gspeed,F`, one row per sample.
    pub fn write_csv<W: Write>(&self, f: &RandersMetric, out: &mut W) -> Result<()> {
        let n = f.dimension();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("v{i}")));
        header.push("gspeed".into());
        header.push("F".into());
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![sig17(s.t)];
            row.extend(s.x.iter().map(|c| sig17(*c)));
            row.extend(s.v.iter().map(|c| sig17(*c)));
            row.push(sig17(g_norm(f.g(), &s.x, &s.v)?));
            row.push(sig17(f.eval(&s.x, &s.v)?));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn g_norm(g: &MetricField, p: &[f64], v: &[f64]) -> Result<f64> {
    let gm = g.values(p)?;
    let vv = DVector::from_column_slice(v);
    Ok(vv.dot(&(&gm * &vv)).sqrt())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Traces the geodesic from `p0` in direction `v0` (rescaled to unit
/// `g`-length) over parameter length `t_max` with fixed step `h`.
///
/// The trace stops early, with `truncated` set, if an RK stage leaves the
/// admissible set.
pub fn integrate(
    f: &RandersMetric,
    p0: &[f64],
    v0: &[f64],
    orientation: Orientation,
    t_max: f64,
    h: f64,
) -> Result<GeodesicCurve> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("parameter length must be non-negative, got {t_max}")));
    }
    f.domain().check_admissible(p0)?;
    if v0.len() != p0.len() {
        return Err(Error::Dimension { expected: p0.len(), got: v0.len() });
    }
    let norm = g_norm(f.g(), p0, v0)?;
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut x = DVector::from_column_slice(p0);
    let mut v = DVector::from_column_slice(v0) / norm;
    let mut t = 0.0;
    let steps = (t_max / h - 1e-9).ceil().max(0.0) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(CurveSample { t, x: x.as_slice().to_vec(), v: v.as_slice().to_vec() });
    let mut truncated = false;

    let accel = |x: &DVector<f64>, v: &DVector<f64>| -> Option<DVector<f64>> {
        if !f.domain().is_admissible(x.as_slice()) {
            return None;
        }
        geodesic_rhs(f, x.as_slice(), v.as_slice(), orientation).ok()
    };

    for step in 0..steps {
        let dt = if step + 1 == steps { t_max - t } else { h };
        let stages = (|| {
            let a1 = accel(&x, &v)?;
            let (x2, v2) = (&x + &v * (dt / 2.0), &v + &a1 * (dt / 2.0));
            let a2 = accel(&x2, &v2)?;
            let (x3, v3) = (&x + &v2 * (dt / 2.0), &v + &a2 * (dt / 2.0));
            let a3 = accel(&x3, &v3)?;
            let (x4, v4) = (&x + &v3 * dt, &v + &a3 * dt);
            let a4 = accel(&x4, &v4)?;
            let xn = &x + (&v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (dt / 6.0);
            let vn = &v + (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (dt / 6.0);
            f.domain().is_admissible(xn.as_slice()).then_some((xn, vn))
        })();
        match stages {
            Some((xn, vn)) => {
                x = xn;
                v = vn;
                t = if step + 1 == steps { t_max } else { (step + 1) as f64 * h };
                samples.push(CurveSample { t, x: x.as_slice().to_vec(), v: v.as_slice().to_vec() });
            }
            None => {
                truncated = true;
                break;
            }
        }
    }
    Ok(GeodesicCurve { orientation, samples, step: h, method: "rk4", truncated, source: f.label().to_string() })
}

/// `x̃(t) = x(−t)`: samples reversed, velocities negated, orientation flipped.
pub fn reverse_curve(c: &GeodesicCurve) -> GeodesicCurve {
    let samples = c
        .samples
        .iter()
        .rev()
        .map(|s| CurveSample { t: -s.t, x: s.x.clone(), v: s.v.iter().map(|a| -a).collect() })
        .collect();
    GeodesicCurve { orientation: c.orientation.flipped(), samples, ..c.clone() }
}

/// How well a sampled curve solves the geodesic equation of `orientation`.
///
/// Uses fourth-order central differences on interior samples of a uniformly
/// stepped curve, comparing `dx/dt` with the stored velocity and `dv/dt` with
/// the RHS. Returns the worst absolute gap, relative to `1 + |ẍ|`.
pub fn ode_residual(f: &RandersMetric, c: &GeodesicCurve, orientation: Orientation) -> Result<f64> {
    let s = &c.samples;
    if s.len() < 5 {
        return Err(Error::DegenerateCurve("need at least five samples".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 2..s.len() - 2 {
        let h = (s[i + 2].t - s[i - 2].t) / 4.0;
        // final samples may sit on a shortened step
        if ((s[i + 1].t - s[i].t) - h).abs() > 1e-9 * h || ((s[i + 2].t - s[i + 1].t) - h).abs() > 1e-9 * h {
            continue;
        }
        let d = |get: &dyn Fn(&CurveSample) -> &[f64], k: usize| {
            (-get(&s[i + 2])[k] + 8.0 * get(&s[i + 1])[k] - 8.0 * get(&s[i - 1])[k] + get(&s[i - 2])[k]) / (12.0 * h)
        };
        let rhs = geodesic_rhs(f, &s[i].x, &s[i].v, orientation)?;
        let scale = 1.0 + rhs.norm();
        for k in 0..s[i].x.len() {
            worst = worst.max((d(&|q| &q.x, k) - s[i].v[k]).abs() / scale);
            worst = worst.max((d(&|q| &q.v, k) - rhs[k]).abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    Oriented,
    Unoriented,
}

/// Relative tolerance of [`curves_coincide`], in units of arclength.
pub const CURVE_TOL: f64 = 1e-4;

/// Compares two traces as curves.
///
/// Both are parameterized by chart arclength and cut to the shorter length.
/// Oriented mode matches start to start; unoriented mode also tries the
/// second curve reversed (matched from its far end). The reported distance
/// is the largest gap between points at equal arclength, which bounds the
/// Hausdorff distance of the two point sets from above.
pub fn curves_coincide(c1: &GeodesicCurve, c2: &GeodesicCurve, mode: CurveMode) -> Result<(bool, f64)> {
    let a = Polyline::new(c1)?;
    let b = Polyline::new(c2)?;
    let common = a.length().min(b.length());
    let m = 2000;
    let gap = |b_rev: bool| {
        (0..=m)
            .map(|i| {
                let s = common * i as f64 / m as f64;
                let pb = if b_rev { b.at(b.length() - s) } else { b.at(s) };
                dist(&a.at(s), &pb)
            })
            .fold(0.0, f64::max)
    };
    let mut d = gap(false);
    if mode == CurveMode::Unoriented {
        d = d.min(gap(true));
    }
    Ok((d <= CURVE_TOL * common, d))
}

struct Polyline {
    points: Vec<Vec<f64>>,
    cumulative: Vec<f64>,
}

impl Polyline {
    fn new(c: &GeodesicCurve) -> Result<Self> {
        let points: Vec<Vec<f64>> = c.samples.iter().map(|s| s.x.clone()).collect();
        let mut cumulative = vec![0.0];
        for w in points.windows(2) {
            cumulative.push(cumulative.last().unwrap() + dist(&w[0], &w[1]));
        }
        let total = *cumulative.last().unwrap();
        if !(total > 10.0 * c.step) {
            return Err(Error::DegenerateCurve(format!("arclength {total:e} is below 10 steps")));
        }
        Ok(Polyline { points, cumulative })
    }

    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn at(&self, s: f64) -> Vec<f64> {
        let s = s.clamp(0.0, self.length());
        let i = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => return self.points[i].clone(),
            Err(i) => i.clamp(1, self.points.len() - 1),
        };
        let (s0, s1) = (self.cumulative[i - 1], self.cumulative[i]);
        let w = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
        self.points[i - 1].iter().zip(&self.points[i]).map(|(p, q)| p + w * (q - p)).collect()
    }
}
