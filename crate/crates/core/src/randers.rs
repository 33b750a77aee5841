//! The Randers metric `F(x, ξ) = sqrt(g(ξ, ξ)) + ω(ξ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{Node, ScalarExpression};
use crate::geometry::{ChartDomain, MetricField, OneFormField};

/// Sample count per axis used when checking validity at construction.
pub const DEFAULT_VALIDITY_RESOLUTION: usize = 64;

/// Tolerance on `|dσ|` when a form is required to be closed.
pub const CLOSEDNESS_TOL: f64 = 1e-10;

/// A Randers metric on a chart.
///
/// Construction samples the chart and rejects metrics whose 1-form has
/// g-norm `>= 1` anywhere on the sample; every evaluation re-checks the
/// condition at the evaluation point.
#[derive(Debug, Clone)]
pub struct RandersMetric {
    label: String,
    g: MetricField,
    omega: OneFormField,
    domain: ChartDomain,
    resolution: usize,
}

impl RandersMetric {
    pub fn new(g: MetricField, omega: OneFormField, domain: ChartDomain) -> Result<Self> {
        Self::with_resolution(g, omega, domain, DEFAULT_VALIDITY_RESOLUTION)
    }

    /// Like [`new`](Self::new) with an explicit validity sample resolution.
    /// In dimension 3 and above the per-axis count is capped so the sample
    /// stays below `64³` points.
    pub fn with_resolution(
        g: MetricField,
        omega: OneFormField,
        domain: ChartDomain,
        per_axis: usize,
    ) -> Result<Self> {
        let n = domain.dimension();
        if g.dimension() != n {
            return Err(Error::Dimension { expected: n, got: g.dimension() });
        }
        if omega.dimension() != n {
            return Err(Error::Dimension { expected: n, got: omega.dimension() });
        }
        let cap = (262_144f64).powf(1.0 / n as f64).floor() as usize;
        let metric = RandersMetric {
            label: "F".into(),
            g,
            omega,
            domain,
            resolution: per_axis.clamp(2, cap.max(2)),
        };
        for p in metric.validity_samples()? {
            metric.check_validity_at(&p)?;
        }
        Ok(metric)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn g(&self) -> &MetricField {
        &self.g
    }

    pub fn omega(&self) -> &OneFormField {
        &self.omega
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn validity_resolution(&self) -> usize {
        self.resolution
    }

    /// Admissible points of the validity sample lattice.
    pub fn validity_samples(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.domain.uniform_grid(self.resolution)?.admissible_points())
    }

    /// `‖ω‖_g = sqrt(g^{ij} ω_i ω_j)` at `p`.
    pub fn form_norm(&self, p: &[f64]) -> Result<f64> {
        let (_, chol) = self.g.factor(p)?;
        let w = self.omega.values(p)?;
        let sol = chol.solve(&w);
        Ok(w.dot(&sol).max(0.0).sqrt())
    }

    pub fn check_validity_at(&self, p: &[f64]) -> Result<()> {
        let norm = self.form_norm(p)?;
        if norm < 1.0 {
            Ok(())
        } else {
            Err(Error::Validity { point: p.to_vec(), norm })
        }
    }

    /// `F(p, ξ)`.
    pub fn eval(&self, p: &[f64], xi: &[f64]) -> Result<f64> {
        self.domain.check_admissible(p)?;
        if xi.len() != p.len() {
            return Err(Error::Dimension { expected: p.len(), got: xi.len() });
        }
        if xi.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroVector);
        }
        self.check_validity_at(p)?;
        let g = self.g.values(p)?;
        let v = DVector::from_column_slice(xi);
        let k = v.dot(&(&g * &v));
        Ok(k.sqrt() + self.omega.apply(p, xi)?)
    }

    /// The metric `F̃(x, ξ) = F(x, −ξ)`: same `g`, negated `ω`.
    pub fn reversed(&self) -> RandersMetric {
        let omega = OneFormField::from_nodes(
            self.omega.components().iter().map(|c| Node::neg(c.node().clone())).collect(),
        );
        RandersMetric {
            label: format!("reverse({})", self.label),
            g: self.g.clone(),
            omega,
            domain: self.domain.clone(),
            resolution: self.resolution,
        }
    }

    /// Forward or backward length of a sampled curve by composite Simpson
    /// quadrature over its parameter grid.
    pub fn curve_length(&self, curve: &SampledCurve, direction: Direction) -> Result<LengthEstimate> {
        curve.validate()?;
        let sign = match direction {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let mut f = Vec::with_capacity(curve.len());
        for (x, v) in curve.points.iter().zip(&curve.velocities) {
            let xi: Vec<f64> = v.iter().map(|c| sign * c).collect();
            f.push(self.eval(x, &xi)?);
        }
        Ok(simpson_with_estimate(&curve.t, &f))
    }

    /// `const · F + σ`: metric `const² g`, form `const ω + σ`.
    ///
    /// `σ` must be closed (checked on the validity sample) and the result
    /// must be positive on all tangent vectors of the sample.
    pub fn trivial_transform(&self, c: f64, sigma: &OneFormField) -> Result<RandersMetric> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {c}")));
        }
        if sigma.dimension() != self.dimension() {
            return Err(Error::Dimension { expected: self.dimension(), got: sigma.dimension() });
        }
        for p in self.validity_samples()? {
            let residual = sigma.exterior_derivative(&p)?.max_abs();
            if residual > CLOSEDNESS_TOL {
                return Err(Error::NotClosed { point: p, residual });
            }
        }
        let n = self.dimension();
        let c2 = Node::num(c * c);
        let g = MetricField::from_nodes(n, |i, j| Node::mul(c2.clone(), self.g.entry(i, j).node().clone()));
        let omega = OneFormField::from_nodes(
            (0..n)
                .map(|i| {
                    Node::add(
                        Node::mul(Node::num(c), self.omega.component(i).node().clone()),
                        sigma.component(i).node().clone(),
                    )
                })
                .collect(),
        );
        RandersMetric::with_resolution(g, omega, self.domain.clone(), self.resolution)
            .map(|m| m.with_label(format!("{c}*{} + sigma", self.label)))
            .map_err(|e| match e {
                Error::Validity { point, .. } => Error::Positivity { point },
                other => other,
            })
    }

    /// Pullback `φ*F` on the same chart.
    pub fn pullback(&self, phi: &Diffeomorphism) -> Result<RandersMetric> {
        let n = self.dimension();
        if phi.dimension() != n {
            return Err(Error::Dimension { expected: n, got: phi.dimension() });
        }
        phi.check_on(&self.validity_samples()?, &self.domain)?;
        let subs: Vec<Node> = phi.components.iter().map(|c| c.node().clone()).collect();
        let jac = |k: usize, i: usize| phi.jacobian[k][i].node().clone();
        let g = MetricField::from_nodes(n, |i, j| {
            let mut acc = Node::num(0.0);
            for k in 0..n {
                for l in 0..n {
                    let term = Node::mul(
                        Node::mul(self.g.entry(k, l).node().substitute(&subs), jac(k, i)),
                        jac(l, j),
                    );
                    acc = Node::add(acc, term);
                }
            }
            acc
        });
        let omega = OneFormField::from_nodes(
            (0..n)
                .map(|i| {
                    (0..n).fold(Node::num(0.0), |acc, k| {
                        Node::add(acc, Node::mul(self.omega.component(k).node().substitute(&subs), jac(k, i)))
                    })
                })
                .collect(),
        );
        Ok(RandersMetric::with_resolution(g, omega, self.domain.clone(), self.resolution)?
            .with_label(format!("pullback({})", self.label)))
    }
}

/// Pullback of a 1-form alone, `(φ*ω)_i = ω_k(φ(x)) ∂φ^k/∂x^i`.
pub fn pullback_form(omega: &OneFormField, phi: &Diffeomorphism) -> Result<OneFormField> {
    let n = omega.dimension();
    if phi.dimension() != n {
        return Err(Error::Dimension { expected: n, got: phi.dimension() });
    }
    let subs: Vec<Node> = phi.components.iter().map(|c| c.node().clone()).collect();
    Ok(OneFormField::from_nodes(
        (0..n)
            .map(|i| {
                (0..n).fold(Node::num(0.0), |acc, k| {
                    Node::add(
                        acc,
                        Node::mul(omega.component(k).node().substitute(&subs), phi.jacobian[k][i].node().clone()),
                    )
                })
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A curve sampled at increasing parameter values, with velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub t: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl SampledCurve {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.t.len() < 2 || self.points.len() != self.t.len() || self.velocities.len() != self.t.len() {
            return Err(Error::DegenerateCurve("need at least two samples with matching lengths".into()));
        }
        if self.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DegenerateCurve("parameter samples must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Quadrature result with a Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

fn simpson(t: &[f64], f: &[f64]) -> f64 {
    let m = t.len();
    if m == 2 {
        return 0.5 * (t[1] - t[0]) * (f[0] + f[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < m {
        let (h0, h1) = (t[i + 1] - t[i], t[i + 2] - t[i + 1]);
        let s = h0 + h1;
        total += s / 6.0 * ((2.0 - h1 / h0) * f[i] + s * s / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
        i += 2;
    }
    if i + 1 < m {
        // odd interval count: integrate the parabola through the last three
        // samples over the final interval only
        let (h0, h1) = (t[m - 2] - t[m - 3], t[m - 1] - t[m - 2]);
        total += h1
            * (f[m - 1] * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1)) + f[m - 2] * (h1 + 3.0 * h0) / (6.0 * h0)
                - f[m - 3] * h1 * h1 / (6.0 * h0 * (h0 + h1)));
    }
    total
}

fn simpson_with_estimate(t: &[f64], f: &[f64]) -> LengthEstimate {
    let fine = simpson(t, f);
    if t.len() < 5 {
        return LengthEstimate { value: fine, error_estimate: f64::NAN };
    }
    let mut ct: Vec<f64> = t.iter().step_by(2).copied().collect();
    let mut cf: Vec<f64> = f.iter().step_by(2).copied().collect();
    if (t.len() - 1) % 2 == 1 {
        ct.push(*t.last().unwrap());
        cf.push(*f.last().unwrap());
    }
    let coarse = simpson(&ct, &cf);
    LengthEstimate { value: fine, error_estimate: (fine - coarse).abs() / 15.0 }
}

/// A smooth map of the chart given by component expressions, with its
/// Jacobian built symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct Diffeomorphism {
    components: Vec<ScalarExpression>,
    /// `jacobian[k][i] = ∂φ^k/∂x^i`
    jacobian: Vec<Vec<ScalarExpression>>,
}

impl Diffeomorphism {
    pub fn new(components: Vec<ScalarExpression>) -> Result<Self> {
        let n = components.len();
        if n < 2 {
            return Err(Error::InvalidArgument("map dimension must be at least 2".into()));
        }
        if let Some(c) = components.iter().find(|c| c.arity() != n) {
            return Err(Error::Dimension { expected: n, got: c.arity() });
        }
        let jacobian = components
            .iter()
            .map(|c| (0..n).map(|i| Ok(ScalarExpression::from_node(c.node().partial(i)?, n))).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        Ok(Diffeomorphism { components, jacobian })
    }

    pub fn parse<S: AsRef<str>>(sources: &[S]) -> Result<Self> {
        let n = sources.len();
        let comps = sources
            .iter()
            .map(|s| ScalarExpression::parse(s.as_ref(), n))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(comps)
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(|i| ScalarExpression::from_node(Node::var(i), n)).collect())
            .expect("identity map is differentiable")
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarExpression] {
        &self.components
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| Ok(c.eval(x)?)).collect()
    }

    /// `J[(k, i)] = ∂φ^k/∂x^i` at `x`.
    pub fn jacobian_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dimension();
        let mut j = DMatrix::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                j[(k, i)] = self.jacobian[k][i].eval(x)?;
            }
        }
        Ok(j)
    }

    /// Checks that every point maps into the admissible set with a
    /// non-singular Jacobian.
    pub fn check_on(&self, points: &[Vec<f64>], domain: &ChartDomain) -> Result<()> {
        for x in points {
            let y = self.apply(x)?;
            if !domain.is_admissible(&y) {
                return Err(Error::Inadmissible { point: y });
            }
            let j = self.jacobian_at(x)?;
            let scale = j.amax().max(f64::MIN_POSITIVE);
            if j.determinant().abs() <= 1e-12 * scale.powi(self.dimension() as i32) {
                return Err(Error::SingularJacobian { point: x.clone() });
            }
        }
        Ok(())
    }
}

/// Outcome of testing whether `φ*g = c² g` on a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct HomothetyReport {
    pub is_homothety: bool,
    /// `c`, from the mean of the per-point least-squares `c²`.
    pub constant: f64,
    /// `(max c² − min c²) / mean c²`.
    pub spread: f64,
    /// Worst per-point `max |φ*g − c² g| / max |g|`.
    pub fit_residual: f64,
}

/// Relative tolerance for [`homothety_check`].
pub const HOMOTHETY_TOL: f64 = 1e-8;

pub fn homothety_check(f: &RandersMetric, phi: &Diffeomorphism, samples: &[Vec<f64>]) -> Result<HomothetyReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    phi.check_on(samples, f.domain())?;
    let mut ratios = Vec::with_capacity(samples.len());
    let mut fit_residual: f64 = 0.0;
    for x in samples {
        let g = f.g().values(x)?;
        let j = phi.jacobian_at(x)?;
        let pulled = j.transpose() * f.g().values(&phi.apply(x)?)? * &j;
        let c2 = pulled.dot(&g) / g.dot(&g);
        fit_residual = fit_residual.max((&pulled - &g * c2).amax() / g.amax());
        ratios.push(c2);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let spread = (hi - lo) / mean.abs();
    Ok(HomothetyReport {
        is_homothety: fit_residual <= HOMOTHETY_TOL && spread <= HOMOTHETY_TOL && mean > 0.0,
        constant: mean.max(0.0).sqrt(),
        spread,
        fit_residual,
    })
}
