//! Pointwise and global classification of pairs of Randers metrics by
//! whether they share their oriented or unoriented geodesics.

use std::collections::VecDeque;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Node;
use crate::geodesic::{geodesic_rhs, CurveMode, Orientation};
use crate::geometry::{constant_curvature_check, ChartDomain, Grid, OneFormField};
use crate::randers::{pullback_form, Diffeomorphism, RandersMetric};

pub const DEFAULT_SEED: u64 = 42;

/// Numerical thresholds used by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Dimensionless algebraic residuals.
    pub alg: f64,
    /// `dω` counts as zero below `zero · (1 + field scale)`.
    pub zero: f64,
    /// Relative spread allowed in the proportionality constant.
    pub constant: f64,
    /// Normal-acceleration match, scaled by `|ẍ| + 1`.
    pub curvematch: f64,
    /// Sectional curvature spread, scaled by `1 + |K|`.
    pub curvature: f64,
    /// Curve coincidence, in units of arclength.
    pub curve: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { alg: 1e-8, zero: 1e-9, constant: 1e-6, curvematch: 1e-6, curvature: 1e-5, curve: 1e-4 }
    }
}

impl Tolerances {
    pub fn zero_threshold(&self, field_scale: f64) -> f64 {
        self.zero * (1.0 + field_scale)
    }
}

/// Unit test directions: `max(2n, 16)` seeded Gaussian directions followed
/// by the coordinate axes.
pub fn sample_directions(n: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = (2 * n).max(16);
    let mut dirs = Vec::with_capacity(count + n);
    while dirs.len() < count {
        let v = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = v.norm();
        if norm > 1e-8 {
            dirs.push(v / norm);
        }
    }
    dirs.extend((0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })));
    dirs
}

/// Metric, its inverse and the skew field `L` at one point.
#[derive(Debug, Clone)]
struct Local {
    g: DMatrix<f64>,
    inv: DMatrix<f64>,
    l: DMatrix<f64>,
}

impl Local {
    fn at(f: &RandersMetric, p: &[f64]) -> Result<Self> {
        let (g, chol) = f.g().factor(p)?;
        let l = f.omega().exterior_derivative(p)?.to_matrix();
        Ok(Local { inv: chol.inverse(), g, l })
    }
}

fn inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(g.clone()).map(|c| c.inverse()).ok_or(Error::Degenerate { point: Vec::new() })
}

/// The quartic identity relating the two skew fields along `v`:
/// `K̄³ (vᵀ g ḡ⁻¹ L̄ v)² − K³ (vᵀ ḡ g⁻¹ L v)²`, divided by the larger of the
/// two sides with the bilinears replaced by their Frobenius bounds.
///
/// `l` and `l_bar` are the full antisymmetric matrices.
pub fn la3_residual(
    g: &DMatrix<f64>,
    g_bar: &DMatrix<f64>,
    l: &DMatrix<f64>,
    l_bar: &DMatrix<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let a = g * inverse(g_bar)? * l_bar;
    let b = g_bar * inverse(g)? * l;
    la3_with(g, g_bar, &a, &b, v)
}

fn la3_with(g: &DMatrix<f64>, g_bar: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    if v.iter().all(|c| *c == 0.0) {
        return Err(Error::ZeroVector);
    }
    let k = v.dot(&(g * v));
    let k_bar = v.dot(&(g_bar * v));
    let vv = v.norm_squared();
    let lhs = k_bar.powi(3) * v.dot(&(a * v)).powi(2);
    let rhs = k.powi(3) * v.dot(&(b * v)).powi(2);
    let scale = (k_bar.powi(3) * (a.norm() * vv).powi(2)).max(k.powi(3) * (b.norm() * vv).powi(2));
    Ok((lhs - rhs) / (scale + f64::MIN_POSITIVE))
}

/// Per-direction diagnostics at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationSample {
    pub v: Vec<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "K_bar")]
    pub k_bar: f64,
    /// Tangential multiplier: the `g`-projection of
    /// `w = sqrt(K̄) ḡ⁻¹L̄ v − sqrt(K) g⁻¹L v` onto `v`.
    pub f: f64,
    /// `w − f v`.
    pub residual_la1: Vec<f64>,
    pub residual_la3: f64,
}

pub fn classification_samples(
    f: &RandersMetric,
    f_bar: &RandersMetric,
    p: &[f64],
    directions: &[DVector<f64>],
) -> Result<Vec<ClassificationSample>> {
    let (a, b) = (Local::at(f, p)?, Local::at(f_bar, p)?);
    let ma = &a.g * &b.inv * &b.l;
    let mb = &b.g * &a.inv * &a.l;
    directions
        .iter()
        .map(|v| {
            let k = v.dot(&(&a.g * v));
            let k_bar = v.dot(&(&b.g * v));
            let w = (&b.inv * (&b.l * v)) * k_bar.sqrt() - (&a.inv * (&a.l * v)) * k.sqrt();
            let mult = v.dot(&(&a.g * &w)) / k;
            Ok(ClassificationSample {
                v: v.as_slice().to_vec(),
                k,
                k_bar,
                f: mult,
                residual_la1: (w - v * mult).as_slice().to_vec(),
                residual_la3: la3_with(&a.g, &b.g, &ma, &mb, v)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum PointCase {
    /// `ḡ = α² g` and `L̄ = α L` with `α ≠ 0`.
    Proportional { alpha: f64 },
    /// Both skew fields vanish.
    BothClosed,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointClassification {
    pub point: Vec<f64>,
    pub case: PointCase,
    /// Largest `|la3|` over the sampled directions.
    pub la3_max: f64,
    /// Direction attaining `la3_max`.
    pub worst_direction: Vec<f64>,
    /// `max |ḡ − α² g| / max |g|` for the fitted `α`.
    pub metric_residual: f64,
    /// `max |L̄ − α L| / (max |L| + zero)`.
    pub form_residual: f64,
    pub l_max: f64,
    pub l_bar_max: f64,
}

/// Classifies a point from the two skew fields and metrics.
///
/// `zero` is the absolute threshold below which `L` counts as vanishing.
pub fn classify_point(
    f: &RandersMetric,
    f_bar: &RandersMetric,
    p: &[f64],
    directions: &[DVector<f64>],
    tol: &Tolerances,
    zero: f64,
) -> Result<PointClassification> {
    let n = f.dimension();
    if directions.len() < 2 * n {
        return Err(Error::InvalidArgument(format!("need at least {} directions, got {}", 2 * n, directions.len())));
    }
    f.domain().check_admissible(p)?;
    f_bar.domain().check_admissible(p)?;
    classify_local(&Local::at(f, p)?, &Local::at(f_bar, p)?, p, directions, tol, zero)
}

fn classify_local(
    a: &Local,
    b: &Local,
    p: &[f64],
    directions: &[DVector<f64>],
    tol: &Tolerances,
    zero: f64,
) -> Result<PointClassification> {
    let ma = &a.g * &b.inv * &b.l;
    let mb = &b.g * &a.inv * &a.l;
    let mut la3_max: f64 = 0.0;
    let mut worst = &directions[0];
    for v in directions {
        let r = la3_with(&a.g, &b.g, &ma, &mb, v)?.abs();
        if r > la3_max {
            la3_max = r;
            worst = v;
        }
    }
    let l_max = a.l.amax();
    let l_bar_max = b.l.amax();

    let alpha_sq = b.g.dot(&a.g) / a.g.dot(&a.g);
    let sign = if b.l.dot(&a.l) < 0.0 { -1.0 } else { 1.0 };
    let alpha = sign * alpha_sq.max(0.0).sqrt();
    let metric_residual = (&b.g - &a.g * alpha_sq).amax() / a.g.amax();
    let form_residual = (&b.l - &a.l * alpha).amax() / (l_max + zero);

    let case = if l_max <= zero && l_bar_max <= zero {
        PointCase::BothClosed
    } else if la3_max <= tol.alg && metric_residual <= tol.alg && form_residual <= tol.alg && alpha != 0.0 {
        PointCase::Proportional { alpha }
    } else {
        PointCase::Inconsistent
    };
    Ok(PointClassification {
        point: p.to_vec(),
        case,
        la3_max,
        worst_direction: worst.as_slice().to_vec(),
        metric_residual,
        form_residual,
        l_max,
        l_bar_max,
    })
}

/// Connected pieces of `M⁰ = {max |L| > threshold}` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    /// Grid indices in `M⁰`, ascending.
    pub members: Vec<usize>,
    pub components: Vec<SupportComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportComponent {
    pub id: usize,
    /// Grid indices, ascending.
    #[serde(skip)]
    pub indices: Vec<usize>,
    pub sample_count: usize,
    pub centroid: Vec<f64>,
}

impl SupportSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Component id of a grid index, if it lies in `M⁰`.
    pub fn component_of(&self, idx: usize) -> Option<usize> {
        self.components.iter().find(|c| c.indices.binary_search(&idx).is_ok()).map(|c| c.id)
    }
}

/// `M⁰` of `ω` on the admissible nodes of `grid`, split into components by
/// face adjacency.
pub fn support_set(omega: &OneFormField, grid: &Grid, threshold: f64) -> Result<SupportSet> {
    let nodes: Vec<usize> = grid.admissible_indices().collect();
    let strength: Vec<(usize, f64)> = nodes
        .par_iter()
        .map(|&i| Ok((i, omega.exterior_derivative(grid.point(i))?.max_abs())))
        .collect::<Result<_>>()?;
    let members: Vec<usize> = strength.iter().filter(|(_, s)| *s > threshold).map(|(i, _)| *i).collect();
    Ok(components_of(grid, members))
}

fn components_of(grid: &Grid, members: Vec<usize>) -> SupportSet {
    let mut inside = vec![false; grid.len()];
    for &i in &members {
        inside[i] = true;
    }
    let mut seen = vec![false; grid.len()];
    let mut components = Vec::new();
    for &start in &members {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut indices = Vec::new();
        while let Some(i) = queue.pop_front() {
            indices.push(i);
            for j in grid.neighbors(i) {
                if inside[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        indices.sort_unstable();
        let n = grid.point(start).len();
        let mut centroid = vec![0.0; n];
        for &i in &indices {
            for (c, x) in centroid.iter_mut().zip(grid.point(i)) {
                *c += x / indices.len() as f64;
            }
        }
        components.push(SupportComponent { id: components.len(), sample_count: indices.len(), indices, centroid });
    }
    SupportSet { members, components }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "sign", rename_all = "snake_case")]
pub enum TangentSign {
    /// The forward `F`-geodesic is a forward `F̄`-geodesic.
    Positive,
    /// The forward `F`-geodesic is a backward `F̄`-geodesic.
    Negative,
    /// `L(ξ, ·)` vanishes, so both orientations bend alike.
    Undetermined,
    /// Neither orientation of `F̄` matches; gaps are the normal-acceleration
    /// mismatches against forward and backward `F̄`.
    Mismatch { forward_gap: f64, backward_gap: f64 },
}

/// Compares the bending of the forward `F`-geodesic through `(p, ξ)` with
/// both `F̄`-geodesics. Only the component of the acceleration normal to
/// `ξ` matters, since tangential parts depend on the parameterization.
pub fn tangent_sign(
    f: &RandersMetric,
    f_bar: &RandersMetric,
    p: &[f64],
    xi: &[f64],
    tol: &Tolerances,
    zero: f64,
) -> Result<TangentSign> {
    let v = DVector::from_column_slice(xi);
    let l = f.omega().exterior_derivative(p)?;
    if l.apply(&v).amax() <= zero * v.amax() {
        return Ok(TangentSign::Undetermined);
    }
    let unit = &v / v.norm();
    let normal = |a: DVector<f64>| -> DVector<f64> {
        let t = a.dot(&unit);
        a - &unit * t
    };
    let a = geodesic_rhs(f, p, xi, Orientation::Forward)?;
    let bound = tol.curvematch * (a.norm() + 1.0);
    let a_n = normal(a);
    let fwd = (normal(geodesic_rhs(f_bar, p, xi, Orientation::Forward)?) - &a_n).norm();
    let bwd = (normal(geodesic_rhs(f_bar, p, xi, Orientation::Backward)?) - &a_n).norm();
    Ok(if fwd <= bound && fwd <= bwd {
        TangentSign::Positive
    } else if bwd <= bound {
        TangentSign::Negative
    } else {
        TangentSign::Mismatch { forward_gap: fwd, backward_gap: bwd }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    ProportionalGlobal,
    ReducesToRiemannian,
    MixedSigns,
    Refuted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    pub la3_max: f64,
    /// `max |d(ω̄ − const·ω)|` over the grid.
    pub closedness_max: Option<f64>,
    /// Sectional curvature spread of `g`, reported when both forms are closed.
    pub curvature_spread: Option<f64>,
    /// `(max |α| − min |α|) / const` over proportional points.
    pub const_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub id: usize,
    /// Sign of `α` on the component, when it is uniform.
    pub sign: Option<i8>,
    pub sample_count: usize,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub direction: Option<Vec<f64>>,
    pub residual: f64,
    pub note: String,
}

/// Result of [`global_verdict`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub mode: CurveMode,
    pub outcome: Outcome,
    /// Positive constant with `ḡ = const² g`, when one was established.
    #[serde(rename = "const")]
    pub constant: Option<f64>,
    pub residuals: Residuals,
    pub components: Vec<ComponentReport>,
    pub witnesses: Vec<Witness>,
    /// Why a `Refuted` outcome was reached.
    pub reason: Option<String>,
    pub grid: Vec<usize>,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Rigidity across regions where one kind of point borders the other is
    /// assumed, not checked.
    pub assumption: &'static str,
}

const RIGIDITY_NOTE: &str = "proportionality on an open set is assumed to extend across regions where both forms are closed";

/// Largest component magnitude of either form over the grid.
fn field_scale(forms: &[&OneFormField], points: &[Vec<f64>]) -> Result<f64> {
    let mut scale: f64 = 0.0;
    for form in forms {
        for p in points {
            scale = scale.max(form.values(p)?.amax());
        }
    }
    Ok(scale)
}

/// Classifies every admissible grid node and assembles a verdict.
///
/// Oriented mode asks whether `F` and `F̄` share forward geodesics;
/// unoriented mode asks only for shared point sets and allows `α < 0` on
/// whole components of `M⁰`.
pub fn global_verdict(
    f: &RandersMetric,
    f_bar: &RandersMetric,
    grid: &Grid,
    mode: CurveMode,
    tol: &Tolerances,
    seed: u64,
) -> Result<EquivalenceVerdict> {
    if f.dimension() != f_bar.dimension() {
        return Err(Error::Dimension { expected: f.dimension(), got: f_bar.dimension() });
    }
    if f.domain() != f_bar.domain() {
        return Err(Error::InvalidArgument("metrics live on different domains".into()));
    }
    let indices: Vec<usize> = grid.admissible_indices().collect();
    if indices.is_empty() {
        return Err(Error::InvalidArgument("grid has no admissible points".into()));
    }
    let points: Vec<Vec<f64>> = indices.iter().map(|&i| grid.point(i).to_vec()).collect();
    let zero = tol.zero_threshold(field_scale(&[f.omega(), f_bar.omega()], &points)?);
    let directions = sample_directions(f.dimension(), seed);

    let classes: Vec<PointClassification> = points
        .par_iter()
        .map(|p| classify_local(&Local::at(f, p)?, &Local::at(f_bar, p)?, p, &directions, tol, zero))
        .collect::<Result<_>>()?;

    let mut verdict = EquivalenceVerdict {
        mode,
        outcome: Outcome::Refuted,
        constant: None,
        residuals: Residuals {
            la3_max: classes.iter().map(|c| c.la3_max).fold(0.0, f64::max),
            closedness_max: None,
            curvature_spread: None,
            const_spread: None,
        },
        components: Vec::new(),
        witnesses: Vec::new(),
        reason: None,
        grid: grid.counts().to_vec(),
        seed,
        tolerances: *tol,
        assumption: RIGIDITY_NOTE,
    };

    let support = components_of(
        grid,
        indices.iter().zip(&classes).filter(|(_, c)| c.l_max > zero).map(|(i, _)| *i).collect(),
    );
    let alpha_at = |k: usize| match classes[k].case {
        PointCase::Proportional { alpha } => Some(alpha),
        _ => None,
    };
    let position: std::collections::HashMap<usize, usize> =
        indices.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    verdict.components = support
        .components
        .iter()
        .map(|c| {
            let signs: Vec<i8> =
                c.indices.iter().filter_map(|i| alpha_at(position[i])).map(|a| if a < 0.0 { -1 } else { 1 }).collect();
            let sign = match signs.first() {
                Some(&s) if signs.iter().all(|&t| t == s) => Some(s),
                _ => None,
            };
            ComponentReport { id: c.id, sign, sample_count: c.sample_count, centroid: c.centroid.clone() }
        })
        .collect();

    let inconsistent: Vec<&PointClassification> =
        classes.iter().filter(|c| c.case == PointCase::Inconsistent).collect();
    if !inconsistent.is_empty() {
        let worst = inconsistent
            .iter()
            .max_by(|a, b| {
                a.la3_max.max(a.metric_residual).max(a.form_residual).total_cmp(&b.la3_max.max(b.metric_residual).max(b.form_residual))
            })
            .unwrap();
        verdict.reason = Some(format!("{} of {} points are inconsistent", inconsistent.len(), classes.len()));
        verdict.witnesses.push(Witness {
            point: worst.point.clone(),
            direction: Some(worst.worst_direction.clone()),
            residual: worst.la3_max.max(worst.metric_residual).max(worst.form_residual),
            note: format!(
                "la3 {:.3e}, metric ratio {:.3e}, form ratio {:.3e}",
                worst.la3_max, worst.metric_residual, worst.form_residual
            ),
        });
        return Ok(verdict);
    }

    let proportional: Vec<(usize, f64)> = (0..classes.len()).filter_map(|k| alpha_at(k).map(|a| (k, a))).collect();
    if proportional.is_empty() {
        verdict.outcome = Outcome::ReducesToRiemannian;
        verdict.residuals.closedness_max = Some(classes.iter().map(|c| c.l_max.max(c.l_bar_max)).fold(0.0, f64::max));
        if points.len() >= 2 {
            let summary = constant_curvature_check(f.g(), &points, tol.curvature)?;
            verdict.residuals.curvature_spread = Some(summary.spread);
        }
        return Ok(verdict);
    }

    let magnitude: Vec<f64> = proportional.iter().map(|(_, a)| a.abs()).collect();
    let constant = magnitude.iter().sum::<f64>() / magnitude.len() as f64;
    let (lo, hi) = magnitude.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    let spread = (hi - lo) / constant;
    verdict.constant = Some(constant);
    verdict.residuals.const_spread = Some(spread);
    if spread > tol.constant {
        let at = |target: f64| proportional.iter().find(|(_, a)| a.abs() == target).unwrap().0;
        verdict.reason = Some("proportionality factor varies across the grid".into());
        for (k, label) in [(at(lo), "smallest"), (at(hi), "largest")] {
            verdict.witnesses.push(Witness {
                point: classes[k].point.clone(),
                direction: None,
                residual: spread,
                note: format!("{label} |alpha| = {}", alpha_at(k).unwrap().abs()),
            });
        }
        return Ok(verdict);
    }

    // points where both forms are closed must still carry the common ratio
    let c2 = constant * constant;
    for (k, c) in classes.iter().enumerate() {
        if c.case != PointCase::BothClosed {
            continue;
        }
        let a = Local::at(f, &c.point)?;
        let b = Local::at(f_bar, &c.point)?;
        let off = (&b.g - &a.g * c2).amax() / a.g.amax();
        if off > tol.alg {
            verdict.reason = Some("theory-violation: closed region is not proportional with the common constant".into());
            let (kp, _) = proportional[0];
            verdict.witnesses.push(Witness {
                point: classes[kp].point.clone(),
                direction: None,
                residual: 0.0,
                note: format!("proportional with alpha = {}", alpha_at(kp).unwrap()),
            });
            verdict.witnesses.push(Witness {
                point: classes[k].point.clone(),
                direction: None,
                residual: off,
                note: "both forms closed, metric ratio differs".into(),
            });
            return Ok(verdict);
        }
    }

    let negatives: Vec<usize> = proportional.iter().filter(|(_, a)| *a < 0.0).map(|(k, _)| *k).collect();
    let closedness = |sign_of: &dyn Fn(usize) -> f64| {
        classes
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let a = Local::at(f, &points[k])?;
                let b = Local::at(f_bar, &points[k])?;
                Ok((&b.l - &a.l * (sign_of(k) * constant)).amax())
            })
            .try_fold(0.0f64, |m, r: Result<f64>| Ok::<f64, Error>(m.max(r?)))
    };

    match mode {
        CurveMode::Oriented => {
            if let Some(&k) = negatives.first() {
                verdict.reason = Some(format!(
                    "{} points reverse orientation; no positive constant serves all of them",
                    negatives.len()
                ));
                verdict.witnesses.push(Witness {
                    point: classes[k].point.clone(),
                    direction: None,
                    residual: alpha_at(k).unwrap(),
                    note: "negative proportionality factor".into(),
                });
                if let Some(&(kp, _)) = proportional.iter().find(|(_, a)| *a > 0.0) {
                    verdict.witnesses.push(Witness {
                        point: classes[kp].point.clone(),
                        direction: None,
                        residual: alpha_at(kp).unwrap(),
                        note: "positive proportionality factor".into(),
                    });
                }
                return Ok(verdict);
            }
            verdict.outcome = Outcome::ProportionalGlobal;
            verdict.residuals.closedness_max = Some(closedness(&|_| 1.0)?);
        }
        CurveMode::Unoriented => {
            let support_bar = support_set(f_bar.omega(), grid, zero)?;
            if support_bar.members != support.members {
                let diff = support
                    .members
                    .iter()
                    .find(|i| support_bar.members.binary_search(i).is_err())
                    .or_else(|| support_bar.members.iter().find(|i| support.members.binary_search(i).is_err()))
                    .copied()
                    .unwrap();
                verdict.reason = Some("the two forms have different supports of their differentials".into());
                verdict.witnesses.push(Witness {
                    point: grid.point(diff).to_vec(),
                    direction: None,
                    residual: 0.0,
                    note: "in exactly one support set".into(),
                });
                return Ok(verdict);
            }
            if let Some(c) = verdict.components.iter().find(|c| c.sign.is_none()) {
                verdict.reason = Some(format!("component {} carries both signs", c.id));
                verdict.witnesses.push(Witness {
                    point: c.centroid.clone(),
                    direction: None,
                    residual: 0.0,
                    note: "mixed signs inside one component".into(),
                });
                return Ok(verdict);
            }
            let component_sign = |k: usize| {
                support
                    .component_of(indices[k])
                    .and_then(|id| verdict.components[id].sign)
                    .map_or(1.0, |s| s as f64)
            };
            verdict.residuals.closedness_max = Some(closedness(&component_sign)?);
            verdict.outcome = if negatives.is_empty() { Outcome::ProportionalGlobal } else { Outcome::MixedSigns };
        }
    }
    Ok(verdict)
}

/// Result of [`flatness_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub projectively_flat: bool,
    pub constant_curvature: bool,
    /// Mean sectional curvature.
    pub curvature: f64,
    pub curvature_spread: f64,
    pub closedness_max: f64,
    /// Point with the largest `|dω|` when the form is not closed.
    pub witness: Option<Vec<f64>>,
}

/// Tests constant sectional curvature of `g` and closedness of `ω` on the
/// admissible grid nodes.
pub fn flatness_check(f: &RandersMetric, grid: &Grid, tol: &Tolerances) -> Result<FlatnessReport> {
    let points = grid.admissible_points();
    let summary = constant_curvature_check(f.g(), &points, tol.curvature)?;
    let zero = tol.zero_threshold(field_scale(&[f.omega()], &points)?);
    let strengths: Vec<f64> =
        points.par_iter().map(|p| Ok(f.omega().exterior_derivative(p)?.max_abs())).collect::<Result<_>>()?;
    let (arg, closedness_max) =
        strengths.iter().enumerate().fold((0, 0.0f64), |(bi, bm), (i, &s)| if s > bm { (i, s) } else { (bi, bm) });
    let closed = closedness_max <= zero;
    Ok(FlatnessReport {
        projectively_flat: summary.is_constant && closed,
        constant_curvature: summary.is_constant,
        curvature: summary.value,
        curvature_spread: summary.spread,
        closedness_max,
        witness: (!closed).then(|| points[arg].clone()),
    })
}

/// Result of [`average_form`].
#[derive(Debug, Clone)]
pub struct AverageReport {
    /// `ω̂ = (1/|G|) Σ φ*ω`.
    pub averaged: OneFormField,
    /// `ω̂` at the sample points.
    pub values: Vec<Vec<f64>>,
    /// `max |d(ω − ω̂)|` from exact jets.
    pub closedness_residual: f64,
    /// `max_φ |φ*ω̂ − ω̂|`.
    pub invariance_residual: f64,
}

/// Averages `ω` over a finite group of chart maps and reports how closed
/// `ω − ω̂` is and how invariant `ω̂` is, on `points`.
pub fn average_form(
    omega: &OneFormField,
    group: &[Diffeomorphism],
    domain: &ChartDomain,
    points: &[Vec<f64>],
) -> Result<AverageReport> {
    if group.is_empty() {
        return Err(Error::InvalidArgument("group must have at least one element".into()));
    }
    for phi in group {
        phi.check_on(points, domain)?;
    }
    let n = omega.dimension();
    let weight = 1.0 / group.len() as f64;
    let pulled: Vec<OneFormField> = group.iter().map(|phi| pullback_form(omega, phi)).collect::<Result<_>>()?;
    let averaged = OneFormField::from_nodes(
        (0..n)
            .map(|i| {
                let sum = pulled
                    .iter()
                    .map(|w| w.component(i).node().clone())
                    .reduce(Node::add)
                    .unwrap();
                Node::mul(Node::num(weight), sum)
            })
            .collect(),
    );
    let remainder = OneFormField::from_nodes(
        (0..n)
            .map(|i| Node::sub(omega.component(i).node().clone(), averaged.component(i).node().clone()))
            .collect(),
    );
    let re_pulled: Vec<OneFormField> = group.iter().map(|phi| pullback_form(&averaged, phi)).collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(points.len());
    let mut closedness_residual: f64 = 0.0;
    let mut invariance_residual: f64 = 0.0;
    for p in points {
        let hat = averaged.values(p)?;
        closedness_residual = closedness_residual.max(remainder.exterior_derivative(p)?.max_abs());
        for w in &re_pulled {
            invariance_residual = invariance_residual.max((w.values(p)? - &hat).amax());
        }
        values.push(hat.as_slice().to_vec());
    }
    Ok(AverageReport { averaged, values, closedness_residual, invariance_residual })
}
