//! Built-in problem instances with their expected verdicts.

use serde::Serialize;

use crate::equivalence::Outcome;
use crate::error::{Error, Result};
use crate::expr::ScalarExpression;
use crate::geometry::{ChartDomain, ExcludedRay, MetricField, OneFormField, RaySide};
use crate::problem::{GridSpec, ProblemFile, DEFAULT_GRID};
use crate::randers::RandersMetric;

pub const INSTANCE_IDS: [&str; 8] = [
    "flat-riemannian",
    "flat-closed-form",
    "constant-field",
    "trivial-pair",
    "reversal-pair",
    "example-2",
    "sphere",
    "hyperbolic",
];

/// Verdicts the engine should reproduce with default tolerances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expected {
    pub oriented: Option<Outcome>,
    pub unoriented: Option<Outcome>,
    /// Expected constant for proportional pairs.
    #[serde(rename = "const")]
    pub constant: Option<f64>,
    pub projectively_flat: bool,
    /// Mean sectional curvature of `g`.
    pub curvature: Option<f64>,
    /// Number of grid components of the support of `dω`.
    pub support_components: usize,
}

#[derive(Debug, Clone)]
pub struct GalleryInstance {
    pub id: &'static str,
    pub description: &'static str,
    pub metric: RandersMetric,
    pub metric_bar: Option<RandersMetric>,
    pub grid: usize,
    pub expected: Expected,
}

impl GalleryInstance {
    pub fn problem_file(&self) -> ProblemFile {
        ProblemFile::describe(&self.metric, self.metric_bar.as_ref(), GridSpec::Uniform(self.grid))
    }
}

fn parse(src: &str) -> ScalarExpression {
    ScalarExpression::parse(src, 2).expect("gallery expressions parse")
}

fn form(sources: [&str; 2]) -> OneFormField {
    OneFormField::parse(&sources).expect("gallery expressions parse")
}

fn square() -> ChartDomain {
    ChartDomain::cube(2, -1.0, 1.0).expect("valid box")
}

fn flat(omega: [&str; 2], domain: ChartDomain) -> Result<RandersMetric> {
    RandersMetric::new(MetricField::identity(2), form(omega), domain)
}

const SWIRL: [&str; 2] = ["-0.3*x2/(1 + x1^2 + x2^2)", "0.3*x1/(1 + x1^2 + x2^2)"];

/// Two swirls supported in the balls of radius 1/2 about `(±1, 0)`; `sign`
/// multiplies the one about `(−1, 0)`.
fn two_balls(sign: &str) -> [String; 2] {
    let plus = "bump(sqrt((x1 - 1)^2 + x2^2), 0.5)";
    let minus = "bump(sqrt((x1 + 1)^2 + x2^2), 0.5)";
    [
        format!("0.25*{plus}*(-x2) {sign} 0.25*{minus}*(-x2)"),
        format!("0.25*{plus}*(x1 - 1) {sign} 0.25*{minus}*(x1 + 1)"),
    ]
}

fn slit_plane() -> Result<ChartDomain> {
    ChartDomain::cube(2, -4.0, 4.0)?
        .with_ray(ExcludedRay { axis: 0, value: 0.0, along: 1, bound: 2.0, side: RaySide::Le })?
        .with_margin(1e-3)
}

fn single(projectively_flat: bool, curvature: f64, support_components: usize) -> Expected {
    Expected {
        oriented: None,
        unoriented: None,
        constant: None,
        projectively_flat,
        curvature: Some(curvature),
        support_components,
    }
}

pub fn build(id: &str) -> Result<GalleryInstance> {
    let inst = |id, description, metric, metric_bar, grid, expected| GalleryInstance {
        id,
        description,
        metric,
        metric_bar,
        grid,
        expected,
    };
    Ok(match id {
        "flat-riemannian" => inst(
            "flat-riemannian",
            "Euclidean plane, no 1-form",
            flat(["0", "0"], square())?,
            None,
            DEFAULT_GRID,
            single(true, 0.0, 0),
        ),
        "flat-closed-form" => inst(
            "flat-closed-form",
            "Euclidean plane plus the closed form d(0.3 x1)",
            RandersMetric::new(
                MetricField::identity(2),
                OneFormField::differential(&parse("0.3*x1"))?,
                square(),
            )?,
            None,
            DEFAULT_GRID,
            single(true, 0.0, 0),
        ),
        "constant-field" => inst(
            "constant-field",
            "Euclidean plane with a rotational form whose differential never vanishes",
            flat(SWIRL, square())?,
            None,
            DEFAULT_GRID,
            single(false, 0.0, 1),
        ),
        "trivial-pair" => {
            let f = flat(SWIRL, square())?;
            let sigma = OneFormField::differential(&parse("x1*x2"))?;
            let f_bar = f.trivial_transform(2.0, &sigma)?;
            inst(
                "trivial-pair",
                "constant-field paired with 2F + d(x1 x2)",
                f,
                Some(f_bar),
                DEFAULT_GRID,
                Expected {
                    oriented: Some(Outcome::ProportionalGlobal),
                    unoriented: Some(Outcome::ProportionalGlobal),
                    constant: Some(2.0),
                    projectively_flat: false,
                    curvature: Some(0.0),
                    support_components: 1,
                },
            )
        }
        "reversal-pair" => {
            let f = flat(SWIRL, square())?;
            let f_bar = f.reversed();
            inst(
                "reversal-pair",
                "constant-field paired with its reverse",
                f,
                Some(f_bar),
                DEFAULT_GRID,
                Expected {
                    oriented: Some(Outcome::Refuted),
                    unoriented: Some(Outcome::MixedSigns),
                    constant: Some(1.0),
                    projectively_flat: false,
                    curvature: Some(0.0),
                    support_components: 1,
                },
            )
        }
        "example-2" => {
            let [a, b] = two_balls("+");
            let [c, d] = two_balls("-");
            let f = flat([&a, &b], slit_plane()?)?;
            let f_bar = flat([&c, &d], slit_plane()?)?;
            inst(
                "example-2",
                "slit plane with swirls in two balls; the second metric reverses the left one",
                f,
                Some(f_bar),
                65,
                Expected {
                    oriented: Some(Outcome::Refuted),
                    unoriented: Some(Outcome::MixedSigns),
                    constant: Some(1.0),
                    projectively_flat: false,
                    curvature: Some(0.0),
                    support_components: 2,
                },
            )
        }
        "sphere" => {
            let c = "4/(1 + x1^2 + x2^2)^2";
            inst(
                "sphere",
                "round sphere in a stereographic chart",
                RandersMetric::new(MetricField::diagonal(&[c, c])?, OneFormField::zero(2), square())?,
                None,
                DEFAULT_GRID,
                single(true, 1.0, 0),
            )
        }
        "hyperbolic" => {
            let c = "1/x2^2";
            inst(
                "hyperbolic",
                "upper half-plane model",
                RandersMetric::new(
                    MetricField::diagonal(&[c, c])?,
                    OneFormField::zero(2),
                    ChartDomain::new(&[(-1.0, 1.0), (0.5, 2.0)])?,
                )?,
                None,
                DEFAULT_GRID,
                single(true, -1.0, 0),
            )
        }
        other => return Err(Error::UnknownInstance(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_instance_builds_and_round_trips() {
        for id in INSTANCE_IDS {
            let inst = build(id).unwrap();
            assert_eq!(inst.id, id);
            let file = inst.problem_file();
            let p = ProblemFile::from_json(&file.to_json()).unwrap().build().unwrap();
            assert_eq!(p.metric.g(), inst.metric.g());
            assert_eq!(p.metric.omega(), inst.metric.omega());
            assert_eq!(p.metric.domain(), inst.metric.domain());
            if let Some(b) = &inst.metric_bar {
                let pb = p.metric_bar.unwrap();
                assert_eq!(pb.g(), b.g());
                assert_eq!(pb.omega(), b.omega());
            }
        }
        assert!(matches!(build("nope"), Err(Error::UnknownInstance(_))));
    }

    #[test]
    fn example_two_is_smooth_across_the_ball_boundary() {
        let inst = build("example-2").unwrap();
        let w = inst.metric_bar.unwrap();
        for k in 0..64 {
            let a = k as f64 * std::f64::consts::TAU / 64.0;
            for centre in [1.0, -1.0] {
                let inside = [centre + 0.4999 * a.cos(), 0.4999 * a.sin()];
                let outside = [centre + 0.5001 * a.cos(), 0.5001 * a.sin()];
                for c in w.omega().components() {
                    let (ji, jo) = (c.eval_jet2(&inside).unwrap(), c.eval_jet2(&outside).unwrap());
                    assert!(ji.value().abs() < 1e-100 && jo.value() == 0.0);
                    assert!(ji.gradient().iter().all(|g| g.abs() < 1e-100));
                    assert!((0..2).all(|i| (0..2).all(|j| ji.hessian(i, j).abs() < 1e-100)));
                }
            }
        }
    }
}
