//! JSON problem files: a chart, one or two Randers metrics, a sample grid and
//! tolerance overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::equivalence::{Tolerances, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::geometry::{ChartDomain, ExcludedBall, ExcludedRay, Grid, MetricField, OneFormField};
use crate::randers::RandersMetric;

pub const DEFAULT_GRID: usize = 33;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// `[lower, upper]` per axis.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub balls: Vec<ExcludedBall>,
    /// Axis indices are zero-based (`0` is `x1`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rays: Vec<ExcludedRay>,
    /// Absolute exclusion margin; defaults to `1e-3` times the box diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

impl DomainSpec {
    pub fn from_domain(d: &ChartDomain) -> Self {
        DomainSpec {
            bounds: d.bounds().map(|(a, b)| [a, b]).collect(),
            balls: d.balls().to_vec(),
            rays: d.rays().to_vec(),
            margin: Some(d.margin()),
        }
    }

    pub fn build(&self) -> Result<ChartDomain> {
        let bounds: Vec<(f64, f64)> = self.bounds.iter().map(|b| (b[0], b[1])).collect();
        let mut d = ChartDomain::new(&bounds)?;
        for b in &self.balls {
            d = d.with_ball(b.center.clone(), b.radius)?;
        }
        for r in &self.rays {
            d = d.with_ray(r.clone())?;
        }
        if let Some(m) = self.margin {
            d = d.with_margin(m)?;
        }
        Ok(d)
    }
}

/// Grid resolution: one count for every axis, or one per axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

impl GridSpec {
    pub fn counts(&self, n: usize) -> Vec<usize> {
        match self {
            GridSpec::Uniform(k) => vec![*k; n],
            GridSpec::PerAxis(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    pub domain: DomainSpec,
    pub g: Vec<Vec<String>>,
    pub omega: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_bar: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_bar: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

/// A loaded and validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub metric: RandersMetric,
    pub metric_bar: Option<RandersMetric>,
    pub grid: Grid,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Problem {
    /// The second metric, or an error naming the missing fields.
    pub fn pair(&self) -> Result<(&RandersMetric, &RandersMetric)> {
        match &self.metric_bar {
            Some(b) => Ok((&self.metric, b)),
            None => Err(Error::Problem("this command needs \"g_bar\" and \"omega_bar\"".into())),
        }
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    /// Describes `f` (and optionally `f_bar`) as a problem file.
    pub fn describe(f: &RandersMetric, f_bar: Option<&RandersMetric>, grid: GridSpec) -> Self {
        ProblemFile {
            dimension: f.dimension(),
            domain: DomainSpec::from_domain(f.domain()),
            g: f.g().sources(),
            omega: f.omega().sources(),
            g_bar: f_bar.map(|b| b.g().sources()),
            omega_bar: f_bar.map(|b| b.omega().sources()),
            grid: Some(grid),
            seed: Some(DEFAULT_SEED),
            tolerances: None,
        }
    }

    /// Parses every expression, checks dimensions and validity on the
    /// declared grid.
    pub fn build(&self) -> Result<Problem> {
        let n = self.dimension;
        let dim = |what: &str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(Error::Problem(format!("{what} has {got} entries, expected {n}")))
            }
        };
        dim("domain.box", self.domain.bounds.len())?;
        let domain = self.domain.build()?;
        let counts = self.grid.clone().unwrap_or(GridSpec::Uniform(DEFAULT_GRID)).counts(n);
        dim("grid", counts.len())?;
        let grid = domain.grid(&counts)?;

        let metric = |g: &[Vec<String>], omega: &[String], label: &str| -> Result<RandersMetric> {
            dim(label, g.len())?;
            for row in g {
                dim(label, row.len())?;
            }
            dim("omega", omega.len())?;
            let f = RandersMetric::new(MetricField::parse(g)?, OneFormField::parse(omega)?, domain.clone())?;
            for i in grid.admissible_indices() {
                f.check_validity_at(grid.point(i))?;
            }
            Ok(f.with_label(label))
        };
        let f = metric(&self.g, &self.omega, "g")?;
        let f_bar = match (&self.g_bar, &self.omega_bar) {
            (Some(g), Some(w)) => Some(metric(g, w, "g_bar")?),
            (None, None) => None,
            _ => return Err(Error::Problem("\"g_bar\" and \"omega_bar\" must be given together".into())),
        };
        Ok(Problem {
            metric: f.with_label("F"),
            metric_bar: f_bar.map(|b| b.with_label("F_bar")),
            grid,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            tolerances: self.tolerances.unwrap_or_default(),
        })
    }
}
