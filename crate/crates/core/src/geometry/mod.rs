//! Chart-level tensor calculus: metric and 1-form fields, Christoffel
//! symbols, exterior derivatives and sectional curvature.

mod curvature;
mod domain;
mod fields;

pub use curvature::{constant_curvature_check, sectional_curvature, CurvatureSummary, Riemann};
pub use domain::{ChartDomain, ExcludedBall, ExcludedRay, Grid, RaySide};
pub(crate) use fields::skew_from_jacobian;
pub use fields::{Christoffel, MetricEval, MetricEval2, MetricField, OneFormField, SkewMatrix};
