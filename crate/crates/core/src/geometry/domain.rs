use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed ball removed from the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Which half of the `along` axis a ray covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RaySide {
    /// `x[along] <= bound`
    Le,
    /// `x[along] >= bound`
    Ge,
}

/// The set `{x : x[axis] = value, x[along] <= bound}` (or `>=`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedRay {
    pub axis: usize,
    pub value: f64,
    pub along: usize,
    pub bound: f64,
    pub side: RaySide,
}

impl ExcludedRay {
    fn distance(&self, p: &[f64]) -> f64 {
        let across = p[self.axis] - self.value;
        let overshoot = match self.side {
            RaySide::Le => (p[self.along] - self.bound).max(0.0),
            RaySide::Ge => (self.bound - p[self.along]).max(0.0),
        };
        across.hypot(overshoot)
    }
}

impl ExcludedBall {
    fn distance(&self, p: &[f64]) -> f64 {
        let r: f64 = p.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        (r - self.radius).max(0.0)
    }
}

/// An open box in `R^n` with finitely many closed sets cut out.
///
/// A point is admissible when it lies strictly inside the box and farther
/// than `margin` from every excluded ball and ray.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    balls: Vec<ExcludedBall>,
    rays: Vec<ExcludedRay>,
    margin: f64,
}

impl ChartDomain {
    /// Box `bounds[i].0 < x_i < bounds[i].1`; the exclusion margin defaults
    /// to `1e-3` times the box diagonal.
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() < 2 {
            return Err(Error::InvalidArgument("chart dimension must be at least 2".into()));
        }
        for (a, b) in bounds {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(format!("invalid box side [{a}, {b}]")));
            }
        }
        let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let upper: Vec<f64> = bounds.iter().map(|b| b.1).collect();
        let diag = lower.iter().zip(&upper).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        Ok(ChartDomain { lower, upper, balls: Vec::new(), rays: Vec::new(), margin: 1e-3 * diag })
    }

    pub fn cube(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(&vec![(a, b); n])
    }

    pub fn with_ball(mut self, center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() != self.dimension() {
            return Err(Error::Dimension { expected: self.dimension(), got: center.len() });
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument("excluded ball radius must be positive".into()));
        }
        self.balls.push(ExcludedBall { center, radius });
        Ok(self)
    }

    pub fn with_ray(mut self, ray: ExcludedRay) -> Result<Self> {
        let n = self.dimension();
        if ray.axis >= n || ray.along >= n || ray.axis == ray.along {
            return Err(Error::InvalidArgument("ray axes out of range or equal".into()));
        }
        self.rays.push(ray);
        Ok(self)
    }

    pub fn with_margin(mut self, margin: f64) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(Error::InvalidArgument("exclusion margin must be positive".into()));
        }
        self.margin = margin;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn bounds(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lower.iter().copied().zip(self.upper.iter().copied())
    }

    pub fn balls(&self) -> &[ExcludedBall] {
        &self.balls
    }

    pub fn rays(&self) -> &[ExcludedRay] {
        &self.rays
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn is_admissible(&self, p: &[f64]) -> bool {
        if p.len() != self.dimension() || p.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let inside = p.iter().zip(&self.lower).zip(&self.upper).all(|((x, a), b)| a < x && x < b);
        inside
            && self.balls.iter().all(|b| b.distance(p) > self.margin)
            && self.rays.iter().all(|r| r.distance(p) > self.margin)
    }

    pub fn check_admissible(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dimension() {
            return Err(Error::Dimension { expected: self.dimension(), got: p.len() });
        }
        if self.is_admissible(p) {
            Ok(())
        } else {
            Err(Error::Inadmissible { point: p.to_vec() })
        }
    }

    /// Interior lattice with `counts[i]` nodes along axis `i`, placed at
    /// `a + (k + 1) (b - a) / (counts[i] + 1)`.
    pub fn grid(&self, counts: &[usize]) -> Result<Grid> {
        if counts.len() != self.dimension() {
            return Err(Error::Dimension { expected: self.dimension(), got: counts.len() });
        }
        if counts.contains(&0) {
            return Err(Error::InvalidArgument("grid needs at least one node per axis".into()));
        }
        let total: usize = counts.iter().product();
        let mut points = Vec::with_capacity(total);
        let mut admissible = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = unflatten(flat, counts);
            let p: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let (a, b) = (self.lower[i], self.upper[i]);
                    a + (k + 1) as f64 * (b - a) / (counts[i] + 1) as f64
                })
                .collect();
            admissible.push(self.is_admissible(&p));
            points.push(p);
        }
        Ok(Grid { counts: counts.to_vec(), points, admissible })
    }

    pub fn uniform_grid(&self, per_axis: usize) -> Result<Grid> {
        self.grid(&vec![per_axis; self.dimension()])
    }
}

fn unflatten(mut flat: usize, counts: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; counts.len()];
    for i in (0..counts.len()).rev() {
        idx[i] = flat % counts[i];
        flat /= counts[i];
    }
    idx
}

/// Sample lattice over a chart box. Nodes are stored row-major with the last
/// axis varying fastest.
#[derive(Debug, Clone)]
pub struct Grid {
    counts: Vec<usize>,
    points: Vec<Vec<f64>>,
    admissible: Vec<bool>,
}

impl Grid {
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, idx: usize) -> &[f64] {
        &self.points[idx]
    }

    pub fn is_admissible(&self, idx: usize) -> bool {
        self.admissible[idx]
    }

    /// Indices of admissible nodes.
    pub fn admissible_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.points.len()).filter(|&i| self.admissible[i])
    }

    pub fn admissible_points(&self) -> Vec<Vec<f64>> {
        self.admissible_indices().map(|i| self.points[i].clone()).collect()
    }

    /// Face-sharing neighbours (differ by one step along a single axis).
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let multi = unflatten(idx, &self.counts);
        let mut out = Vec::with_capacity(2 * self.counts.len());
        let mut stride = 1;
        for axis in (0..self.counts.len()).rev() {
            if multi[axis] > 0 {
                out.push(idx - stride);
            }
            if multi[axis] + 1 < self.counts[axis] {
                out.push(idx + stride);
            }
            stride *= self.counts[axis];
        }
        out
    }
}
