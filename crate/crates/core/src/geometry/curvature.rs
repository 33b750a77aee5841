use nalgebra::{DMatrix, DVector};

use super::fields::{Christoffel, MetricEval2, MetricField};
use crate::error::{Error, Result};

/// Riemann tensor `R^a_{bcd}` at a point, with
/// `R(∂_c, ∂_d) ∂_b = R^a_{bcd} ∂_a`.
#[derive(Debug, Clone)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
    g: DMatrix<f64>,
}

impl Riemann {
    pub fn at(metric: &MetricField, p: &[f64]) -> Result<Self> {
        Ok(Self::from_eval(&metric.eval_metric2(p)?))
    }

    pub(crate) fn from_eval(m: &MetricEval2) -> Self {
        let n = m.first.g.nrows();
        let inv = &m.first.inv;
        let d = &m.first.d;
        let dd = &m.dd;
        let gamma = Christoffel::from_eval(&m.first);

        // s[(mm, k, p)] = ∂_p g_mk + ∂_k g_mp − ∂_m g_kp
        let s = |mm: usize, k: usize, p: usize| d[p][(mm, k)] + d[k][(mm, p)] - d[mm][(k, p)];
        let ds = |l: usize, mm: usize, k: usize, p: usize| {
            dd[p * n + l][(mm, k)] + dd[k * n + l][(mm, p)] - dd[mm * n + l][(k, p)]
        };
        // ∂_l g⁻¹ = −g⁻¹ (∂_l g) g⁻¹
        let dinv: Vec<DMatrix<f64>> = (0..n).map(|l| -(inv * &d[l] * inv)).collect();

        // dgamma[((l * n + j) * n + k) * n + p] = ∂_l Γ^j_kp
        let mut dgamma = vec![0.0; n * n * n * n];
        for l in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for p in 0..n {
                        let mut acc = 0.0;
                        for mm in 0..n {
                            acc += dinv[l][(j, mm)] * s(mm, k, p) + inv[(j, mm)] * ds(l, mm, k, p);
                        }
                        dgamma[((l * n + j) * n + k) * n + p] = 0.5 * acc;
                    }
                }
            }
        }
        let dg = |l: usize, j: usize, k: usize, p: usize| dgamma[((l * n + j) * n + k) * n + p];

        let mut data = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for dd_ in 0..n {
                        let mut r = dg(c, a, dd_, b) - dg(dd_, a, c, b);
                        for e in 0..n {
                            r += gamma.get(a, c, e) * gamma.get(e, dd_, b)
                                - gamma.get(a, dd_, e) * gamma.get(e, c, b);
                        }
                        data[((a * n + b) * n + c) * n + dd_] = r;
                    }
                }
            }
        }
        Riemann { n, data, g: m.first.g.clone() }
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }

    /// `⟨R(u, v) v, u⟩ / (|u|²|v|² − ⟨u, v⟩²)`.
    pub fn sectional(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let n = self.n;
        let (uu, vv) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
        let guu = uu.dot(&(&self.g * &uu));
        let gvv = vv.dot(&(&self.g * &vv));
        let guv = uu.dot(&(&self.g * &vv));
        let gram = guu * gvv - guv * guv;
        if !(gram > 1e-12 * guu * gvv) {
            return Err(Error::DegeneratePlane { gram });
        }
        let mut num = 0.0;
        for a in 0..n {
            let lowered_u: f64 = (0..n).map(|e| self.g[(a, e)] * u[e]).sum();
            if lowered_u == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        acc += self.get(a, b, c, d) * v[b] * u[c] * v[d];
                    }
                }
            }
            num += lowered_u * acc;
        }
        Ok(num / gram)
    }
}

/// Sectional curvature of the plane spanned by `u`, `v` at `p`.
pub fn sectional_curvature(g: &MetricField, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    Riemann::at(g, p)?.sectional(u, v)
}

/// Result of sampling sectional curvature over a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSummary {
    pub is_constant: bool,
    /// Mean sampled curvature.
    pub value: f64,
    /// `max − min` over all sampled planes.
    pub spread: f64,
    pub samples: usize,
}

/// Samples sectional curvature on every coordinate plane at each point and
/// reports whether the spread is within `tol · (1 + |mean|)`.
pub fn constant_curvature_check(g: &MetricField, samples: &[Vec<f64>], tol: f64) -> Result<CurvatureSummary> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sample points".into()));
    }
    let n = g.dimension();
    let mut planes = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut u = vec![0.0; n];
            let mut v = vec![0.0; n];
            u[i] = 1.0;
            v[j] = 1.0;
            planes.push((u, v));
        }
    }
    let mut values = Vec::with_capacity(samples.len() * planes.len());
    for p in samples {
        let r = Riemann::at(g, p)?;
        for (u, v) in &planes {
            values.push(r.sectional(u, v)?);
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    let spread = hi - lo;
    Ok(CurvatureSummary {
        is_constant: spread <= tol * (1.0 + mean.abs()),
        value: mean,
        spread,
        samples: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere() -> MetricField {
        let c = "4/(1 + x1^2 + x2^2)^2";
        MetricField::diagonal(&[c, c]).unwrap()
    }

    #[test]
    fn flat_is_zero() {
        let k = sectional_curvature(&MetricField::identity(2), &[0.3, 0.1], &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(k, 0.0);
    }

    #[test]
    fn stereographic_sphere_has_unit_curvature() {
        let g = sphere();
        for p in [[0.0, 0.0], [0.5, -0.3], [-1.2, 0.8]] {
            let k = sectional_curvature(&g, &p, &[1.0, 0.2], &[-0.3, 1.0]).unwrap();
            assert!((k - 1.0).abs() < 1e-8, "{p:?}: {k}");
        }
    }

    #[test]
    fn half_plane_has_minus_one() {
        let g = MetricField::diagonal(&["1/x2^2", "1/x2^2"]).unwrap();
        for p in [[0.0, 1.0], [2.0, 0.3], [-1.0, 4.0]] {
            let k = sectional_curvature(&g, &p, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!((k + 1.0).abs() < 1e-8, "{p:?}: {k}");
        }
    }

    #[test]
    fn three_sphere_in_stereographic_chart() {
        let c = "4/(1 + x1^2 + x2^2 + x3^2)^2";
        let g = MetricField::diagonal(&[c, c, c]).unwrap();
        let k = sectional_curvature(&g, &[0.2, -0.4, 0.7], &[1.0, 0.5, 0.0], &[0.0, 0.3, 1.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-8, "{k}");
    }

    #[test]
    fn parallel_vectors_rejected() {
        let err = sectional_curvature(&sphere(), &[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DegeneratePlane { .. }));
    }

    #[test]
    fn constant_curvature_discriminates() {
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.61803398875;
                vec![(t.fract() - 0.5) * 2.0, ((3.0 * t).fract() - 0.5) * 2.0]
            })
            .collect();
        let s = constant_curvature_check(&sphere(), &pts, 1e-5).unwrap();
        assert!(s.is_constant);
        assert!((s.value - 1.0).abs() < 1e-8);
        assert!(s.spread < 1e-6);

        let flat = constant_curvature_check(&MetricField::identity(2), &pts, 1e-5).unwrap();
        assert_eq!((flat.is_constant, flat.value, flat.spread), (true, 0.0, 0.0));

        let bumpy = MetricField::diagonal(&["1", "1 + x1^2"]).unwrap();
        let s = constant_curvature_check(&bumpy, &pts, 1e-5).unwrap();
        assert!(!s.is_constant, "{s:?}");
    }
}
