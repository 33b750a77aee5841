use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{Node, ScalarExpression};

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Riemannian metric `g_ij` given by expressions. Only `i <= j` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    n: usize,
    upper: Vec<ScalarExpression>,
}

/// Metric value, inverse and first partials at a point.
#[derive(Debug, Clone)]
pub struct MetricEval {
    pub g: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    /// `d[k]` is `∂g/∂x^k`.
    pub d: Vec<DMatrix<f64>>,
}

/// [`MetricEval`] plus second partials.
#[derive(Debug, Clone)]
pub struct MetricEval2 {
    pub first: MetricEval,
    /// `dd[k * n + l]` is `∂²g/∂x^k∂x^l`.
    pub dd: Vec<DMatrix<f64>>,
}

impl MetricField {
    /// Builds from a full `n × n` matrix; the matrix must be structurally
    /// symmetric (`g_ij` and `g_ji` parse to identical trees).
    pub fn new(rows: Vec<Vec<ScalarExpression>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidArgument("metric dimension must be at least 2".into()));
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, got: row.len() });
            }
            for j in i..n {
                let e = &rows[i][j];
                if e.arity() != n {
                    return Err(Error::Dimension { expected: n, got: e.arity() });
                }
                if rows[j][i].node() != e.node() {
                    return Err(Error::InvalidArgument(format!(
                        "metric is not symmetric: g[{i}][{j}] = `{}` but g[{j}][{i}] = `{}`",
                        e.source(),
                        rows[j][i].source()
                    )));
                }
                upper.push(e.clone());
            }
        }
        Ok(MetricField { n, upper })
    }

    /// Parses a full matrix of expression sources.
    pub fn parse<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        let n = rows.len();
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(|s| ScalarExpression::parse(s.as_ref(), n)).collect())
            .collect::<std::result::Result<Vec<Vec<_>>, _>>()?;
        Self::new(parsed)
    }

    pub fn identity(n: usize) -> Self {
        let mut upper = Vec::new();
        for i in 0..n {
            for j in i..n {
                upper.push(ScalarExpression::constant(if i == j { 1.0 } else { 0.0 }, n));
            }
        }
        MetricField { n, upper }
    }

    /// Diagonal metric from per-axis expressions.
    pub fn diagonal<S: AsRef<str>>(diag: &[S]) -> Result<Self> {
        let n = diag.len();
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].as_ref().to_string() } else { "0".into() }).collect())
            .collect();
        Self::parse(&rows)
    }

    pub(crate) fn from_nodes(n: usize, f: impl Fn(usize, usize) -> Node) -> Self {
        let mut upper = Vec::new();
        for i in 0..n {
            for j in i..n {
                upper.push(ScalarExpression::from_node(f(i, j), n));
            }
        }
        MetricField { n, upper }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpression {
        &self.upper[upper_index(self.n, i, j)]
    }

    /// Entry sources as a full matrix.
    pub fn sources(&self) -> Vec<Vec<String>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.entry(i, j).source().to_string()).collect()).collect()
    }

    /// Metric matrix without derivatives; no definiteness check.
    pub fn values(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.entry(i, j).eval(p)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Cholesky factor of the metric at `p`, or a degeneracy error.
    pub fn factor(&self, p: &[f64]) -> Result<(DMatrix<f64>, Cholesky<f64, nalgebra::Dyn>)> {
        let g = self.values(p)?;
        let chol = Cholesky::new(g.clone()).ok_or_else(|| Error::Degenerate { point: p.to_vec() })?;
        Ok((g, chol))
    }

    /// `G`, `G⁻¹` and `∂G/∂x^k` at `p`.
    pub fn eval_metric(&self, p: &[f64]) -> Result<MetricEval> {
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        let mut d = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in i..n {
                let jet = self.entry(i, j).eval_jet1(p)?;
                g[(i, j)] = jet.value();
                g[(j, i)] = jet.value();
                for (k, dk) in d.iter_mut().enumerate() {
                    dk[(i, j)] = jet.gradient()[k];
                    dk[(j, i)] = jet.gradient()[k];
                }
            }
        }
        let inv = invert(&g, p)?;
        Ok(MetricEval { g, inv, d })
    }

    /// Like [`eval_metric`](Self::eval_metric) with second partials.
    pub fn eval_metric2(&self, p: &[f64]) -> Result<MetricEval2> {
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        let mut d = vec![DMatrix::zeros(n, n); n];
        let mut dd = vec![DMatrix::zeros(n, n); n * n];
        for i in 0..n {
            for j in i..n {
                let jet = self.entry(i, j).eval_jet2(p)?;
                g[(i, j)] = jet.value();
                g[(j, i)] = jet.value();
                for k in 0..n {
                    d[k][(i, j)] = jet.gradient()[k];
                    d[k][(j, i)] = jet.gradient()[k];
                    for l in 0..n {
                        dd[k * n + l][(i, j)] = jet.hessian(k, l);
                        dd[k * n + l][(j, i)] = jet.hessian(k, l);
                    }
                }
            }
        }
        let inv = invert(&g, p)?;
        Ok(MetricEval2 { first: MetricEval { g, inv, d }, dd })
    }

    /// `Γ^j_{kp}` at `p`.
    pub fn christoffel(&self, p: &[f64]) -> Result<Christoffel> {
        Ok(Christoffel::from_eval(&self.eval_metric(p)?))
    }
}

fn invert(g: &DMatrix<f64>, p: &[f64]) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(g.clone()).ok_or_else(|| Error::Degenerate { point: p.to_vec() })?;
    Ok(chol.inverse())
}

/// Christoffel symbols of the second kind, `Γ^j_{kp}`, symmetric in `(k, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub(crate) fn from_eval(m: &MetricEval) -> Self {
        let n = m.g.nrows();
        let mut data = vec![0.0; n * n * n];
        for k in 0..n {
            for p in k..n {
                // first kind: [m; k p] = ½ (∂_p g_mk + ∂_k g_mp - ∂_m g_kp)
                let first: Vec<f64> = (0..n)
                    .map(|m_| 0.5 * (m.d[p][(m_, k)] + m.d[k][(m_, p)] - m.d[m_][(k, p)]))
                    .collect();
                for j in 0..n {
                    let v: f64 = (0..n).map(|m_| m.inv[(j, m_)] * first[m_]).sum();
                    data[(j * n + k) * n + p] = v;
                    data[(j * n + p) * n + k] = v;
                }
            }
        }
        Christoffel { n, data }
    }

    pub fn get(&self, j: usize, k: usize, p: usize) -> f64 {
        self.data[(j * self.n + k) * self.n + p]
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// `Γ^j_{kp} v^k w^p`.
    pub fn contract(&self, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |j, _| {
            let mut s = 0.0;
            for k in 0..n {
                for p in 0..n {
                    s += self.get(j, k, p) * v[k] * w[p];
                }
            }
            s
        })
    }
}

/// Antisymmetric matrix stored by its strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SkewMatrix {
    pub fn zeros(n: usize) -> Self {
        SkewMatrix { n, upper: vec![0.0; n * (n - 1) / 2] }
    }

    fn slot(&self, i: usize, k: usize) -> usize {
        debug_assert!(i < k);
        i * self.n - i * (i + 1) / 2 + (k - i - 1)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        match i.cmp(&k) {
            std::cmp::Ordering::Less => self.upper[self.slot(i, k)],
            std::cmp::Ordering::Greater => -self.upper[self.slot(k, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        match i.cmp(&k) {
            std::cmp::Ordering::Less => {
                let s = self.slot(i, k);
                self.upper[s] = v;
            }
            std::cmp::Ordering::Greater => {
                let s = self.slot(k, i);
                self.upper[s] = -v;
            }
            std::cmp::Ordering::Equal => assert!(v == 0.0, "diagonal of a skew matrix is zero"),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, k| self.get(i, k))
    }

    /// `(L v)_i = L_ik v^k`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| (0..self.n).map(|k| self.get(i, k) * v[k]).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, c: f64) -> SkewMatrix {
        SkewMatrix { n: self.n, upper: self.upper.iter().map(|x| c * x).collect() }
    }

    pub fn sub(&self, o: &SkewMatrix) -> SkewMatrix {
        SkewMatrix { n: self.n, upper: self.upper.iter().zip(&o.upper).map(|(a, b)| a - b).collect() }
    }

    pub fn entries(&self) -> &[f64] {
        &self.upper
    }
}

/// A 1-form `ω_i` given by expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    components: Vec<ScalarExpression>,
}

impl OneFormField {
    pub fn new(components: Vec<ScalarExpression>) -> Result<Self> {
        let n = components.len();
        if n < 2 {
            return Err(Error::InvalidArgument("1-form dimension must be at least 2".into()));
        }
        if let Some(e) = components.iter().find(|e| e.arity() != n) {
            return Err(Error::Dimension { expected: n, got: e.arity() });
        }
        Ok(OneFormField { components })
    }

    pub fn parse<S: AsRef<str>>(sources: &[S]) -> Result<Self> {
        let n = sources.len();
        let comps = sources
            .iter()
            .map(|s| ScalarExpression::parse(s.as_ref(), n))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(comps)
    }

    pub fn zero(n: usize) -> Self {
        OneFormField { components: (0..n).map(|_| ScalarExpression::constant(0.0, n)).collect() }
    }

    /// `df` for an expression `f`, built symbolically.
    pub fn differential(f: &ScalarExpression) -> Result<Self> {
        let n = f.arity();
        let comps = (0..n)
            .map(|k| Ok(ScalarExpression::from_node(f.node().partial(k)?, n)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        let n = nodes.len();
        OneFormField { components: nodes.into_iter().map(|e| ScalarExpression::from_node(e, n)).collect() }
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ScalarExpression {
        &self.components[i]
    }

    pub fn components(&self) -> &[ScalarExpression] {
        &self.components
    }

    pub fn sources(&self) -> Vec<String> {
        self.components.iter().map(|e| e.source().to_string()).collect()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.components.iter().all(ScalarExpression::is_zero)
    }

    pub fn values(&self, p: &[f64]) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.dimension());
        for (i, c) in self.components.iter().enumerate() {
            out[i] = c.eval(p)?;
        }
        Ok(out)
    }

    /// `ω(ξ) = ω_i ξ^i`.
    pub fn apply(&self, p: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(self.values(p)?.iter().zip(xi).map(|(a, b)| a * b).sum())
    }

    /// Components and their Jacobian `J[(i, k)] = ∂ω_i/∂x^k`.
    pub fn jacobian(&self, p: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.dimension();
        let mut vals = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            let jet = c.eval_jet1(p)?;
            vals[i] = jet.value();
            for k in 0..n {
                jac[(i, k)] = jet.gradient()[k];
            }
        }
        Ok((vals, jac))
    }

    /// `L_ik = ∂ω_i/∂x^k − ∂ω_k/∂x^i`.
    ///
    /// This is the negative of the usual `(dω)_ik`; geodesic and
    /// classification formulas are written against this convention.
    pub fn exterior_derivative(&self, p: &[f64]) -> Result<SkewMatrix> {
        let (_, jac) = self.jacobian(p)?;
        Ok(skew_from_jacobian(&jac))
    }
}

pub(crate) fn skew_from_jacobian(jac: &DMatrix<f64>) -> SkewMatrix {
    let n = jac.nrows();
    let mut l = SkewMatrix::zeros(n);
    for i in 0..n {
        for k in (i + 1)..n {
            l.set(i, k, jac[(i, k)] - jac[(k, i)]);
        }
    }
    l
}
