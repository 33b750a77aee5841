//! Forward-mode number types used by the evaluator.
//!
//! `Jet1` carries a value and gradient, `Jet2` additionally carries the full
//! Hessian. Both propagate derivatives exactly through every operation via
//! the chain rule; nothing here uses finite differences.

use smallvec::SmallVec;

pub(crate) type Grad = SmallVec<[f64; 4]>;
pub(crate) type Hess = SmallVec<[f64; 16]>;

/// Arithmetic needed by the tree evaluator.
pub(crate) trait Scalar: Clone {
    fn constant(c: f64, n: usize) -> Self;
    fn variable(x: f64, i: usize, n: usize) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Applies a scalar function with value `d0`, first derivative `d1` and
    /// second derivative `d2` at `self.value()`.
    fn chain(&self, d0: f64, d1: f64, d2: f64) -> Self;
    /// Applies a two-argument function: `d = [f, fa, fb, faa, fab, fbb]`.
    fn chain2(a: &Self, b: &Self, d: [f64; 6]) -> Self;
    fn all_finite(&self) -> bool;
    /// Highest derivative order carried.
    const ORDER: u8;
}

impl Scalar for f64 {
    const ORDER: u8 = 0;

    fn constant(c: f64, _n: usize) -> Self {
        c
    }
    fn variable(x: f64, _i: usize, _n: usize) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn chain(&self, d0: f64, _d1: f64, _d2: f64) -> Self {
        d0
    }
    fn chain2(_a: &Self, _b: &Self, d: [f64; 6]) -> Self {
        d[0]
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

/// Value and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1 {
    pub(crate) value: f64,
    pub(crate) grad: Grad,
}

impl Jet1 {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }
}

impl Scalar for Jet1 {
    const ORDER: u8 = 1;

    fn constant(c: f64, n: usize) -> Self {
        Jet1 { value: c, grad: SmallVec::from_elem(0.0, n) }
    }
    fn variable(x: f64, i: usize, n: usize) -> Self {
        let mut j = Self::constant(x, n);
        j.grad[i] = 1.0;
        j
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn add(&self, o: &Self) -> Self {
        Jet1 {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        Jet1 {
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a - b).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        Jet1 {
            value: self.value * o.value,
            grad: self
                .grad
                .iter()
                .zip(&o.grad)
                .map(|(a, b)| a * o.value + self.value * b)
                .collect(),
        }
    }
    fn neg(&self) -> Self {
        Jet1 { value: -self.value, grad: self.grad.iter().map(|a| -a).collect() }
    }
    fn chain(&self, d0: f64, d1: f64, _d2: f64) -> Self {
        Jet1 { value: d0, grad: self.grad.iter().map(|a| d1 * a).collect() }
    }
    fn chain2(a: &Self, b: &Self, d: [f64; 6]) -> Self {
        Jet1 {
            value: d[0],
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| d[1] * x + d[2] * y).collect(),
        }
    }
    fn all_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|x| x.is_finite())
    }
}

/// Value, gradient and Hessian (row-major, `n × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub(crate) n: usize,
    pub(crate) value: f64,
    pub(crate) grad: Grad,
    pub(crate) hess: Hess,
}

impl Jet2 {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    pub fn hessian(&self, k: usize, l: usize) -> f64 {
        self.hess[k * self.n + l]
    }

    pub fn dimension(&self) -> usize {
        self.n
    }
}

impl Scalar for Jet2 {
    const ORDER: u8 = 2;

    fn constant(c: f64, n: usize) -> Self {
        Jet2 {
            n,
            value: c,
            grad: SmallVec::from_elem(0.0, n),
            hess: SmallVec::from_elem(0.0, n * n),
        }
    }
    fn variable(x: f64, i: usize, n: usize) -> Self {
        let mut j = Self::constant(x, n);
        j.grad[i] = 1.0;
        j
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn add(&self, o: &Self) -> Self {
        Jet2 {
            n: self.n,
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a + b).collect(),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        Jet2 {
            n: self.n,
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a - b).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let (f, g) = (self.value, o.value);
        let mut hess = Hess::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                hess.push(
                    self.hess[k * n + l] * g
                        + f * o.hess[k * n + l]
                        + self.grad[k] * o.grad[l]
                        + o.grad[k] * self.grad[l],
                );
            }
        }
        Jet2 {
            n,
            value: f * g,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a * g + f * b).collect(),
            hess,
        }
    }
    fn neg(&self) -> Self {
        Jet2 {
            n: self.n,
            value: -self.value,
            grad: self.grad.iter().map(|a| -a).collect(),
            hess: self.hess.iter().map(|a| -a).collect(),
        }
    }
    fn chain(&self, d0: f64, d1: f64, d2: f64) -> Self {
        let n = self.n;
        let mut hess = Hess::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                hess.push(d1 * self.hess[k * n + l] + d2 * self.grad[k] * self.grad[l]);
            }
        }
        Jet2 { n, value: d0, grad: self.grad.iter().map(|a| d1 * a).collect(), hess }
    }
    fn chain2(a: &Self, b: &Self, d: [f64; 6]) -> Self {
        let n = a.n;
        let [f, fa, fb, faa, fab, fbb] = d;
        let mut hess = Hess::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                hess.push(
                    fa * a.hess[k * n + l]
                        + fb * b.hess[k * n + l]
                        + faa * a.grad[k] * a.grad[l]
                        + fab * (a.grad[k] * b.grad[l] + b.grad[k] * a.grad[l])
                        + fbb * b.grad[k] * b.grad[l],
                );
            }
        }
        Jet2 {
            n,
            value: f,
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| fa * x + fb * y).collect(),
            hess,
        }
    }
    fn all_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|x| x.is_finite())
            && self.hess.iter().all(|x| x.is_finite())
    }
}
