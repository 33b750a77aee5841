//! Closed-form scalar expressions over chart coordinates `x1..xn`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          exponent must be a constant
//! primary := number | xK | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos tan exp log sqrt abs atan atan2 min max bump`.
//! `bump(r, R)` is `exp(1/((r/R)^2 - 1))` for `|r| < R` and `0` otherwise.

mod ast;
mod jet;
mod parser;

use std::fmt;

use thiserror::Error;

pub use ast::{BinOp, Func, Node};
pub use jet::{Jet1, Jet2};
use jet::Scalar;

/// Positioned parse failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {offset}: {message}")]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(offset: usize, message: String) -> Self {
        ParseError { offset, message }
    }
}

/// Evaluation outside the real domain of some subexpression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("domain error in `{subexpression}`: {reason}")]
pub struct DomainError {
    pub subexpression: String,
    pub reason: String,
}

fn domain(node: &Node, reason: &str) -> DomainError {
    DomainError { subexpression: node.to_string(), reason: reason.to_string() }
}

/// A parsed expression together with its source text and chart dimension.
///
/// Equality compares the tree and arity, not the source spelling.
#[derive(Debug, Clone)]
pub struct ScalarExpression {
    source: String,
    arity: usize,
    root: Node,
}

impl PartialEq for ScalarExpression {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.root == other.root
    }
}

impl ScalarExpression {
    pub fn parse(source: &str, arity: usize) -> Result<Self, ParseError> {
        if source.trim().is_empty() {
            return Err(ParseError::new(0, "expected operand, found end of input".into()));
        }
        let root = parser::parse(source, arity)?;
        Ok(ScalarExpression { source: source.to_string(), arity, root })
    }

    /// Wraps a programmatically built tree. The source becomes its rendering.
    pub fn from_node(root: Node, arity: usize) -> Self {
        assert!(root.min_arity() <= arity, "tree uses more variables than the arity");
        ScalarExpression { source: root.to_string(), arity, root }
    }

    pub fn constant(c: f64, arity: usize) -> Self {
        Self::from_node(Node::Num(c), arity)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    pub fn is_zero(&self) -> bool {
        self.root == Node::Num(0.0)
    }

    /// Fully parenthesised rendering; re-parses to an identical tree.
    pub fn pretty(&self) -> String {
        self.root.to_string()
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, DomainError> {
        self.check_point(p);
        eval::<f64>(&self.root, p)
    }

    pub fn eval_jet1(&self, p: &[f64]) -> Result<Jet1, DomainError> {
        self.check_point(p);
        eval::<Jet1>(&self.root, p)
    }

    /// Value, gradient and Hessian at `p` by forward-mode propagation.
    pub fn eval_jet2(&self, p: &[f64]) -> Result<Jet2, DomainError> {
        self.check_point(p);
        eval::<Jet2>(&self.root, p)
    }

    fn check_point(&self, p: &[f64]) {
        assert_eq!(p.len(), self.arity, "point dimension does not match expression arity");
    }
}

impl fmt::Display for ScalarExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

pub(crate) fn eval_value(node: &Node, p: &[f64]) -> Result<f64, DomainError> {
    eval::<f64>(node, p)
}

fn eval<S: Scalar>(node: &Node, p: &[f64]) -> Result<S, DomainError> {
    let out = eval_inner::<S>(node, p)?;
    if !out.all_finite() {
        return Err(domain(node, "non-finite result"));
    }
    Ok(out)
}

/// `coef * x^e`, with a zero coefficient winning over an infinite power.
fn pow_term(coef: f64, x: f64, e: f64, integer: bool) -> f64 {
    if coef == 0.0 {
        0.0
    } else if integer {
        coef * x.powi(e as i32)
    } else {
        coef * x.powf(e)
    }
}

/// `exp(1/(s-1))` and its first two derivatives in `s`, zero for `s >= 1`.
fn bump_profile(s: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = s - 1.0;
    let psi = (1.0 / q).exp();
    if psi == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let q2 = q * q;
    let d1 = -psi / q2;
    let d2 = psi * (1.0 / (q2 * q2) + 2.0 / (q2 * q));
    (psi, d1, d2)
}

fn eval_inner<S: Scalar>(node: &Node, p: &[f64]) -> Result<S, DomainError> {
    let n = p.len();
    Ok(match node {
        Node::Num(c) => S::constant(*c, n),
        Node::Var(i) => S::variable(p[*i], *i, n),
        Node::Neg(a) => eval::<S>(a, p)?.neg(),
        Node::Bin(op, a, b) => {
            let a = eval::<S>(a, p)?;
            let b = eval::<S>(b, p)?;
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => {
                    let v = b.value();
                    if v == 0.0 {
                        return Err(domain(node, "division by zero"));
                    }
                    a.mul(&b.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
                }
            }
        }
        Node::Pow(a, c) => {
            let base = eval::<S>(a, p)?;
            let x = base.value();
            let c = *c;
            let integer = c.fract() == 0.0 && c.abs() < i32::MAX as f64;
            if !integer && x < 0.0 {
                return Err(domain(node, "negative base with non-integer exponent"));
            }
            if x == 0.0 && c < 0.0 {
                return Err(domain(node, "zero base with negative exponent"));
            }
            base.chain(
                pow_term(1.0, x, c, integer),
                pow_term(c, x, c - 1.0, integer),
                pow_term(c * (c - 1.0), x, c - 2.0, integer),
            )
        }
        Node::Call(f, args) => {
            if *f == Func::Bump {
                return eval_bump::<S>(node, &args[0], &args[1], p);
            }
            let a = eval::<S>(&args[0], p)?;
            let x = a.value();
            match f {
                Func::Sin => a.chain(x.sin(), x.cos(), -x.sin()),
                Func::Cos => a.chain(x.cos(), -x.sin(), -x.cos()),
                Func::Tan => {
                    let t = x.tan();
                    let sec2 = 1.0 + t * t;
                    a.chain(t, sec2, 2.0 * t * sec2)
                }
                Func::Exp => {
                    let e = x.exp();
                    a.chain(e, e, e)
                }
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain(node, "logarithm of a non-positive number"));
                    }
                    a.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain(node, "square root of a negative number"));
                    }
                    let r = x.sqrt();
                    if S::ORDER > 0 && r == 0.0 {
                        return Err(domain(node, "square root is not differentiable at 0"));
                    }
                    a.chain(r, 0.5 / r, -0.25 / (r * x))
                }
                Func::Abs => {
                    let s = if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    a.chain(x.abs(), s, 0.0)
                }
                Func::Atan => {
                    let d = 1.0 + x * x;
                    a.chain(x.atan(), 1.0 / d, -2.0 * x / (d * d))
                }
                Func::Atan2 => {
                    let b = eval::<S>(&args[1], p)?;
                    let (y, x) = (x, b.value());
                    let r2 = x * x + y * y;
                    if r2 == 0.0 {
                        if S::ORDER > 0 {
                            return Err(domain(node, "atan2 is not differentiable at the origin"));
                        }
                        return Ok(S::constant(0.0, n));
                    }
                    let r4 = r2 * r2;
                    S::chain2(
                        &a,
                        &b,
                        [
                            y.atan2(x),
                            x / r2,
                            -y / r2,
                            -2.0 * x * y / r4,
                            (y * y - x * x) / r4,
                            2.0 * x * y / r4,
                        ],
                    )
                }
                Func::Min | Func::Max => {
                    let b = eval::<S>(&args[1], p)?;
                    let take_a = if *f == Func::Min { x <= b.value() } else { x >= b.value() };
                    if take_a {
                        a
                    } else {
                        b
                    }
                }
                Func::Bump => unreachable!(),
            }
        }
    })
}

fn eval_bump<S: Scalar>(node: &Node, r: &Node, radius: &Node, p: &[f64]) -> Result<S, DomainError> {
    let big_r = eval::<S>(radius, p)?;
    if big_r.value() <= 0.0 {
        return Err(domain(node, "bump radius must be positive"));
    }
    let inv_r2 = {
        let v = big_r.value();
        let r2 = big_r.mul(&big_r);
        r2.chain(1.0 / (v * v), -1.0 / (v * v * v * v), 2.0 / (v * v * v * v * v * v))
    };
    // bump only depends on r^2, so bump(sqrt(E), R) is evaluated through E
    // directly; this keeps the jet finite where E = 0.
    let s = match r {
        Node::Call(Func::Sqrt, inner) => {
            let e = eval::<S>(&inner[0], p)?;
            if e.value() < 0.0 {
                return Err(domain(r, "square root of a negative number"));
            }
            e.mul(&inv_r2)
        }
        _ => {
            let r = eval::<S>(r, p)?;
            r.mul(&r).mul(&inv_r2)
        }
    };
    let (psi, d1, d2) = bump_profile(s.value());
    Ok(s.chain(psi, d1, d2))
}
