use std::fmt;

use crate::error::{Error, Result};

/// Built-in functions of the expression language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Atan,
    Atan2,
    Min,
    Max,
    Bump,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "atan" => Func::Atan,
            "atan2" => Func::Atan2,
            "min" => Func::Min,
            "max" => Func::Max,
            "bump" => Func::Bump,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Atan => "atan",
            Func::Atan2 => "atan2",
            Func::Min => "min",
            Func::Max => "max",
            Func::Bump => "bump",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 | Func::Min | Func::Max | Func::Bump => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Variables are zero-based indices (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
    Call(Func, Vec<Node>),
}

impl Node {
    pub fn num(c: f64) -> Node {
        Node::Num(c)
    }

    pub fn var(i: usize) -> Node {
        Node::Var(i)
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Node::Num(c) => Some(*c),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    // The builders below fold only identities involving literal 0 and 1.

    pub fn add(a: Node, b: Node) -> Node {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        Node::Bin(BinOp::Add, Box::new(a), Box::new(b))
    }

    pub fn sub(a: Node, b: Node) -> Node {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Node::neg(b);
        }
        Node::Bin(BinOp::Sub, Box::new(a), Box::new(b))
    }

    pub fn mul(a: Node, b: Node) -> Node {
        if a.is_zero() || b.is_zero() {
            return Node::Num(0.0);
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        Node::Bin(BinOp::Mul, Box::new(a), Box::new(b))
    }

    pub fn div(a: Node, b: Node) -> Node {
        if a.is_zero() {
            return Node::Num(0.0);
        }
        if b.is_one() {
            return a;
        }
        Node::Bin(BinOp::Div, Box::new(a), Box::new(b))
    }

    pub fn neg(a: Node) -> Node {
        match a {
            Node::Num(0.0) => Node::Num(0.0),
            Node::Neg(inner) => *inner,
            other => Node::Neg(Box::new(other)),
        }
    }

    pub fn pow(a: Node, c: f64) -> Node {
        if c == 1.0 {
            return a;
        }
        if c == 0.0 {
            return Node::Num(1.0);
        }
        Node::Pow(Box::new(a), c)
    }

    pub fn call(f: Func, args: Vec<Node>) -> Node {
        debug_assert_eq!(f.arity(), args.len());
        Node::Call(f, args)
    }

    /// Largest variable index used, plus one.
    pub fn min_arity(&self) -> usize {
        match self {
            Node::Num(_) => 0,
            Node::Var(i) => i + 1,
            Node::Neg(a) | Node::Pow(a, _) => a.min_arity(),
            Node::Bin(_, a, b) => a.min_arity().max(b.min_arity()),
            Node::Call(_, args) => args.iter().map(Node::min_arity).max().unwrap_or(0),
        }
    }

    /// Evaluates a variable-free tree.
    pub fn constant_value(&self) -> Option<f64> {
        Some(match self {
            Node::Num(c) => *c,
            Node::Var(_) => return None,
            Node::Neg(a) => -a.constant_value()?,
            Node::Bin(op, a, b) => {
                let (a, b) = (a.constant_value()?, b.constant_value()?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Node::Pow(a, c) => a.constant_value()?.powf(*c),
            Node::Call(..) => {
                if self.min_arity() > 0 {
                    return None;
                }
                let v = crate::expr::eval_value(self, &[]).ok()?;
                return Some(v);
            }
        })
    }

    /// Replaces every `Var(i)` by `subs[i]`.
    pub fn substitute(&self, subs: &[Node]) -> Node {
        match self {
            Node::Num(c) => Node::Num(*c),
            Node::Var(i) => subs[*i].clone(),
            Node::Neg(a) => Node::Neg(Box::new(a.substitute(subs))),
            Node::Bin(op, a, b) => {
                Node::Bin(*op, Box::new(a.substitute(subs)), Box::new(b.substitute(subs)))
            }
            Node::Pow(a, c) => Node::Pow(Box::new(a.substitute(subs)), *c),
            Node::Call(f, args) => Node::Call(*f, args.iter().map(|a| a.substitute(subs)).collect()),
        }
    }

    /// Symbolic partial derivative with respect to `Var(var)`.
    ///
    /// `abs`, `min`, `max` and `bump` are rejected: their derivatives are not
    /// expressible in the grammar without piecewise definitions.
    pub fn partial(&self, var: usize) -> Result<Node> {
        Ok(match self {
            Node::Num(_) => Node::Num(0.0),
            Node::Var(i) => Node::Num(if *i == var { 1.0 } else { 0.0 }),
            Node::Neg(a) => Node::neg(a.partial(var)?),
            Node::Bin(op, a, b) => {
                let (da, db) = (a.partial(var)?, b.partial(var)?);
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => Node::add(da, db),
                    BinOp::Sub => Node::sub(da, db),
                    BinOp::Mul => Node::add(Node::mul(da, b), Node::mul(a, db)),
                    BinOp::Div => {
                        if db.is_zero() {
                            Node::div(da, b)
                        } else {
                            Node::div(
                                Node::sub(Node::mul(da, b.clone()), Node::mul(a, db)),
                                Node::pow(b, 2.0),
                            )
                        }
                    }
                }
            }
            Node::Pow(a, c) => {
                let da = a.partial(var)?;
                Node::mul(Node::mul(Node::Num(*c), Node::pow((**a).clone(), c - 1.0)), da)
            }
            Node::Call(f, args) => {
                let a = args[0].clone();
                let da = args[0].partial(var)?;
                match f {
                    Func::Sin => Node::mul(Node::call(Func::Cos, vec![a]), da),
                    Func::Cos => Node::neg(Node::mul(Node::call(Func::Sin, vec![a]), da)),
                    Func::Tan => Node::div(da, Node::pow(Node::call(Func::Cos, vec![a]), 2.0)),
                    Func::Exp => Node::mul(self.clone(), da),
                    Func::Log => Node::div(da, a),
                    Func::Sqrt => Node::div(da, Node::mul(Node::Num(2.0), self.clone())),
                    Func::Atan => {
                        Node::div(da, Node::add(Node::Num(1.0), Node::pow(a, 2.0)))
                    }
                    Func::Atan2 => {
                        // atan2(y, x): (x dy - y dx) / (x^2 + y^2)
                        let (y, x) = (a, args[1].clone());
                        let dx = args[1].partial(var)?;
                        Node::div(
                            Node::sub(Node::mul(x.clone(), da), Node::mul(y.clone(), dx)),
                            Node::add(Node::pow(x, 2.0), Node::pow(y, 2.0)),
                        )
                    }
                    Func::Abs | Func::Min | Func::Max | Func::Bump => {
                        return Err(Error::Unsupported(format!(
                            "symbolic derivative of {}",
                            f.name()
                        )))
                    }
                }
            }
        })
    }
}

fn fmt_num(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{})", -c)
    } else {
        write!(f, "{c}")
    }
}

impl fmt::Display for Node {
    /// Fully parenthesised rendering that re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(c) => fmt_num(*c, f),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Pow(a, c) => {
                match **a {
                    Node::Var(_) => write!(f, "{a}")?,
                    Node::Num(x) if x >= 0.0 => write!(f, "{a}")?,
                    _ => write!(f, "({a})")?,
                }
                write!(f, "^")?;
                fmt_num(*c, f)
            }
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}
