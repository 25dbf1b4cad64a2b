use std::fmt;

use num_complex::Complex64;

/// Expression tree node for an entire field `F(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Non-negative decimal literal.
    Num(f64),
    ImagUnit,
    Pi,
    Euler,
    X,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, u32),
    Exp(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
}

/// Integer power by repeated squaring.
pub fn powu(base: Complex64, mut n: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut sq = base;
    while n > 0 {
        if n & 1 == 1 {
            acc *= sq;
        }
        n >>= 1;
        if n > 0 {
            sq *= sq;
        }
    }
    acc
}

impl Node {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Node::Num(v) => Complex64::new(*v, 0.0),
            Node::ImagUnit => Complex64::new(0.0, 1.0),
            Node::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Node::Euler => Complex64::new(std::f64::consts::E, 0.0),
            Node::X => z,
            Node::Add(a, b) => a.eval(z) + b.eval(z),
            Node::Sub(a, b) => a.eval(z) - b.eval(z),
            Node::Mul(a, b) => a.eval(z) * b.eval(z),
            Node::Div(a, b) => a.eval(z) / b.eval(z),
            Node::Neg(a) => -a.eval(z),
            Node::Pow(a, n) => powu(a.eval(z), *n),
            Node::Exp(a) => a.eval(z).exp(),
            Node::Sin(a) => a.eval(z).sin(),
            Node::Cos(a) => a.eval(z).cos(),
        }
    }

    /// Evaluation that reports an exact zero denominator.
    pub fn try_eval(&self, z: Complex64) -> Option<Complex64> {
        let bin = |a: &Node, b: &Node| Some((a.try_eval(z)?, b.try_eval(z)?));
        Some(match self {
            Node::Add(a, b) => {
                let (p, q) = bin(a, b)?;
                p + q
            }
            Node::Sub(a, b) => {
                let (p, q) = bin(a, b)?;
                p - q
            }
            Node::Mul(a, b) => {
                let (p, q) = bin(a, b)?;
                p * q
            }
            Node::Div(a, b) => {
                let (p, q) = bin(a, b)?;
                if q.re == 0.0 && q.im == 0.0 {
                    return None;
                }
                p / q
            }
            Node::Neg(a) => -a.try_eval(z)?,
            Node::Pow(a, n) => powu(a.try_eval(z)?, *n),
            Node::Exp(a) => a.try_eval(z)?.exp(),
            Node::Sin(a) => a.try_eval(z)?.sin(),
            Node::Cos(a) => a.try_eval(z)?.cos(),
            leaf => leaf.eval(z),
        })
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            Node::X => true,
            Node::Num(_) | Node::ImagUnit | Node::Pi | Node::Euler => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.depends_on_x() || b.depends_on_x()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
                a.depends_on_x()
            }
        }
    }

    pub fn contains_division(&self) -> bool {
        match self {
            Node::Div(_, _) => true,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.contains_division() || b.contains_division()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
                a.contains_division()
            }
            _ => false,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
                1 + a.size()
            }
            _ => 1,
        }
    }

    fn is_atom(&self) -> bool {
        matches!(
            self,
            Node::Num(_)
                | Node::ImagUnit
                | Node::Pi
                | Node::Euler
                | Node::X
                | Node::Exp(_)
                | Node::Sin(_)
                | Node::Cos(_)
        )
    }

    /// Printing precedence: 1 additive, 2 multiplicative, 3 factor (power or unary), 4 atom.
    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Pow(..) | Node::Neg(..) => 3,
            _ => 4,
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, node: &Node, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({node})")
    } else {
        write!(f, "{node}")
    }
}

// Canonical printing. Left-associative chains print without parentheses on the
// left operand; right operands of the same precedence are parenthesized so
// that re-parsing reproduces the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => {
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    write!(f, "{}", *v as i64)
                } else {
                    write!(f, "{v}")
                }
            }
            Node::ImagUnit => f.write_str("i"),
            Node::Pi => f.write_str("pi"),
            Node::Euler => f.write_str("e"),
            Node::X => f.write_str("x"),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let (op, prec) = match self {
                    Node::Add(..) => (" + ", 1),
                    Node::Sub(..) => (" - ", 1),
                    Node::Mul(..) => ("*", 2),
                    _ => ("/", 2),
                };
                write_wrapped(f, a, a.precedence() < prec)?;
                f.write_str(op)?;
                write_wrapped(f, b, b.precedence() <= prec)
            }
            Node::Neg(a) => {
                f.write_str("-")?;
                write_wrapped(f, a, !a.is_atom())
            }
            Node::Pow(a, n) => {
                // factor := unary ('^' integer)?, so a bare negation may be the base
                let bare = a.is_atom() || matches!(**a, Node::Neg(_));
                write_wrapped(f, a, !bare)?;
                write!(f, "^{n}")
            }
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
        }
    }
}
