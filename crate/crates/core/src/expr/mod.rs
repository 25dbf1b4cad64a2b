//! Field expressions: parsing, evaluation and exact symbolic derivatives.

mod derive;
mod node;
mod parser;
mod poly;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use node::{powu, Node};
pub use poly::horner;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("empty field expression")]
    Empty,
}

/// A parsed entire function `F`.
///
/// Cloning is cheap; the tree is shared and never mutated.
#[derive(Debug, Clone)]
pub struct FieldAst {
    root: Arc<Node>,
    source: String,
    poly: Option<Arc<Vec<Complex64>>>,
}

impl PartialEq for FieldAst {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl FieldAst {
    pub fn parse(source: &str) -> Result<Self, FieldError> {
        if source.trim().is_empty() {
            return Err(FieldError::Empty);
        }
        let root = parser::Parser::new(source)?.parse_all()?;
        Ok(Self::from_node(root, source.to_string()))
    }

    pub fn from_node(root: Node, source: String) -> Self {
        let poly = poly::expand(&root).map(Arc::new);
        Self {
            root: Arc::new(root),
            source,
            poly,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// `F(z)`; an exact zero denominator in a user-written quotient is an error.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, FieldError> {
        self.root.try_eval(z).ok_or(FieldError::DivisionByZero)
    }

    /// `F(z)` without the quotient check; non-finite values propagate.
    #[inline]
    pub fn value(&self, z: Complex64) -> Complex64 {
        match &self.poly {
            Some(c) if c.len() <= 12 => horner(c, z),
            _ => self.root.eval(z),
        }
    }

    /// Exact `k`-th derivative.
    pub fn derivative(&self, k: u32) -> FieldAst {
        let mut node = (*self.root).clone();
        for _ in 0..k {
            node = derive::derivative(&node);
        }
        let source = node.to_string();
        Self::from_node(node, source)
    }

    /// `-F`, the time-reversed field.
    pub fn negated(&self) -> FieldAst {
        let node = Node::Neg(Box::new((*self.root).clone()));
        let source = format!("-({})", self.source);
        Self::from_node(node, source)
    }

    /// `c·F` for a real constant `c > 0`.
    pub fn scaled(&self, c: f64) -> FieldAst {
        let node = Node::Mul(Box::new(Node::Num(c)), Box::new((*self.root).clone()));
        let source = format!("{c}*({})", self.source);
        Self::from_node(node, source)
    }

    /// Ascending coefficients when the tree is a polynomial in `x`.
    pub fn polynomial(&self) -> Option<&[Complex64]> {
        self.poly.as_deref().map(Vec::as_slice)
    }

    pub fn polynomial_degree(&self) -> Option<usize> {
        self.polynomial().map(|c| c.len() - 1)
    }

    pub fn has_division(&self) -> bool {
        self.root.contains_division()
    }

    /// Human-readable warnings about the parsed field.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.has_division() {
            out.push(
                "expression contains a division; the field is assumed entire but poles are possible"
                    .to_string(),
            );
        }
        if !self.root.depends_on_x() {
            out.push("field does not depend on x".to_string());
        }
        out
    }
}

impl fmt::Display for FieldAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

/// Replace whole-word occurrences of `name` in `source` by a parenthesized value.
pub fn substitute_parameter(source: &str, name: &str, value: f64) -> String {
    let mut out = String::with_capacity(source.len() + 16);
    let bytes = source.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &source[start..i];
            if word == name {
                if value < 0.0 {
                    out.push_str(&format!("(0 - {})", -value));
                } else {
                    out.push_str(&format!("({value})"));
                }
            } else {
                out.push_str(word);
            }
        } else if c.is_ascii_digit() || c == b'.' {
            // keep numeric literals (including exponents) intact
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
                let mut j = i + 1;
                if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push_str(&source[start..i]);
        } else {
            out.push(c as char);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const QUARTIC: &str = "x^2*(x-1)*(x-i)*(x-1-i)";

    #[test]
    fn parses_counterexample_field() {
        let f = FieldAst::parse("x*exp(x)").unwrap();
        assert_eq!(
            *f.root(),
            Node::Mul(Box::new(Node::X), Box::new(Node::Exp(Box::new(Node::X))))
        );
    }

    #[test]
    fn linear_center_field() {
        let f = FieldAst::parse("i*x").unwrap();
        let v = f.eval(c(2.0, 3.0)).unwrap();
        assert_eq!(v, c(-3.0, 2.0));
    }

    #[test]
    fn malformed_power_reports_offset() {
        match FieldAst::parse("x**") {
            Err(FieldError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        match FieldAst::parse("x*y") {
            Err(FieldError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "y");
                assert_eq!(offset, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            FieldAst::parse("tan(x)"),
            Err(FieldError::UnknownIdentifier { .. })
        ));
        assert_eq!(FieldAst::parse("  "), Err(FieldError::Empty));
    }

    #[test]
    fn quartic_vanishes_at_one_plus_i() {
        let f = FieldAst::parse(QUARTIC).unwrap();
        for z in [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)] {
            assert_eq!(f.eval(z).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn counterexample_real_imag_split() {
        let f = FieldAst::parse("x*exp(x)").unwrap();
        assert_eq!(f.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let (x1, x2) = (-2.0_f64, 0.1_f64);
        let v = f.eval(c(x1, x2)).unwrap();
        let re = x1.exp() * (x1 * x2.cos() - x2 * x2.sin());
        let im = x1.exp() * (x1 * x2.sin() + x2 * x2.cos());
        assert!((v.re - re).abs() <= 1e-15 * re.abs());
        assert!((v.im - im).abs() <= 1e-15 * im.abs());
    }

    #[test]
    fn derivative_of_counterexample_at_zero() {
        let f = FieldAst::parse("x*exp(x)").unwrap();
        let d = f.derivative(1);
        assert_eq!(d.eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let f = FieldAst::parse("5").unwrap();
        assert_eq!(*f.derivative(1).root(), Node::Num(0.0));
    }

    #[test]
    fn second_derivative_matches_central_difference() {
        let f = FieldAst::parse("(x-1)^2*(x+1)^2").unwrap();
        let h = 1e-5;
        let z = c(1.0, 0.0);
        let fd = (f.value(z + h) - 2.0 * f.value(z) + f.value(z - h)) / (h * h);
        // central differences of eval give 8.0000 to ~1e-5
        assert!((fd - c(8.0, 0.0)).norm() < 1e-4);
        let exact = f.derivative(2).eval(z).unwrap();
        assert!((exact - c(8.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn division_is_flagged_and_checked() {
        let f = FieldAst::parse("1/x").unwrap();
        assert!(f.has_division());
        assert!(!f.diagnostics().is_empty());
        assert_eq!(f.eval(c(0.0, 0.0)), Err(FieldError::DivisionByZero));
        assert!(FieldAst::parse("x*exp(x)").unwrap().diagnostics().is_empty());
    }

    #[test]
    fn grammar_binds_unary_minus_tighter_than_power() {
        let f = FieldAst::parse("-x^2").unwrap();
        assert_eq!(f.eval(c(3.0, 0.0)).unwrap(), c(9.0, 0.0));
        let g = FieldAst::parse("-(x^2)").unwrap();
        assert_eq!(g.eval(c(3.0, 0.0)).unwrap(), c(-9.0, 0.0));
    }

    #[test]
    fn polynomial_expansion() {
        let f = FieldAst::parse(QUARTIC).unwrap();
        let p = f.polynomial().unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], c(0.0, 0.0));
        assert_eq!(p[1], c(0.0, 0.0));
        assert_eq!(p[5], c(1.0, 0.0));
        assert!(FieldAst::parse("x*exp(x)").unwrap().polynomial().is_none());
        let g = FieldAst::parse("exp(i*0.5)*(x-1)^2").unwrap();
        assert_eq!(g.polynomial_degree(), Some(2));
    }

    #[test]
    fn canonical_print_round_trip() {
        for s in [
            QUARTIC,
            "x*exp(x)",
            "-x^2 + 3.25*x - i",
            "exp(i*0.7853981633974483)*(x-1)^2*(x+1)^2",
            "1 - (x - 2) - (x*x)/(2*x) + cos(sin(-x))",
            "(x^2)^3 - -x",
            "e^2*pi + 1e-3*x",
        ] {
            let a = FieldAst::parse(s).unwrap();
            let b = FieldAst::parse(&a.to_string()).unwrap();
            assert_eq!(a, b, "{s} -> {a}");
        }
    }

    #[test]
    fn parameter_substitution_is_word_aware() {
        let s = substitute_parameter("exp(i*A)*(x-A)^2 + AB", "A", 0.5);
        assert_eq!(s, "exp(i*(0.5))*(x-(0.5))^2 + AB");
        assert_eq!(substitute_parameter("exp(x)", "e", 1.0), "exp(x)");
        assert_eq!(substitute_parameter("2e3*A", "e", 1.0), "2e3*A");
    }
}
