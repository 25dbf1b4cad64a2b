//! Expansion of polynomial expression trees into coefficient vectors.

use num_complex::Complex64;

use super::node::Node;

/// Coefficients in ascending powers, trailing zeros trimmed.
pub(crate) fn expand(node: &Node) -> Option<Vec<Complex64>> {
    if !node.depends_on_x() {
        let c = node.try_eval(Complex64::new(0.0, 0.0))?;
        return Some(vec![c]);
    }
    let out = match node {
        Node::X => vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        Node::Add(a, b) => combine(&expand(a)?, &expand(b)?, 1.0),
        Node::Sub(a, b) => combine(&expand(a)?, &expand(b)?, -1.0),
        Node::Mul(a, b) => product(&expand(a)?, &expand(b)?),
        Node::Neg(a) => expand(a)?.into_iter().map(|c| -c).collect(),
        Node::Pow(a, n) => {
            let base = expand(a)?;
            let mut acc = vec![Complex64::new(1.0, 0.0)];
            for _ in 0..*n {
                acc = product(&acc, &base);
            }
            acc
        }
        Node::Div(a, b) if !b.depends_on_x() => {
            let d = b.try_eval(Complex64::new(0.0, 0.0))?;
            expand(a)?.into_iter().map(|c| c / d).collect()
        }
        _ => return None,
    };
    Some(trim(out))
}

fn combine(a: &[Complex64], b: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            let x = a.get(k).copied().unwrap_or_default();
            let y = b.get(k).copied().unwrap_or_default();
            x + y * sign
        })
        .collect()
}

fn product(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn trim(mut v: Vec<Complex64>) -> Vec<Complex64> {
    while v.len() > 1 && v.last().is_some_and(|c| c.norm() == 0.0) {
        v.pop();
    }
    v
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}
