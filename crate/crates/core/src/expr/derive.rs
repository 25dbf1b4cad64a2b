//! Symbolic differentiation with neutral-element cleanup only.

use super::node::Node;

fn is_num(n: &Node, v: f64) -> bool {
    matches!(n, Node::Num(w) if *w == v)
}

pub(crate) fn add(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) {
        return b;
    }
    if is_num(&b, 0.0) {
        return a;
    }
    if let Node::Neg(inner) = b {
        return sub(a, *inner);
    }
    Node::Add(Box::new(a), Box::new(b))
}

pub(crate) fn sub(a: Node, b: Node) -> Node {
    if is_num(&b, 0.0) {
        return a;
    }
    if is_num(&a, 0.0) {
        return neg(b);
    }
    Node::Sub(Box::new(a), Box::new(b))
}

pub(crate) fn mul(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        return Node::Num(0.0);
    }
    if is_num(&a, 1.0) {
        return b;
    }
    if is_num(&b, 1.0) {
        return a;
    }
    match (a, b) {
        (Node::Neg(a), Node::Neg(b)) => mul(*a, *b),
        (Node::Neg(a), b) => neg(mul(*a, b)),
        (a, Node::Neg(b)) => neg(mul(a, *b)),
        (a, b) => Node::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn neg(a: Node) -> Node {
    match a {
        Node::Num(v) if v == 0.0 => Node::Num(0.0),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn pow(a: Node, n: u32) -> Node {
    match n {
        0 => Node::Num(1.0),
        1 => a,
        _ => Node::Pow(Box::new(a), n),
    }
}

fn div(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) {
        return Node::Num(0.0);
    }
    if is_num(&b, 1.0) {
        return a;
    }
    Node::Div(Box::new(a), Box::new(b))
}

pub(crate) fn derivative(node: &Node) -> Node {
    match node {
        Node::Num(_) | Node::ImagUnit | Node::Pi | Node::Euler => Node::Num(0.0),
        Node::X => Node::Num(1.0),
        Node::Add(a, b) => add(derivative(a), derivative(b)),
        Node::Sub(a, b) => sub(derivative(a), derivative(b)),
        Node::Mul(a, b) => add(
            mul(derivative(a), (**b).clone()),
            mul((**a).clone(), derivative(b)),
        ),
        Node::Div(a, b) => div(
            sub(
                mul(derivative(a), (**b).clone()),
                mul((**a).clone(), derivative(b)),
            ),
            pow((**b).clone(), 2),
        ),
        Node::Neg(a) => neg(derivative(a)),
        Node::Pow(a, n) => match n {
            0 => Node::Num(0.0),
            _ => mul(
                mul(Node::Num(f64::from(*n)), pow((**a).clone(), n - 1)),
                derivative(a),
            ),
        },
        Node::Exp(a) => mul(node.clone(), derivative(a)),
        Node::Sin(a) => mul(Node::Cos(a.clone()), derivative(a)),
        Node::Cos(a) => neg(mul(Node::Sin(a.clone()), derivative(a))),
    }
}
