//! Rendering back to the parser's grammar with minimal parentheses.

use std::fmt;

use num_traits::{One, Signed};

use super::ast::{Expr, Node, Rational};

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self).0)
    }
}

/// Rendered text plus the precedence of its outermost operator.
fn render(e: &Expr) -> (String, u8) {
    match e.node() {
        Node::Num(r) => render_rational(r),
        Node::Pi => ("pi".into(), PREC_ATOM),
        Node::Var(v) => (v.to_string(), PREC_ATOM),
        Node::Func(func, a) => (format!("{}({})", func.name(), render(a).0), PREC_ATOM),
        Node::Add(ts) => {
            let mut out = String::new();
            for (i, t) in ts.iter().enumerate() {
                let (neg, body) = match t.negated_if_negative() {
                    Some(p) => (true, p),
                    None => (false, t.clone()),
                };
                let text = wrap(&body, PREC_PRODUCT);
                match (i, neg) {
                    (0, false) => out.push_str(&text),
                    (0, true) => {
                        out.push('-');
                        out.push_str(&text);
                    }
                    (_, false) => {
                        out.push_str(" + ");
                        out.push_str(&text);
                    }
                    (_, true) => {
                        out.push_str(" - ");
                        out.push_str(&text);
                    }
                }
            }
            (out, PREC_SUM)
        }
        Node::Mul(_) => render_product(e),
        Node::Pow(b, x) => {
            if let Some(r) = x.as_num() {
                if r.is_negative() {
                    return render_product(e);
                }
                if *r == Rational::new(1.into(), 2.into()) {
                    return (format!("sqrt({})", render(b).0), PREC_ATOM);
                }
            }
            let base = wrap(b, PREC_ATOM);
            let exponent = wrap(x, PREC_ATOM);
            (format!("{base}^{exponent}"), PREC_POWER)
        }
    }
}

fn render_rational(r: &Rational) -> (String, u8) {
    if r.is_integer() {
        let prec = if r.is_negative() { PREC_UNARY } else { PREC_ATOM };
        (r.numer().to_string(), prec)
    } else {
        (format!("{}/{}", r.numer(), r.denom()), PREC_PRODUCT)
    }
}

fn wrap(e: &Expr, min_prec: u8) -> String {
    let (text, prec) = render(e);
    if prec < min_prec {
        format!("({text})")
    } else {
        text
    }
}

/// Split a product into numerator and denominator factor lists.
fn render_product(e: &Expr) -> (String, u8) {
    let (coeff, rest) = e.split_coeff();
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for f in rest.factors() {
        if f.is_one() {
            continue;
        }
        match f.node() {
            Node::Pow(b, x) if x.as_num().is_some_and(|r| r.is_negative()) => {
                den.push(Expr::pow(b.clone(), -x));
            }
            _ => num.push(f),
        }
    }
    let negative = coeff.is_negative();
    let coeff = coeff.abs();
    let numer_c = Rational::from_integer(coeff.numer().clone());
    let denom_c = Rational::from_integer(coeff.denom().clone());
    if !numer_c.is_one() || num.is_empty() {
        num.insert(0, Expr::num(numer_c));
    }
    if !denom_c.is_one() {
        den.insert(0, Expr::num(denom_c));
    }
    let join = |fs: &[Expr]| -> String {
        fs.iter().map(|f| wrap(f, PREC_POWER)).collect::<Vec<_>>().join("*")
    };
    let mut text = join(&num);
    if !den.is_empty() {
        let d = if den.len() == 1 { wrap(&den[0], PREC_POWER) } else { format!("({})", join(&den)) };
        text = format!("{text}/{d}");
    }
    if negative {
        (format!("-{text}"), PREC_UNARY)
    } else {
        (text, PREC_PRODUCT)
    }
}
