//! Table-driven antiderivatives.
//!
//! Supported shapes: linearity, powers/exponentials/trigonometric functions
//! and logarithms of linear arguments, rational functions whose denominator
//! splits into rational linear factors and at most one quadratic, tabular
//! integration by parts, and substitution of a subtree whose derivative
//! divides the integrand. Every result is checked by differentiation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::ast::{Expr, Func, Node, Rational};
use super::diff::differentiate;
use super::equiv::Oracle;
use super::simplify::{fraction, simplify};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("integrand is outside the pattern table")]
pub struct NotIntegrable;

const MAX_DEPTH: usize = 7;
const MAX_SUBST_DEPTH: usize = 2;
const MAX_CANDIDATES: usize = 24;
const SUBST_VAR: &str = "_t";

/// Antiderivative of `e` with respect to `var`, certified by differentiation.
pub fn integrate_pattern(e: &Expr, var: &str) -> Result<Expr, NotIntegrable> {
    let it = Integrator { var };
    let f = it.integrate(e, 0, 0)?;
    let check = Oracle::new(1e-7, 20, 11);
    match check.equivalent(&differentiate(&f, var), e) {
        Ok(true) => Ok(f),
        _ => Err(NotIntegrable),
    }
}

struct Integrator<'a> {
    var: &'a str,
}

impl Integrator<'_> {
    fn x(&self) -> Expr {
        Expr::var(self.var)
    }

    fn integrate(&self, e: &Expr, depth: usize, subst: usize) -> Result<Expr, NotIntegrable> {
        if depth > MAX_DEPTH {
            return Err(NotIntegrable);
        }
        if !e.depends_on(self.var) {
            return Ok(e * &self.x());
        }
        if let Ok(f) = self.direct(e, depth, subst) {
            return Ok(f);
        }
        let s = simplify(e);
        if &s != e {
            if let Ok(f) = self.direct(&s, depth, subst) {
                return Ok(f);
            }
        }
        if let Ok(f) = self.rational(&s) {
            return Ok(f);
        }
        if let Ok(f) = self.by_parts(&s, depth, subst) {
            return Ok(f);
        }
        if subst < MAX_SUBST_DEPTH {
            for candidate in self.candidates(e, &s) {
                if let Ok(f) = self.substitute(&s, &candidate, depth, subst) {
                    return Ok(f);
                }
            }
        }
        Err(NotIntegrable)
    }

    /// Linearity and the single-function table.
    fn direct(&self, e: &Expr, depth: usize, subst: usize) -> Result<Expr, NotIntegrable> {
        match e.node() {
            Node::Add(ts) => {
                let parts: Result<Vec<Expr>, _> =
                    ts.iter().map(|t| self.integrate(t, depth + 1, subst)).collect();
                Ok(Expr::add(parts?))
            }
            Node::Mul(fs) => {
                let (consts, deps): (Vec<Expr>, Vec<Expr>) =
                    fs.iter().cloned().partition(|f| !f.depends_on(self.var));
                if consts.is_empty() {
                    return self.table(e);
                }
                let inner = Expr::mul(deps);
                let f = self.integrate(&inner, depth + 1, subst)?;
                Ok(Expr::mul(consts) * f)
            }
            _ => self.table(e),
        }
    }

    /// `u = a x + b` with `a` free of the variable.
    fn linear(&self, u: &Expr) -> Option<(Expr, Expr)> {
        let a = simplify(&differentiate(u, self.var));
        if a.is_zero() || a.depends_on(self.var) {
            return None;
        }
        let b = simplify(&(u - &(&a * &self.x())));
        if b.depends_on(self.var) {
            return None;
        }
        Some((a, b))
    }

    fn table(&self, e: &Expr) -> Result<Expr, NotIntegrable> {
        let x = self.x();
        match e.node() {
            Node::Var(_) => Ok(x.powi(2) / Expr::int(2)),
            Node::Pow(base, n) if !n.depends_on(self.var) => {
                let (a, _) = self.linear(base).ok_or(NotIntegrable)?;
                if n.as_num().is_some_and(|r| *r == -Rational::one()) {
                    return Ok(Expr::func(Func::Ln, base.clone()) / a);
                }
                let n1 = n + &Expr::one();
                Ok(Expr::pow(base.clone(), n1.clone()) / (a * n1))
            }
            Node::Pow(base, u) if !base.depends_on(self.var) => {
                let (a, _) = self.linear(u).ok_or(NotIntegrable)?;
                Ok(e / &(a * Expr::func(Func::Ln, base.clone())))
            }
            Node::Func(f, u) => {
                let (a, _) = self.linear(u).ok_or(NotIntegrable)?;
                let g = |h: Func| Expr::func(h, u.clone());
                let antiderivative = match f {
                    Func::Exp => e.clone(),
                    Func::Sin => -g(Func::Cos),
                    Func::Cos => g(Func::Sin),
                    Func::Tan => -Expr::func(Func::Ln, g(Func::Cos)),
                    Func::Cot => Expr::func(Func::Ln, g(Func::Sin)),
                    Func::Ln => u * &g(Func::Ln) - u.clone(),
                    Func::Arctan => {
                        u * &g(Func::Arctan)
                            - Expr::func(Func::Ln, Expr::one() + u.powi(2)) / Expr::int(2)
                    }
                    _ => return Err(NotIntegrable),
                };
                Ok(antiderivative / a)
            }
            _ => Err(NotIntegrable),
        }
    }

    // ----- rational functions -----

    fn rational(&self, e: &Expr) -> Result<Expr, NotIntegrable> {
        let (num, den) = fraction(e);
        let num = coefficients_in(&num, self.var).ok_or(NotIntegrable)?;
        let den = coefficients_in(&den, self.var).ok_or(NotIntegrable)?;
        let den: Vec<Rational> =
            den.iter().map(|c| c.as_num().cloned().ok_or(NotIntegrable)).collect::<Result<_, _>>()?;
        if den.len() <= 1 {
            return Err(NotIntegrable);
        }
        // Make the denominator monic.
        let lead = den.last().cloned().ok_or(NotIntegrable)?;
        let den: Vec<Rational> = den.iter().map(|c| c / &lead).collect();
        let inv_lead = Expr::num(lead.recip());
        let num: Vec<Expr> = num.iter().map(|c| simplify(&(c * &inv_lead))).collect();
        let (quotient, remainder) = divide(&num, &den);

        let x = self.x();
        let mut pieces: Vec<Expr> = Vec::new();
        for (k, c) in quotient.iter().enumerate() {
            let k1 = Expr::int(k as i64 + 1);
            pieces.push(c * &x.powi(k as i64 + 1) / k1);
        }
        if remainder.iter().all(Expr::is_zero) {
            return Ok(Expr::add(pieces));
        }

        let (roots, rest) = rational_roots(&den);
        if rest.len() > 3 {
            return Err(NotIntegrable);
        }
        // Basis of partial-fraction numerators, expressed as polynomials
        // multiplying the unknown coefficients.
        let n = den.len() - 1;
        let mut basis: Vec<Vec<Rational>> = Vec::new();
        let mut shapes: Vec<Shape> = Vec::new();
        for (r, m) in &roots {
            for k in 1..=*m {
                let mut q = den.clone();
                for _ in 0..k {
                    q = deflate(&q, r);
                }
                basis.push(pad(&q, n));
                shapes.push(Shape::Linear { root: r.clone(), power: k });
            }
        }
        if rest.len() == 3 {
            let cofactor = divide_exact(&den, &rest);
            basis.push(pad(&cofactor, n));
            shapes.push(Shape::QuadraticConst);
            let mut shifted = vec![Rational::zero()];
            shifted.extend(cofactor.iter().cloned());
            basis.push(pad(&shifted, n));
            shapes.push(Shape::QuadraticLinear);
        }
        if basis.len() != n {
            return Err(NotIntegrable);
        }
        let m = Matrix::from_columns(&basis);
        let inv = m.inverse().ok_or(NotIntegrable)?;
        let rhs: Vec<Expr> = (0..n).map(|i| remainder.get(i).cloned().unwrap_or_else(Expr::zero)).collect();
        let coeffs: Vec<Expr> = (0..n)
            .map(|i| {
                simplify(&Expr::add(
                    (0..n).map(|j| Expr::num(inv[(i, j)].clone()) * rhs[j].clone()).collect(),
                ))
            })
            .collect();

        let mut quad_const = Expr::zero();
        let mut quad_linear = Expr::zero();
        for (shape, c) in shapes.iter().zip(coeffs) {
            match shape {
                Shape::Linear { root, power } => {
                    let lin = &x - &Expr::num(root.clone());
                    if *power == 1 {
                        pieces.push(c * Expr::func(Func::Ln, lin));
                    } else {
                        let k = *power as i64 - 1;
                        pieces.push(-(c * lin.powi(-k)) / Expr::int(k));
                    }
                }
                Shape::QuadraticConst => quad_const = c,
                Shape::QuadraticLinear => quad_linear = c,
            }
        }
        if rest.len() == 3 {
            pieces.push(quadratic_piece(&x, &rest, &quad_linear, &quad_const));
        }
        Ok(Expr::add(pieces))
    }

    // ----- integration by parts -----

    fn by_parts(&self, e: &Expr, depth: usize, subst: usize) -> Result<Expr, NotIntegrable> {
        let mut consts = Vec::new();
        let mut trans: Option<Expr> = None;
        let mut poly = Vec::new();
        for f in e.factors() {
            if !f.depends_on(self.var) {
                consts.push(f);
                continue;
            }
            let is_transcendental = matches!(
                f.node(),
                Node::Func(Func::Exp | Func::Sin | Func::Cos | Func::Ln | Func::Arctan, _)
            ) || matches!(f.node(), Node::Pow(b, _) if !b.depends_on(self.var));
            if is_transcendental && trans.is_none() {
                trans = Some(f);
            } else {
                poly.push(f);
            }
        }
        let g = trans.ok_or(NotIntegrable)?;
        let p = simplify(&Expr::mul(poly));
        let coeffs = coefficients_in(&p, self.var).ok_or(NotIntegrable)?;
        if coeffs.len() < 2 {
            return Err(NotIntegrable);
        }
        let c = Expr::mul(consts);
        match g.node() {
            Node::Func(Func::Ln | Func::Arctan, _) => {
                let q = self.integrate(&p, depth + 1, subst)?;
                let rest = simplify(&(&q * &differentiate(&g, self.var)));
                let r = self.integrate(&rest, depth + 1, subst)?;
                Ok(c * (q * g - r))
            }
            _ => {
                let mut total = Vec::new();
                let mut deriv = p.clone();
                let mut anti = g.clone();
                let mut sign = Expr::one();
                for _ in 0..coeffs.len() {
                    anti = self.table(&anti).or_else(|_| {
                        let (k, core) = split_const(&anti, self.var);
                        self.table(&core).map(|a| k * a)
                    })?;
                    total.push(&sign * &deriv * anti.clone());
                    deriv = simplify(&differentiate(&deriv, self.var));
                    sign = -sign;
                    if deriv.is_zero() {
                        break;
                    }
                }
                Ok(c * Expr::add(total))
            }
        }
    }

    // ----- substitution -----

    fn candidates(&self, e: &Expr, s: &Expr) -> Vec<Expr> {
        let mut out: Vec<Expr> = Vec::new();
        let x = self.x();
        let mut push = |c: &Expr| {
            if c.depends_on(self.var) && *c != x && !out.contains(c) {
                out.push(c.clone());
            }
        };
        for root in [e, s] {
            root.walk(&mut |n| match n.node() {
                Node::Func(_, a) => {
                    push(a);
                    push(n);
                }
                Node::Pow(b, k) => {
                    push(b);
                    if !k.is_integer() {
                        push(n);
                    }
                    push(k);
                }
                _ => {}
            });
        }
        out.truncate(MAX_CANDIDATES);
        out
    }

    fn substitute(
        &self,
        e: &Expr,
        candidate: &Expr,
        depth: usize,
        subst: usize,
    ) -> Result<Expr, NotIntegrable> {
        let d = simplify(&differentiate(candidate, self.var));
        if d.is_zero() {
            return Err(NotIntegrable);
        }
        let q = simplify(&(e / &d));
        let t = Expr::var(SUBST_VAR);
        let r = replace_subtree(&q, candidate, &t);
        if r.depends_on(self.var) {
            return Err(NotIntegrable);
        }
        let inner = Integrator { var: SUBST_VAR };
        let f = inner.integrate(&r, depth + 1, subst + 1)?;
        Ok(f.subst(SUBST_VAR, candidate))
    }
}

enum Shape {
    Linear { root: Rational, power: usize },
    QuadraticConst,
    QuadraticLinear,
}

/// Split off factors free of `var`.
fn split_const(e: &Expr, var: &str) -> (Expr, Expr) {
    let (c, d): (Vec<Expr>, Vec<Expr>) = e.factors().into_iter().partition(|f| !f.depends_on(var));
    (Expr::mul(c), Expr::mul(d))
}

/// Structural replacement that also rewrites `exp(k w)` as `t^k` when the
/// target is `exp(w)`.
fn replace_subtree(e: &Expr, target: &Expr, t: &Expr) -> Expr {
    if e == target {
        return t.clone();
    }
    if let (Node::Func(Func::Exp, w), Node::Func(Func::Exp, arg)) = (target.node(), e.node()) {
        let ratio = simplify(&(arg / w));
        if let Some(k) = ratio.as_num() {
            return Expr::pow(t.clone(), Expr::num(k.clone()));
        }
    }
    match e.node() {
        Node::Var(_) | Node::Num(_) | Node::Pi => e.clone(),
        Node::Add(xs) => Expr::add(xs.iter().map(|x| replace_subtree(x, target, t)).collect()),
        Node::Mul(xs) => Expr::mul(xs.iter().map(|x| replace_subtree(x, target, t)).collect()),
        Node::Pow(b, k) => Expr::pow(replace_subtree(b, target, t), replace_subtree(k, target, t)),
        Node::Func(f, a) => Expr::func(*f, replace_subtree(a, target, t)),
    }
}

/// Coefficients of `e` as a polynomial in `var`, lowest degree first.
pub fn coefficients_in(e: &Expr, var: &str) -> Option<Vec<Expr>> {
    let mut coeffs: Vec<Vec<Expr>> = Vec::new();
    for term in e.terms() {
        let mut degree = 0usize;
        let mut rest = Vec::new();
        for f in term.factors() {
            match f.node() {
                Node::Var(v) if &**v == var => degree += 1,
                Node::Pow(b, k) if b.as_var() == Some(var) => {
                    let k = k.as_num().filter(|r| r.is_integer() && !r.is_negative())?;
                    degree += k.to_integer().to_usize()?;
                }
                _ if f.depends_on(var) => return None,
                _ => rest.push(f),
            }
        }
        if coeffs.len() <= degree {
            coeffs.resize(degree + 1, Vec::new());
        }
        coeffs[degree].push(Expr::mul(rest));
    }
    let mut out: Vec<Expr> = coeffs.into_iter().map(|ts| simplify(&Expr::add(ts))).collect();
    while out.len() > 1 && out.last().is_some_and(Expr::is_zero) {
        out.pop();
    }
    Some(out)
}

/// Divide an `Expr`-coefficient polynomial by a monic rational one.
fn divide(num: &[Expr], den: &[Rational]) -> (Vec<Expr>, Vec<Expr>) {
    let dd = den.len() - 1;
    let mut r: Vec<Expr> = num.to_vec();
    if r.len() <= dd {
        return (Vec::new(), r);
    }
    let mut q = vec![Expr::zero(); r.len() - dd];
    for k in (0..q.len()).rev() {
        let c = r[k + dd].clone();
        q[k] = c.clone();
        for (j, dj) in den.iter().enumerate() {
            r[k + j] = simplify(&(&r[k + j] - &(&c * &Expr::num(dj.clone()))));
        }
    }
    r.truncate(dd);
    (q, r)
}

fn pad(p: &[Rational], n: usize) -> Vec<Rational> {
    let mut v = p.to_vec();
    v.resize(n, Rational::zero());
    v
}

fn eval_poly(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

/// Divide by `(x - r)`, assuming `r` is a root.
fn deflate(p: &[Rational], r: &Rational) -> Vec<Rational> {
    let n = p.len() - 1;
    let mut q = vec![Rational::zero(); n];
    let mut carry = Rational::zero();
    for k in (0..n).rev() {
        carry = &p[k + 1] + &carry * r;
        q[k] = carry.clone();
    }
    q
}

fn divide_exact(p: &[Rational], d: &[Rational]) -> Vec<Rational> {
    let dd = d.len() - 1;
    let mut r = p.to_vec();
    let mut q = vec![Rational::zero(); p.len() - dd];
    let lead = d[dd].clone();
    for k in (0..q.len()).rev() {
        let c = &r[k + dd] / &lead;
        for (j, dj) in d.iter().enumerate() {
            r[k + j] -= &c * dj;
        }
        q[k] = c;
    }
    q
}

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs();
    let small = n.to_u64()?;
    if small > 1_000_000_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= small {
        if small % d == 0 {
            out.push(BigInt::from(d));
            if d * d != small {
                out.push(BigInt::from(small / d));
            }
        }
        d += 1;
        if d > 2_000_000 {
            return None;
        }
    }
    Some(out)
}

/// Rational roots with multiplicity and the remaining cofactor.
pub fn rational_roots(p: &[Rational]) -> (Vec<(Rational, usize)>, Vec<Rational>) {
    let mut p = p.to_vec();
    let mut roots: Vec<(Rational, usize)> = Vec::new();
    let push = |roots: &mut Vec<(Rational, usize)>, r: Rational| {
        if let Some(entry) = roots.iter_mut().find(|(q, _)| *q == r) {
            entry.1 += 1;
        } else {
            roots.push((r, 1));
        }
    };
    while p.len() > 1 && p[0].is_zero() {
        p.remove(0);
        push(&mut roots, Rational::zero());
    }
    loop {
        if p.len() <= 1 {
            break;
        }
        let lcm = p.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = p.iter().map(|c| (c * Rational::from_integer(lcm.clone())).to_integer()).collect();
        let (Some(a0), Some(an)) = (divisors(&ints[0]), divisors(&ints[ints.len() - 1])) else {
            break;
        };
        let mut found = None;
        'search: for num in &a0 {
            for den in &an {
                for sign in [1, -1] {
                    let r = Rational::new(num * sign, den.clone());
                    if eval_poly(&p, &r).is_zero() {
                        found = Some(r);
                        break 'search;
                    }
                }
            }
        }
        match found {
            Some(r) => {
                p = deflate(&p, &r);
                push(&mut roots, r);
            }
            None => break,
        }
    }
    roots.sort_by(|a, b| a.0.cmp(&b.0));
    (roots, p)
}

/// `∫ (b x + c) / (x^2 + p x + q) dx` for a quadratic without rational roots.
fn quadratic_piece(x: &Expr, quad: &[Rational], b: &Expr, c: &Expr) -> Expr {
    let lead = &quad[2];
    let p = &quad[1] / lead;
    let q = &quad[0] / lead;
    let scale = Expr::num(lead.recip());
    let half_p = &p / Rational::from_integer(2.into());
    let delta = &q - &half_p * &half_p;
    let monic = x.powi(2) + Expr::num(p.clone()) * x.clone() + Expr::num(q.clone());
    let shifted = x + &Expr::num(half_p.clone());
    let log_part = b / &Expr::int(2) * Expr::func(Func::Ln, monic);
    let rest = simplify(&(c - &(b * &Expr::num(half_p))));
    let inner = if delta.is_positive() {
        let root = Expr::num(delta).sqrt();
        Expr::func(Func::Arctan, &shifted / &root) / root
    } else {
        let root = Expr::num(-delta).sqrt();
        let ratio = (&shifted - &root) / (&shifted + &root);
        Expr::func(Func::Ln, ratio) / (Expr::int(2) * root)
    };
    scale * (log_part + rest * inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn int(s: &str) -> Result<Expr, NotIntegrable> {
        integrate_pattern(&p(s), "x")
    }

    #[test]
    fn power_rule() {
        assert_eq!(int("x").unwrap(), p("x^2/2"));
    }

    #[test]
    fn exponential_times_polynomial() {
        let f = int("exp(x)*x").unwrap();
        assert_eq!(simplify(&f), simplify(&p("exp(x)*(x-1)")));
    }

    #[test]
    fn rational_partial_fractions() {
        for s in ["1/(x^2-1)", "x/(x^2+1)", "(x^3+1)/(x^2+2*x+5)", "1/(x*(x+1)^2)", "(x-4)/(x^2+1)"] {
            assert!(int(s).is_ok(), "{s}");
        }
    }

    #[test]
    fn substitution_through_arctangent() {
        assert!(int("exp(-4*arctan(x))/(x^2+1)").is_ok());
        assert!(int("x*exp(x^2)").is_ok());
        assert!(int("cos(x)*sin(x)^3").is_ok());
    }

    #[test]
    fn outside_the_table() {
        assert_eq!(int("exp(arctan(x))/(x^2+1)^(3/2)"), Err(NotIntegrable));
        assert_eq!(int("exp(x^2)"), Err(NotIntegrable));
    }

    #[test]
    fn roots_with_multiplicity() {
        use crate::expr::ast::int as i;
        // (x-1)^2 (x+2) = x^3 - 3x + 2
        let (roots, rest) = rational_roots(&[i(2), i(-3), i(0), i(1)]);
        assert_eq!(roots, vec![(i(-2), 1), (i(1), 2)]);
        assert_eq!(rest, vec![i(1)]);
    }
}
