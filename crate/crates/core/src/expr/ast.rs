//! Expression tree and the automatic normalization applied by every constructor.
//!
//! Constructors flatten nested sums and products, fold rational constants,
//! collect like terms and like bases, and sort operands by the derived total
//! order on [`Node`]. The result is the "light" canonical form; the heavier
//! rational-function normal form lives in [`crate::expr::simplify`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Build a rational from machine integers.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Elementary functions understood by the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Cot,
    Csc,
    Arctan,
    Arccot,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Csc => "csc",
            Func::Arctan => "arctan",
            Func::Arccot => "arccot",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "cot" => Func::Cot,
            "csc" => Func::Csc,
            "arctan" | "atan" => Func::Arctan,
            "arccot" | "acot" => Func::Arccot,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn is_odd(self) -> bool {
        matches!(
            self,
            Func::Sin | Func::Tan | Func::Cot | Func::Csc | Func::Arctan | Func::Arccot
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Num(Rational),
    Pi,
    Var(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Func(Func, Expr),
}

/// Immutable, cheaply clonable expression handle.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Expr {
    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(r: Rational) -> Expr {
        Expr::wrap(Node::Num(r))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(int(n))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::num(rat(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn pi() -> Expr {
        Expr::wrap(Node::Pi)
    }

    /// Euler's number, stored as `exp(1)`.
    pub fn e() -> Expr {
        Expr::func(Func::Exp, Expr::one())
    }

    pub fn var(name: &str) -> Expr {
        Expr::wrap(Node::Var(Arc::from(name)))
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self.node() {
            Node::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_one())
    }

    pub fn is_integer(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_integer())
    }

    // ----- smart constructors -----

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut constant = Rational::zero();
        let mut collected: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut stack = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.node() {
                Node::Num(r) => constant += r,
                Node::Add(inner) => stack.extend(inner.iter().rev().cloned()),
                _ => {
                    let (c, rest) = t.split_coeff();
                    *collected.entry(rest).or_insert_with(Rational::zero) += c;
                }
            }
        }
        let mut out: Vec<Expr> = Vec::new();
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        for (rest, c) in collected {
            if !c.is_zero() {
                out.push(Expr::scale_term(c, rest));
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort();
                Expr::wrap(Node::Add(out))
            }
        }
    }

    /// Split a non-numeric term into rational coefficient and remainder.
    pub fn split_coeff(&self) -> (Rational, Expr) {
        if let Node::Mul(fs) = self.node() {
            if let Some(c) = fs[0].as_num() {
                let rest: Vec<Expr> = fs[1..].to_vec();
                let rest = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr::wrap(Node::Mul(rest))
                };
                return (c.clone(), rest);
            }
        }
        if let Node::Num(r) = self.node() {
            return (r.clone(), Expr::one());
        }
        (Rational::one(), self.clone())
    }

    fn scale_term(c: Rational, rest: Expr) -> Expr {
        if c.is_one() {
            return rest;
        }
        if rest.is_one() {
            return Expr::num(c);
        }
        let mut fs = vec![Expr::num(c)];
        match rest.node() {
            Node::Mul(inner) => fs.extend(inner.iter().cloned()),
            _ => fs.push(rest),
        }
        Expr::wrap(Node::Mul(fs))
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut coeff = Rational::one();
        let mut exp_args: Vec<Expr> = Vec::new();
        let mut bases: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
        let mut stack = factors;
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Num(r) => coeff *= r,
                Node::Mul(inner) => stack.extend(inner.iter().cloned()),
                Node::Func(Func::Exp, a) => exp_args.push(a.clone()),
                Node::Pow(b, e) => bases.entry(b.clone()).or_default().push(e.clone()),
                _ => bases.entry(f.clone()).or_default().push(Expr::one()),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        let mut out: Vec<Expr> = Vec::new();
        if exp_args.len() == 1 {
            out.push(Expr::wrap(Node::Func(Func::Exp, exp_args.pop().unwrap())));
        } else if !exp_args.is_empty() {
            out.push(Expr::func(Func::Exp, Expr::add(exp_args)));
        }
        for (b, es) in bases {
            out.push(Expr::pow(b, Expr::add(es)));
        }
        // Powers may have produced numbers or products; fold them in.
        let mut flat: Vec<Expr> = Vec::new();
        let mut pending = out;
        while let Some(f) = pending.pop() {
            match f.node() {
                Node::Num(r) => coeff *= r,
                Node::Mul(inner) => pending.extend(inner.iter().cloned()),
                _ => flat.push(f),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        // A second pass is needed when two factors now share a base.
        let mut seen = BTreeSet::new();
        let mut exp_count = 0;
        let mut clash = false;
        for f in &flat {
            let base = match f.node() {
                Node::Pow(b, _) => b.clone(),
                Node::Func(Func::Exp, _) => {
                    exp_count += 1;
                    continue;
                }
                _ => f.clone(),
            };
            if !seen.insert(base) {
                clash = true;
            }
        }
        if clash || exp_count > 1 {
            flat.push(Expr::num(coeff));
            return Expr::mul(flat);
        }
        flat.sort();
        if !coeff.is_one() {
            flat.insert(0, Expr::num(coeff));
        }
        match flat.len() {
            0 => Expr::one(),
            1 => flat.pop().unwrap(),
            _ => Expr::wrap(Node::Mul(flat)),
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        if exponent.is_zero() || base.is_one() {
            return Expr::one();
        }
        if exponent.is_one() {
            return base;
        }
        if let (Some(b), Some(e)) = (base.as_num(), exponent.as_num()) {
            if let Some(v) = numeric_power(b, e) {
                return v;
            }
            return Expr::wrap(Node::Pow(base, exponent));
        }
        if base.is_zero() {
            if exponent.as_num().is_some_and(|e| e.is_positive()) {
                return Expr::zero();
            }
            return Expr::wrap(Node::Pow(base, exponent));
        }
        let integer_exp = exponent.is_integer();
        match base.node() {
            Node::Pow(b0, e0) if integer_exp || b0.is_manifestly_positive() => {
                return Expr::pow(b0.clone(), Expr::mul(vec![e0.clone(), exponent]));
            }
            Node::Mul(fs) => {
                if integer_exp {
                    return Expr::mul(
                        fs.iter()
                            .map(|f| Expr::pow(f.clone(), exponent.clone()))
                            .collect(),
                    );
                }
                if let Some(c) = fs[0].as_num() {
                    if c.is_positive() {
                        let rest = Expr::mul(fs[1..].to_vec());
                        return Expr::mul(vec![
                            Expr::pow(fs[0].clone(), exponent.clone()),
                            Expr::pow(rest, exponent),
                        ]);
                    }
                }
            }
            Node::Func(Func::Exp, a) if integer_exp => {
                return Expr::func(Func::Exp, Expr::mul(vec![a.clone(), exponent]));
            }
            _ => {}
        }
        Expr::wrap(Node::Pow(base, exponent))
    }

    /// Positive for every real value of the variables, judged from the shape alone.
    pub fn is_manifestly_positive(&self) -> bool {
        match self.node() {
            Node::Num(r) => r.is_positive(),
            Node::Pi | Node::Func(Func::Exp, _) => true,
            Node::Add(xs) => {
                xs.iter().all(Expr::is_manifestly_nonnegative) && xs.iter().any(Expr::is_manifestly_positive)
            }
            Node::Mul(xs) => xs.iter().all(Expr::is_manifestly_positive),
            Node::Pow(b, _) => b.is_manifestly_positive(),
            _ => false,
        }
    }

    fn is_manifestly_nonnegative(&self) -> bool {
        match self.node() {
            Node::Pow(_, e) if e.as_num().is_some_and(|r| r.is_integer() && r.to_integer().is_even()) => true,
            Node::Mul(xs) => xs.iter().all(Expr::is_manifestly_nonnegative),
            _ => self.is_manifestly_positive(),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        match f {
            Func::Sqrt => return Expr::pow(arg, Expr::rat(1, 2)),
            Func::Exp => return exp_of(arg),
            Func::Ln => {
                if arg.is_one() {
                    return Expr::zero();
                }
                if let Node::Func(Func::Exp, inner) = arg.node() {
                    return inner.clone();
                }
                return Expr::wrap(Node::Func(f, arg));
            }
            _ => {}
        }
        if f.is_odd() {
            if let Some(pos) = arg.negated_if_negative() {
                return Expr::neg(&Expr::func(f, pos));
            }
        }
        if f == Func::Cos {
            if let Some(pos) = arg.negated_if_negative() {
                return Expr::func(f, pos);
            }
        }
        if arg.is_zero() {
            return match f {
                Func::Cos => Expr::one(),
                Func::Sin | Func::Tan | Func::Arctan => Expr::zero(),
                _ => Expr::wrap(Node::Func(f, arg)),
            };
        }
        if let Some(k) = arg.pi_multiple() {
            if k.is_integer() {
                match f {
                    Func::Sin | Func::Tan => return Expr::zero(),
                    Func::Cos => {
                        let odd = k.to_integer().is_odd();
                        return Expr::int(if odd { -1 } else { 1 });
                    }
                    _ => {}
                }
            }
        }
        match (f, arg.node()) {
            (Func::Tan, Node::Func(Func::Arctan, z)) | (Func::Cot, Node::Func(Func::Arccot, z)) => {
                z.clone()
            }
            (Func::Arctan, Node::Func(Func::Tan, z)) => {
                // Only safe on the principal strip; kept symbolic otherwise.
                Expr::wrap(Node::Func(Func::Arctan, Expr::func(Func::Tan, z.clone())))
            }
            _ => Expr::wrap(Node::Func(f, arg)),
        }
    }

    fn pi_multiple(&self) -> Option<Rational> {
        match self.node() {
            Node::Pi => Some(Rational::one()),
            Node::Mul(fs) if fs.len() == 2 && matches!(fs[1].node(), Node::Pi) => {
                fs[0].as_num().cloned()
            }
            _ => None,
        }
    }

    /// If the expression carries a negative leading coefficient, return its negation.
    pub fn negated_if_negative(&self) -> Option<Expr> {
        match self.node() {
            Node::Num(r) if r.is_negative() => Some(Expr::num(-r)),
            Node::Mul(fs) => match fs[0].as_num() {
                Some(c) if c.is_negative() => Some(Expr::neg(self)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn neg(e: &Expr) -> Expr {
        Expr::mul(vec![Expr::int(-1), e.clone()])
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        Expr::add(vec![a.clone(), Expr::neg(b)])
    }

    pub fn div(a: &Expr, b: &Expr) -> Expr {
        Expr::mul(vec![a.clone(), Expr::recip(b)])
    }

    pub fn recip(e: &Expr) -> Expr {
        Expr::pow(e.clone(), Expr::int(-1))
    }

    pub fn powi(&self, n: i64) -> Expr {
        Expr::pow(self.clone(), Expr::int(n))
    }

    pub fn sqrt(&self) -> Expr {
        Expr::pow(self.clone(), Expr::rat(1, 2))
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        Expr::func(f, arg)
    }

    // ----- queries -----

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Var(v) => {
                out.insert(v.to_string());
            }
            Node::Num(_) | Node::Pi => {}
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Node::Pow(b, e) => {
                b.collect_vars(out);
                e.collect_vars(out);
            }
            Node::Func(_, a) => a.collect_vars(out),
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self.node() {
            Node::Var(v) => &**v == var,
            Node::Num(_) | Node::Pi => false,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().any(|x| x.depends_on(var)),
            Node::Pow(b, e) => b.depends_on(var) || e.depends_on(var),
            Node::Func(_, a) => a.depends_on(var),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Pi | Node::Var(_) => 1,
            Node::Add(xs) | Node::Mul(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, e) => 1 + b.size() + e.size(),
            Node::Func(_, a) => 1 + a.size(),
        }
    }

    /// True when the tree uses an operation with a restricted real domain
    /// (logarithms, fractional powers, inverse trigonometric functions).
    pub fn has_domain_note(&self) -> bool {
        match self.node() {
            Node::Num(_) | Node::Pi | Node::Var(_) => false,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().any(Expr::has_domain_note),
            Node::Pow(b, e) => {
                !e.is_integer() && !b.as_num().is_some_and(|r| r.is_positive())
                    || b.has_domain_note()
                    || e.has_domain_note()
            }
            Node::Func(f, a) => {
                matches!(f, Func::Ln | Func::Sqrt | Func::Arccot) || a.has_domain_note()
            }
        }
    }

    /// Substitute `var := value` and renormalize.
    pub fn subst(&self, var: &str, value: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(var.to_string(), value.clone());
        self.subst_all(&map)
    }

    /// Simultaneous substitution.
    pub fn subst_all(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Var(v) => map.get(&**v).cloned().unwrap_or_else(|| self.clone()),
            Node::Num(_) | Node::Pi => self.clone(),
            Node::Add(xs) => Expr::add(xs.iter().map(|x| x.subst_all(map)).collect()),
            Node::Mul(xs) => Expr::mul(xs.iter().map(|x| x.subst_all(map)).collect()),
            Node::Pow(b, e) => Expr::pow(b.subst_all(map), e.subst_all(map)),
            Node::Func(f, a) => Expr::func(*f, a.subst_all(map)),
        }
    }

    /// Replace every occurrence of the subtree `target` with `with`.
    pub fn replace(&self, target: &Expr, with: &Expr) -> Expr {
        if self == target {
            return with.clone();
        }
        match self.node() {
            Node::Var(_) | Node::Num(_) | Node::Pi => self.clone(),
            Node::Add(xs) => Expr::add(xs.iter().map(|x| x.replace(target, with)).collect()),
            Node::Mul(xs) => Expr::mul(xs.iter().map(|x| x.replace(target, with)).collect()),
            Node::Pow(b, e) => Expr::pow(b.replace(target, with), e.replace(target, with)),
            Node::Func(f, a) => Expr::func(*f, a.replace(target, with)),
        }
    }

    /// Rebuild the tree through the smart constructors.
    pub fn renormalize(&self) -> Expr {
        self.subst_all(&BTreeMap::new())
    }

    /// Visit every subtree, parents before children.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Expr)) {
        visit(self);
        match self.node() {
            Node::Var(_) | Node::Num(_) | Node::Pi => {}
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.walk(visit)),
            Node::Pow(b, e) => {
                b.walk(visit);
                e.walk(visit);
            }
            Node::Func(_, a) => a.walk(visit),
        }
    }

    /// Terms of a sum (a single term otherwise).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(xs) => xs.clone(),
            _ => vec![self.clone()],
        }
    }

    /// Factors of a product (a single factor otherwise).
    pub fn factors(&self) -> Vec<Expr> {
        match self.node() {
            Node::Mul(xs) => xs.clone(),
            _ => vec![self.clone()],
        }
    }
}

/// `exp(arg)` with `exp(ln z) = z` and `exp(c ln z + rest) = z^c exp(rest)`.
fn exp_of(arg: Expr) -> Expr {
    if arg.is_zero() {
        return Expr::one();
    }
    let mut powers = Vec::new();
    let mut rest = Vec::new();
    for t in arg.terms() {
        let (c, core) = t.split_coeff();
        match core.node() {
            Node::Func(Func::Ln, z) => powers.push(Expr::pow(z.clone(), Expr::num(c))),
            _ => rest.push(t),
        }
    }
    if powers.is_empty() {
        return Expr::wrap(Node::Func(Func::Exp, arg));
    }
    let rest = Expr::add(rest);
    if !rest.is_zero() {
        powers.push(Expr::wrap(Node::Func(Func::Exp, rest)));
    }
    Expr::mul(powers)
}

/// Exact value of `b^e` for rationals, extracting perfect powers from radicals.
fn numeric_power(b: &Rational, e: &Rational) -> Option<Expr> {
    if e.is_integer() {
        let n = e.to_integer().to_i64()?;
        if b.is_zero() {
            return if n > 0 { Some(Expr::zero()) } else { None };
        }
        if n.unsigned_abs() > 4096 {
            return None;
        }
        let p = num_traits::pow(b.clone(), n.unsigned_abs() as usize);
        return Some(Expr::num(if n < 0 { p.recip() } else { p }));
    }
    if !b.is_positive() {
        return None;
    }
    let q = e.denom().to_u32()?;
    let p = e.numer().clone();
    // b^(p/q) = b^k * b^(r/q) with 0 < r < q.
    let (k, r) = p.div_mod_floor(&BigInt::from(q));
    let k = k.to_i64()?;
    let r = r.to_u32()?;
    let whole = num_traits::pow(b.clone(), k.unsigned_abs() as usize);
    let whole = if k < 0 { whole.recip() } else { whole };
    // Move the denominator into the numerator: (n/d)^(r/q) = n^(r/q) d^((q-r)/q) / d.
    let n = b.numer().clone();
    let d = b.denom().clone();
    let mut coeff = whole;
    let mut radicals = Vec::new();
    for (base, exp_num, divide) in [(n, r, false), (d, q - r, true)] {
        if divide {
            coeff /= Rational::from_integer(base.clone());
        }
        if exp_num == 0 || exp_num == q || base.is_one() {
            if exp_num == q {
                coeff *= Rational::from_integer(base.clone());
            }
            continue;
        }
        let radicand = num_traits::pow(base, exp_num as usize);
        let (outside, inside) = extract_root(&radicand, q);
        coeff *= Rational::from_integer(outside);
        if !inside.is_one() {
            radicals.push((inside, q));
        }
    }
    let mut factors = vec![Expr::num(coeff)];
    for (inside, q) in radicals {
        factors.push(Expr::wrap(Node::Pow(
            Expr::num(Rational::from_integer(inside)),
            Expr::num(rat(1, q as i64)),
        )));
    }
    if factors.len() == 1 {
        return factors.pop();
    }
    factors.sort();
    let coeff = factors.remove(0);
    if coeff.is_one() && factors.len() == 1 {
        return factors.pop();
    }
    let mut out = vec![coeff];
    out.extend(factors);
    Some(Expr::wrap(Node::Mul(out)))
}

/// Write `m = outside^q * inside` with small-prime trial division.
fn extract_root(m: &BigInt, q: u32) -> (BigInt, BigInt) {
    let mut outside = BigInt::one();
    let mut inside = m.clone();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(2000);
    while p <= limit {
        let pq = num_traits::pow(p.clone(), q as usize);
        while (&inside % &pq).is_zero() {
            inside /= &pq;
            outside *= &p;
        }
        p += 1;
    }
    (outside, inside)
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(r: Rational) -> Expr {
        Expr::num(r)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $body(&self, &rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $body(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $body(&self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $body(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a: &Expr, b: &Expr| Expr::add(vec![a.clone(), b.clone()]));
binop!(Sub, sub, |a: &Expr, b: &Expr| Expr::sub(a, b));
binop!(Mul, mul, |a: &Expr, b: &Expr| Expr::mul(vec![a.clone(), b.clone()]));
binop!(Div, div, |a: &Expr, b: &Expr| Expr::div(a, b));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
