//! Sparse multivariate polynomials over the rationals with exact division
//! and a recursive primitive-PRS gcd. Variables are small integer indices.

use std::cell::Cell;
use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::ast::Rational;

/// Exponent vector with trailing zeros trimmed, so the derived `Ord`
/// is pure lexicographic order with index 0 most significant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn one() -> Mono {
        Mono(Vec::new())
    }

    pub fn var(i: usize, e: u32) -> Mono {
        let mut v = vec![0; i + 1];
        v[i] = e;
        Mono(v).trimmed()
    }

    fn trimmed(mut self) -> Mono {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn exp(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let n = self.0.len().max(other.0.len());
        Mono((0..n).map(|i| self.exp(i) + other.exp(i)).collect())
    }

    pub fn divides(&self, other: &Mono) -> bool {
        (0..self.0.len()).all(|i| self.exp(i) <= other.exp(i))
    }

    pub fn div(&self, other: &Mono) -> Mono {
        let n = self.0.len();
        Mono((0..n).map(|i| self.exp(i) - other.exp(i)).collect()).trimmed()
    }

    pub fn with_exp(&self, i: usize, e: u32) -> Mono {
        let mut v = self.0.clone();
        if v.len() <= i {
            v.resize(i + 1, 0);
        }
        v[i] = e;
        Mono(v).trimmed()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TooLarge;

pub const MAX_TERMS: usize = 6000;
const MAX_COEFFICIENT_BITS: u64 = 512;

thread_local! {
    static FUEL: Cell<Option<u64>> = const { Cell::new(None) };
}

/// Run `f` with at most `budget` units of coefficient arithmetic available
/// to polynomial operations; exhausting it makes them return `TooLarge`.
/// Nested calls share the outermost budget.
pub fn with_budget<R>(budget: u64, f: impl FnOnce() -> R) -> R {
    if FUEL.with(|c| c.get().is_some()) {
        return f();
    }
    let saved = FUEL.with(|c| c.replace(Some(budget)));
    let out = f();
    FUEL.with(|c| c.set(saved));
    out
}

fn charge(units: usize) -> Result<(), TooLarge> {
    FUEL.with(|c| match c.get() {
        None => Ok(()),
        Some(left) => {
            let units = units as u64;
            if units > left {
                c.set(Some(0));
                Err(TooLarge)
            } else {
                c.set(Some(left - units));
                Ok(())
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Mono, Rational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    pub fn monomial(m: Mono, c: Rational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn var(i: usize) -> Poly {
        Poly::monomial(Mono::var(i, 1), Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Mono::is_one)
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        if self.is_constant() {
            return self.terms.get(&Mono::one()).cloned();
        }
        None
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> Option<(&Mono, &Rational)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    fn coefficient_bits(&self) -> u64 {
        self.terms.values().map(|c| c.numer().bits() + c.denom().bits()).max().unwrap_or(0)
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly, TooLarge> {
        let bits = self.coefficient_bits() + other.coefficient_bits();
        if bits > MAX_COEFFICIENT_BITS {
            return Err(TooLarge);
        }
        let width = 1 + bits / 32;
        charge(self.len().saturating_mul(other.len()).saturating_mul(width as usize))?;
        if self.len().saturating_mul(other.len()) > MAX_TERMS * 8 {
            return Err(TooLarge);
        }
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        if out.len() > MAX_TERMS {
            return Err(TooLarge);
        }
        Ok(out)
    }

    pub fn mul_mono(&self, m: &Mono, c: &Rational) -> Poly {
        Poly { terms: self.terms.iter().map(|(k, v)| (k.mul(m), v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Result<Poly, TooLarge> {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn degree(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(var)).max().unwrap_or(0)
    }

    pub fn has_var(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m.exp(var) > 0)
    }

    pub fn vars(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 && !out.contains(&i) {
                    out.push(i);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Coefficients with respect to `var`, indexed by degree.
    pub fn coefficients(&self, var: usize) -> Vec<Poly> {
        let d = self.degree(var) as usize;
        let mut out = vec![Poly::zero(); d + 1];
        for (m, c) in &self.terms {
            let k = m.exp(var) as usize;
            out[k].add_term(m.with_exp(var, 0), c.clone());
        }
        out
    }

    pub fn leading_coeff_in(&self, var: usize) -> Poly {
        self.coefficients(var).pop().unwrap_or_default()
    }

    /// Exact quotient, or `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        let (lm, lc) = divisor.leading()?;
        if divisor.len() == 1 {
            let mut out = Poly::zero();
            for (m, c) in &self.terms {
                if !lm.divides(m) {
                    return None;
                }
                out.terms.insert(m.div(lm), c / lc);
            }
            return Some(out);
        }
        let mut q = Poly::zero();
        let mut r = self.clone();
        let mut steps = 0usize;
        while let Some((rm, rc)) = r.leading() {
            if !lm.divides(rm) {
                return None;
            }
            steps += 1;
            if steps > MAX_TERMS * 4 || r.len() > MAX_TERMS * 2 {
                return None;
            }
            charge(r.len() + divisor.len()).ok()?;
            let m = rm.div(lm);
            let c = rc / lc;
            q.add_term(m.clone(), c.clone());
            r = r.sub(&divisor.mul_mono(&m, &c));
        }
        Some(q)
    }

    /// Make the lexicographically leading coefficient equal to one.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) => {
                let k = c.recip();
                self.scale(&k)
            }
            None => Poly::zero(),
        }
    }

    pub fn content_in(&self, var: usize) -> Result<Poly, TooLarge> {
        let mut g = Poly::zero();
        for c in self.coefficients(var) {
            if c.is_zero() {
                continue;
            }
            g = gcd(&g, &c)?;
            if g.is_constant() {
                return Ok(Poly::one());
            }
        }
        Ok(g)
    }

    pub fn primitive_part_in(&self, var: usize) -> Result<Poly, TooLarge> {
        let c = self.content_in(var)?;
        self.div_exact(&c).ok_or(TooLarge)
    }

    /// Pseudo-remainder of `self` by `other` as polynomials in `var`.
    pub fn pseudo_rem(&self, other: &Poly, var: usize) -> Result<Poly, TooLarge> {
        let dq = other.degree(var);
        let lcq = other.leading_coeff_in(var);
        let mut r = self.clone();
        let mut guard = 0;
        while !r.is_zero() && r.degree(var) >= dq {
            let dr = r.degree(var);
            let lcr = r.leading_coeff_in(var);
            let shift = Poly::monomial(Mono::var(var, dr - dq), Rational::one());
            r = r.mul(&lcq)?.sub(&lcr.mul(&shift)?.mul(other)?);
            guard += 1;
            if guard > 200 {
                return Err(TooLarge);
            }
        }
        Ok(r)
    }
}

/// Greatest common divisor, normalized to be monic.
pub fn gcd(a: &Poly, b: &Poly) -> Result<Poly, TooLarge> {
    if a.is_zero() {
        return Ok(b.monic());
    }
    if b.is_zero() {
        return Ok(a.monic());
    }
    if a.is_constant() || b.is_constant() {
        return Ok(Poly::one());
    }
    if a == b {
        return Ok(a.monic());
    }
    let mut vars = a.vars();
    for v in b.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    vars.sort_unstable();
    let v = vars[0];
    if !a.has_var(v) {
        return gcd(a, &b.content_in(v)?);
    }
    if !b.has_var(v) {
        return gcd(&a.content_in(v)?, b);
    }
    let ca = a.content_in(v)?;
    let cb = b.content_in(v)?;
    let pa = a.div_exact(&ca).ok_or(TooLarge)?;
    let pb = b.div_exact(&cb).ok_or(TooLarge)?;
    let g = gcd(&ca, &cb)?;
    let (mut p, mut q) = if pa.degree(v) >= pb.degree(v) { (pa, pb) } else { (pb, pa) };
    let h = loop {
        let r = p.pseudo_rem(&q, v)?;
        if r.is_zero() {
            break q;
        }
        if r.degree(v) == 0 {
            break Poly::one();
        }
        p = q;
        q = r.primitive_part_in(v)?;
    };
    let h = if h.is_constant() { Poly::one() } else { h.primitive_part_in(v)? };
    Ok(g.mul(&h)?.monic())
}
