//! Vector fields in the plane, prolongation to jet variables, symmetry
//! checks for ODEs, and point transformations.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{
    differentiate, eval_at, simplify, Domain, EvalError, Expr, Oracle, OracleError, Rational,
    Sampler,
};

/// Ordered pair of coordinate names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coords(pub String, pub String);

impl Coords {
    pub fn new(first: &str, second: &str) -> Coords {
        Coords(first.to_string(), second.to_string())
    }

    pub fn first(&self) -> Expr {
        Expr::var(&self.0)
    }

    pub fn second(&self) -> Expr {
        Expr::var(&self.1)
    }
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("coordinate mismatch: {0} vs {1}")]
    CoordMismatch(Coords, Coords),
    #[error("all sample points were singular")]
    AllSingular,
    #[error("coefficient of the top derivative vanishes identically")]
    DegenerateTop,
    #[error("malformed ODE: {0}")]
    MalformedOde(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// `xi ∂first + eta ∂second`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    pub xi: Expr,
    pub eta: Expr,
    pub coords: Coords,
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})∂{} + ({})∂{}", self.xi, self.coords.0, self.eta, self.coords.1)
    }
}

impl VectorField {
    pub fn new(xi: Expr, eta: Expr, coords: Coords) -> VectorField {
        VectorField { xi, eta, coords }
    }

    pub fn zero(coords: Coords) -> VectorField {
        VectorField::new(Expr::zero(), Expr::zero(), coords)
    }

    /// The derivation `X(f) = xi f_first + eta f_second`.
    pub fn apply(&self, f: &Expr) -> Expr {
        &self.xi * &differentiate(f, &self.coords.0) + &self.eta * &differentiate(f, &self.coords.1)
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.xi.is_zero() && self.eta.is_zero()
    }

    pub fn simplified(&self) -> VectorField {
        VectorField::new(simplify(&self.xi), simplify(&self.eta), self.coords.clone())
    }

    pub fn scale(&self, k: &Expr) -> VectorField {
        VectorField::new(k * &self.xi, k * &self.eta, self.coords.clone())
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField::new(&self.xi + &other.xi, &self.eta + &other.eta, self.coords.clone())
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField::new(&self.xi - &other.xi, &self.eta - &other.eta, self.coords.clone())
    }

    /// `Σ coeffs[i] · fields[i]`, simplified.
    pub fn combination(coeffs: &[Rational], fields: &[VectorField]) -> VectorField {
        let coords = fields[0].coords.clone();
        let mut xi = Vec::new();
        let mut eta = Vec::new();
        for (c, f) in coeffs.iter().zip(fields) {
            let c = Expr::num(c.clone());
            xi.push(&c * &f.xi);
            eta.push(&c * &f.eta);
        }
        VectorField::new(simplify(&Expr::add(xi)), simplify(&Expr::add(eta)), coords)
    }

    pub fn commutator(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        if self.coords != other.coords {
            return Err(FieldError::CoordMismatch(self.coords.clone(), other.coords.clone()));
        }
        let xi = self.apply(&other.xi) - other.apply(&self.xi);
        let eta = self.apply(&other.eta) - other.apply(&self.eta);
        Ok(VectorField::new(simplify(&xi), simplify(&eta), self.coords.clone()))
    }

    /// Coefficients at a point.
    pub fn eval(&self, a: &crate::expr::Assignment) -> Result<(Complex64, Complex64), EvalError> {
        Ok((eval_at(&self.xi, a)?, eval_at(&self.eta, a)?))
    }

    /// Oracle test for `self ≡ other`.
    pub fn equivalent(&self, other: &VectorField, oracle: &Oracle) -> Result<bool, FieldError> {
        Ok(oracle.equivalent(&self.xi, &other.xi)? && oracle.equivalent(&self.eta, &other.eta)?)
    }

    fn has_domain_note(&self) -> bool {
        self.xi.has_domain_note() || self.eta.has_domain_note()
    }
}

const RANK_POINTS: usize = 30;
const RANK_SEED: u64 = 42;
const RANK_EPS: f64 = 1e-9;

/// Generic rank of the span of the fields' values.
pub fn generic_rank(fields: &[VectorField]) -> Result<usize, FieldError> {
    let coords = fields[0].coords.clone();
    if let Some(f) = fields.iter().find(|f| f.coords != coords) {
        return Err(FieldError::CoordMismatch(coords, f.coords.clone()));
    }
    let domain = if fields.iter().any(VectorField::has_domain_note) {
        Domain::Positive
    } else {
        Domain::Symmetric
    };
    let mut sampler = Sampler::new(vec![coords.0.clone(), coords.1.clone()], RANK_SEED, domain);
    let mut best = None;
    let mut attempts = 0;
    let mut found = 0;
    while found < RANK_POINTS && attempts < RANK_POINTS * 50 {
        attempts += 1;
        let point = sampler.next_point();
        let Ok(values) = fields.iter().map(|f| f.eval(&point)).collect::<Result<Vec<_>, _>>() else {
            continue;
        };
        found += 1;
        let rank = numeric_rank(&values);
        best = Some(best.map_or(rank, |b: usize| b.max(rank)));
    }
    best.ok_or(FieldError::AllSingular)
}

fn numeric_rank(values: &[(Complex64, Complex64)]) -> usize {
    let scale = values.iter().map(|(a, b)| a.norm().max(b.norm())).fold(0.0, f64::max);
    if scale <= RANK_EPS {
        return 0;
    }
    for (i, (a1, b1)) in values.iter().enumerate() {
        for (a2, b2) in &values[i + 1..] {
            let minor = a1 * b2 - a2 * b1;
            let size = (a1.norm() + b1.norm()) * (a2.norm() + b2.norm());
            if minor.norm() > RANK_EPS * size.max(1.0) {
                return 2;
            }
        }
    }
    1
}

/// Name of the `k`-th derivative symbol of `dependent`.
pub fn derivative_symbol(dependent: &str, k: usize) -> String {
    if k == 0 {
        dependent.to_string()
    } else {
        format!("{dependent}{k}")
    }
}

/// Total derivative of an expression involving jet variables up to `max_order`.
fn total_derivative(e: &Expr, independent: &str, dependent: &str, max_order: usize) -> Expr {
    let mut terms = vec![differentiate(e, independent)];
    for k in 0..=max_order {
        let d = differentiate(e, &derivative_symbol(dependent, k));
        if !d.is_zero() {
            terms.push(Expr::var(&derivative_symbol(dependent, k + 1)) * d);
        }
    }
    Expr::add(terms)
}

/// Prolongation coefficients `ζ₁..ζₙ` of a field in the ODE variables.
pub fn prolong(field: &VectorField, n: usize) -> Vec<Expr> {
    let Coords(ind, dep) = &field.coords;
    let d_xi = simplify(&total_derivative(&field.xi, ind, dep, 0));
    let mut out = Vec::with_capacity(n);
    let mut prev = field.eta.clone();
    for k in 1..=n {
        let next = total_derivative(&prev, ind, dep, k - 1)
            - Expr::var(&derivative_symbol(dep, k)) * &d_xi;
        prev = simplify(&next);
        out.push(prev.clone());
    }
    out
}

/// Explicit ODE `dep_n = rhs(ind, dep, dep_1, …, dep_{n-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ode {
    pub order: usize,
    pub independent: String,
    pub dependent: String,
    pub rhs: Expr,
}

impl Ode {
    pub fn new(order: usize, independent: &str, dependent: &str, rhs: Expr) -> Result<Ode, FieldError> {
        if order < 2 {
            return Err(FieldError::MalformedOde(format!("order {order} < 2")));
        }
        if independent == dependent {
            return Err(FieldError::MalformedOde("variables must differ".into()));
        }
        let allowed: Vec<String> = std::iter::once(independent.to_string())
            .chain((0..order).map(|k| derivative_symbol(dependent, k)))
            .collect();
        if let Some(v) = rhs.free_vars().into_iter().find(|v| !allowed.contains(v)) {
            return Err(FieldError::MalformedOde(format!("unexpected symbol `{v}` in right-hand side")));
        }
        Ok(Ode { order, independent: independent.into(), dependent: dependent.into(), rhs })
    }

    pub fn coords(&self) -> Coords {
        Coords::new(&self.independent, &self.dependent)
    }

    pub fn top_symbol(&self) -> String {
        derivative_symbol(&self.dependent, self.order)
    }
}

/// Decide whether `field` generates a point symmetry of `ode`.
pub fn is_symmetry(field: &VectorField, ode: &Ode, oracle: &Oracle) -> Result<bool, FieldError> {
    if field.coords != ode.coords() {
        return Err(FieldError::CoordMismatch(field.coords.clone(), ode.coords()));
    }
    let n = ode.order;
    let zetas = prolong(field, n);
    let dep = &ode.dependent;
    let top = zetas[n - 1].subst(&ode.top_symbol(), &ode.rhs);
    let mut action = vec![
        &field.xi * &differentiate(&ode.rhs, &ode.independent),
        &field.eta * &differentiate(&ode.rhs, dep),
    ];
    for (k, zeta) in zetas.iter().enumerate().take(n - 1) {
        action.push(zeta * &differentiate(&ode.rhs, &derivative_symbol(dep, k + 1)));
    }
    Ok(oracle.equivalent(&top, &Expr::add(action))?)
}

/// `u = phi(x, y)`, `v = psi(x, y)`, mapping `target` coordinates to `source` ones.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTransformation {
    pub phi: Expr,
    pub psi: Expr,
    /// The `(u, v)` side.
    pub source: Coords,
    /// The `(x, y)` side.
    pub target: Coords,
}

impl fmt::Display for PointTransformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}, {} = {}", self.source.0, self.phi, self.source.1, self.psi)
    }
}

impl PointTransformation {
    pub fn new(phi: Expr, psi: Expr, source: Coords, target: Coords) -> PointTransformation {
        PointTransformation { phi, psi, source, target }
    }

    pub fn identity(coords: Coords) -> PointTransformation {
        PointTransformation::new(coords.first(), coords.second(), coords.clone(), coords)
    }

    pub fn jacobian(&self) -> Expr {
        let Coords(x, y) = &self.target;
        differentiate(&self.phi, x) * differentiate(&self.psi, y)
            - differentiate(&self.phi, y) * differentiate(&self.psi, x)
    }

    /// Numeric check that the Jacobian is not identically zero.
    pub fn is_nondegenerate(&self, oracle: &Oracle) -> Result<bool, FieldError> {
        let check = Oracle { points: 20, ..*oracle };
        Ok(!check.is_zero(&self.jacobian())?)
    }

    /// Express `e(u, v)` in the target coordinates.
    pub fn pull(&self, e: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(self.source.0.clone(), self.phi.clone());
        map.insert(self.source.1.clone(), self.psi.clone());
        e.subst_all(&map)
    }

    /// `self ∘ inner`, where `inner` maps into this transformation's target.
    pub fn compose(&self, inner: &PointTransformation) -> PointTransformation {
        let mut map = BTreeMap::new();
        map.insert(self.target.0.clone(), inner.phi.clone());
        map.insert(self.target.1.clone(), inner.psi.clone());
        PointTransformation::new(
            simplify(&self.phi.subst_all(&map)),
            simplify(&self.psi.subst_all(&map)),
            self.source.clone(),
            inner.target.clone(),
        )
    }

    /// The field on the target side that corresponds to `field` on the
    /// source side, found by solving the correspondence identities linearly.
    pub fn transport(&self, field: &VectorField) -> Result<VectorField, FieldError> {
        if field.coords != self.source {
            return Err(FieldError::CoordMismatch(field.coords.clone(), self.source.clone()));
        }
        let Coords(x, y) = &self.target;
        let (px, py) = (differentiate(&self.phi, x), differentiate(&self.phi, y));
        let (qx, qy) = (differentiate(&self.psi, x), differentiate(&self.psi, y));
        let a = self.pull(&field.xi);
        let b = self.pull(&field.eta);
        let det = &px * &qy - &py * &qx;
        let alpha = (&a * &qy - &b * &py) / &det;
        let beta = (&b * &px - &a * &qx) / &det;
        Ok(VectorField::new(simplify(&alpha), simplify(&beta), self.target.clone()))
    }

    /// The ODE satisfied by `y(x)` when `v(u)` satisfies `ode`.
    pub fn transform_ode(&self, ode: &Ode) -> Result<Ode, FieldError> {
        if ode.coords() != self.source {
            return Err(FieldError::CoordMismatch(ode.coords(), self.source.clone()));
        }
        let Coords(x, y) = &self.target;
        let n = ode.order;
        let dx = simplify(&total_derivative(&self.phi, x, y, 0));
        let mut derivs = Vec::with_capacity(n);
        let mut current = simplify(&(total_derivative(&self.psi, x, y, 0) / &dx));
        derivs.push(current.clone());
        for k in 2..=n {
            current = simplify(&(total_derivative(&current, x, y, k - 1) / &dx));
            derivs.push(current.clone());
        }
        let mut map = BTreeMap::new();
        map.insert(ode.independent.clone(), self.phi.clone());
        map.insert(ode.dependent.clone(), self.psi.clone());
        for (k, d) in derivs.iter().enumerate().take(n - 1) {
            map.insert(derivative_symbol(&ode.dependent, k + 1), d.clone());
        }
        let rhs = ode.rhs.subst_all(&map);
        let top = derivative_symbol(y, n);
        let vn = &derivs[n - 1];
        let slope = simplify(&differentiate(vn, &top));
        let check = Oracle { points: 20, ..Oracle::default() };
        if check.is_zero(&slope)? {
            return Err(FieldError::DegenerateTop);
        }
        let offset = vn.subst(&top, &Expr::zero());
        let solved = simplify(&((rhs - offset) / slope));
        Ode::new(n, x, y, solved)
    }
}

/// `W(phi) ≡ a(phi, psi)` and `W(psi) ≡ b(phi, psi)` for `source = a∂u + b∂v`.
pub fn satisfies_correspondence(
    t: &PointTransformation,
    target: &VectorField,
    source: &VectorField,
    oracle: &Oracle,
) -> Result<bool, FieldError> {
    if target.coords != t.target {
        return Err(FieldError::CoordMismatch(target.coords.clone(), t.target.clone()));
    }
    if source.coords != t.source {
        return Err(FieldError::CoordMismatch(source.coords.clone(), t.source.clone()));
    }
    Ok(oracle.equivalent(&target.apply(&t.phi), &t.pull(&source.xi))?
        && oracle.equivalent(&target.apply(&t.psi), &t.pull(&source.eta))?)
}
