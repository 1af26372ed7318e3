//! Point transformations that carry an adapted basis onto its canonical
//! realization.
//!
//! Every construction step works on the forward map (new coordinates as
//! functions of the old ones), which is then inverted to the
//! `old = φ(new)` form used by [`PointTransformation`]. Steps are chained by
//! transporting the remaining fields into each new chart.

use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::rationalize;
use crate::classify::{
    canonical_fields, AdaptedBasis, BianchiType, ClassificationReport, Epsilon, Tag,
};
use crate::expr::integrate::coefficients_in;
use crate::expr::{
    eval_at, integrate_pattern, Domain, Sampler, invert_pair_all, simplify, solve_for, Assignment, Expr, Func, Oracle,
    OracleError, Rational,
};
use crate::vfield::{
    satisfies_correspondence, Coords, FieldError, PointTransformation, VectorField,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("outside the solver patterns: {0}")]
    NotSolvable(String),
    #[error("unexpected field shape: {0}")]
    Shape(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("generator {0} failed certification")]
    Certification(usize),
    #[error("no adapted basis available for {0}")]
    NoBasis(Tag),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<OracleError> for TransformError {
    fn from(e: OracleError) -> Self {
        TransformError::Field(FieldError::Oracle(e))
    }
}

type Result<T> = std::result::Result<T, TransformError>;

// ----- matching systems -----

/// One generator pair of a matching system: `target(φ) = source.xi(φ, ψ)`
/// and `target(ψ) = source.eta(φ, ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingConstraint {
    pub target: VectorField,
    pub source: VectorField,
}

/// First-order PDE system for `u = φ(x, y)`, `v = ψ(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingSystem {
    pub constraints: Vec<MatchingConstraint>,
}

impl MatchingSystem {
    pub fn new(targets: &[VectorField], sources: &[VectorField]) -> MatchingSystem {
        let constraints = targets
            .iter()
            .zip(sources)
            .map(|(t, s)| MatchingConstraint { target: t.clone(), source: s.clone() })
            .collect();
        MatchingSystem { constraints }
    }

    /// The equations as `(lhs, rhs)` expressions in `phi_x, phi_y, psi_x, psi_y, phi, psi`.
    pub fn equations(&self) -> Vec<(Expr, Expr)> {
        let mut out = Vec::new();
        for c in &self.constraints {
            let Coords(u, v) = &c.source.coords;
            let substitute = |e: &Expr| {
                let e = e.subst(u, &Expr::var("_phi")).subst(v, &Expr::var("_psi"));
                e.subst("_phi", &Expr::var("phi")).subst("_psi", &Expr::var("psi"))
            };
            for (unknown, rhs) in [("phi", &c.source.xi), ("psi", &c.source.eta)] {
                let lhs = &c.target.xi * &Expr::var(&format!("{unknown}_x"))
                    + &c.target.eta * &Expr::var(&format!("{unknown}_y"));
                out.push((lhs, substitute(rhs)));
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.equations()
                .into_iter()
                .map(|(lhs, rhs)| json!({ "lhs": lhs.to_string(), "rhs": rhs.to_string() }))
                .collect(),
        )
    }

    /// Certify a candidate solution, one boolean per constraint.
    pub fn certify(&self, t: &PointTransformation, oracle: &Oracle) -> Result<Vec<bool>> {
        self.constraints
            .iter()
            .map(|c| Ok(satisfies_correspondence(t, &c.target, &c.source, oracle)?))
            .collect()
    }
}

impl fmt::Display for MatchingSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (lhs, rhs) in self.equations() {
            writeln!(f, "{lhs} = {rhs}")?;
        }
        Ok(())
    }
}

// ----- results -----

/// A named piece of free data recovered during construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformationResult {
    pub bianchi: BianchiType,
    /// `u = φ(x, y)`, `v = ψ(x, y)` from canonical to original coordinates.
    pub transformation: PointTransformation,
    pub canonical: [VectorField; 3],
    /// The original-coordinate fields matched with `canonical`.
    pub matched: [VectorField; 3],
    /// Coefficients of `matched` over the generators, when rational.
    pub basis: Option<AdaptedBasis>,
    pub residuals: Vec<Residual>,
    pub trace: Vec<String>,
}

impl TransformationResult {
    pub fn certify(&self, oracle: &Oracle) -> Result<[bool; 3]> {
        let mut out = [false; 3];
        for i in 0..3 {
            out[i] = satisfies_correspondence(
                &self.transformation,
                &self.canonical[i],
                &self.matched[i],
                oracle,
            )?;
        }
        Ok(out)
    }

    pub fn residual(&self, name: &str) -> Option<&Expr> {
        self.residuals.iter().find(|r| r.name == name).map(|r| &r.value)
    }
}

/// Outcome of [`construct_transformation`].
#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    Solved(Box<TransformationResult>),
    /// A step fell outside the solver patterns; the matching system is
    /// exported for external solving.
    Partial { system: MatchingSystem, reason: String },
}

// ----- small helpers -----

fn vanishes(e: &Expr, oracle: &Oracle) -> Result<bool> {
    let s = simplify(e);
    if s.is_zero() {
        return Ok(true);
    }
    if s.is_constant() {
        return Ok(false);
    }
    Ok(oracle.is_zero(&s)?)
}

fn equivalent(a: &Expr, b: &Expr, oracle: &Oracle) -> Result<bool> {
    Ok(oracle.equivalent(a, b)?)
}

fn quadrature(e: &Expr, var: &str) -> Result<Expr> {
    integrate_pattern(e, var)
        .map(|f| simplify(&f))
        .map_err(|_| TransformError::NotSolvable(format!("∫ {e} d{var}")))
}

/// `e` with `var` removed, given that `e` does not really depend on it.
fn restrict(e: &Expr, var: &str, oracle: &Oracle) -> Result<Expr> {
    let s = simplify(e);
    if !s.depends_on(var) {
        return Ok(s);
    }
    for value in [0, 1, 2] {
        let r = simplify(&s.subst(var, &Expr::int(value)));
        if oracle.equivalent(&s, &r).unwrap_or(false) {
            return Ok(r);
        }
    }
    Err(TransformError::Shape(format!("{s} depends on {var}")))
}

/// A constant read off a simplified expression.
fn constant(e: &Expr, what: &str) -> Result<Expr> {
    let s = simplify(e);
    if s.is_constant() {
        Ok(s)
    } else {
        Err(TransformError::Shape(format!("{what} = {s} is not constant")))
    }
}

fn numeric(e: &Expr) -> Option<f64> {
    let z = eval_at(e, &Assignment::new()).ok()?;
    (z.im.abs() < 1e-12).then_some(z.re)
}

/// A quantity known to be constant, as an exact value.
fn settle(e: &Expr, what: &str, oracle: &Oracle) -> Result<Expr> {
    let s = simplify(e);
    if s.is_constant() {
        return Ok(s);
    }
    let domain = if s.has_domain_note() { Domain::Positive } else { Domain::Symmetric };
    let mut sampler = Sampler::new(s.free_vars().into_iter().collect(), oracle.seed, domain);
    let value = (0..50)
        .find_map(|_| eval_at(&s, &sampler.next_point()).ok())
        .filter(|z| z.im.abs() < 1e-9)
        .map(|z| z.re);
    if let Some(v) = value {
        let candidate = Expr::num(rationalize(v, 10_000));
        if equivalent(&s, &candidate, oracle)? {
            return Ok(candidate);
        }
    }
    Err(TransformError::Shape(format!("{what} = {s} is not a recognizable constant")))
}

/// Fresh coordinate names that clash with none of `avoid`.
fn scratch(avoid: &[&Coords]) -> Coords {
    let taken = |name: &str| avoid.iter().any(|c| c.0 == name || c.1 == name);
    (1..)
        .map(|k| Coords(format!("_a{k}"), format!("_b{k}")))
        .find(|c| !taken(&c.0) && !taken(&c.1))
        .expect("unbounded search")
}

/// Canonical coordinate names for a problem posed in `source`.
pub fn target_coords(source: &Coords) -> Coords {
    [("x", "y"), ("s", "t"), ("p", "q")]
        .into_iter()
        .map(|(a, b)| Coords::new(a, b))
        .find(|c| c.0 != source.0 && c.0 != source.1 && c.1 != source.0 && c.1 != source.1)
        .expect("three disjoint candidates")
}

fn relabel(coords: &Coords, to: &Coords) -> PointTransformation {
    PointTransformation::new(coords.first(), coords.second(), coords.clone(), to.clone())
}

fn rename_expr(e: &Expr, from: &Coords, to: &Coords) -> Expr {
    e.subst(&from.0, &to.first()).subst(&from.1, &to.second())
}

/// The transformation `old = φ(new)` inverse to the forward map
/// `new = (first, second)(old)`.
pub fn invert_forward(
    first: &Expr,
    second: &Expr,
    old: &Coords,
    new: &Coords,
    oracle: &Oracle,
) -> Result<PointTransformation> {
    if first == &old.first() && second == &old.second() {
        return Ok(relabel(new, new).with_source(old));
    }
    let solve = |f: &Expr, g: &Expr| invert_pair_all(f, g, (&old.0, &old.1), (&new.first(), &new.second()));
    let mut candidates = solve(first, second).unwrap_or_default();
    candidates.extend(solve(&simplify(first), &simplify(second)).unwrap_or_default());
    if candidates.is_empty() {
        return Err(TransformError::NotSolvable(format!("inverting ({first}, {second})")));
    }
    let mut passing = Vec::new();
    for (a, b) in candidates {
        let t = PointTransformation::new(simplify(&a), simplify(&b), old.clone(), new.clone());
        if equivalent(&t.pull(first), &new.first(), oracle)?
            && equivalent(&t.pull(second), &new.second(), oracle)?
        {
            passing.push(t);
        }
    }
    let cost = |t: &PointTransformation| {
        let noted = t.phi.has_domain_note() as usize + t.psi.has_domain_note() as usize;
        (noted, t.phi.size() + t.psi.size())
    };
    if let Some(best) = passing.into_iter().min_by_key(cost) {
        return Ok(best);
    }
    Err(TransformError::NotSolvable(format!("no branch of the inverse of ({first}, {second}) checks out")))
}

trait WithSource {
    fn with_source(self, source: &Coords) -> PointTransformation;
}

impl WithSource for PointTransformation {
    fn with_source(self, source: &Coords) -> PointTransformation {
        PointTransformation { source: source.clone(), ..self }
    }
}

// ----- straightening -----

/// `(F, G)` with `X(F) = 1` and `X(G) = 0`.
pub fn straightening_coordinates(field: &VectorField, oracle: &Oracle) -> Result<(Expr, Expr)> {
    let Coords(p, q) = &field.coords;
    let a = simplify(&field.xi);
    let b = simplify(&field.eta);
    let (f, g) = match (vanishes(&a, oracle)?, vanishes(&b, oracle)?) {
        (true, true) => return Err(TransformError::Precondition("field vanishes".into())),
        (false, true) => (quadrature(&Expr::recip(&a), p)?, field.coords.second()),
        (true, false) => (quadrature(&Expr::recip(&b), q)?, field.coords.first()),
        (false, false) => {
            let g = characteristic_invariant(&a, &b, p, q, oracle)?;
            let f = if !a.depends_on(q) {
                quadrature(&Expr::recip(&a), p)?
            } else if !b.depends_on(p) {
                quadrature(&Expr::recip(&b), q)?
            } else {
                along_characteristics(&a, &g, p, q)?
            };
            (f, g)
        }
    };
    if !equivalent(&field.apply(&f), &Expr::one(), oracle)? || !vanishes(&field.apply(&g), oracle)? {
        return Err(TransformError::NotSolvable(format!("straightening {field}")));
    }
    Ok((f, g))
}

/// A first integral of `dq/dp = b/a`.
fn characteristic_invariant(a: &Expr, b: &Expr, p: &str, q: &str, oracle: &Oracle) -> Result<Expr> {
    let slope = simplify(&(b / a));
    if !slope.depends_on(q) {
        return Ok(simplify(&(Expr::var(q) - quadrature(&slope, p)?)));
    }
    let inverse = simplify(&(a / b));
    if !inverse.depends_on(p) {
        return Ok(simplify(&(Expr::var(p) - quadrature(&inverse, q)?)));
    }
    for (rate, dep, ind) in [(&slope, q, p), (&inverse, p, q)] {
        if let Some(g) = linear_invariant(rate, dep, ind) {
            return Ok(g);
        }
    }
    separable_invariant(&slope, p, q, oracle)?
        .ok_or_else(|| TransformError::NotSolvable(format!("characteristics of d{q}/d{p} = {slope}")))
}

/// `d dep / d ind = α(ind) dep + β(ind)` through an integrating factor.
fn linear_invariant(rate: &Expr, dep: &str, ind: &str) -> Option<Expr> {
    let coeffs = coefficients_in(rate, dep)?;
    if coeffs.len() != 2 || coeffs.iter().any(|c| c.depends_on(dep)) {
        return None;
    }
    let factor = simplify(&Expr::apply(Func::Exp, -integrate_pattern(&coeffs[1], ind).ok()?));
    let drift = integrate_pattern(&simplify(&(&coeffs[0] * &factor)), ind).ok()?;
    Some(simplify(&(Expr::var(dep) * &factor - drift)))
}

/// `dq/dp = g(p) h(q)`.
fn separable_invariant(slope: &Expr, p: &str, q: &str, oracle: &Oracle) -> Result<Option<Expr>> {
    for anchor in [1, 2, -1] {
        let k = Expr::int(anchor);
        let corner = simplify(&slope.subst(p, &k).subst(q, &k));
        if numeric(&corner).is_none_or(|v| v.abs() < 1e-9) {
            continue;
        }
        let g = simplify(&slope.subst(q, &k));
        let h = simplify(&(slope.subst(p, &k) / &corner));
        if !equivalent(slope, &(&g * &h), oracle)? {
            return Ok(None);
        }
        let (Ok(hq), Ok(gp)) = (integrate_pattern(&Expr::recip(&h), q), integrate_pattern(&g, p))
        else {
            return Ok(None);
        };
        return Ok(Some(simplify(&(hq - gp))));
    }
    Ok(None)
}

/// `∫ dp / a` along the level sets of the invariant `g`.
fn along_characteristics(a: &Expr, g: &Expr, p: &str, q: &str) -> Result<Expr> {
    let level = Expr::var("_level");
    let q_on = solve_for(g, &level, q)
        .map_err(|e| TransformError::NotSolvable(format!("level sets of {g}: {e}")))?;
    let integrand = simplify(&Expr::recip(&a.subst(q, &q_on)));
    let f = quadrature(&integrand, p)?;
    Ok(simplify(&f.subst("_level", g)))
}

/// `T` with `∂x ↔ field`.
pub fn straighten(field: &VectorField, target: &Coords, oracle: &Oracle) -> Result<PointTransformation> {
    let (f, g) = straightening_coordinates(field, oracle)?;
    invert_forward(&f, &g, &field.coords, target, oracle)
}

/// `x̃ = x − ∫(α/β)dy`, `ỹ = ∫dy/β` for `α(y)∂x + β(y)∂y` commuting with `∂x`.
fn commuting_step(
    alpha: &Expr,
    beta: &Expr,
    from: &Coords,
    to: &Coords,
    oracle: &Oracle,
) -> Result<PointTransformation> {
    let shift = quadrature(&simplify(&(alpha / beta)), &from.1)?;
    let first = simplify(&(from.first() - shift));
    let second = quadrature(&Expr::recip(beta), &from.1)?;
    invert_forward(&first, &second, from, to, oracle)
}

/// `T` with `∂x ↔ x_field` and `∂y ↔ y_field`.
pub fn straighten_commuting_pair(
    x_field: &VectorField,
    y_field: &VectorField,
    target: &Coords,
    oracle: &Oracle,
) -> Result<PointTransformation> {
    let mid = scratch(&[&x_field.coords, target]);
    let t1 = straighten(x_field, &mid, oracle)?;
    let moved = t1.transport(y_field)?;
    let alpha = restrict(&moved.xi, &mid.0, oracle)?;
    let beta = restrict(&moved.eta, &mid.0, oracle)?;
    if vanishes(&beta, oracle)? {
        return Err(TransformError::Precondition("the pair has rank 1".into()));
    }
    let t2 = commuting_step(&alpha, &beta, &mid, target, oracle)?;
    Ok(t1.compose(&t2))
}

/// `T` with `∂y ↔ base` and `x∂y ↔ multiple`, for `multiple = f·base` with
/// `f` non-constant.
pub fn rank1_pair_coordinates(
    base: &VectorField,
    multiple: &VectorField,
    target: &Coords,
    oracle: &Oracle,
) -> Result<PointTransformation> {
    let mid = scratch(&[&base.coords, target]);
    let t1 = straighten(base, &mid, oracle)?;
    let moved = t1.transport(multiple)?;
    if !vanishes(&moved.eta, oracle)? {
        return Err(TransformError::Precondition(format!("{multiple} is not a multiple of {base}")));
    }
    let ratio = restrict(&moved.xi, &mid.0, oracle)?;
    if !ratio.depends_on(&mid.1) {
        return Err(TransformError::Precondition(format!("constant ratio {ratio}")));
    }
    let t2 = invert_forward(&ratio, &mid.first(), &mid, target, oracle)?;
    Ok(t1.compose(&t2))
}

// ----- linear first-order equations -----

/// `g(var)` with `p g′ + q g = r`, certified by substitution.
pub fn solve_linear_first_order(p: &Expr, q: &Expr, r: &Expr, var: &str, oracle: &Oracle) -> Result<Expr> {
    let g = if vanishes(p, oracle)? {
        if vanishes(q, oracle)? {
            return Err(TransformError::Precondition("both coefficients vanish".into()));
        }
        simplify(&(r / q))
    } else if vanishes(r, oracle)? {
        Expr::zero()
    } else {
        let rho = quadrature(&simplify(&(q / p)), var)?;
        let factor = simplify(&Expr::apply(Func::Exp, rho));
        let inner = quadrature(&simplify(&(r / p * &factor)), var)?;
        simplify(&(inner / factor))
    };
    let residual = p * &crate::expr::differentiate(&g, var) + q * &g - r;
    if !vanishes(&residual, oracle)? {
        return Err(TransformError::NotSolvable(format!("{p}·g′ + {q}·g = {r}")));
    }
    Ok(g)
}

/// `ψ(y)` with `φ(y) = ψ(y)(−a − by) − ψ′(y)(c + (d − a)y − by²)`.
pub fn solve_psi_ode(
    a: &Rational,
    b: &Rational,
    c: &Rational,
    d: &Rational,
    phi: &Expr,
    var: &str,
    oracle: &Oracle,
) -> Result<Expr> {
    let y = Expr::var(var);
    let (a, b, c, d) = (Expr::num(a.clone()), Expr::num(b.clone()), Expr::num(c.clone()), Expr::num(d.clone()));
    let lead = simplify(&(&c + (&d - &a) * &y - &b * y.powi(2)));
    let own = simplify(&(&a + &b * &y));
    solve_linear_first_order(&lead, &own, &simplify(&-phi), var, oracle)
}

/// Shift `g(x)` with `ỹ = y + g(x)` that removes an extra `h(x)∂y` from
/// the residual generator of a rank-1 type.
#[derive(Debug, Clone, PartialEq)]
pub struct Absorption {
    pub shift: Expr,
}

impl Absorption {
    /// `x_from = x`, `y_from = y − g(x)`.
    pub fn transformation(&self, from: &Coords, to: &Coords) -> PointTransformation {
        let g = rename_expr(&self.shift, from, to);
        PointTransformation::new(to.first(), simplify(&(to.second() - g)), from.clone(), to.clone())
    }
}

/// Index of the canonical residual for a rank-1 type, i.e. neither `∂y` nor `x∂y`.
fn rank1_roles(canonical: &[VectorField; 3]) -> Option<(usize, usize, usize)> {
    let coords = &canonical[0].coords;
    let base = VectorField::new(Expr::zero(), Expr::one(), coords.clone());
    let multiple = VectorField::new(Expr::zero(), coords.first(), coords.clone());
    let i = canonical.iter().position(|f| *f == base)?;
    let j = canonical.iter().position(|f| *f == multiple)?;
    Some((i, j, 3 - i - j))
}

pub fn absorb_inhomogeneity(bt: &BianchiType, h: &Expr, coords: &Coords, oracle: &Oracle) -> Result<Absorption> {
    if !matches!(bt.tag, Tag::L3_3II | Tag::L3_4II | Tag::L3_5II | Tag::L3_6II | Tag::L3_7II) {
        return Err(TransformError::Precondition(format!("{} has no inhomogeneous residual", bt.tag)));
    }
    let canonical = canonical_fields(bt, coords, None)
        .ok_or_else(|| TransformError::Precondition(format!("missing parameters for {bt}")))?;
    let (_, _, r) = rank1_roles(&canonical).expect("rank-1 catalog entry");
    let residual = &canonical[r];
    let rate = simplify(&crate::expr::differentiate(&residual.eta, &coords.1));
    let shift = solve_linear_first_order(&residual.xi, &-rate, &simplify(&-h), &coords.0, oracle)?;
    Ok(Absorption { shift })
}

// ----- sl(2) -----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sl2Case {
    /// `{∂x, f₁∂x + f₂∂y}` has rank 2.
    A,
    /// `f₂ ≡ 0`.
    B,
}

/// Data read off while reducing an `sl(2)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Sl2ReductionState {
    pub case: Sl2Case,
    /// `X = e^{2x}(f₁∂x + f₂∂y)` once `Z = ∂x`.
    pub f1: Expr,
    pub f2: Expr,
    /// `e^{2f}` as a function of `ỹ` (case A).
    pub weight: Option<Expr>,
    pub c1: Option<Expr>,
    pub lambda: Option<Expr>,
    pub epsilon: Option<Epsilon>,
    /// Every `ε` whose target `Y` certifies under the emitted map.
    pub certifying: Vec<Epsilon>,
}

/// Reduce `[Z,X] = 2X, [Z,Y] = −2Y, [X,Y] = Z` to the polynomial form.
pub fn sl2_reduce(
    fields: &[VectorField; 3],
    target: &Coords,
    oracle: &Oracle,
) -> Result<(Sl2ReductionState, PointTransformation)> {
    let [x_field, y_field, z_field] = fields;
    let m1 = scratch(&[&x_field.coords, target]);
    let t1 = straighten(z_field, &m1, oracle)?;
    let x1 = t1.transport(x_field)?;
    let damp = |c: &Coords, k: i64| Expr::apply(Func::Exp, Expr::int(k) * c.first());
    let f1 = restrict(&(&x1.xi * &damp(&m1, -2)), &m1.0, oracle)?;
    let f2 = restrict(&(&x1.eta * &damp(&m1, -2)), &m1.0, oracle)?;
    if vanishes(&f2, oracle)? {
        let first = if f1.depends_on(&m1.1) { f1.clone() } else { m1.second() };
        let second = simplify(&(Expr::rat(-1, 2) * damp(&m1, -2) / &f1));
        let t2 = invert_forward(&first, &second, &m1, target, oracle)?;
        let t = t1.compose(&t2);
        let state = Sl2ReductionState {
            case: Sl2Case::B,
            f1,
            f2,
            weight: None,
            c1: None,
            lambda: None,
            epsilon: None,
            certifying: Vec::new(),
        };
        return Ok((state, t));
    }
    // x̃̃ = x − f, ỹ̃ = ∫ e^{−2f}/f₂ dy with f = ∫ f₁/f₂ dy
    let f = quadrature(&simplify(&(&f1 / &f2)), &m1.1)?;
    let weight = simplify(&Expr::apply(Func::Exp, Expr::int(2) * &f));
    let first = simplify(&(m1.first() - &f));
    let second = quadrature(&simplify(&(Expr::recip(&weight) / &f2)), &m1.1)?;
    let y1 = t1.transport(y_field)?;
    let rise = Expr::apply(Func::Exp, Expr::int(2) * &first);
    let c1 = settle(&(&rise * &y1.apply(&first) - &second), "c₁", oracle)?;
    let shifted = simplify(&(&second + &c1));
    let k = settle(&(&rise * &y1.apply(&second) - shifted.powi(2)), "ελ²", oracle)?;
    let kv = numeric(&k).ok_or_else(|| TransformError::Shape(format!("ελ² = {k}")))?;
    let (epsilon, lambda) = if kv.abs() < 1e-12 {
        (Epsilon::Zero, Expr::one())
    } else if kv > 0.0 {
        (Epsilon::One, simplify(&k.sqrt()))
    } else {
        (Epsilon::MinusOne, simplify(&(-&k).sqrt()))
    };
    // x̂ = λe^{−2x̃̃}, ŷ = (ỹ̃ + c₁)e^{−2x̃̃}
    let fall = simplify(&Expr::apply(Func::Exp, Expr::int(-2) * &first));
    let t2 = invert_forward(&(&lambda * &fall), &(&shifted * &fall), &m1, target, oracle)?;
    let t = t1.compose(&t2);
    let mut certifying = Vec::new();
    for eps in Epsilon::ALL {
        let bt = BianchiType { epsilon: Some(eps), ..BianchiType::plain(eps.tag()) };
        let canonical = canonical_fields(&bt, target, None).expect("sl(2) catalog entry");
        if satisfies_correspondence(&t, &canonical[1], y_field, oracle)? {
            certifying.push(eps);
        }
    }
    let state = Sl2ReductionState {
        case: Sl2Case::A,
        f1,
        f2,
        weight: Some(weight),
        c1: Some(c1),
        lambda: Some(lambda),
        epsilon: Some(epsilon),
        certifying,
    };
    Ok((state, t))
}

/// The sign `ε` of a rank-2 `sl(2)` realization.
pub fn resolve_epsilon(fields: &[VectorField; 3], oracle: &Oracle) -> Result<Epsilon> {
    let target = scratch(&[&fields[0].coords]);
    let (state, _) = sl2_reduce(fields, &target, oracle)?;
    match (state.epsilon, state.certifying.as_slice()) {
        (Some(eps), [only]) if *only == eps => Ok(eps),
        (_, found) => Err(TransformError::Shape(format!(
            "{} values of ε certify",
            found.len()
        ))),
    }
}

// ----- so(3) -----

/// Data read off while reducing an `so(3)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct So3ReductionState {
    /// `Y − iZ = e^{ix}[(f₁∂x + f₂∂y) + i(f₃∂x + f₄∂y)]` once `X = ∂x`.
    pub f: [Expr; 4],
    /// Straightened chart; the `fᵢ` depend on its second coordinate.
    pub coords: Coords,
    /// `f₂ ≡ 0`, so the alternative closed form was used.
    pub degenerate: bool,
}

impl So3ReductionState {
    /// `(A² + ABf′ + A′ + 1, AB + B′ + (1 + B²)f′)` with derivatives in `ỹ`,
    /// rewritten in the straightened coordinate. `None` when `f₂ ≡ 0`.
    pub fn conditions(&self) -> Option<(Expr, Expr)> {
        if self.degenerate {
            return None;
        }
        let [f1, f2, f3, f4] = &self.f;
        let a = (f2 * f3 - f1 * f4) / f2;
        let b = f4 / f2;
        let d = |e: &Expr| f2 * &crate::expr::differentiate(e, &self.coords.1);
        let first = a.powi(2) + &a * &b * f1 + d(&a) + Expr::one();
        let second = &a * &b + d(&b) + (Expr::one() + b.powi(2)) * f1;
        Some((simplify(&first), simplify(&second)))
    }

    pub fn conditions_hold(&self, oracle: &Oracle) -> Result<bool> {
        match self.conditions() {
            Some((first, second)) => Ok(vanishes(&first, oracle)? && vanishes(&second, oracle)?),
            None => Ok(true),
        }
    }
}

/// Reduce `[X,Y] = Z, [Y,Z] = X, [Z,X] = Y` to the rotation realization.
pub fn so3_reduce(
    fields: &[VectorField; 3],
    target: &Coords,
    oracle: &Oracle,
) -> Result<(So3ReductionState, PointTransformation)> {
    let [x_field, y_field, z_field] = fields;
    let m1 = scratch(&[&x_field.coords, target]);
    let t1 = straighten(x_field, &m1, oracle)?;
    let y1 = t1.transport(y_field)?;
    let z1 = t1.transport(z_field)?;
    let (cos, sin) = (Expr::apply(Func::Cos, m1.first()), Expr::apply(Func::Sin, m1.first()));
    let real = |a: &Expr, b: &Expr| restrict(&(&cos * a - &sin * b), &m1.0, oracle);
    let imag = |a: &Expr, b: &Expr| restrict(&(-(&sin * a) - &cos * b), &m1.0, oracle);
    let f = [real(&y1.xi, &z1.xi)?, real(&y1.eta, &z1.eta)?, imag(&y1.xi, &z1.xi)?, imag(&y1.eta, &z1.eta)?];
    let check = Oracle { points: 20, ..*oracle };
    let degenerate = vanishes(&f[1], &check)?;
    if degenerate && vanishes(&f[3], &check)? {
        return Err(TransformError::Shape("f₂ and f₄ both vanish".into()));
    }
    let state = So3ReductionState { f: f.clone(), coords: m1.clone(), degenerate };
    if !state.conditions_hold(oracle)? {
        return Err(TransformError::Shape("the so(3) compatibility conditions fail".into()));
    }
    let [f1, f2, f3, f4] = &f;
    let angle = if degenerate {
        -Expr::apply(Func::Arctan, simplify(&(f2 / f4))) + Expr::pi() / Expr::int(2)
    } else {
        Expr::apply(Func::Arctan, simplify(&(f4 / f2)))
    };
    let first = m1.first() + angle;
    let second = (f1 * f4 - f2 * f3) / (f2.powi(2) + f4.powi(2)).sqrt();
    let t2 = invert_forward(&first, &second, &m1, target, oracle)?;
    Ok((state, t1.compose(&t2)))
}

// ----- dispatch -----

/// Build and certify the transformation to the canonical realization.
pub fn construct_transformation(
    report: &ClassificationReport,
    generators: &[VectorField; 3],
    oracle: &Oracle,
) -> Result<Construction> {
    let bt = &report.bianchi;
    let basis = report.adapted.as_ref().ok_or(TransformError::NoBasis(bt.tag))?;
    let adapted = basis.fields(generators);
    let target = target_coords(&generators[0].coords);
    let built = match bt.tag {
        Tag::L3_8I | Tag::L3_8II | Tag::L3_8III | Tag::L3_8IV => build_sl2(bt, &adapted, &target, oracle),
        Tag::L3_9 => build_so3(bt, &adapted, &target, oracle),
        _ => build_solvable(bt, basis, &adapted, &target, oracle),
    };
    match built {
        Ok(mut result) => {
            if result.basis.is_none() && result.matched == adapted {
                result.basis = Some(basis.clone());
            }
            verify(&result, oracle)?;
            Ok(Construction::Solved(Box::new(result)))
        }
        Err(TransformError::NotSolvable(reason)) => {
            let targets = canonical_fields(bt, &target, None)
                .map(|c| c.to_vec())
                .unwrap_or_else(|| canonical_fields(bt, &target, Some(&Expr::zero())).unwrap()[..2].to_vec());
            let system = MatchingSystem::new(&targets, &adapted[..targets.len()]);
            Ok(Construction::Partial { system, reason })
        }
        Err(e) => Err(e),
    }
}

fn verify(result: &TransformationResult, oracle: &Oracle) -> Result<()> {
    if !result.transformation.is_nondegenerate(oracle)? {
        return Err(TransformError::Shape("degenerate Jacobian".into()));
    }
    for (i, ok) in result.certify(oracle)?.into_iter().enumerate() {
        if !ok {
            return Err(TransformError::Certification(i));
        }
    }
    Ok(())
}

fn residual(name: &str, value: Expr) -> Residual {
    Residual { name: name.to_string(), value }
}

fn parameter_residuals(bt: &BianchiType) -> Vec<Residual> {
    let mut out = Vec::new();
    if let Some(c) = &bt.c {
        out.push(residual("c", c.to_expr()));
    }
    if let Some(b) = &bt.cot_theta {
        out.push(residual("cot_theta", b.to_expr()));
    }
    out
}

fn build_solvable(
    bt: &BianchiType,
    basis: &AdaptedBasis,
    adapted: &[VectorField; 3],
    target: &Coords,
    oracle: &Oracle,
) -> Result<TransformationResult> {
    let probe = canonical_fields(bt, target, Some(&Expr::zero()))
        .ok_or_else(|| TransformError::Precondition(format!("missing parameters for {bt}")))?;
    let dx = VectorField::new(Expr::one(), Expr::zero(), target.clone());
    let dy = VectorField::new(Expr::zero(), Expr::one(), target.clone());
    let mut residuals = parameter_residuals(bt);
    let mut trace = Vec::new();
    let mut matched = adapted.clone();
    let mut shift: Option<(usize, usize, usize, Expr, Expr)> = None;
    let (t, canonical) = match (probe.iter().position(|f| *f == dx), probe.iter().position(|f| *f == dy)) {
        (Some(i), Some(j)) => {
            let r = 3 - i - j;
            trace.push(format!("commuting pair: generator {} ↔ ∂x, generator {} ↔ ∂y", i + 1, j + 1));
            let t = straighten_commuting_pair(&adapted[i], &adapted[j], target, oracle)?;
            let moved = t.transport(&adapted[r])?;
            let a = constant(&(&moved.xi - &probe[r].xi), "residual offset")?;
            let b = constant(&(&moved.eta - &probe[r].eta), "residual offset")?;
            if !a.is_zero() || !b.is_zero() {
                trace.push(format!("residual shifted by ({a})·X{} + ({b})·X{}", i + 1, j + 1));
                matched[r] = adapted[r].sub(&adapted[i].scale(&a)).sub(&adapted[j].scale(&b)).simplified();
                residuals.push(residual("shift", Expr::add(vec![a.clone(), b.clone()])));
                shift = Some((i, j, r, a, b));
            }
            (t, probe)
        }
        _ => {
            let (i, j, r) = rank1_roles(&probe)
                .ok_or_else(|| TransformError::Precondition(format!("no straightening pair for {}", bt.tag)))?;
            trace.push(format!("rank-1 pair: generator {} ↔ ∂y, generator {} ↔ x∂y", i + 1, j + 1));
            let mid = scratch(&[&adapted[0].coords, target]);
            let t1 = rank1_pair_coordinates(&adapted[i], &adapted[j], &mid, oracle)?;
            let moved = t1.transport(&adapted[r])?;
            if bt.tag == Tag::L3_1 {
                if !vanishes(&moved.xi, oracle)? {
                    return Err(TransformError::Shape(format!("third generator {moved}")));
                }
                let f = rename_expr(&restrict(&moved.eta, &mid.1, oracle)?, &mid, target);
                trace.push("free function read from the third generator".into());
                residuals.push(residual("f", f.clone()));
                let canonical = canonical_fields(bt, target, Some(&f)).expect("L3:1 with f");
                (t1.compose(&relabel(target, target).with_source(&mid)), canonical)
            } else {
                let canonical_mid = canonical_fields(bt, &mid, None).expect("catalog entry");
                let diff = moved.sub(&canonical_mid[r]);
                if !vanishes(&diff.xi, oracle)? {
                    return Err(TransformError::Shape(format!("residual {moved}")));
                }
                let h = restrict(&diff.eta, &mid.1, oracle)?;
                let t2 = if vanishes(&h, oracle)? {
                    relabel(target, target).with_source(&mid)
                } else {
                    let absorption = absorb_inhomogeneity(bt, &h, &mid, oracle)?;
                    trace.push(format!("absorbed {h} by ỹ = y + ({})", absorption.shift));
                    residuals.push(residual("g", rename_expr(&absorption.shift, &mid, target)));
                    absorption.transformation(&mid, target)
                };
                (t1.compose(&t2), probe)
            }
        }
    };
    let basis = match shift {
        None => Some(basis.clone()),
        Some((i, j, r, a, b)) => shifted_basis(basis, i, j, r, &a, &b),
    };
    Ok(TransformationResult { bianchi: bt.clone(), transformation: t, canonical, matched, basis, residuals, trace })
}

/// The adapted basis with `v_r − a v_i − b v_j` in place of `v_r`, when the
/// offsets are rational.
fn shifted_basis(basis: &AdaptedBasis, i: usize, j: usize, r: usize, a: &Expr, b: &Expr) -> Option<AdaptedBasis> {
    let (a, b) = (a.as_num()?, b.as_num()?);
    let mut v = basis.vectors();
    v[r] = (0..3).map(|k| &v[r][k] - a * &v[i][k] - b * &v[j][k]).collect();
    let [x, y, z] = v;
    Some(AdaptedBasis { x, y, z })
}

fn build_sl2(
    bt: &BianchiType,
    adapted: &[VectorField; 3],
    target: &Coords,
    oracle: &Oracle,
) -> Result<TransformationResult> {
    let (state, t) = sl2_reduce(adapted, target, oracle)?;
    let mut bianchi = bt.clone();
    let mut residuals = Vec::new();
    let mut trace = vec!["straightened Z".to_string()];
    match state.case {
        Sl2Case::A => {
            trace.push("case A: pair step, weight step, polynomial form".into());
            let eps = state.epsilon.expect("case A fixes ε");
            if state.certifying != [eps] {
                return Err(TransformError::Shape("ε is not unique".into()));
            }
            if bt.epsilon.is_some_and(|e| e != eps) {
                return Err(TransformError::Shape(format!("ε = {} disagrees with {bt}", eps.value())));
            }
            bianchi = BianchiType { epsilon: Some(eps), ..BianchiType::plain(eps.tag()) };
            residuals.push(residual("c1", state.c1.clone().unwrap()));
            residuals.push(residual("lambda", state.lambda.clone().unwrap()));
            residuals.push(residual("epsilon", Expr::int(eps.value())));
        }
        Sl2Case::B => {
            trace.push("case B: polynomial form from f₁".into());
            if bt.tag != Tag::L3_8IV {
                return Err(TransformError::Shape(format!("rank-1 reduction for {bt}")));
            }
        }
    }
    let canonical = canonical_fields(&bianchi, target, None).expect("sl(2) catalog entry");
    Ok(TransformationResult {
        bianchi,
        transformation: t,
        canonical,
        matched: adapted.clone(),
        basis: None,
        residuals,
        trace,
    })
}

fn build_so3(
    bt: &BianchiType,
    adapted: &[VectorField; 3],
    target: &Coords,
    oracle: &Oracle,
) -> Result<TransformationResult> {
    let (state, t) = so3_reduce(adapted, target, oracle)?;
    let trace = vec![
        "straightened X".to_string(),
        if state.degenerate { "closed form with f₂ ≡ 0" } else { "closed form with f₂ ≠ 0" }.to_string(),
    ];
    let residuals = ["f1", "f2", "f3", "f4"]
        .iter()
        .zip(&state.f)
        .map(|(name, value)| residual(name, rename_expr(value, &state.coords, target)))
        .collect();
    let canonical = canonical_fields(bt, target, None).expect("so(3) catalog entry");
    Ok(TransformationResult {
        bianchi: bt.clone(),
        transformation: t,
        canonical,
        matched: adapted.clone(),
        basis: None,
        residuals,
        trace,
    })
}
