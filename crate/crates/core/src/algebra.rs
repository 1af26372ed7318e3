//! Abstract three-dimensional Lie algebras: structure constants recovered from
//! vector-field triples, derived algebra, centralizers, the Killing form and
//! eigenstructure of 2×2 adjoint blocks.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::expr::eval::rational_to_f64;
use crate::expr::{Domain, Expr, Oracle, OracleError, Rational, Sampler};
use crate::linalg::Matrix;
use crate::vfield::{FieldError, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("the generators are linearly dependent as abstract vectors")]
    Dependent,
    #[error("[Y{i}, Y{j}] is not a constant combination of the generators")]
    NotClosed { i: usize, j: usize },
    #[error("subspace is not invariant under the adjoint action")]
    NotInvariant,
    #[error("fewer than {0} non-singular sample points")]
    Sampling(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// `c[i][j][k]` with `[Y_i, Y_j] = Σ_k c[i][j][k] Y_k`.
#[derive(Clone, PartialEq, Eq)]
pub struct StructureConstants {
    c: [[[Rational; 3]; 3]; 3],
}

impl fmt::Debug for StructureConstants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for StructureConstants {
    /// Nonzero brackets `[Y_i, Y_j]` with `i < j`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, j) in PAIRS {
            let v = &self.c[i][j];
            if v.iter().all(Zero::is_zero) {
                continue;
            }
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "[Y{}, Y{}] = {}", i + 1, j + 1, render_combination(v, &["Y1", "Y2", "Y3"]))?;
        }
        if first {
            write!(f, "abelian")?;
        }
        Ok(())
    }
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Render `Σ v_k names_k` with rational coefficients.
pub fn render_combination(v: &[Rational], names: &[&str]) -> String {
    let mut out = String::new();
    for (k, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let negative = c.is_negative();
        let mag = c.abs();
        if out.is_empty() {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        if !mag.is_one() {
            out.push_str(&format!("{mag}*"));
        }
        out.push_str(names[k]);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl StructureConstants {
    pub fn zero() -> StructureConstants {
        StructureConstants { c: Default::default() }
    }

    /// Build from the brackets `[Y_i, Y_j]` for `i < j` (zero-based indices).
    pub fn from_brackets(brackets: &[((usize, usize), [Rational; 3])]) -> StructureConstants {
        let mut sc = StructureConstants::zero();
        for ((i, j), v) in brackets {
            sc.set(*i, *j, v.clone());
        }
        sc
    }

    fn set(&mut self, i: usize, j: usize, v: [Rational; 3]) {
        self.c[j][i] = v.clone().map(|x| -x);
        self.c[i][j] = v;
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.c[i][j][k]
    }

    /// `[Y_i, Y_j]` as a coefficient vector.
    pub fn basis_bracket(&self, i: usize, j: usize) -> Vec<Rational> {
        self.c[i][j].to_vec()
    }

    /// Bracket of two elements given by coefficient vectors.
    pub fn bracket(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); 3];
        for i in 0..3 {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..3 {
                if b[j].is_zero() {
                    continue;
                }
                let ab = &a[i] * &b[j];
                for k in 0..3 {
                    out[k] += &ab * &self.c[i][j][k];
                }
            }
        }
        out
    }

    /// Matrix of `w ↦ [a, w]` in the basis `Y_1, Y_2, Y_3`.
    pub fn ad(&self, a: &[Rational]) -> Matrix {
        let cols: Vec<Vec<Rational>> = (0..3).map(|j| self.bracket(a, &unit(j))).collect();
        Matrix::from_columns(&cols)
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().flatten().flatten().all(Zero::is_zero)
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| (0..3).all(|k| self.c[i][j][k] == -&self.c[j][i][k])))
    }

    pub fn satisfies_jacobi(&self) -> bool {
        (0..3).all(|i| {
            (0..3).all(|j| {
                (0..3).all(|k| {
                    (0..3).all(|l| {
                        let mut s = Rational::zero();
                        for m in 0..3 {
                            s += &self.c[i][j][m] * &self.c[m][k][l];
                            s += &self.c[j][k][m] * &self.c[m][i][l];
                            s += &self.c[k][i][m] * &self.c[m][j][l];
                        }
                        s.is_zero()
                    })
                })
            })
        })
    }

    /// Structure constants in the basis whose `a`-th element is
    /// `Σ_i basis[a][i] Y_i`.
    pub fn in_basis(&self, basis: &[Vec<Rational>]) -> Option<StructureConstants> {
        let p = Matrix::from_columns(basis);
        let inv = p.inverse()?;
        let mut sc = StructureConstants::zero();
        for (a, b) in PAIRS {
            let w = inv.apply(&self.bracket(&basis[a], &basis[b]));
            sc.set(a, b, [w[0].clone(), w[1].clone(), w[2].clone()]);
        }
        Some(sc)
    }
}

pub fn unit(i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); 3];
    v[i] = Rational::one();
    v
}

const FIT_POINTS: usize = 8;
const MAX_DENOMINATOR: i64 = 1000;

/// Recover exact structure constants of a vector-field triple.
pub fn structure_constants(
    fields: &[VectorField; 3],
    oracle: &Oracle,
) -> Result<StructureConstants, AlgebraError> {
    let coords = fields[0].coords.clone();
    let mut brackets = Vec::new();
    for (i, j) in PAIRS {
        brackets.push(((i, j), fields[i].commutator(&fields[j])?));
    }
    let domain = if fields.iter().chain(brackets.iter().map(|(_, b)| b)).any(|f| {
        f.xi.has_domain_note() || f.eta.has_domain_note()
    }) {
        Domain::Positive
    } else {
        Domain::Symmetric
    };
    let mut sampler = Sampler::new(vec![coords.0.clone(), coords.1.clone()], oracle.seed, domain);
    let mut rows: Vec<([Complex64; 3], [Complex64; 3])> = Vec::new();
    let mut attempts = 0;
    while rows.len() < 2 * FIT_POINTS {
        attempts += 1;
        if attempts > FIT_POINTS * 200 {
            return Err(AlgebraError::Sampling(FIT_POINTS));
        }
        let a = sampler.next_point();
        let Ok(base) = fields.iter().map(|f| f.eval(&a)).collect::<Result<Vec<_>, _>>() else {
            continue;
        };
        let Ok(br) = brackets.iter().map(|(_, b)| b.eval(&a)).collect::<Result<Vec<_>, _>>() else {
            continue;
        };
        rows.push(([base[0].0, base[1].0, base[2].0], [br[0].0, br[1].0, br[2].0]));
        rows.push(([base[0].1, base[1].1, base[2].1], [br[0].1, br[1].1, br[2].1]));
    }
    let mut normal = [[0.0f64; 3]; 3];
    let mut rhs = [[0.0f64; 3]; 3];
    for (a, b) in &rows {
        for k in 0..3 {
            for l in 0..3 {
                normal[k][l] += (a[k].conj() * a[l]).re;
            }
            for (p, bp) in b.iter().enumerate() {
                rhs[p][k] += (a[k].conj() * bp).re;
            }
        }
    }
    let solutions = solve_normal(normal, &rhs).ok_or(AlgebraError::Dependent)?;
    let mut sc = StructureConstants::zero();
    for (p, ((i, j), bracket)) in brackets.iter().enumerate() {
        let v = solutions[p].map(|x| rationalize(x, MAX_DENOMINATOR));
        let fitted = VectorField::combination(&v, fields);
        if !bracket.equivalent(&fitted, oracle)? {
            return Err(AlgebraError::NotClosed { i: i + 1, j: j + 1 });
        }
        sc.set(*i, *j, v);
    }
    Ok(sc)
}

/// Solve `N x = b` for three right-hand sides; `None` when `N` is numerically singular.
fn solve_normal(mut n: [[f64; 3]; 3], rhs: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let scale = (0..3).map(|i| n[i][i]).fold(0.0, f64::max);
    if scale <= 0.0 {
        return None;
    }
    let mut b: Vec<[f64; 3]> = (0..3).map(|k| [rhs[0][k], rhs[1][k], rhs[2][k]]).collect();
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &c| n[a][col].abs().total_cmp(&n[c][col].abs()))?;
        if n[piv][col].abs() < 1e-10 * scale {
            return None;
        }
        n.swap(col, piv);
        b.swap(col, piv);
        for r in 0..3 {
            if r == col {
                continue;
            }
            let f = n[r][col] / n[col][col];
            for c in 0..3 {
                n[r][c] -= f * n[col][c];
            }
            for p in 0..3 {
                b[r][p] -= f * b[col][p];
            }
        }
    }
    let mut out = [[0.0; 3]; 3];
    for p in 0..3 {
        for k in 0..3 {
            out[p][k] = b[k][p] / n[k][k];
        }
    }
    Some(out)
}

/// Closest rational with denominator at most `max_den`, by continued fractions.
pub fn rationalize(x: f64, max_den: i64) -> Rational {
    if !x.is_finite() {
        return Rational::zero();
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.saturating_mul(h1).saturating_add(h0);
        let k2 = a.saturating_mul(k1).saturating_add(k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a as f64;
        if frac.abs() < 1e-12 || ((h1 as f64) / (k1 as f64) - x).abs() < 1e-13 * (1.0 + x.abs()) {
            break;
        }
        rest = 1.0 / frac;
    }
    if k1 == 0 {
        return Rational::zero();
    }
    Rational::new(h1.into(), k1.into())
}

/// A subspace of the algebra, kept as the rows of a reduced echelon basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    basis: Vec<Vec<Rational>>,
}

impl Subspace {
    pub fn span(vectors: &[Vec<Rational>]) -> Subspace {
        if vectors.is_empty() {
            return Subspace { basis: Vec::new() };
        }
        let (r, pivots) = Matrix::from_rows(vectors.to_vec()).rref();
        Subspace { basis: (0..pivots.len()).map(|i| r.row(i)).collect() }
    }

    pub fn whole() -> Subspace {
        Subspace::span(&[unit(0), unit(1), unit(2)])
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rational>] {
        &self.basis
    }

    /// Columns carrying the leading ones of the basis rows.
    pub fn pivots(&self) -> Vec<usize> {
        self.basis.iter().map(|v| v.iter().position(|x| !x.is_zero()).unwrap_or(0)).collect()
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        self.coordinates(v).is_some()
    }

    /// Coefficients of `v` in the basis, or `None` when `v` lies outside.
    pub fn coordinates(&self, v: &[Rational]) -> Option<Vec<Rational>> {
        if self.basis.is_empty() {
            return v.iter().all(Zero::is_zero).then(Vec::new);
        }
        let coords: Vec<Rational> = self.pivots().iter().map(|&p| v[p].clone()).collect();
        let mut rebuilt = vec![Rational::zero(); v.len()];
        for (c, b) in coords.iter().zip(&self.basis) {
            for (r, x) in rebuilt.iter_mut().zip(b) {
                *r += c * x;
            }
        }
        (rebuilt == v).then_some(coords)
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }
}

/// Span of all brackets.
pub fn derived_algebra(sc: &StructureConstants) -> Subspace {
    let vectors: Vec<Vec<Rational>> = PAIRS.iter().map(|&(i, j)| sc.basis_bracket(i, j)).collect();
    Subspace::span(&vectors)
}

/// Elements commuting with every element of `s`.
pub fn centralizer(sc: &StructureConstants, s: &Subspace) -> Subspace {
    if s.dim() == 0 {
        return Subspace::whole();
    }
    let mut rows = Vec::new();
    for v in s.basis() {
        let m = sc.ad(v);
        rows.extend((0..3).map(|i| m.row(i)));
    }
    Subspace::span(&Matrix::from_rows(rows).nullspace())
}

/// Counts of positive, negative and zero eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.positive, self.negative, self.zero)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KillingForm {
    pub matrix: Matrix,
    pub signature: Signature,
}

impl KillingForm {
    pub fn eval(&self, a: &[Rational], b: &[Rational]) -> Rational {
        crate::linalg::dot(a, &self.matrix.apply(b))
    }

    pub fn is_negative_definite(&self) -> bool {
        self.signature.negative == 3
    }

    pub fn is_degenerate(&self) -> bool {
        self.signature.zero > 0
    }
}

pub fn killing_form(sc: &StructureConstants) -> KillingForm {
    let ads: Vec<Matrix> = (0..3).map(|i| sc.ad(&unit(i))).collect();
    let mut k = Matrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            k[(i, j)] = ads[i].mul(&ads[j]).trace();
        }
    }
    let signature = symmetric_signature(&k);
    KillingForm { matrix: k, signature }
}

/// Signature of a symmetric rational matrix from sign changes of its
/// characteristic polynomial, exact because all roots are real.
pub fn symmetric_signature(m: &Matrix) -> Signature {
    let p = m.characteristic_polynomial();
    let zero = p.iter().position(|c| !c.is_zero()).unwrap_or(p.len() - 1);
    let reduced = &p[zero..];
    let positive = sign_changes(reduced.iter().cloned());
    let mirrored = reduced.iter().enumerate().map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() });
    let negative = sign_changes(mirrored);
    Signature { positive, negative, zero }
}

fn sign_changes(coeffs: impl Iterator<Item = Rational>) -> usize {
    let signs: Vec<bool> = coeffs.filter(|c| !c.is_zero()).map(|c| c.is_positive()).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Matrix of `w ↦ [z, w]` on `s`, columns in the basis of `s`.
pub fn adjoint_on_subspace(
    sc: &StructureConstants,
    z: &[Rational],
    s: &Subspace,
) -> Result<Matrix, AlgebraError> {
    let cols = s
        .basis()
        .iter()
        .map(|w| s.coordinates(&sc.bracket(z, w)).ok_or(AlgebraError::NotInvariant))
        .collect::<Result<Vec<_>, _>>()?;
    if cols.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    Ok(Matrix::from_columns(&cols))
}

/// `rational + coeff·√radicand` with a positive non-square radicand, or a
/// plain rational when `coeff` is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub rational: Rational,
    pub coeff: Rational,
    pub radicand: Rational,
}

impl Surd {
    pub fn from_rational(r: Rational) -> Surd {
        Surd { rational: r, coeff: Rational::zero(), radicand: Rational::one() }
    }

    /// `a + b√d`, collapsing to a rational when `d` is a perfect square.
    pub fn new(a: Rational, b: Rational, d: Rational) -> Surd {
        match rational_sqrt(&d) {
            Some(r) => Surd::from_rational(a + b * r),
            None if b.is_zero() => Surd::from_rational(a),
            None => Surd { rational: a, coeff: b, radicand: d },
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.coeff.is_zero().then_some(&self.rational)
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.rational)
            + rational_to_f64(&self.coeff) * rational_to_f64(&self.radicand).sqrt()
    }

    pub fn to_expr(&self) -> Expr {
        Expr::num(self.rational.clone())
            + Expr::num(self.coeff.clone()) * Expr::num(self.radicand.clone()).sqrt()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Exact square root of a nonnegative rational, when it is rational.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let root = |n: &BigInt| {
        let s = n.sqrt();
        (&s * &s == *n).then_some(s)
    };
    Some(Rational::new(root(r.numer())?, root(r.denom())?))
}

/// Eigenvalues and exact eigenvectors of a real 2×2 matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EigenStructure {
    /// Eigenvalues in increasing order; eigenvectors present when rational.
    DistinctReal { values: [Surd; 2], vectors: Option<[Vec<Rational>; 2]> },
    RepeatedDim2 { value: Rational },
    RepeatedDim1 { value: Rational, eigenvector: Vec<Rational> },
    /// `re ± i·im` with `im > 0`; `parts` are the real and imaginary parts of
    /// the eigenvector for `re + i·im` normalized to second component 1.
    ComplexPair { re: Rational, im: Surd, parts: Option<(Vec<Rational>, Vec<Rational>)> },
}

impl EigenStructure {
    pub fn kind(&self) -> &'static str {
        match self {
            EigenStructure::DistinctReal { .. } => "distinct real",
            EigenStructure::RepeatedDim2 { .. } => "repeated, eigenspace of dimension 2",
            EigenStructure::RepeatedDim1 { .. } => "repeated, eigenspace of dimension 1",
            EigenStructure::ComplexPair { .. } => "complex pair",
        }
    }
}

impl fmt::Display for EigenStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigenStructure::DistinctReal { values, .. } => {
                write!(f, "distinct real {}, {}", values[0], values[1])
            }
            EigenStructure::RepeatedDim2 { value } | EigenStructure::RepeatedDim1 { value, .. } => {
                write!(f, "{} {}", self.kind(), value)
            }
            EigenStructure::ComplexPair { re, im, .. } => write!(f, "complex pair {re} ± i·{im}"),
        }
    }
}

pub fn eigen_structure(m: &Matrix) -> EigenStructure {
    assert!(m.rows() == 2 && m.cols() == 2, "2×2 matrix required");
    let two = Rational::from_integer(2.into());
    let trace = m.trace();
    let det = m.determinant();
    let disc = &trace * &trace - Rational::from_integer(4.into()) * &det;
    let half = &trace / &two;
    if disc.is_zero() {
        if m.sub(&Matrix::identity(2).scale(&half)).is_zero() {
            return EigenStructure::RepeatedDim2 { value: half };
        }
        let eigenvector = eigenvector(m, &half);
        return EigenStructure::RepeatedDim1 { value: half, eigenvector };
    }
    let quarter = Rational::new(1.into(), 4.into());
    if disc.is_positive() {
        let lo = Surd::new(half.clone(), -Rational::one(), &disc * &quarter);
        let hi = Surd::new(half, Rational::one(), &disc * &quarter);
        let vectors = match (lo.as_rational(), hi.as_rational()) {
            (Some(a), Some(b)) => Some([eigenvector(m, a), eigenvector(m, b)]),
            _ => None,
        };
        return EigenStructure::DistinctReal { values: [lo, hi], vectors };
    }
    let im = Surd::new(Rational::zero(), Rational::one(), -disc * quarter);
    let parts = im.as_rational().map(|beta| {
        let m21 = &m[(1, 0)];
        let re_part = vec![(&half - &m[(1, 1)]) / m21, Rational::one()];
        let im_part = vec![beta / m21, Rational::zero()];
        (re_part, im_part)
    });
    EigenStructure::ComplexPair { re: half, im, parts }
}

/// A nonzero vector of the kernel of `m − λI`.
fn eigenvector(m: &Matrix, lambda: &Rational) -> Vec<Rational> {
    let shifted = m.sub(&Matrix::identity(2).scale(lambda));
    shifted.nullspace().into_iter().next().unwrap_or_else(|| vec![Rational::one(), Rational::zero()])
}
