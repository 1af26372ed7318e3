//! The decision tree mapping a vector-field triple to one of the seventeen
//! realization types, together with a basis adapted to the type's canonical
//! bracket relations.

use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::algebra::{
    adjoint_on_subspace, centralizer, derived_algebra, eigen_structure, killing_form,
    rational_sqrt, render_combination, structure_constants, unit, AlgebraError, EigenStructure,
    Signature, StructureConstants, Subspace, Surd,
};
use crate::expr::{eval_at, int, Domain, Expr, Oracle, Rational, Sampler};
use crate::linalg::Matrix;
use crate::vfield::{generic_rank, Coords, FieldError, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("inconsistent realization: {0}")]
    Inconsistent(String),
    #[error("could not fix the sl(2) realization: {0}")]
    Epsilon(String),
}

/// The seventeen realization labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    L3_1,
    L3_2,
    L3_3I,
    L3_3II,
    L3_4I,
    L3_4II,
    L3_5I,
    L3_5II,
    L3_6I,
    L3_6II,
    L3_7I,
    L3_7II,
    L3_8I,
    L3_8II,
    L3_8III,
    L3_8IV,
    L3_9,
}

impl Tag {
    pub const ALL: [Tag; 17] = [
        Tag::L3_1,
        Tag::L3_2,
        Tag::L3_3I,
        Tag::L3_3II,
        Tag::L3_4I,
        Tag::L3_4II,
        Tag::L3_5I,
        Tag::L3_5II,
        Tag::L3_6I,
        Tag::L3_6II,
        Tag::L3_7I,
        Tag::L3_7II,
        Tag::L3_8I,
        Tag::L3_8II,
        Tag::L3_8III,
        Tag::L3_8IV,
        Tag::L3_9,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Tag::L3_1 => "L3:1",
            Tag::L3_2 => "L3:2",
            Tag::L3_3I => "L3:3/I",
            Tag::L3_3II => "L3:3/II",
            Tag::L3_4I => "L3:4/I",
            Tag::L3_4II => "L3:4/II",
            Tag::L3_5I => "L3:5/I",
            Tag::L3_5II => "L3:5/II",
            Tag::L3_6I => "L3:6/I",
            Tag::L3_6II => "L3:6/II",
            Tag::L3_7I => "L3:7/I",
            Tag::L3_7II => "L3:7/II",
            Tag::L3_8I => "L3:8/I",
            Tag::L3_8II => "L3:8/II",
            Tag::L3_8III => "L3:8/III",
            Tag::L3_8IV => "L3:8/IV",
            Tag::L3_9 => "L3:9",
        }
    }

    pub fn from_label(s: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.label() == s)
    }

    /// Whether the two derived-algebra generators of the canonical form have rank 1.
    pub fn is_rank_one(self) -> bool {
        matches!(
            self,
            Tag::L3_1 | Tag::L3_3II | Tag::L3_4II | Tag::L3_5II | Tag::L3_6II | Tag::L3_7II | Tag::L3_8IV
        )
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The discrete parameter separating the rank-2 sl(2) realizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Epsilon {
    Zero,
    One,
    MinusOne,
}

impl Epsilon {
    pub const ALL: [Epsilon; 3] = [Epsilon::Zero, Epsilon::One, Epsilon::MinusOne];

    pub fn value(self) -> i64 {
        match self {
            Epsilon::Zero => 0,
            Epsilon::One => 1,
            Epsilon::MinusOne => -1,
        }
    }

    pub fn tag(self) -> Tag {
        match self {
            Epsilon::Zero => Tag::L3_8I,
            Epsilon::One => Tag::L3_8II,
            Epsilon::MinusOne => Tag::L3_8III,
        }
    }
}

/// A tag with its continuous or discrete parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BianchiType {
    pub tag: Tag,
    /// Eigenvalue ratio for L3:6, normalized to `|c| ≥ 1`.
    pub c: Option<Surd>,
    /// `cot θ` for L3:7, normalized to `θ ∈ [π/2, π)`.
    pub cot_theta: Option<Surd>,
    pub epsilon: Option<Epsilon>,
}

impl BianchiType {
    pub fn plain(tag: Tag) -> BianchiType {
        BianchiType { tag, c: None, cot_theta: None, epsilon: None }
    }

    /// `θ ∈ (0, π)` for L3:7.
    pub fn theta(&self) -> Option<f64> {
        self.cot_theta.as_ref().map(|b| 1f64.atan2(b.to_f64()))
    }
}

impl fmt::Display for BianchiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag)?;
        if let Some(c) = &self.c {
            write!(f, " (c = {c})")?;
        }
        if let Some(b) = &self.cot_theta {
            write!(f, " (cot θ = {b})")?;
        }
        if let Some(e) = self.epsilon {
            write!(f, " (ε = {})", e.value())?;
        }
        Ok(())
    }
}

/// Canonical generators `X, Y, Z` as coefficient vectors over the input basis.
///
/// For L3:7 the third vector is `Z / sin θ`, which keeps it rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptedBasis {
    pub x: Vec<Rational>,
    pub y: Vec<Rational>,
    pub z: Vec<Rational>,
}

impl AdaptedBasis {
    pub fn vectors(&self) -> [Vec<Rational>; 3] {
        [self.x.clone(), self.y.clone(), self.z.clone()]
    }

    /// The adapted fields built from the input generators.
    pub fn fields(&self, generators: &[VectorField; 3]) -> [VectorField; 3] {
        self.vectors().map(|v| VectorField::combination(&v, generators).simplified())
    }

    /// Whether the brackets in this basis are exactly the canonical ones.
    pub fn certifies(&self, sc: &StructureConstants, bt: &BianchiType) -> bool {
        match (sc.in_basis(&self.vectors()), canonical_structure(bt)) {
            (Some(adapted), Some(canonical)) => adapted == canonical,
            _ => false,
        }
    }
}

impl fmt::Display for AdaptedBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["Y1", "Y2", "Y3"];
        write!(
            f,
            "X = {}, Y = {}, Z = {}",
            render_combination(&self.x, &names),
            render_combination(&self.y, &names),
            render_combination(&self.z, &names)
        )
    }
}

/// Quantities the decision tree branched on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostics {
    pub dim_derived: usize,
    pub dim_centralizer: Option<usize>,
    /// Rank of the derived algebra, of the centralizer, or of the whole
    /// algebra, as the branch requires.
    pub rank: Option<(RankOf, usize)>,
    pub adjoint: Option<Matrix>,
    pub eigen: Option<EigenStructure>,
    pub killing: Signature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankOf {
    Algebra,
    Derived,
    Centralizer,
}

impl fmt::Display for RankOf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankOf::Algebra => "G",
            RankOf::Derived => "G'",
            RankOf::Centralizer => "Z_G(G')",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationReport {
    pub bianchi: BianchiType,
    pub structure: StructureConstants,
    /// Absent when the adapted basis would need irrational coefficients.
    pub adapted: Option<AdaptedBasis>,
    pub diagnostics: Diagnostics,
}

/// Classify the algebra spanned by three vector fields.
pub fn classify(
    generators: &[VectorField; 3],
    oracle: &Oracle,
) -> Result<ClassificationReport, ClassifyError> {
    let sc = structure_constants(generators, oracle)?;
    classify_with(&sc, generators, oracle)
}

/// Classify from already computed structure constants.
pub fn classify_with(
    sc: &StructureConstants,
    generators: &[VectorField; 3],
    oracle: &Oracle,
) -> Result<ClassificationReport, ClassifyError> {
    let derived = derived_algebra(sc);
    let killing = killing_form(sc);
    let mut diagnostics = Diagnostics {
        dim_derived: derived.dim(),
        dim_centralizer: None,
        rank: None,
        adjoint: None,
        eigen: None,
        killing: killing.signature,
    };
    let rank_of = |vectors: &[Vec<Rational>]| -> Result<usize, ClassifyError> {
        let fields: Vec<VectorField> =
            vectors.iter().map(|v| VectorField::combination(v, generators)).collect();
        Ok(generic_rank(&fields)?)
    };
    let (bianchi, adapted) = match derived.dim() {
        0 => {
            let rank = rank_of(Subspace::whole().basis())?;
            diagnostics.rank = Some((RankOf::Algebra, rank));
            if rank != 1 {
                return Err(ClassifyError::Inconsistent(format!(
                    "abelian algebra of rank {rank}; only rank 1 is realizable"
                )));
            }
            let basis = AdaptedBasis { x: unit(0), y: unit(1), z: unit(2) };
            (BianchiType::plain(Tag::L3_1), Some(basis))
        }
        1 => {
            let cent = centralizer(sc, &derived);
            diagnostics.dim_centralizer = Some(cent.dim());
            match cent.dim() {
                3 => (BianchiType::plain(Tag::L3_2), Some(heisenberg_basis(sc, &derived, generators)?)),
                2 => {
                    let rank = rank_of(cent.basis())?;
                    diagnostics.rank = Some((RankOf::Centralizer, rank));
                    let tag = if rank == 2 { Tag::L3_4I } else { Tag::L3_4II };
                    (BianchiType::plain(tag), Some(centralizer_basis(sc, &derived, &cent)))
                }
                d => {
                    return Err(ClassifyError::Inconsistent(format!(
                        "one-dimensional derived algebra with centralizer of dimension {d}"
                    )))
                }
            }
        }
        2 => {
            let rank = rank_of(derived.basis())?;
            diagnostics.rank = Some((RankOf::Derived, rank));
            let rep = representative(&derived);
            let m = adjoint_on_subspace(sc, &rep, &derived)?;
            let eigen = eigen_structure(&m);
            diagnostics.adjoint = Some(m.clone());
            diagnostics.eigen = Some(eigen.clone());
            solvable_case(&derived, &rep, &m, &eigen, rank == 2)?
        }
        _ => {
            if killing.is_negative_definite() {
                (BianchiType::plain(Tag::L3_9), so3_basis(sc))
            } else if killing.is_degenerate() {
                return Err(ClassifyError::Inconsistent("perfect algebra with degenerate Killing form".into()));
            } else {
                let rank = rank_of(Subspace::whole().basis())?;
                diagnostics.rank = Some((RankOf::Algebra, rank));
                let basis = sl2_basis(sc);
                let bianchi = if rank == 1 {
                    BianchiType::plain(Tag::L3_8IV)
                } else {
                    let eps = orbit_type(&killing.matrix, generators, oracle)?;
                    BianchiType { epsilon: Some(eps), ..BianchiType::plain(eps.tag()) }
                };
                (bianchi, basis)
            }
        }
    };
    if let Some(b) = &adapted {
        if !b.certifies(sc, &bianchi) {
            return Err(ClassifyError::Inconsistent(format!(
                "adapted basis {b} does not reproduce the {} brackets",
                bianchi.tag
            )));
        }
    }
    Ok(ClassificationReport { bianchi, structure: sc.clone(), adapted, diagnostics })
}

/// Input generator at the first non-pivot column of the derived algebra.
fn representative(derived: &Subspace) -> Vec<Rational> {
    let pivots = derived.pivots();
    let free = (0..3).find(|i| !pivots.contains(i)).unwrap_or(0);
    unit(free)
}

fn embed(derived: &Subspace, coords: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); 3];
    for (c, b) in coords.iter().zip(derived.basis()) {
        for (o, x) in out.iter_mut().zip(b) {
            *o += c * x;
        }
    }
    out
}

fn scaled(v: &[Rational], k: &Rational) -> Vec<Rational> {
    v.iter().map(|x| x * k).collect()
}

fn solvable_case(
    derived: &Subspace,
    rep: &[Rational],
    m: &Matrix,
    eigen: &EigenStructure,
    full_rank: bool,
) -> Result<(BianchiType, Option<AdaptedBasis>), ClassifyError> {
    let pick = |one: Tag, two: Tag| if full_rank { one } else { two };
    let lift = |coords: &[Rational]| embed(derived, coords);
    Ok(match eigen {
        EigenStructure::RepeatedDim1 { value, eigenvector } => {
            let eigenspace = Subspace::span(std::slice::from_ref(eigenvector));
            let x = (0..2).map(unit2).find(|e| !eigenspace.contains(e)).unwrap_or_else(|| unit2(0));
            let shifted = m.scale(&value.recip()).sub(&Matrix::identity(2));
            let y = shifted.apply(&x);
            let basis = AdaptedBasis { x: lift(&x), y: lift(&y), z: scaled(rep, &value.recip()) };
            (BianchiType::plain(pick(Tag::L3_3I, Tag::L3_3II)), Some(basis))
        }
        EigenStructure::RepeatedDim2 { value } => {
            let basis = AdaptedBasis {
                x: lift(&unit2(0)),
                y: lift(&unit2(1)),
                z: scaled(rep, &value.recip()),
            };
            (BianchiType::plain(pick(Tag::L3_5I, Tag::L3_5II)), Some(basis))
        }
        EigenStructure::DistinctReal { values, vectors } => {
            // The eigenvalue of smaller magnitude is scaled to one.
            let (lo, hi) = (&values[0], &values[1]);
            let first_small = lo.to_f64().abs() < hi.to_f64().abs()
                || (lo.to_f64().abs() == hi.to_f64().abs() && lo.to_f64() > 0.0);
            let (l1, l2, i1, i2) = if first_small { (lo, hi, 0, 1) } else { (hi, lo, 1, 0) };
            let c = surd_ratio(l2, l1);
            let bianchi = BianchiType { c: Some(c), ..BianchiType::plain(pick(Tag::L3_6I, Tag::L3_6II)) };
            let basis = match (vectors, l1.as_rational()) {
                (Some(vs), Some(l1)) => Some(AdaptedBasis {
                    x: lift(&vs[i1]),
                    y: lift(&vs[i2]),
                    z: scaled(rep, &l1.recip()),
                }),
                _ => None,
            };
            (bianchi, basis)
        }
        EigenStructure::ComplexPair { re, .. } => {
            // θ and π − θ give isomorphic algebras; flip Z so that cos θ ≤ 0.
            let (m, rep, sign) = if re.is_positive() {
                (m.scale(&int(-1)), scaled(rep, &int(-1)), -1)
            } else {
                (m.clone(), rep.to_vec(), 1)
            };
            let EigenStructure::ComplexPair { re, im, parts } = eigen_structure(&m) else {
                unreachable!("negating a matrix keeps complex eigenvalues")
            };
            debug_assert!(sign == 1 || !re.is_positive());
            let cot = match im.as_rational() {
                Some(beta) => Surd::from_rational(&re / beta),
                None => Surd::new(Rational::zero(), &re / &im.coeff / &im.radicand, im.radicand.clone()),
            };
            let bianchi =
                BianchiType { cot_theta: Some(cot), ..BianchiType::plain(pick(Tag::L3_7I, Tag::L3_7II)) };
            let basis = match (parts, im.as_rational()) {
                (Some((real, imag)), Some(beta)) => Some(AdaptedBasis {
                    x: lift(&real),
                    y: lift(&imag),
                    z: scaled(&rep, &beta.recip()),
                }),
                _ => None,
            };
            (bianchi, basis)
        }
    })
}

fn unit2(i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); 2];
    v[i] = Rational::one();
    v
}

/// `num / den` for conjugate or rational surds sharing a radicand.
fn surd_ratio(num: &Surd, den: &Surd) -> Surd {
    if let (Some(a), Some(b)) = (num.as_rational(), den.as_rational()) {
        return Surd::from_rational(a / b);
    }
    // (p + q√d) / (r + s√d) = (p + q√d)(r − s√d) / (r² − s²d)
    let d = if num.coeff.is_zero() { &den.radicand } else { &num.radicand };
    let (p, q) = (&num.rational, &num.coeff);
    let (r, s) = (&den.rational, &den.coeff);
    let norm = r * r - s * s * d;
    Surd::new((p * r - q * s * d) / &norm, (q * r - p * s) / &norm, d.clone())
}

/// `[X, Y] = Z` with `X` pointwise independent of `Z`.
fn heisenberg_basis(
    sc: &StructureConstants,
    derived: &Subspace,
    generators: &[VectorField; 3],
) -> Result<AdaptedBasis, ClassifyError> {
    let z = derived.basis()[0].clone();
    let pivot = derived.pivots()[0];
    let free: Vec<usize> = (0..3).filter(|&i| i != pivot).collect();
    let z_field = VectorField::combination(&z, generators);
    let (a, b) = (unit(free[0]), unit(free[1]));
    let a_rank = generic_rank(&[VectorField::combination(&a, generators), z_field])?;
    let (x, other) = if a_rank == 2 { (a, b) } else { (b, scaled(&a, &int(-1))) };
    let kappa = derived.coordinates(&sc.bracket(&x, &other)).map(|c| c[0].clone()).unwrap_or_default();
    if kappa.is_zero() {
        return Err(ClassifyError::Inconsistent("complement of the centre is abelian".into()));
    }
    Ok(AdaptedBasis { x, y: scaled(&other, &kappa.recip()), z })
}

/// `[X, Z] = Z`, `[X, Y] = 0`, `Y` in the centralizer.
fn centralizer_basis(sc: &StructureConstants, derived: &Subspace, cent: &Subspace) -> AdaptedBasis {
    let z = derived.basis()[0].clone();
    let pivots = cent.pivots();
    let free = (0..3).find(|i| !pivots.contains(i)).unwrap_or(0);
    let e = unit(free);
    let mu = derived.coordinates(&sc.bracket(&e, &z)).map(|c| c[0].clone()).unwrap_or_default();
    let x = scaled(&e, &mu.recip());
    let span_z = Subspace::span(std::slice::from_ref(&z));
    let yc = cent.basis().iter().find(|v| !span_z.contains(v)).cloned().unwrap_or_else(|| unit(0));
    let nu = derived.coordinates(&sc.bracket(&x, &yc)).map(|c| c[0].clone()).unwrap_or_default();
    let y: Vec<Rational> = yc.iter().zip(&z).map(|(a, b)| a - &nu * b).collect();
    AdaptedBasis { x, y, z }
}

/// Candidate elements: the generators, then small integer combinations.
fn candidates() -> Vec<Vec<Rational>> {
    let mut out: Vec<Vec<Rational>> = (0..3).map(unit).collect();
    let mut rest = Vec::new();
    for a in -2i64..=2 {
        for b in -2i64..=2 {
            for c in -2i64..=2 {
                let v = vec![int(a), int(b), int(c)];
                if (a, b, c) != (0, 0, 0) && !out.contains(&v) {
                    rest.push((a.abs() + b.abs() + c.abs(), v));
                }
            }
        }
    }
    rest.sort_by_key(|(n, _)| *n);
    out.extend(rest.into_iter().map(|(_, v)| v));
    out
}

/// `[Z, X] = 2X`, `[Z, Y] = −2Y`, `[X, Y] = Z` from a split element with
/// rational adjoint eigenvalues.
pub fn sl2_basis(sc: &StructureConstants) -> Option<AdaptedBasis> {
    let k = killing_form(sc);
    let two = int(2);
    for h in candidates() {
        let half = k.eval(&h, &h) / &two;
        if !half.is_positive() {
            continue;
        }
        let Some(lambda) = rational_sqrt(&half) else { continue };
        let z = scaled(&h, &(&two / &lambda));
        let ad = sc.ad(&z);
        let eigvec = |mu: i64| {
            ad.sub(&Matrix::identity(3).scale(&int(mu))).nullspace().into_iter().next()
        };
        let (Some(x), Some(y)) = (eigvec(2), eigvec(-2)) else { continue };
        let xy = sc.bracket(&x, &y);
        let line = Subspace::span(std::slice::from_ref(&z));
        let (Some(along), Some(unit_z)) = (line.coordinates(&xy), line.coordinates(&z)) else {
            continue;
        };
        let kappa = &along[0] / &unit_z[0];
        if kappa.is_zero() {
            continue;
        }
        return Some(AdaptedBasis { x, y: scaled(&y, &kappa.recip()), z });
    }
    None
}

/// `[X, Y] = Z`, `[Y, Z] = X`, `[Z, X] = Y` with Killing-orthonormal `X, Y`.
pub fn so3_basis(sc: &StructureConstants) -> Option<AdaptedBasis> {
    let k = killing_form(sc);
    let normalize = |v: &[Rational]| -> Option<Vec<Rational>> {
        let s = rational_sqrt(&(int(-2) / k.eval(v, v)))?;
        Some(scaled(v, &s))
    };
    for cand in candidates() {
        let Some(x) = normalize(&cand) else { continue };
        let row = Matrix::from_rows(vec![k.matrix.apply(&x)]);
        let complement = row.nullspace();
        let mut options: Vec<Vec<Rational>> = complement.iter().rev().cloned().collect();
        if complement.len() == 2 {
            for (p, q) in [(1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)] {
                options.push(
                    complement[0].iter().zip(&complement[1]).map(|(a, b)| a * int(p) + b * int(q)).collect(),
                );
            }
        }
        for option in options {
            let Some(y) = normalize(&option) else { continue };
            let z = sc.bracket(&x, &y);
            return Some(AdaptedBasis { x, y, z });
        }
    }
    None
}

/// Brackets of the canonical generators `X, Y, Z` (in that order).
pub fn canonical_structure(bt: &BianchiType) -> Option<StructureConstants> {
    let (x, y, z) = (0, 1, 2);
    let v = |a: Rational, b: Rational, c: Rational| [a, b, c];
    let (o, one) = (Rational::zero, Rational::one);
    let sc = match bt.tag {
        Tag::L3_1 => StructureConstants::zero(),
        Tag::L3_2 => StructureConstants::from_brackets(&[((x, y), v(o(), o(), one()))]),
        Tag::L3_3I | Tag::L3_3II => StructureConstants::from_brackets(&[
            ((x, z), v(-one(), -one(), o())),
            ((y, z), v(o(), -one(), o())),
        ]),
        Tag::L3_4I | Tag::L3_4II => StructureConstants::from_brackets(&[((x, z), v(o(), o(), one()))]),
        Tag::L3_5I | Tag::L3_5II => StructureConstants::from_brackets(&[
            ((x, z), v(-one(), o(), o())),
            ((y, z), v(o(), -one(), o())),
        ]),
        Tag::L3_6I | Tag::L3_6II => {
            let c = bt.c.as_ref()?.as_rational()?.clone();
            StructureConstants::from_brackets(&[((x, z), v(-one(), o(), o())), ((y, z), v(o(), -c, o()))])
        }
        Tag::L3_7I | Tag::L3_7II => {
            let b = bt.cot_theta.as_ref()?.as_rational()?.clone();
            StructureConstants::from_brackets(&[
                ((x, z), v(-b.clone(), one(), o())),
                ((y, z), v(-one(), -b, o())),
            ])
        }
        Tag::L3_8I | Tag::L3_8II | Tag::L3_8III | Tag::L3_8IV => StructureConstants::from_brackets(&[
            ((x, y), v(o(), o(), one())),
            ((x, z), v(int(-2), o(), o())),
            ((y, z), v(o(), int(2), o())),
        ]),
        Tag::L3_9 => StructureConstants::from_brackets(&[
            ((x, y), v(o(), o(), one())),
            ((x, z), v(o(), -one(), o())),
            ((y, z), v(one(), o(), o())),
        ]),
    };
    Some(sc)
}

/// Canonical generators in coordinates `(x, y)`.
///
/// L3:1 takes its residual function `f(x)`; L3:7 uses `Z / sin θ`; the
/// rank-2 sl(2) realizations need `ε`.
pub fn canonical_fields(bt: &BianchiType, coords: &Coords, residual: Option<&Expr>) -> Option<[VectorField; 3]> {
    let (x, y) = (coords.first(), coords.second());
    let f = |xi: Expr, eta: Expr| VectorField::new(xi, eta, coords.clone());
    let zero = Expr::zero;
    let one = Expr::one;
    let dx = || f(one(), zero());
    let dy = || f(zero(), one());
    let x_dy = || f(zero(), x.clone());
    let fields = match bt.tag {
        Tag::L3_1 => [dy(), x_dy(), f(zero(), residual?.clone())],
        Tag::L3_2 => [dx(), x_dy(), dy()],
        Tag::L3_3I => [dx(), dy(), f(-&x, -(&x + &y))],
        Tag::L3_3II => [x_dy(), dy(), f(one(), -&y)],
        Tag::L3_4I => [f(zero(), -&y), dx(), dy()],
        Tag::L3_4II => [f(-&x, -&y), x_dy(), dy()],
        Tag::L3_5I => [dx(), dy(), f(-&x, -&y)],
        Tag::L3_5II => [dy(), x_dy(), f(zero(), -&y)],
        Tag::L3_6I => {
            let c = bt.c.as_ref()?.to_expr();
            [dx(), dy(), f(-&x, -(c * &y))]
        }
        Tag::L3_6II => {
            let c = bt.c.as_ref()?.to_expr();
            [dy(), x_dy(), f((c - one()) * &x, -&y)]
        }
        Tag::L3_7I => {
            let b = bt.cot_theta.as_ref()?.to_expr();
            [dx(), dy(), f(-(&b * &x) - &y, &x - &b * &y)]
        }
        Tag::L3_7II => {
            let b = bt.cot_theta.as_ref()?.to_expr();
            [dy(), x_dy(), f(one() + x.powi(2), &y * (&x - b))]
        }
        Tag::L3_8I | Tag::L3_8II | Tag::L3_8III => {
            let eps = Expr::int(bt.epsilon.or(match bt.tag {
                Tag::L3_8I => Some(Epsilon::Zero),
                Tag::L3_8II => Some(Epsilon::One),
                _ => Some(Epsilon::MinusOne),
            })?.value());
            let y_field = f(int_expr(-2) * &x * &y, eps * x.powi(2) - y.powi(2));
            [dy(), y_field, f(int_expr(-2) * &x, int_expr(-2) * &y)]
        }
        Tag::L3_8IV => [dy(), f(zero(), -y.powi(2)), f(zero(), int_expr(-2) * &y)],
        Tag::L3_9 => {
            let (s, c) = (Expr::apply(crate::expr::Func::Sin, x.clone()), Expr::apply(crate::expr::Func::Cos, x.clone()));
            let q = one() + y.powi(2);
            [dx(), f(&y * &s, &q * &c), f(&y * &c, -(&q * &s))]
        }
    };
    Some(fields)
}

/// `ε` as the sign of `det g` for `g = Σ K⁻¹_ab V_a ⊗ V_b`.
///
/// `g` does not depend on the basis and `det g` changes by a squared
/// Jacobian under point transformations; on the canonical realization it is
/// `ε x⁴ / 4`.
pub fn orbit_type(killing: &Matrix, generators: &[VectorField; 3], oracle: &Oracle) -> Result<Epsilon, ClassifyError> {
    let inverse = killing
        .inverse()
        .ok_or_else(|| ClassifyError::Inconsistent("degenerate Killing form".into()))?;
    let mut g = [Expr::zero(), Expr::zero(), Expr::zero()];
    for a in 0..3 {
        for b in 0..3 {
            let k = &inverse[(a, b)];
            if k.is_zero() {
                continue;
            }
            let (va, vb) = (&generators[a], &generators[b]);
            let k = Expr::num(k.clone());
            g[0] = &g[0] + &k * &va.xi * &vb.xi;
            g[1] = &g[1] + &k * &va.xi * &vb.eta;
            g[2] = &g[2] + &k * &va.eta * &vb.eta;
        }
    }
    let det = crate::expr::simplify(&(&g[0] * &g[2] - g[1].powi(2)));
    if oracle.is_zero(&det).map_err(FieldError::from)? {
        return Ok(Epsilon::Zero);
    }
    let vars: Vec<String> = det.free_vars().into_iter().collect();
    let domain = if det.has_domain_note() { Domain::Positive } else { Domain::Symmetric };
    let mut sampler = Sampler::new(vars, oracle.seed, domain);
    let (mut positive, mut negative) = (0, 0);
    for _ in 0..oracle.points * 4 {
        let Ok(v) = eval_at(&det, &sampler.next_point()) else { continue };
        if v.im.abs() > oracle.tol * (1.0 + v.re.abs()) || v.re.abs() <= oracle.tol {
            continue;
        }
        if v.re > 0.0 {
            positive += 1;
        } else {
            negative += 1;
        }
        if positive + negative == oracle.points {
            break;
        }
    }
    match (positive, negative) {
        (p, 0) if p > 0 => Ok(Epsilon::One),
        (0, n) if n > 0 => Ok(Epsilon::MinusOne),
        (p, n) => Err(ClassifyError::Epsilon(format!("orbit invariant {det} changes sign ({p} positive, {n} negative samples)"))),
    }
}

fn int_expr(n: i64) -> Expr {
    Expr::int(n)
}
