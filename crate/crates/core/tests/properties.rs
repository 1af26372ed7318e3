mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use bianchi::algebra::{centralizer, derived_algebra, killing_form, unit, StructureConstants};
use bianchi::classify::{canonical_fields, canonical_structure, classify, orbit_type, BianchiType, Epsilon, Tag};
use bianchi::expr::integrate::coefficients_in;
use bianchi::expr::{differentiate, integrate_pattern, parse, simplify, Expr, Func, Oracle, Rational};
use bianchi::linalg::Matrix;
use bianchi::vfield::{is_symmetry, prolong, Coords, PointTransformation, VectorField};
use common::{oracle, p, Worked};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    rational().prop_filter("nonzero", |r| *r != q(0, 1))
}

fn coords() -> Coords {
    Coords::new("x", "y")
}

// ----- expressions -----

/// Dense polynomial in `x, y` as `(i, j) -> coefficient of x^i y^j`.
type Dense = BTreeMap<(u32, u32), Rational>;

fn dense(max_degree: u32) -> impl Strategy<Value = Dense> {
    prop::collection::vec(((0..=max_degree, 0..=max_degree), rational()), 0..6).prop_map(move |terms| {
        let mut out = Dense::new();
        for ((i, j), c) in terms {
            if i + j <= max_degree {
                *out.entry((i, j)).or_insert_with(|| q(0, 1)) += c;
            }
        }
        out.retain(|_, c| *c != q(0, 1));
        out
    })
}

fn dense_product(a: &Dense, b: &Dense) -> Dense {
    let mut out = Dense::new();
    for ((i1, j1), c1) in a {
        for ((i2, j2), c2) in b {
            *out.entry((i1 + i2, j1 + j2)).or_insert_with(|| q(0, 1)) += c1 * c2;
        }
    }
    out.retain(|_, c| *c != q(0, 1));
    out
}

fn monomial(i: u32, j: u32, c: &Rational) -> Expr {
    Expr::num(c.clone()) * Expr::var("x").powi(i as i64) * Expr::var("y").powi(j as i64)
}

fn dense_expr(d: &Dense, reversed: bool) -> Expr {
    let mut terms: Vec<Expr> = d.iter().map(|((i, j), c)| monomial(*i, *j, c)).collect();
    if reversed {
        terms.reverse();
    }
    Expr::add(terms)
}

/// Small expression trees over `x, y` that stay finite on the sampling box.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        rational().prop_map(Expr::num),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 1i64..=3).prop_map(|(a, n)| a.powi(n)),
            inner.clone().prop_map(|a| Expr::apply(Func::Exp, a)),
            inner.clone().prop_map(|a| Expr::apply(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::apply(Func::Ln, Expr::one() + a.powi(2))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn normalization_is_canonical_on_polynomials(a in dense(3), b in dense(3)) {
        let factored = dense_expr(&a, false) * dense_expr(&b, true);
        let expanded = dense_expr(&dense_product(&a, &b), true);
        prop_assert_eq!(simplify(&factored), simplify(&expanded));
    }

    #[test]
    fn term_order_does_not_matter(a in dense(6)) {
        prop_assert_eq!(dense_expr(&a, false), dense_expr(&a, true));
    }

    #[test]
    fn render_then_parse_round_trips(e in smooth_expr()) {
        prop_assert_eq!(parse(&e.to_string()).unwrap(), e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn differentiation_is_linear(a in smooth_expr(), b in smooth_expr(), k in rational()) {
        let left = differentiate(&(&a + &(Expr::num(k.clone()) * &b)), "x");
        let right = differentiate(&a, "x") + Expr::num(k) * differentiate(&b, "x");
        prop_assert!(oracle().equivalent(&left, &right).unwrap());
    }

    #[test]
    fn product_rule(a in smooth_expr(), b in smooth_expr()) {
        let left = differentiate(&(&a * &b), "y");
        let right = differentiate(&a, "y") * &b + &a * differentiate(&b, "y");
        prop_assert!(oracle().equivalent(&left, &right).unwrap());
    }

    #[test]
    fn equivalence_is_reflexive_and_symmetric(a in smooth_expr(), b in smooth_expr()) {
        let oracle = oracle();
        prop_assert!(oracle.equivalent(&a, &a).unwrap());
        prop_assert_eq!(oracle.equivalent(&a, &b).ok(), oracle.equivalent(&b, &a).ok());
    }
}

fn linear() -> impl Strategy<Value = Expr> {
    (nonzero_rational(), rational()).prop_map(|(a, b)| Expr::num(a) * Expr::var("x") + Expr::num(b))
}

fn integrand() -> impl Strategy<Value = Expr> {
    let x = || Expr::var("x");
    prop_oneof![
        dense(4).prop_map(|d| dense_expr(&d, false).subst("y", &Expr::one())),
        (linear(), 0i64..=3).prop_map(move |(l, n)| x().powi(n) * Expr::apply(Func::Exp, l)),
        (linear(), 0i64..=2).prop_map(move |(l, n)| x().powi(n) * Expr::apply(Func::Cos, l)),
        (linear(), 1i64..=3).prop_map(|(l, n)| Expr::recip(&l.powi(n))),
        (rational(), rational())
            .prop_filter("distinct roots", |(a, b)| a != b)
            .prop_map(move |(a, b)| Expr::recip(&((x() - Expr::num(a)) * (x() - Expr::num(b))))),
        (nonzero_rational(), rational()).prop_map(move |(a, b)| Expr::recip(&(x().powi(2) + Expr::num(&a * &a))) * Expr::num(b)),
        linear().prop_map(|l| Expr::apply(Func::Ln, l)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn antiderivatives_differentiate_back(f in integrand()) {
        let antiderivative = integrate_pattern(&f, "x");
        prop_assert!(antiderivative.is_ok(), "no antiderivative for {}", f);
        let check = Oracle::new(1e-9, 50, 7);
        prop_assert!(check.equivalent(&differentiate(&antiderivative.unwrap(), "x"), &f).unwrap());
    }
}

// ----- vector fields -----

fn quadratic_field() -> impl Strategy<Value = VectorField> {
    (dense(2), dense(2)).prop_map(|(a, b)| {
        let at = |d: &Dense| dense_expr(d, false);
        VectorField::new(at(&a), at(&b), coords())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn first_prolongation_is_at_most_quadratic(field in quadratic_field()) {
        let zetas = prolong(&field, 2);
        let first = coefficients_in(&simplify(&zetas[0]), "y1").expect("polynomial in y1");
        prop_assert!(first.len() <= 3);
        let second = coefficients_in(&simplify(&zetas[1]), "y2").expect("polynomial in y2");
        prop_assert!(second.len() <= 2);
    }

    #[test]
    fn commutator_is_antisymmetric(a in quadratic_field(), b in quadratic_field()) {
        let sum = a.commutator(&b).unwrap().add(&b.commutator(&a).unwrap());
        prop_assert!(sum.simplified().is_structurally_zero());
    }

    #[test]
    fn affine_maps_are_nondegenerate_iff_invertible(
        m in prop::array::uniform4(rational()),
        shift in prop::array::uniform2(rational()),
    ) {
        let [a, b, c, d] = m;
        let x = Expr::var("x");
        let y = Expr::var("y");
        let phi = Expr::num(a.clone()) * &x + Expr::num(b.clone()) * &y + Expr::num(shift[0].clone());
        let psi = Expr::num(c.clone()) * &x + Expr::num(d.clone()) * &y + Expr::num(shift[1].clone());
        let t = PointTransformation::new(phi, psi, Coords::new("u", "v"), coords());
        let invertible = &a * &d - &b * &c != q(0, 1);
        prop_assert_eq!(t.is_nondegenerate(&oracle()).unwrap(), invertible);
    }
}

/// Symmetries survive the change of variables, and a perturbed field stays a non-symmetry.
#[test]
fn symmetry_is_invariant_under_transform_ode() {
    let oracle = oracle();
    for n in [3, 9, 13] {
        let worked = Worked::run(n);
        let t = &worked.solved().transformation;
        let ode = common::ode(n);
        let transformed = t.transform_ode(&ode).unwrap();
        for (k, g) in worked.generators.iter().enumerate() {
            let pushed = t.transport(g).unwrap();
            assert!(is_symmetry(g, &ode, &oracle).unwrap());
            assert!(is_symmetry(&pushed, &transformed, &oracle).unwrap(), "example {n}, Y{}", k + 1);
        }
        let mut bent = worked.generators[2].clone();
        bent.eta = &bent.eta + p("u");
        let pushed = t.transport(&bent).unwrap();
        assert!(!is_symmetry(&bent, &ode, &oracle).unwrap(), "example {n}");
        assert!(!is_symmetry(&pushed, &transformed, &oracle).unwrap(), "example {n}");
    }
}

// ----- algebras -----

const SOLVABLE: [Tag; 13] = [
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
    Tag::L3_8IV,
];

fn typed(tag: Tag, parameter: &Rational) -> BianchiType {
    let mut bt = BianchiType::plain(tag);
    match tag {
        Tag::L3_6I | Tag::L3_6II => bt.c = Some(bianchi::algebra::Surd::from_rational(parameter.clone())),
        Tag::L3_7I | Tag::L3_7II => bt.cot_theta = Some(bianchi::algebra::Surd::from_rational(parameter.clone())),
        _ => {}
    }
    bt
}

fn invertible() -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3i64..=3, 9)
        .prop_map(|entries| Matrix::from_rows(entries.chunks(3).map(|r| r.iter().map(|&e| q(e, 1)).collect()).collect()))
        .prop_filter("invertible", |m| m.rank() == 3)
}

fn changed(sc: &StructureConstants, m: &Matrix) -> StructureConstants {
    let basis: Vec<Vec<Rational>> = (0..3).map(|i| m.row(i)).collect();
    sc.in_basis(&basis).expect("basis")
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn structure_identities_survive_basis_changes(
        index in 0usize..17,
        parameter in (2i64..=5, 1i64..=2).prop_map(|(n, d)| q(n, d)),
        m in invertible(),
    ) {
        let sc = canonical_structure(&typed(Tag::ALL[index], &parameter)).unwrap();
        let moved = changed(&sc, &m);
        prop_assert!(moved.is_antisymmetric() && moved.satisfies_jacobi());
        prop_assert_eq!(derived_algebra(&moved).dim(), derived_algebra(&sc).dim());
        prop_assert_eq!(killing_form(&moved).signature, killing_form(&sc).signature);
        let k = killing_form(&moved);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    prop_assert_eq!(
                        k.eval(&moved.bracket(&unit(a), &unit(b)), &unit(c)),
                        k.eval(&unit(a), &moved.bracket(&unit(b), &unit(c)))
                    );
                }
            }
        }
    }

    #[test]
    fn derived_algebra_is_an_ideal_inside_its_centralizer(index in 0usize..13, m in invertible()) {
        let sc = changed(&canonical_structure(&typed(SOLVABLE[index], &q(3, 1))).unwrap(), &m);
        let derived = derived_algebra(&sc);
        for v in derived.basis() {
            for i in 0..3 {
                prop_assert!(derived.contains(&sc.bracket(&unit(i), v)));
            }
        }
        if derived.dim() <= 2 && derived.basis().iter().all(|a| derived.basis().iter().all(|b| sc.bracket(a, b).iter().all(|c| *c == q(0, 1)))) {
            prop_assert!(centralizer(&sc, &derived).contains_subspace(&derived));
        }
    }
}

fn eigen_triple(a: &Rational, b: &Rational) -> [VectorField; 3] {
    let z = VectorField::new(Expr::num(a.clone()) * Expr::var("x"), Expr::num(b.clone()) * Expr::var("y"), coords());
    [VectorField::new(Expr::one(), Expr::zero(), coords()), VectorField::new(Expr::zero(), Expr::one(), coords()), z]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn eigenvalue_ratio_is_normalized_once(a in nonzero_rational(), b in nonzero_rational(), k in nonzero_rational()) {
        prop_assume!(a != b);
        let oracle = oracle();
        let c = classify(&eigen_triple(&a, &b), &oracle).unwrap().bianchi;
        prop_assert_eq!(c.tag, Tag::L3_6I);
        let value = c.c.clone().unwrap().as_rational().cloned().unwrap();
        prop_assert!(value.numer().magnitude() >= value.denom().magnitude());
        let swapped = classify(&eigen_triple(&b, &a), &oracle).unwrap().bianchi;
        prop_assert_eq!(&swapped, &c);
        let scaled = classify(&eigen_triple(&(&a * &k), &(&b * &k)), &oracle).unwrap().bianchi;
        prop_assert_eq!(&scaled, &c);
        let again = classify(&eigen_triple(&q(1, 1), &value), &oracle).unwrap().bianchi;
        prop_assert_eq!(again, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn orbit_type_is_basis_independent(which in 0usize..3, m in invertible()) {
        let eps = Epsilon::ALL[which];
        let fields = canonical_fields(&BianchiType { epsilon: Some(eps), ..BianchiType::plain(eps.tag()) }, &coords(), None).unwrap();
        let rows: Vec<Vec<Rational>> = (0..3).map(|i| m.row(i)).collect();
        let moved: [VectorField; 3] = std::array::from_fn(|i| VectorField::combination(&rows[i], &fields).simplified());
        let report = classify(&moved, &oracle()).unwrap();
        prop_assert_eq!(report.bianchi.epsilon, Some(eps));
        let k = killing_form(&report.structure);
        prop_assert_eq!(orbit_type(&k.matrix, &moved, &oracle()).unwrap(), eps);
    }
}
