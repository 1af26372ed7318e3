mod common;

use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bianchi::algebra::{eigen_structure, killing_form, structure_constants, unit, EigenStructure, StructureConstants, Surd};
use bianchi::classify::{classify, AdaptedBasis, BianchiType, Epsilon, Tag};
use bianchi::expr::{differentiate, eval_at, Assignment, Expr, Rational};
use bianchi::linalg::Matrix;
use bianchi::transform::{construct_transformation, so3_reduce, target_coords, Construction};
use bianchi::vfield::{is_symmetry, satisfies_correspondence, VectorField};

use common::{close, expr_fn, oracle, p, real, Canonical, PointFn, Worked};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn v3(a: Rational, b: Rational, c: Rational) -> Vec<Rational> {
    vec![a, b, c]
}

struct Verdict {
    pass: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Verdict {
        Verdict { pass: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.notes.push(what.into());
        }
    }
}

fn report(id: usize, title: &str, v: &Verdict, summary: &str) -> bool {
    let status = if v.pass { "PASS" } else { "FAIL" };
    println!("criterion {id} [{status}] {title}: {summary}");
    for n in &v.notes {
        println!("    {n}");
    }
    v.pass
}

// ----- frozen reference data -----

fn expected_tag(n: usize) -> Tag {
    Tag::ALL[n - 1]
}

fn bracket_table(n: usize) -> StructureConstants {
    let z = Rational::zero;
    let i = |k: i64| Rational::from_integer(k.into());
    let table: Vec<((usize, usize), [Rational; 3])> = match n {
        1 => vec![],
        2 => vec![((1, 2), [i(-1), z(), z()])],
        3 => vec![((0, 2), [i(1), i(-1), z()]), ((1, 2), [i(4), i(5), z()])],
        4 => vec![((0, 2), [i(-1), i(-1), z()]), ((1, 2), [z(), i(-1), z()])],
        5 => vec![((0, 2), [z(), z(), i(-1)])],
        6 => vec![((0, 2), [i(1), z(), z()])],
        7 => vec![((0, 1), [i(1), z(), z()]), ((1, 2), [z(), z(), i(-1)])],
        8 => vec![((0, 2), [i(1), z(), z()]), ((1, 2), [z(), i(1), z()])],
        9 => vec![((0, 2), [i(1), q(-2, 5), z()]), ((1, 2), [q(-4, 5), q(7, 5), z()])],
        10 => vec![((0, 2), [i(-2), z(), z()]), ((1, 2), [z(), i(-3), z()])],
        11 => vec![((0, 2), [i(4), q(-5, 2), z()]), ((1, 2), [i(1), i(5), z()])],
        12 => vec![((0, 2), [i(4), i(-1), z()]), ((1, 2), [i(1), i(4), z()])],
        13 | 16 => vec![((0, 1), [z(), i(-1), z()]), ((0, 2), [z(), z(), i(1)]), ((1, 2), [i(1), z(), z()])],
        14 => vec![((0, 1), [i(1), z(), z()]), ((0, 2), [z(), i(-2), z()]), ((1, 2), [z(), z(), i(1)])],
        15 => vec![((0, 1), [i(1), z(), z()]), ((0, 2), [z(), i(2), z()]), ((1, 2), [z(), z(), i(1)])],
        17 => vec![((0, 1), [z(), z(), i(1)]), ((0, 2), [z(), i(-1), z()]), ((1, 2), [i(1), z(), z()])],
        _ => unreachable!(),
    };
    StructureConstants::from_brackets(&table)
}

type Basis = (Vec<Rational>, Vec<Rational>, Option<Vec<Rational>>);

/// Reference adapted bases; `z` is `None` where only `X, Y` are known.
fn reference_basis(n: usize) -> Option<Basis> {
    let (o, one) = (Rational::zero, Rational::one);
    let i = |k: i64| Rational::from_integer(k.into());
    Some(match n {
        3 => (v3(one(), o(), o()), v3(q(-2, 3), q(-1, 3), o()), None),
        9 => (v3(i(2), one(), o()), v3(i(-1), one(), o()), None),
        13 | 16 => (v3(o(), o(), one()), v3(o(), i(-2), o()), Some(v3(i(2), o(), o()))),
        14 => (v3(o(), o(), one()), v3(one(), o(), o()), Some(v3(o(), i(2), o()))),
        15 => (v3(o(), o(), one()), v3(i(-1), o(), o()), Some(v3(o(), i(2), o()))),
        17 => (v3(one(), o(), o()), v3(o(), o(), one()), Some(v3(o(), i(-1), o()))),
        _ => return None,
    })
}

// ----- criterion 1 -----

fn criterion_1(worked: &[Worked], classify_time: Duration) -> bool {
    let mut v = Verdict::new();
    for w in worked {
        let bt = &w.report.bianchi;
        v.check(bt.tag == expected_tag(w.n), format!("example {}: got {bt}", w.n));
        let rational = |s: &Option<Surd>| s.as_ref().and_then(|s| s.as_rational().cloned());
        match w.n {
            9 => v.check(rational(&bt.c) == Some(q(3, 1)), format!("example 9: c = {:?}", bt.c)),
            10 => v.check(rational(&bt.c) == Some(q(3, 2)), format!("example 10: c = {:?}", bt.c)),
            11 => v.check(rational(&bt.cot_theta) == Some(q(-3, 1)), format!("example 11: {bt}")),
            12 => v.check(rational(&bt.cot_theta) == Some(q(-4, 1)), format!("example 12: {bt}")),
            13 => v.check(bt.epsilon == Some(Epsilon::Zero), format!("example 13: {bt}")),
            14 => v.check(bt.epsilon == Some(Epsilon::One), format!("example 14: {bt}")),
            15 => v.check(bt.epsilon == Some(Epsilon::MinusOne), format!("example 15: {bt}")),
            _ => {}
        }
    }
    v.check(classify_time < Duration::from_secs(5), format!("classification took {classify_time:?}"));
    report(1, "corpus classification", &v, &format!("17 tags and parameters, classify total {:.2} s", classify_time.as_secs_f64()))
}

// ----- criterion 2 -----

fn criterion_2(worked: &[Worked]) -> bool {
    let mut v = Verdict::new();
    for w in worked {
        let table = bracket_table(w.n);
        v.check(w.report.structure == table, format!("example {}: {} vs {}", w.n, w.report.structure, table));
    }
    report(2, "bracket tables", &v, "17 commutator tables compared exactly")
}

// ----- criterion 3 -----

fn criterion_3(worked: &[Worked]) -> bool {
    let mut v = Verdict::new();
    let mut compared = 0;
    for w in worked {
        let Some(basis) = &w.report.adapted else {
            v.check(false, format!("example {}: no adapted basis", w.n));
            continue;
        };
        v.check(basis.certifies(&w.report.structure, &w.report.bianchi), format!("example {}: {basis} does not certify", w.n));
        if let Some((x, y, z)) = reference_basis(w.n) {
            compared += 1;
            let AdaptedBasis { x: bx, y: by, z: bz } = basis;
            let same = *bx == x && *by == y && z.as_ref().is_none_or(|z| z == bz);
            v.check(same, format!("example {}: {basis}", w.n));
        }
    }
    report(3, "adapted bases", &v, &format!("{compared} reference bases reproduced, all 17 certify"))
}

// ----- criterion 4 -----

fn criterion_4(worked: &[Worked]) -> bool {
    let mut v = Verdict::new();
    let oracle = oracle();
    let mut partial = 0;
    for w in worked {
        match &w.construction {
            Construction::Solved(r) => {
                let cert = r.certify(&oracle).unwrap();
                v.check(cert == [true; 3], format!("example {}: certification {cert:?}", w.n));
                let nondegenerate = r.transformation.is_nondegenerate(&oracle).unwrap();
                v.check(nondegenerate, format!("example {}: degenerate Jacobian", w.n));
            }
            Construction::Partial { reason, .. } => {
                partial += 1;
                println!("    example {} exported a matching system: {reason}", w.n);
            }
        }
    }
    v.check(partial <= 2, format!("{partial} fallbacks"));
    report(4, "transformations", &v, &format!("{} solved and certified, {partial} fallbacks", worked.len() - partial))
}

// ----- criterion 5 -----

fn criterion_5(worked: &[Worked]) -> bool {
    let mut v = Verdict::new();
    let solved = |n: usize| worked[n - 1].solved();
    let canonical = |n: usize| Canonical::new(&solved(n).transformation, &common::ode(n));
    let exact = |c: Complex64| -> PointFn<'static> { Box::new(move |_| Some(c)) };
    let one = || expr_fn(Expr::one());
    let anywhere = |_: &Assignment| true;
    let mut run = |label: &str, outcome: Result<(), String>| match outcome {
        Ok(()) => println!("    {label}: ok"),
        Err(e) => v.check(false, format!("{label}: {e}")),
    };

    let e = std::f64::consts::E;
    run("C = -e", canonical(3).matches(&Expr::zero(), &expr_fn(p("exp(-y1)")), &exact(Complex64::new(-e, 0.0)), &anywhere));

    run(
        "f(z) = z^3 + 3z^2",
        canonical(5).matches(&Expr::zero(), &expr_fn(p("y1*((y2/y1)^3 + 3*(y2/y1)^2)")), &one(), &|a| real(a, "y") > 0.0),
    );

    // The second matching exchanges the roles of the two commuting generators.
    let w7 = &worked[6];
    let mut swapped = w7.report.clone();
    let basis = swapped.adapted.as_mut().unwrap();
    std::mem::swap(&mut basis.x, &mut basis.y);
    let alt = match construct_transformation(&swapped, &w7.generators, &oracle()).unwrap() {
        Construction::Solved(r) => r,
        Construction::Partial { reason, .. } => panic!("second matching: {reason}"),
    };
    run(
        "f(z) = z^2 under the second matching",
        Canonical::new(&alt.transformation, &common::ode(7)).matches(&Expr::zero(), &expr_fn(p("y1^2*y2^2")), &one(), &|a| real(a, "x") > 0.0),
    );

    // y'' = C y'^((c-2)/(c-1)) with C = r^(3/2) (-s)^(-1/2). At r = s = 1 the constant is
    // imaginary, so the right-hand side is real where y' < 0 and C is one of the two
    // values of the fractional power.
    let c = worked[8].report.bianchi.c.as_ref().unwrap().to_f64();
    let exponent = (c - 2.0) / (c - 1.0);
    let (r, s) = (1.0, 1.0);
    let principal = Complex64::new(r, 0.0).powf(1.5) * Complex64::new(-s, 0.0).powf(-0.5);
    let branches = [principal, -principal];
    let power: PointFn = Box::new(move |a| Some(a["y1"].powf(exponent)));
    let outcome = canonical(9).constants(&Expr::zero(), &power, &|a| real(a, "y1") < 0.0).and_then(|values| {
        let first = values[0].1;
        let branch = branches.iter().find(|b| close(first, **b)).ok_or(format!("C = {first} is not a value of r^(3/2)(-s)^(-1/2)"))?;
        match values.iter().find(|(_, c)| !close(*c, *branch)) {
            Some((a, c)) => Err(format!("C = {c} at {a:?} differs from {branch}")),
            None => {
                println!("    C = {branch:.6} ({} branch), exponent {exponent}", if *branch == principal { "principal" } else { "second" });
                Ok(())
            }
        }
    });
    run("C = r^(3/2)(-s)^(-1/2)", outcome);

    // The reference map carries a free constant c1 with u = ln(x/y^2) + c1.
    let t13 = &solved(13).transformation;
    let shift = &t13.phi - p("ln(x/y^2)");
    let outcome = match oracle().is_zero(&differentiate(&shift, "x")).unwrap() && oracle().is_zero(&differentiate(&shift, "y")).unwrap() {
        false => Err(format!("u = {} is not ln(x/y^2) + c1", t13.phi)),
        true => {
            let mut point = Assignment::new();
            point.insert("x".into(), Complex64::new(1.0, 0.0));
            point.insert("y".into(), Complex64::new(1.0, 0.0));
            let c1 = eval_at(&shift, &point).unwrap();
            let c13 = 4.0 * (-2.0 * c1).exp();
            println!("    c1 = {:.6}, C = 4 exp(-2 c1) = {:.6}", c1.re, c13.re);
            canonical(13).matches(&p("-y1/(2*x)"), &expr_fn(p("y1^3/x")), &exact(c13), &anywhere)
        }
    };
    run("C = 4 exp(-2 c1)", outcome);

    // Square roots pulled back through the map carry a branch-dependent sign;
    // the reference constants hold where u increases along the curve.
    let c14 = canonical(14);
    run(
        "C = 1",
        c14.matches(&p("(y1 + y1^3)/x"), &expr_fn(p("(1 + y1^2)^(3/2)/x")), &exact(Complex64::one()), &|a| c14.speed_at(a) > 0.0),
    );
    let c15 = canonical(15);
    run(
        "C = -1",
        c15.matches(&p("(y1 - y1^3)/x"), &expr_fn(p("(1 - y1^2)^(3/2)/x")), &exact(-Complex64::one()), &|a| {
            let (x, y) = (real(a, "x"), real(a, "y"));
            x > y && y > 0.0 && c15.speed_at(a) > 0.0
        }),
    );

    run(
        "f(x) = 1/x^2",
        canonical(16).matches(&p("3*y2^2/(2*y1)"), &expr_fn(p("y1")), &expr_fn(p("1/x^2")), &anywhere),
    );

    let c17 = canonical(17);
    run(
        "C = 1",
        c17.matches(&p("-y"), &expr_fn(p("((y1^2 + y^2 + 1)/(1 + y^2))^(3/2)")), &exact(Complex64::one()), &|a| {
            real(a, "y") > 0.0 && c17.speed_at(a) > 0.0
        }),
    );

    report(5, "canonical ODE constants", &v, "9 canonical forms compared at tol 1e-8")
}

// ----- criterion 6 -----

fn mutate(field: &VectorField, eta: bool) -> VectorField {
    let mut m = field.clone();
    if eta {
        m.eta = &m.eta + Expr::one();
    } else {
        m.xi = &m.xi + Expr::one();
    }
    m
}

fn criterion_6() -> bool {
    let mut v = Verdict::new();
    let oracle = oracle();
    let mut passed = 0;
    for n in 1..=17 {
        let ode = common::ode(n);
        for (k, g) in common::generators(n).iter().enumerate() {
            let ok = is_symmetry(g, &ode, &oracle).unwrap();
            v.check(ok, format!("example {n}, Y{}", k + 1));
            passed += ok as usize;
        }
    }
    let controls = [(5, 0, true), (14, 1, false), (17, 2, false)];
    let mut rejected = 0;
    for (n, k, eta) in controls {
        let g = mutate(&common::generators(n)[k], eta);
        let ok = is_symmetry(&g, &common::ode(n), &oracle).unwrap();
        v.check(!ok, format!("mutated example {n}, Y{} still passes", k + 1));
        rejected += !ok as usize;
    }
    report(6, "symmetry verification", &v, &format!("{passed}/51 pairs pass, {rejected}/3 mutated controls rejected"))
}

// ----- criterion 7 -----

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    q(rng.gen_range(-6..=6), rng.gen_range(1..=4))
}

fn random_change(rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let m = Matrix::from_rows((0..3).map(|_| (0..3).map(|_| q(rng.gen_range(-3..=3), 1)).collect()).collect());
        if m.rank() == 3 {
            return m;
        }
    }
}

fn same_type(a: &BianchiType, b: &BianchiType) -> bool {
    a == b
}

/// Brute-force classification of a 2×2 matrix from its characteristic polynomial.
fn eigen_agrees(m: &Matrix) -> bool {
    let (a, b, c, d) = (m.row(0)[0].clone(), m.row(0)[1].clone(), m.row(1)[0].clone(), m.row(1)[1].clone());
    let trace = &a + &d;
    let det = &a * &d - &b * &c;
    let disc = &trace * &trace - Rational::from_integer(4.into()) * &det;
    let half = q(1, 2);
    let is_root = |s: &Surd| {
        // (r + k√n)² − t(r + k√n) + det = 0 splits into rational and irrational parts.
        let (r, k, n) = (&s.rational, &s.coeff, &s.radicand);
        let rational = r * r + k * k * n - &trace * r + &det;
        let irrational = Rational::from_integer(2.into()) * r * k - &trace * k;
        rational.is_zero() && irrational.is_zero()
    };
    let kills = |value: &Rational, vector: &[Rational]| {
        let shifted = m.sub(&Matrix::identity(2).scale(value));
        vector.iter().any(|x| !x.is_zero()) && shifted.apply(vector).iter().all(Zero::is_zero)
    };
    match eigen_structure(m) {
        EigenStructure::DistinctReal { values, vectors } => {
            let ordered = values[0].to_f64() < values[1].to_f64();
            let rational_pair = values.iter().all(|s| s.as_rational().is_some());
            let vectors_ok = match (&vectors, rational_pair) {
                (Some(vs), true) => vs.iter().zip(&values).all(|(vec, s)| kills(s.as_rational().unwrap(), vec)),
                (None, false) => true,
                _ => false,
            };
            disc.is_positive() && ordered && values.iter().all(is_root) && vectors_ok
        }
        EigenStructure::RepeatedDim2 { value } => disc.is_zero() && value == &trace * &half && m.sub(&Matrix::identity(2).scale(&value)).is_zero(),
        EigenStructure::RepeatedDim1 { value, eigenvector } => {
            disc.is_zero() && value == &trace * &half && !m.sub(&Matrix::identity(2).scale(&value)).is_zero() && kills(&value, &eigenvector)
        }
        EigenStructure::ComplexPair { re, im, .. } => {
            let im2 = &det - &re * &re;
            disc.is_negative() && re == &trace * &half && im.to_f64() > 0.0 && (im.to_f64().powi(2) - Surd::from_rational(im2).to_f64()).abs() < 1e-9
        }
    }
}

fn criterion_7(worked: &[Worked]) -> bool {
    let mut v = Verdict::new();
    let oracle = oracle();

    for w in worked {
        let sc = &w.report.structure;
        v.check(sc.is_antisymmetric() && sc.satisfies_jacobi(), format!("example {}: bracket identities", w.n));
        let g = &w.generators;
        let br = |a: &VectorField, b: &VectorField| a.commutator(b).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let sum = br(&g[i], &g[j]).add(&br(&g[j], &g[i]));
            v.check(sum.equivalent(&VectorField::zero(g[0].coords.clone()), &oracle).unwrap(), format!("example {}: antisymmetry", w.n));
        }
        let jacobi = br(&g[0], &br(&g[1], &g[2])).add(&br(&g[1], &br(&g[2], &g[0]))).add(&br(&g[2], &br(&g[0], &g[1])));
        v.check(jacobi.simplified().is_structurally_zero(), format!("example {}: Jacobi does not normalize to 0", w.n));

        let k = killing_form(sc);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let left = k.eval(&sc.bracket(&unit(a), &unit(b)), &unit(c));
                    let right = k.eval(&unit(a), &sc.bracket(&unit(b), &unit(c)));
                    v.check(left == right, format!("example {}: Killing invariance at ({a},{b},{c})", w.n));
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut changes = 0;
    for w in worked {
        for _ in 0..20 {
            let m = random_change(&mut rng);
            let rows: Vec<Vec<Rational>> = (0..3).map(|i| m.row(i)).collect();
            let fields: [VectorField; 3] = std::array::from_fn(|i| VectorField::combination(&rows[i], &w.generators).simplified());
            let got = classify(&fields, &oracle).unwrap().bianchi;
            v.check(same_type(&got, &w.report.bianchi), format!("example {}: {got} after change {m:?}", w.n));
            changes += 1;
        }
    }

    let mut homomorphisms = 0;
    for w in worked {
        let r = w.solved();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let target = r.canonical[i].commutator(&r.canonical[j]).unwrap();
            let source = r.matched[i].commutator(&r.matched[j]).unwrap();
            let ok = satisfies_correspondence(&r.transformation, &target, &source, &oracle).unwrap();
            v.check(ok, format!("example {}: pushforward of [{i},{j}]", w.n));
            homomorphisms += ok as usize;
        }
    }

    let mut eigen_ok = 0;
    for _ in 0..1000 {
        let m = Matrix::from_rows((0..2).map(|_| (0..2).map(|_| random_rational(&mut rng)).collect()).collect());
        let ok = eigen_agrees(&m);
        v.check(ok, format!("eigen structure of {m:?}"));
        eigen_ok += ok as usize;
    }

    report(
        7,
        "property suites",
        &v,
        &format!("identities on 17 algebras, {changes} basis changes, {homomorphisms}/51 pushforwards, {eigen_ok}/1000 eigen checks"),
    )
}

// ----- criterion 8 -----

fn criterion_8(worked: &[Worked]) -> bool {
    let mut v = Verdict::new();
    let w = &worked[16];
    let basis = w.report.adapted.as_ref().unwrap();
    let fields = basis.fields(&w.generators);
    let (state, _) = so3_reduce(&fields, &target_coords(&fields[0].coords), &oracle()).unwrap();
    match state.conditions() {
        Some((first, second)) => {
            v.check(oracle().is_zero(&first).unwrap(), format!("first condition {first}"));
            v.check(oracle().is_zero(&second).unwrap(), format!("second condition {second}"));
        }
        None => v.check(false, "no conditions extracted"),
    }
    report(8, "so(3) conditions", &v, &format!("f = ({}, {}, {}, {})", state.f[0], state.f[1], state.f[2], state.f[3]))
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let oracle = oracle();
    let mut classify_time = Duration::ZERO;
    let mut worked = Vec::new();
    for n in 1..=17 {
        let generators = common::generators(n);
        let clock = Instant::now();
        let sc = structure_constants(&generators, &oracle).unwrap();
        let report = bianchi::classify::classify_with(&sc, &generators, &oracle).unwrap();
        classify_time += clock.elapsed();
        let construction = construct_transformation(&report, &generators, &oracle).unwrap();
        worked.push(Worked { n, generators, report, construction });
    }

    let results = [
        criterion_1(&worked, classify_time),
        criterion_2(&worked),
        criterion_3(&worked),
        criterion_4(&worked),
        criterion_5(&worked),
        criterion_6(),
        criterion_7(&worked),
        criterion_8(&worked),
    ];
    let elapsed = start.elapsed();
    let fast = elapsed < Duration::from_secs(60);
    println!(
        "criterion 9 [{}] suite wall-clock: acceptance run {:.1} s (limit 60 s for the whole suite; see test_output.txt)",
        if fast { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let failed: Vec<usize> = results.iter().chain([&fast]).enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
