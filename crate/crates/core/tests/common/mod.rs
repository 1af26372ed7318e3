#![allow(dead_code)]

use std::path::PathBuf;

use bianchi::cli::{Job, JobSpec, Overrides};
use bianchi::classify::{classify, ClassificationReport};
use bianchi::expr::{differentiate, eval_at, parse, Assignment, Domain, Expr, Oracle, Sampler};
use bianchi::transform::{construct_transformation, Construction, TransformationResult};
use bianchi::vfield::{Ode, PointTransformation, VectorField};
use num_complex::Complex64;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_path(n: usize) -> PathBuf {
    corpus_dir().join(format!("ex{n:02}.json"))
}

pub fn load(n: usize) -> Job {
    let text = std::fs::read_to_string(corpus_path(n)).expect("corpus file");
    Job::from_spec(JobSpec::from_json(&text).expect("corpus json"), &Overrides::default()).expect("corpus job")
}

pub fn generators(n: usize) -> [VectorField; 3] {
    load(n).generators
}

pub fn ode(n: usize) -> Ode {
    load(n).ode.expect("corpus ode")
}

pub fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

pub fn oracle() -> Oracle {
    Oracle::new(1e-8, 50, 42)
}

/// Classification and construction of one corpus example.
pub struct Worked {
    pub n: usize,
    pub generators: [VectorField; 3],
    pub report: ClassificationReport,
    pub construction: Construction,
}

impl Worked {
    pub fn run(n: usize) -> Worked {
        let generators = generators(n);
        let oracle = oracle();
        let report = classify(&generators, &oracle).expect("classify");
        let construction = construct_transformation(&report, &generators, &oracle).expect("construct");
        Worked { n, generators, report, construction }
    }

    pub fn solved(&self) -> &TransformationResult {
        match &self.construction {
            Construction::Solved(r) => r,
            Construction::Partial { reason, .. } => panic!("example {} fell back: {reason}", self.n),
        }
    }
}

pub type PointFn<'a> = Box<dyn Fn(&Assignment) -> Option<Complex64> + 'a>;

pub fn expr_fn(e: Expr) -> PointFn<'static> {
    Box::new(move |a| eval_at(&e, a).ok())
}

pub fn real(a: &Assignment, name: &str) -> f64 {
    a[name].re
}

/// The transformed equation of one example with the data needed to sample it.
pub struct Canonical {
    pub rhs: Expr,
    /// `dφ/dx` along the curve; prolongations blow up where it vanishes.
    pub speed: Expr,
}

impl Canonical {
    pub fn new(t: &PointTransformation, ode: &Ode) -> Canonical {
        let rhs = t.transform_ode(ode).unwrap().rhs;
        Canonical { rhs, speed: differentiate(&t.phi, "x") + differentiate(&t.phi, "y") * p("y1") }
    }

    pub fn speed_at(&self, a: &Assignment) -> f64 {
        eval_at(&self.speed, a).map(|d| d.re).unwrap_or(0.0)
    }

    /// Values of `(rhs − base) / scale` on 50 well-conditioned points of `region`.
    pub fn constants(&self, base: &Expr, scale: &PointFn, region: &dyn Fn(&Assignment) -> bool) -> Result<Vec<(Assignment, Complex64)>, String> {
        let mut vars = self.rhs.free_vars();
        vars.extend(["x", "y", "y1", "y2"].map(String::from));
        let mut sampler = Sampler::new(vars.into_iter().collect(), 42, Domain::Symmetric);
        let mut out = Vec::new();
        for _ in 0..20_000 {
            let a = sampler.next_point();
            if self.speed_at(&a).abs() < 0.05 || !region(&a) {
                continue;
            }
            let (Ok(r), Ok(b), Some(s)) = (eval_at(&self.rhs, &a), eval_at(base, &a), scale(&a)) else {
                continue;
            };
            out.push((a, (r - b) / s));
            if out.len() == 50 {
                return Ok(out);
            }
        }
        Err(format!("only {} usable sample points", out.len()))
    }

    pub fn matches(&self, base: &Expr, scale: &PointFn, expected: &PointFn, region: &dyn Fn(&Assignment) -> bool) -> Result<(), String> {
        for (a, c) in self.constants(base, scale, region)? {
            let e = expected(&a).ok_or("expected value undefined")?;
            if (c - e).norm() >= 1e-8 * (1.0 + e.norm()) {
                return Err(format!("constant {c} but expected {e} at {a:?}"));
            }
        }
        Ok(())
    }
}

pub fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < 1e-8 * (1.0 + b.norm())
}
