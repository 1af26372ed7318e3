//! Seeded numeric equivalence oracle.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::ast::Expr;
use super::eval::{eval_at, Assignment, EvalError};
use super::simplify::simplify;

/// Where sample coordinates are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Domain {
    /// Positive samples when either side carries a domain note, symmetric otherwise
    /// or when the positive orthant has too few regular points.
    #[default]
    Auto,
    /// Uniform on `[-2, -0.1] ∪ [0.1, 2]`.
    Symmetric,
    /// Uniform on `[0.1, 2]`.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracle {
    pub tol: f64,
    pub points: usize,
    pub seed: u64,
    pub domain: Domain,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle { tol: 1e-8, points: 50, seed: 42, domain: Domain::Auto }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("found only {found} of {wanted} non-singular sample points")]
    InsufficientSamples { found: usize, wanted: usize },
    #[error("unbound variable `{0}` during sampling")]
    Unbound(String),
}

const RETRY_FACTOR: usize = 50;
const SHORTCUT_SIZE: usize = 400;

impl Oracle {
    pub fn new(tol: f64, points: usize, seed: u64) -> Oracle {
        Oracle { tol, points, seed, domain: Domain::Auto }
    }

    pub fn with_domain(self, domain: Domain) -> Oracle {
        Oracle { domain, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Oracle {
        Oracle { seed, ..self }
    }

    /// Decide `e1 ≡ e2` on sampled points.
    pub fn equivalent(&self, e1: &Expr, e2: &Expr) -> Result<bool, OracleError> {
        if e1 == e2 {
            return Ok(true);
        }
        if e1.size() + e2.size() < SHORTCUT_SIZE && simplify(&(e1 - e2)).is_zero() {
            return Ok(true);
        }
        let vars: Vec<String> = e1.free_vars().union(&e2.free_vars()).cloned().collect();
        match self.domain {
            Domain::Auto if e1.has_domain_note() || e2.has_domain_note() => {
                match self.sample(e1, e2, &vars, Domain::Positive) {
                    Err(OracleError::InsufficientSamples { .. }) => self.sample(e1, e2, &vars, Domain::Symmetric),
                    outcome => outcome,
                }
            }
            Domain::Auto => self.sample(e1, e2, &vars, Domain::Symmetric),
            d => self.sample(e1, e2, &vars, d),
        }
    }

    fn sample(&self, e1: &Expr, e2: &Expr, vars: &[String], domain: Domain) -> Result<bool, OracleError> {
        let mut sampler = Sampler::new(vars.to_vec(), self.seed, domain);
        let mut found = 0;
        for _ in 0..self.points * RETRY_FACTOR {
            let a = sampler.next_point();
            let v1 = match eval_at(e1, &a) {
                Ok(v) => v,
                Err(EvalError::Singular) => continue,
                Err(EvalError::Unbound(v)) => return Err(OracleError::Unbound(v)),
            };
            let v2 = match eval_at(e2, &a) {
                Ok(v) => v,
                Err(EvalError::Singular) => continue,
                Err(EvalError::Unbound(v)) => return Err(OracleError::Unbound(v)),
            };
            if (v1 - v2).norm() >= self.tol * (1.0 + v1.norm()) {
                if reproducible(e1, e2, &a, v1 - v2) {
                    return Ok(false);
                }
                continue;
            }
            found += 1;
            if found == self.points {
                return Ok(true);
            }
        }
        Err(OracleError::InsufficientSamples { found, wanted: self.points })
    }

    pub fn is_zero(&self, e: &Expr) -> Result<bool, OracleError> {
        self.equivalent(e, &Expr::zero())
    }
}

const PROBE_STEP: f64 = 1e-9;

/// Whether the residual `r = e1 − e2` at `a` survives small relative perturbations
/// of the coordinates. Cancellation noise does not; a genuine mismatch does.
fn reproducible(e1: &Expr, e2: &Expr, a: &Assignment, r: Complex64) -> bool {
    [1.0, -2.0].iter().all(|&k| {
        let moved: Assignment = a
            .iter()
            .enumerate()
            .map(|(i, (v, c))| (v.clone(), c * (1.0 + k * PROBE_STEP * (i + 1) as f64)))
            .collect();
        match (eval_at(e1, &moved), eval_at(e2, &moved)) {
            (Ok(w1), Ok(w2)) => ((w1 - w2) - r).norm() < 0.1 * r.norm(),
            _ => false,
        }
    })
}

/// Convenience wrapper with the automatic domain.
pub fn equivalent(
    e1: &Expr,
    e2: &Expr,
    tol: f64,
    points: usize,
    seed: u64,
) -> Result<bool, OracleError> {
    Oracle::new(tol, points, seed).equivalent(e1, e2)
}

/// Deterministic stream of real sample points over named variables.
pub struct Sampler {
    vars: Vec<String>,
    rng: ChaCha8Rng,
    domain: Domain,
}

impl Sampler {
    pub fn new(vars: Vec<String>, seed: u64, domain: Domain) -> Sampler {
        Sampler { vars, rng: ChaCha8Rng::seed_from_u64(seed), domain }
    }

    fn coordinate(&mut self) -> f64 {
        let magnitude = self.rng.gen_range(0.1..2.0);
        match self.domain {
            Domain::Positive => magnitude,
            _ => {
                if self.rng.gen_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }

    pub fn next_point(&mut self) -> Assignment {
        let mut a = Assignment::new();
        for i in 0..self.vars.len() {
            let x = self.coordinate();
            a.insert(self.vars[i].clone(), Complex64::new(x, 0.0));
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn cancellation_noise_is_not_a_mismatch() {
        let noisy = p("(x + 10^7)^2 - 10^14 - 2*10^7*x");
        assert!(Oracle::default().equivalent(&noisy, &p("x^2")).unwrap());
        assert!(!Oracle::default().equivalent(&noisy, &p("x^2 + x/1000")).unwrap());
    }

    #[test]
    fn falls_back_to_symmetric_samples() {
        let (a, b) = (p("sqrt(-x)*sin(2*x)"), p("2*sqrt(-x)*sin(x)*cos(x)"));
        assert_ne!(simplify(&(&a - &b)), Expr::zero());
        assert!(Oracle::default().equivalent(&a, &b).unwrap());
        assert!(!Oracle::default().with_domain(Domain::Positive).equivalent(&a, &b).is_ok());
    }

    #[test]
    fn binomial_square() {
        assert!(equivalent(&p("(x+y)^2"), &p("x^2+2*x*y+y^2"), 1e-8, 50, 42).unwrap());
    }

    #[test]
    fn arctangent_reflection_on_positive_axis() {
        let o = Oracle::new(1e-9, 50, 7).with_domain(Domain::Positive);
        assert!(o.equivalent(&p("arctan(x) + arctan(1/x)"), &p("pi/2")).unwrap());
        let both = Oracle::new(1e-9, 50, 7).with_domain(Domain::Symmetric);
        assert!(!both.equivalent(&p("arctan(x) + arctan(1/x)"), &p("pi/2")).unwrap());
    }

    #[test]
    fn small_offset_is_detected() {
        assert!(!equivalent(&p("x"), &p("x + 1/1000"), 1e-9, 50, 1).unwrap());
    }

    #[test]
    fn structurally_equal_short_circuits() {
        let e = p("ln(-1 - x^2)");
        assert!(equivalent(&e, &e, 1e-9, 50, 1).unwrap());
    }

    #[test]
    fn everywhere_singular_reports_error() {
        let err = equivalent(&p("ln(-1 - x^2)"), &p("x"), 1e-9, 20, 1).unwrap_err();
        assert!(matches!(err, OracleError::InsufficientSamples { found: 0, .. }));
    }
}
