//! Floating-point evaluation. This is the only place where stored exact
//! constants are converted to `f64`.
//!
//! Branch points follow real-variable semantics: a logarithm or fractional
//! power of a non-positive real is reported as singular so that sampling
//! callers move to another point instead of silently crossing a branch cut.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::ast::{Expr, Func, Node, Rational};

/// Variable bindings for evaluation.
pub type Assignment = BTreeMap<String, Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("singular evaluation")]
    Singular,
}

const REAL_AXIS_TOL: f64 = 1e-12;

pub fn eval_at(e: &Expr, a: &Assignment) -> Result<Complex64, EvalError> {
    let v = eval(e, a)?;
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Singular)
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Scale down huge numerators and denominators together.
            let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

fn on_nonpositive_real_axis(z: Complex64) -> bool {
    z.im.abs() <= REAL_AXIS_TOL * (1.0 + z.re.abs()) && z.re <= 0.0
}

fn finite(z: Complex64) -> Result<Complex64, EvalError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(EvalError::Singular)
    }
}

fn eval(e: &Expr, a: &Assignment) -> Result<Complex64, EvalError> {
    match e.node() {
        Node::Num(r) => Ok(Complex64::new(rational_to_f64(r), 0.0)),
        Node::Pi => Ok(Complex64::new(std::f64::consts::PI, 0.0)),
        Node::Var(v) => a.get(&**v).copied().ok_or_else(|| EvalError::Unbound(v.to_string())),
        Node::Add(ts) => {
            let mut s = Complex64::new(0.0, 0.0);
            for t in ts {
                s += eval(t, a)?;
            }
            finite(s)
        }
        Node::Mul(fs) => {
            let mut p = Complex64::new(1.0, 0.0);
            for f in fs {
                p *= eval(f, a)?;
            }
            finite(p)
        }
        Node::Pow(b, x) => {
            let base = eval(b, a)?;
            if let Some(r) = x.as_num() {
                if r.is_integer() {
                    let n = r.to_integer().to_i32().ok_or(EvalError::Singular)?;
                    if n < 0 && base.norm() == 0.0 {
                        return Err(EvalError::Singular);
                    }
                    return finite(base.powi(n));
                }
                if on_nonpositive_real_axis(base) {
                    return Err(EvalError::Singular);
                }
                let base = Complex64::new(base.re, if base.im.abs() <= REAL_AXIS_TOL { 0.0 } else { base.im });
                return finite(base.powf(rational_to_f64(r)));
            }
            let exponent = eval(x, a)?;
            if on_nonpositive_real_axis(base) {
                return Err(EvalError::Singular);
            }
            finite(base.powc(exponent))
        }
        Node::Func(f, arg) => {
            let z = eval(arg, a)?;
            let out = match f {
                Func::Exp => z.exp(),
                Func::Ln => {
                    if on_nonpositive_real_axis(z) {
                        return Err(EvalError::Singular);
                    }
                    z.ln()
                }
                Func::Sqrt => {
                    if on_nonpositive_real_axis(z) && z.re < 0.0 {
                        return Err(EvalError::Singular);
                    }
                    z.sqrt()
                }
                Func::Sin => z.sin(),
                Func::Cos => z.cos(),
                Func::Tan => {
                    let c = z.cos();
                    if c.norm() < 1e-300 {
                        return Err(EvalError::Singular);
                    }
                    z.sin() / c
                }
                Func::Cot => {
                    let s = z.sin();
                    if s.norm() < 1e-300 {
                        return Err(EvalError::Singular);
                    }
                    z.cos() / s
                }
                Func::Csc => {
                    let s = z.sin();
                    if s.norm() < 1e-300 {
                        return Err(EvalError::Singular);
                    }
                    s.inv()
                }
                Func::Arctan => z.atan(),
                Func::Arccot => {
                    if z.norm() == 0.0 {
                        return Err(EvalError::Singular);
                    }
                    z.inv().atan()
                }
            };
            finite(out)
        }
    }
}
