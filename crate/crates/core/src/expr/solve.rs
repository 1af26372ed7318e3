//! Explicit solving of a single equation for one variable, and inversion of
//! a pair of equations for two variables.

use num_integer::Integer;
use num_traits::Signed;
use thiserror::Error;

use super::ast::{Expr, Func, Node};
use super::diff::differentiate;
use super::integrate::coefficients_in;
use super::simplify::{fraction, simplify};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("`{var}` does not occur in the equation")]
    Absent { var: String },
    #[error("no explicit solution for `{var}` within the supported inversions")]
    Unsupported { var: String },
}

/// Solve `lhs = rhs` for `var`, returning the principal branch.
pub fn solve_for(lhs: &Expr, rhs: &Expr, var: &str) -> Result<Expr, SolveError> {
    solve_all(lhs, rhs, var).map(|mut sols| sols.swap_remove(0))
}

/// Every branch of `lhs = rhs` solved for `var` that the inversions reach;
/// even powers contribute both signs.
pub fn solve_all(lhs: &Expr, rhs: &Expr, var: &str) -> Result<Vec<Expr>, SolveError> {
    let unsupported = || SolveError::Unsupported { var: var.to_string() };
    if !lhs.depends_on(var) && !rhs.depends_on(var) {
        return Err(SolveError::Absent { var: var.to_string() });
    }
    let (mut lhs, mut rhs) = (lhs.clone(), rhs.clone());
    if !lhs.depends_on(var) {
        std::mem::swap(&mut lhs, &mut rhs);
    }
    if !rhs.depends_on(var) {
        for candidate in [lhs.clone(), contract_trig(&lhs), simplify(&lhs)] {
            if occurrences(&candidate, var) == 1 {
                let sols = peel(&candidate, rhs.clone(), var);
                if !sols.is_empty() {
                    return Ok(sols);
                }
            }
        }
    }
    let e = lhs - rhs;
    if let Some(s) = linear_solve(&e, var) {
        return Ok(vec![s]);
    }
    let roots = quadratic_solve(&e, var);
    if !roots.is_empty() {
        return Ok(roots);
    }
    kernel_solve(&e, var).ok_or_else(unsupported)
}

/// Solve `e = 0` through a subexpression `k(var)` in which `e` is linear.
fn kernel_solve(e: &Expr, var: &str) -> Option<Vec<Expr>> {
    let mut kernels: Vec<Expr> = Vec::new();
    e.walk(&mut |s| {
        if matches!(s.node(), Node::Func(..) | Node::Pow(..)) && s.depends_on(var) && !kernels.contains(s) {
            kernels.push(s.clone());
        }
    });
    let slot = Expr::var("_kernel");
    for k in kernels {
        if k.as_var() == Some(var) {
            continue;
        }
        let replaced = e.replace(&k, &slot);
        if replaced.depends_on(var) {
            continue;
        }
        let Some(value) = linear_solve(&replaced, "_kernel") else { continue };
        if occurrences(&k, var) == 1 {
            let sols = peel(&k, value, var);
            if !sols.is_empty() {
                return Some(sols);
            }
        }
    }
    None
}

/// Both roots when the numerator of `e` is quadratic in `var`.
fn quadratic_solve(e: &Expr, var: &str) -> Vec<Expr> {
    let (num, _) = fraction(e);
    let Some(coeffs) = coefficients_in(&num, var) else { return Vec::new() };
    if coeffs.len() != 3 || coeffs[2].is_zero() {
        return Vec::new();
    }
    let (c, b, a) = (&coeffs[0], &coeffs[1], &coeffs[2]);
    let disc = simplify(&(b.powi(2) - Expr::int(4) * a * c)).sqrt();
    let two_a = Expr::int(2) * a;
    vec![simplify(&((-b + &disc) / &two_a)), simplify(&((-b - disc) / two_a))]
}

fn occurrences(e: &Expr, var: &str) -> usize {
    let mut n = 0;
    e.walk(&mut |s| {
        if s.as_var() == Some(var) {
            n += 1;
        }
    });
    n
}

/// `cos(a)^k sin(a)^-k → cot(a)^k` and `sin(a)^k cos(a)^-k → tan(a)^k`.
fn contract_trig(e: &Expr) -> Expr {
    match e.node() {
        Node::Var(_) | Node::Num(_) | Node::Pi => e.clone(),
        Node::Add(xs) => Expr::add(xs.iter().map(contract_trig).collect()),
        Node::Pow(b, k) => Expr::pow(contract_trig(b), contract_trig(k)),
        Node::Func(f, a) => Expr::func(*f, contract_trig(a)),
        Node::Mul(xs) => {
            let mut factors: Vec<Expr> = xs.iter().map(contract_trig).collect();
            let split = |f: &Expr| -> Option<(Func, Expr, Expr)> {
                match f.node() {
                    Node::Func(g @ (Func::Sin | Func::Cos), a) => Some((*g, a.clone(), Expr::one())),
                    Node::Pow(b, k) => match b.node() {
                        Node::Func(g @ (Func::Sin | Func::Cos), a) => Some((*g, a.clone(), k.clone())),
                        _ => None,
                    },
                    _ => None,
                }
            };
            'outer: loop {
                for i in 0..factors.len() {
                    for j in 0..factors.len() {
                        let (Some((fi, ai, ki)), Some((fj, aj, kj))) = (split(&factors[i]), split(&factors[j])) else {
                            continue;
                        };
                        if i == j || fi != Func::Cos || fj != Func::Sin || ai != aj {
                            continue;
                        }
                        let (target, k) = if (&ki + &kj).is_zero() && !ki.as_num().is_some_and(|r| r.is_negative()) {
                            (Func::Cot, ki)
                        } else if (&ki + &kj).is_zero() {
                            (Func::Tan, kj)
                        } else {
                            continue;
                        };
                        let merged = Expr::pow(Expr::func(target, ai), k);
                        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                        factors.remove(hi);
                        factors.remove(lo);
                        factors.push(merged);
                        continue 'outer;
                    }
                }
                break;
            }
            Expr::mul(factors)
        }
    }
}

/// Undo the outermost operation that contains `var` until `var` is isolated.
fn peel(lhs: &Expr, rhs: Expr, var: &str) -> Vec<Expr> {
    match lhs.node() {
        Node::Var(v) if &**v == var => vec![rhs],
        Node::Add(ts) => {
            let (with, without): (Vec<Expr>, Vec<Expr>) =
                ts.iter().cloned().partition(|t| t.depends_on(var));
            let [inner] = with.as_slice() else { return Vec::new() };
            peel(inner, rhs - Expr::add(without), var)
        }
        Node::Mul(fs) => {
            let (with, without): (Vec<Expr>, Vec<Expr>) =
                fs.iter().cloned().partition(|f| f.depends_on(var));
            let [inner] = with.as_slice() else { return Vec::new() };
            peel(inner, rhs / Expr::mul(without), var)
        }
        Node::Pow(b, k) if b.depends_on(var) => {
            let root = Expr::pow(rhs, Expr::recip(k));
            let even = k.as_num().is_some_and(|r| r.numer().is_even());
            let mut out = peel(b, root.clone(), var);
            if even {
                out.extend(peel(b, -root, var));
            }
            out
        }
        Node::Pow(b, k) => {
            peel(k, Expr::func(Func::Ln, rhs) / Expr::func(Func::Ln, b.clone()), var)
        }
        Node::Func(f, a) => {
            let inverse = match f {
                Func::Exp => Func::Ln,
                Func::Ln => Func::Exp,
                Func::Tan => Func::Arctan,
                Func::Arctan => Func::Tan,
                Func::Cot => Func::Arccot,
                Func::Arccot => Func::Cot,
                _ => return Vec::new(),
            };
            peel(a, Expr::func(inverse, rhs), var)
        }
        _ => Vec::new(),
    }
}

/// Solve `e = 0` when its numerator is linear in `var`.
fn linear_solve(e: &Expr, var: &str) -> Option<Expr> {
    let (num, _) = fraction(e);
    let coeffs = coefficients_in(&num, var)?;
    if coeffs.len() != 2 || coeffs[1].is_zero() {
        return None;
    }
    Some(simplify(&(-(&coeffs[0] / &coeffs[1]))))
}

/// Invert `f1(a, b) = p`, `f2(a, b) = q` for `(a, b)`, principal branch.
pub fn invert_pair(
    f1: &Expr,
    f2: &Expr,
    unknowns: (&str, &str),
    targets: (&Expr, &Expr),
) -> Result<(Expr, Expr), SolveError> {
    invert_pair_all(f1, f2, unknowns, targets)?
        .into_iter()
        .next()
        .ok_or_else(|| SolveError::Unsupported { var: format!("{}, {}", unknowns.0, unknowns.1) })
}

/// Candidate inversions of `f1(a, b) = p`, `f2(a, b) = q`, best first.
///
/// Tries each equation/unknown order, eliminating one unknown at a time;
/// equations free of the other unknown are used first.
pub fn invert_pair_all(
    f1: &Expr,
    f2: &Expr,
    unknowns: (&str, &str),
    targets: (&Expr, &Expr),
) -> Result<Vec<(Expr, Expr)>, SolveError> {
    let (a, b) = unknowns;
    let eqs = [(f1, targets.0), (f2, targets.1)];
    let mut out: Vec<(Expr, Expr)> = Vec::new();
    for decoupled_only in [true, false] {
        for (first, second) in [(0, 1), (1, 0)] {
            for (x, y) in [(a, b), (b, a)] {
                let (lhs, rhs) = eqs[first];
                if decoupled_only && lhs.depends_on(y) && !differentiate(lhs, y).is_zero() && lhs.depends_on(x) {
                    continue;
                }
                let Ok(x_sols) = solve_all(lhs, rhs, x) else { continue };
                for x_sol in x_sols {
                    if x_sol.depends_on(x) || (decoupled_only && x_sol.depends_on(y)) {
                        continue;
                    }
                    let (lhs2, rhs2) = eqs[second];
                    let reduced = simplify(&lhs2.subst(x, &x_sol));
                    let Ok(y_sols) = solve_all(&reduced, rhs2, y) else { continue };
                    for y_sol in y_sols {
                        if y_sol.depends_on(x) || y_sol.depends_on(y) {
                            continue;
                        }
                        let x_final = simplify(&x_sol.subst(y, &y_sol));
                        if x_final.depends_on(a) || x_final.depends_on(b) {
                            continue;
                        }
                        let pair = if x == a { (x_final, y_sol) } else { (y_sol, x_final) };
                        if !out.contains(&pair) {
                            out.push(pair);
                        }
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(SolveError::Unsupported { var: format!("{a}, {b}") });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::equiv::equivalent;
    use crate::expr::parse::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn peels_nested_functions() {
        let sol = solve_for(&p("ln(2*u + 1)"), &p("x"), "u").unwrap();
        assert!(equivalent(&sol, &p("(exp(x) - 1)/2"), 1e-9, 20, 1).unwrap());
        let sol = solve_for(&p("-1/u"), &p("x"), "u").unwrap();
        assert_eq!(sol, p("-1/x"));
        let sol = solve_for(&p("arccot(-u)"), &p("y"), "u").unwrap();
        assert_eq!(sol, p("-cot(y)"));
    }

    #[test]
    fn linear_with_repeated_variable() {
        let sol = solve_for(&p("u*x + u - 3"), &p("0"), "u").unwrap();
        assert!(equivalent(&sol, &p("3/(x+1)"), 1e-9, 20, 1).unwrap());
    }

    #[test]
    fn pair_inversion() {
        // u = 2x - y, v = -1/(x + y)
        let (x, y) = invert_pair(&p("2*x - y"), &p("-1/(x + y)"), ("x", "y"), (&p("u"), &p("v")))
            .unwrap();
        assert!(equivalent(&x, &p("(u - 1/v)/3"), 1e-9, 20, 1).unwrap());
        assert!(equivalent(&y, &p("(-u - 2/v)/3"), 1e-9, 20, 1).unwrap());
    }

    #[test]
    fn absent_variable() {
        assert!(matches!(solve_for(&p("x"), &p("1"), "u"), Err(SolveError::Absent { .. })));
    }
}
