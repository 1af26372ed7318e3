use super::ast::{Expr, Func, Node};

/// Partial derivative with respect to `var`, in automatically normalized form.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    if !e.depends_on(var) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) | Node::Pi => Expr::zero(),
        Node::Var(v) => {
            if &**v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(ts) => Expr::add(ts.iter().map(|t| differentiate(t, var)).collect()),
        Node::Mul(fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for (i, f) in fs.iter().enumerate() {
                let d = differentiate(f, var);
                if d.is_zero() {
                    continue;
                }
                let mut prod: Vec<Expr> = fs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, g)| g.clone())
                    .collect();
                prod.push(d);
                terms.push(Expr::mul(prod));
            }
            Expr::add(terms)
        }
        Node::Pow(b, x) => {
            let db = differentiate(b, var);
            if !x.depends_on(var) {
                // x * b^(x-1) * b'
                return Expr::mul(vec![
                    x.clone(),
                    Expr::pow(b.clone(), x - &Expr::one()),
                    db,
                ]);
            }
            let dx = differentiate(x, var);
            let ln_b = Expr::func(Func::Ln, b.clone());
            let inner = if b.depends_on(var) {
                Expr::add(vec![&dx * &ln_b, x * &db / b])
            } else {
                dx * ln_b
            };
            Expr::mul(vec![e.clone(), inner])
        }
        Node::Func(f, a) => {
            let da = differentiate(a, var);
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Ln => Expr::recip(a),
                Func::Sin => Expr::func(Func::Cos, a.clone()),
                Func::Cos => -Expr::func(Func::Sin, a.clone()),
                Func::Tan => Expr::one() + Expr::func(Func::Tan, a.clone()).powi(2),
                Func::Cot => -(Expr::one() + Expr::func(Func::Cot, a.clone()).powi(2)),
                Func::Csc => -(e * Expr::func(Func::Cot, a.clone())),
                Func::Arctan => Expr::recip(&(Expr::one() + a.powi(2))),
                Func::Arccot => -Expr::recip(&(Expr::one() + a.powi(2))),
                Func::Sqrt => Expr::recip(&(Expr::int(2) * e)),
            };
            outer * da
        }
    }
}
