//! Exact symbolic expression kernel.

pub mod ast;
pub mod diff;
mod display;
pub mod equiv;
pub mod eval;
pub mod integrate;
pub mod parse;
pub mod poly;
pub mod simplify;
pub mod solve;

pub use ast::{int, rat, Expr, Func, Node, Rational};
pub use diff::differentiate;
pub use eval::{eval_at, Assignment, EvalError};
pub use parse::{parse, ParseError};
pub use simplify::simplify;
pub use equiv::{equivalent, Domain, Oracle, OracleError, Sampler};
pub use integrate::{integrate_pattern, NotIntegrable};
pub use solve::{invert_pair, invert_pair_all, solve_all, solve_for, SolveError};
