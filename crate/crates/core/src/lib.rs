//! Classification of three-dimensional Lie algebras of planar vector fields
//! and construction of point transformations to canonical ODE forms.

pub mod algebra;
pub mod classify;
pub mod cli;
pub mod expr;
pub mod linalg;
pub mod transform;
pub mod vfield;
