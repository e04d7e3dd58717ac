//! Exact-arithmetic optimization toolkit: parametric-objective linear
//! programming, geometric interior paths, Diophantine integer programming,
//! and Gröbner-basis quadratic programming, each with reference solvers.
//!
//! ```
//! use optkit::{solve_parametric, LpProblem, Relation::Le, Sense, Tag};
//!
//! let p = LpProblem::from_ints(Sense::Maximize, &[1, 1], &[(&[1, 2], Le, 4), (&[-1, 1], Le, 1), (&[4, 2], Le, 12)]);
//! let out = solve_parametric(&p);
//! assert_eq!(out.tag, Tag::Optimal);
//! assert_eq!(out.value.unwrap().to_string(), "10/3");
//! ```

#![allow(clippy::needless_range_loop)]

pub mod diophantine_ip;
pub mod exact_arith;
pub mod geometric_lp;
pub mod groebner_nlp;
pub mod lp_model;
pub mod model_io;
pub mod parametric_lp;
pub mod reference_oracle;

pub use diophantine_ip::{search_first_method, search_second_method, DioConfig, ParametricIntSolution};
pub use exact_arith::{AffineForm, ParamMatrix, Rational, RowOp};
pub use groebner_nlp::{MultiPoly, NlpProblem};
pub use lp_model::{Constraint, LpOutcome, LpProblem, Relation, Sense, Tag};
pub use model_io::{parse_model, Model, ModelFile, ParseError};
pub use parametric_lp::{solve_parametric, ParametricTableau};
pub use reference_oracle::simplex_solve;
