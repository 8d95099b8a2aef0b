//! Exact and numerical tools for studying integer zeros of cubic polynomials
//! with the Hardy–Littlewood circle method.

pub mod arith;
pub mod counting;
pub mod error;
pub mod exec;
pub mod exponents;
pub mod expsums;
pub mod invariants;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod linalg;
pub mod local;
pub mod major_arcs;
pub mod poly;
pub mod quad;
pub(crate) mod serde_util;

pub(crate) use serde_util::{big as serde_big, big_opt as serde_big_opt, big_vec as serde_big_vec, big_vec_opt as serde_big_vec_opt};
pub(crate) use serde_util::{rat as serde_rat, rat_opt as serde_rat_opt};

pub use error::{LabError, Result};
pub use exec::{Config, Exec};
pub use poly::{CubicPolynomial, HessianMatrix, IntPoly, Symmetrized};
