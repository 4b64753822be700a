//! Semi-implicit upwind solver for stiff chain-coupled reaction-hyperbolic
//! systems `U_t + Λ U_x = Q(U) / ε`, with the stability diagnostics of the
//! scheme and a reference solver for the equilibrium limit `ε → 0`.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod entropy;
pub mod equilibrium;
pub mod error;
pub mod harness;
pub mod interp;
pub mod kinetics;
pub mod profile;
pub mod quadrature;
pub mod refsolver;
pub mod roots;
pub mod scheme;
pub mod tridiag;

pub use error::{Error, Result};
