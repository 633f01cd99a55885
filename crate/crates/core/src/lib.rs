//! Exact symbolic phase-space quantum mechanics.
//!
//! Polynomials in `q`, `p`, `ħ` with Gaussian-rational coefficients, the
//! Moyal star product, Poisson and Moyal brackets, Lie flows generated by
//! either bracket, and one-period defects of periodically kicked systems.

pub mod cli;
pub mod coeffs;
pub mod exec;
pub mod expr;
pub mod kicked;
pub mod lie;
pub mod poly;
pub mod random;
pub mod series;
pub mod star;
pub mod star_exp;
pub mod verify;

pub use coeffs::GaussianRational;
pub use expr::{parse_poly, ParseError};
pub use poly::{Monomial, PhasePoint, PhasePoly, Var};
