//! Exact symbolic analysis of first-order Lagrangian systems, singular or not.
//!
//! The crate builds the full constraint structure of a possibly singular
//! Lagrangian (momenta, Hessian kernel, primary and stabilized constraints,
//! evolution vector fields) and verifies canonical symmetry candidates through
//! three equivalent commutation-based characterizations: on phase space, via
//! the phase-space-to-velocity-space evolution operator, and on velocity
//! space.  All arithmetic is exact: coefficients are arbitrary-precision
//! rationals and every reported identity is checked by structural
//! cancellation, not floating point.
//!
//! The crate is `no_std` + `alloc`; file formats and the command-line driver
//! live in the companion `noether-kit` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod analysis;
pub mod calculus;
pub mod constraints;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod legendre;
pub mod linalg;
pub mod matching;
pub mod model;
pub mod noether;
pub mod numeric;
pub mod parse;
pub mod symbol;

pub use analysis::{Analysis, Options};
pub use error::CoreError;
pub use expr::Expr;
pub use symbol::{Symbol, SymbolKind, SymbolTable};
