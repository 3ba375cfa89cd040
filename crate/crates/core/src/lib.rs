//! Sparse polynomial-chaos surrogates of parameterized elliptic PDEs.
//!
//! Finite element snapshots `u_h(., y_i)` at random parameter points are
//! fitted with a global expansion `sum_nu c_nu Psi_nu(y)` whose coefficients
//! `c_nu` are themselves finite element fields. The coefficients are
//! recovered jointly by minimizing the sum of their energy norms subject to
//! a residual bound ([`scs`]), and compared against node-by-node recovery
//! ([`pcs`]) and plain Monte Carlo ([`estimators`]).

pub mod coefficient;
pub mod config;
pub mod estimators;
pub mod error;
pub mod fem;
pub mod hilbert;
pub mod io;
pub mod multiindex;
pub mod polychaos;
pub mod quadrature;
pub mod pcs;
pub mod pipeline;
pub mod scs;
pub mod snapshots;

pub use error::{Error, Result};
