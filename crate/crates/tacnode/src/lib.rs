//! Numerics for the thinned gap probability of the tacnode process.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: Airy, modified Bessel, Gamma, Barnes G, Kummer functions and
//!   Gauss-Legendre rules.
//! * [`quad`]: Nystrom discretisation and Fredholm determinants.
//! * [`kernel`]: the Airy kernel, the tacnode kernel and `F(s; gamma)`.
//! * [`hamiltonian`]: the 24-dimensional phase space, vector field, Hamiltonian
//!   and Lax matrices.
//! * [`ode`]: adaptive integration and large-s initial data.
//! * [`asymptotics`]: closed-form large gap expansions and counting statistics.
//! * [`parametrix`]: Bessel and confluent hypergeometric model problems.
//! * [`cli`]: the command-line front end.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod hamiltonian;
pub mod kernel;
pub mod ode;
pub mod parametrix;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;
