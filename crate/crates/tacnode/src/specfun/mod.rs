//! Special functions used across the crate.

pub mod airy;
pub mod barnes;
pub mod bessel;
pub mod gamma;
pub mod kummer;
pub mod legendre;

pub use airy::airy_ai_pair;
pub use barnes::barnes_g_log_product;
pub use bessel::modified_bessel_i0k0;
pub use gamma::{gamma_line, Beta, EULER_GAMMA};
pub use legendre::{gauss_legendre_rule, QuadratureRule};
