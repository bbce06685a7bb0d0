//! Zeta functions of nondegenerate curves over finite fields.
pub mod arith;
pub mod polytope;
pub mod laurent;
pub mod nondegen;
pub mod nullstellensatz;
pub mod oracle;
pub mod reduction;
pub mod zeta;
pub mod curve_file;
pub mod error;
pub mod frobenius;
mod nat;
pub mod ntt;
pub use arith::{FieldSpec, FqElement, ZqContext, ZqElement};
pub use error::Error;
