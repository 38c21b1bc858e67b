//! Exact computations for discrete Hecke pairs `(G, H)`: right-coset and
//! double-coset enumeration, the Hecke algebra with its involution, length
//! functions, growth, and operator-norm estimates for the regular
//! representation.

pub mod algebra;
pub mod coset;
pub mod error;
pub mod group;
pub mod growth;
pub mod length;
pub mod pair;
pub mod rd;

pub use error::{HeckeError, Result};
