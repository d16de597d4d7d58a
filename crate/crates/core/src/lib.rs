//! Entropy-balanced upper bounds on the crossing number of curve systems
//! built from fibre surfaces of complete bipartite graphs.
//!
//! The crate computes the optimized leading constant `C* = min 2x/H(x)^2`,
//! checks the supporting combinatorial estimates exactly at small sizes, and
//! turns concrete `(g, alpha, epsilon)` into certified numeric upper bounds on
//! `Cr(g, floor(g^(1+alpha)))`.

pub mod combinatorics;
pub mod entropy;
pub mod error;
pub mod family;
pub mod planner;
pub mod precision;
pub mod report;
pub mod roots;
pub mod verify;

pub use error::{Error, Result};
pub use precision::{Interval, Rational};
