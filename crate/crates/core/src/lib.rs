//! Weyl, anti-Wick and hybrid quantizations on truncated Fock spaces.

pub mod bargmann;
pub mod bounds;
pub mod error;
pub mod fock;
pub mod gaussmeasure;
pub mod hermite;
pub mod index;
pub mod linalg;
pub mod quantize;
pub mod suites;
pub mod symbols;

pub use error::{Error, Result};
pub use index::{Basis, IndexFamily, ModeId, ModeSet, MultiIndex, Truncation};
