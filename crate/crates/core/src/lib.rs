//! Unbalanced Wasserstein-1 transport on finite metric spaces.
//!
//! Static models are described by a local discrepancy `c_S` (or its profile
//! `h_S`), dynamic models by a growth penalty profile `h_D`. The crate
//! evaluates both, converts between them through the scalar flow of `h_D`,
//! reconstructs `h_D` from `h_S` when possible, and solves discrete
//! transport problems with an internal simplex.

pub mod cli;
pub mod dirac;
pub mod discrepancy;
pub mod dynamic;
pub mod error;
pub mod flow;
pub mod hfunc;
pub mod lp;
pub mod measure;
pub mod numeric;
pub mod reconstruct;
pub mod selftest;
pub mod table;
pub mod transport;

pub use error::{Error, Result};
