//! Quantum cohomology and Rietsch mirror computations for flag varieties.
//!
//! The A-side (Schubert calculus, quantum connection, Gamma class, flat
//! sections) and the B-side (geometric crystal, superpotential, oscillatory
//! integrals) share the root-system layer in [`lie`].

pub mod error;
pub mod linalg;
pub mod poly;
pub mod lie;
pub mod schubert;
pub mod qh;
pub mod gammaclass;
pub mod flatsections;
pub mod mirror;

pub use error::{Error, Result};
pub use lie::{build_root_system, CartanDatum, ParabolicData, RootSystem, WeylElement};
pub use poly::Poly;
pub use schubert::{CohClass, FlagVariety};
