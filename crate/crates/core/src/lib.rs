//! Stress concentration between a rigid inclusion and the boundary of an
//! elastic matrix when the two nearly touch.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] — gap profiles, structural-condition checks, closed curves;
//! * [`auxiliary`] — the explicit fields `v̄`, `ū_i`, `ū_0` and rigid modes;
//! * [`constants`] — `Γ_α`, `M_{α,τ}`, rest exponents and gap integrals;
//! * [`fem`] — P2 finite elements for the Lamé sub-problems;
//! * [`concentration`] — the concentration system, limiting quantities and
//!   asymptotic gradient evaluators;
//! * [`harness`] — configuration, ε-sweeps, rate fits and comparisons.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is on (default) and plain iterators otherwise.

pub mod auxiliary;
pub mod concentration;
pub mod constants;
pub mod error;
pub mod exec;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod quadrature;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
