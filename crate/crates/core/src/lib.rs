//! Spectral-gap laboratory for adiabatic annealing of weighted independent
//! set instances with few-body catalyst terms.
//!
//! The pipeline runs [`graph`] instances through [`hamiltonian`] into
//! [`spectrum`] scans; [`catalysts`] chooses which qubits the extra terms
//! flip, and [`experiments`] packages the standard studies.

pub mod catalysts;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod hamiltonian;
pub mod oracle;
pub mod perturbation;
pub mod spectrum;

pub use error::{Error, Result};
