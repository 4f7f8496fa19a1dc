//! Sector-restricted simulation of the 2+1D U(1) quantum link model with a
//! tunable plaquette term.

pub mod circuits;
pub mod cli;
pub mod configspace;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod observables;
mod par;
pub mod shots;
pub mod strings;

pub use error::{QlmError, Result};
