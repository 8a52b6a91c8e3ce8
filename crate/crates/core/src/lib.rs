//! Two-photon Rabi oscillations of a three-level semiconductor quantum dot
//! next to a metal nanosphere.
//!
//! The crate covers the metal response ([`materials`]), the dot–particle
//! coupling ([`hybrid`]), the driving pulse ([`pulse`]), the density-matrix
//! dynamics ([`dynamics`]), the perturbative adiabatic theory ([`adiabatic`]),
//! parallel parameter sweeps ([`sweeps`]) and the run configuration and
//! command line front end ([`config`], [`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod hybrid;
pub mod materials;
pub mod pulse;
pub mod scenario;
pub mod sweeps;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
