//! Estimators, rate calculus and Monte Carlo verification tools for M-estimators
//! whose components converge at different rates.
//!
//! The crate is organized bottom-up:
//!
//! * [`rates`] : exact rational rate formulas and the coupled/decoupled regime test.
//! * [`distributions`] : seeded samplers for every data law and process.
//! * [`estimators`] : bridge-penalized regression, the shorth, and local 2-means.
//! * [`limits`] : samplers for the limiting laws of those estimators.
//! * [`harness`] : sample-size ladders, rate fitting, exact-zero fractions, KS.
//! * [`verify`] : the acceptance checks, shared by the CLI and the test suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod limits;
pub mod optim;
pub mod rates;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use rng::SeedStream;
