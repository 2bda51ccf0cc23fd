//! Streaming anytime-valid inference.
//!
//! Everything in this crate is built on one primitive: the wealth process of
//! a bettor playing against a null hypothesis. Nonnegative wealth with unit
//! initial capital and conditionally fair (or subfair) bets is a test
//! (super)martingale; its running maximum obeys Ville's inequality, which
//! turns wealth into sequential tests, anytime-valid p-values and confidence
//! sequences that survive continuous monitoring and optional stopping.
//!
//! Modules:
//! - [`eprocess`] — log-space wealth ledgers, Ville thresholding,
//!   anytime-valid p-values, e-value combination, calibrators, adjusters;
//! - [`betting`] — predictable bet policies and λ-grid mixtures;
//! - [`confseq`] — confidence sequences for means (sub-Gaussian mixture,
//!   empirical-Bernstein, betting-martingale inversion, Catoni, asymptotic);
//! - [`nonparam`] — tests of symmetry and binary exchangeability;
//! - [`param`] — scale-invariant t-test, 2×2 block e-values, logrank
//!   martingale, prior-posterior ratio martingale and e-posterior intervals;
//! - [`multtest`] — e-BH, BH, e-BY adjusted levels, e-weighted BH;
//! - [`detect`] — e-detectors for sequential change detection;
//! - [`sim`] — Monte Carlo harness, exact enumeration and quadrature oracles;
//! - [`cli`] — streaming command-line front end.

// `!(x > 0.0)` is the NaN-rejecting validation idiom used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod betting;
pub mod cli;
pub mod confseq;
pub mod detect;
pub mod eprocess;
pub mod error;
pub mod multtest;
pub mod nonparam;
pub mod numeric;
pub mod param;
pub mod sim;

pub use error::{Error, Result};
