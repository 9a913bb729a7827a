//! Constant estimators, verifiers and searches for A∞-type weight conditions
//! on finite martingale filtrations.
//!
//! A [`filtration::Filtration`] is a finite atom tree carrying a probability
//! measure; a [`filtration::Weight`] is a positive function on its leaves.
//! Every characterization of the A∞ class becomes a maximum over atoms of an
//! explicit quantity, computed in [`characterizations`]. [`verifier`] checks
//! the quantitative relations between those constants, and [`search`] looks
//! for weights that make one constant large while keeping another bounded.

// `!(x < y)` is used on purpose so that NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterizations;
pub mod cli;
pub mod error;
pub mod filtration;
pub mod operators;
pub mod search;
pub mod verifier;

mod nullable;

pub use error::{Error, Result};
