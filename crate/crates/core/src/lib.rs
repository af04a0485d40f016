//! Spectral theory of the almost Mathieu operator: cocycles, Lyapunov
//! exponents, periodic approximants, localization and Aubry duality.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod arithmetic;
pub mod duality;
pub mod error;
pub mod localization;
pub mod lyapunov;
pub mod operator;
pub mod periodic;
pub mod scalar;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};

pub type Params = operator::Parameters<f64>;
pub type Matrix = operator::Mat2<f64>;
pub type Restriction = operator::FiniteRestriction<f64>;
pub type Pair = localization::EigenPair<f64>;
pub type Lyapunov = lyapunov::LyapunovEstimate<f64>;
