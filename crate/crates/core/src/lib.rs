//! Diagonal-sum inequalities for m-linear forms on `l_p^n`.
//!
//! For an m-linear form `T` on `l_{p_1}^n × … × l_{p_m}^n` this crate relates
//! the diagonal s-sum `(Σ_j |T(e_j, …, e_j)|^s)^{1/s}` to the operator norm
//! `‖T‖`:
//!
//! - [`constants`] gives the exact best constants and regime exponents,
//! - [`normest`] computes `‖T‖` (exact oracles and multi-start alternating ascent),
//! - [`experiments`] measures ratios, searches for extremal forms and fits
//!   growth exponents,
//! - [`cli`] exposes all of it on the command line.
//!
//! Independent work units (ascent starts, verification trials) run on rayon
//! when the `parallel` feature is on; see [`exec::Execution`].

pub mod cli;
pub mod constants;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod forms;
pub mod normest;
pub mod scalar;
pub mod spaces;

pub use constants::{best_constant, BestConstant, ConstantQuery, PowerOfN, Regime, RegimeTag};
pub use error::{Error, Result};
pub use exec::Execution;
pub use forms::{product_form, random_form, Distribution, MultilinearForm, SpaceSpec};
pub use normest::{best_available_norm, AscentConfig, NormEstimate, NormKind};
pub use scalar::{Scalar, ScalarMode};
pub use spaces::{dual_exponent, Exponent, Rational};
