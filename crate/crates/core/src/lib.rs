//! Clarkson-McLeod solutions of the fourth Painlevé equation
//!
//! `q'' = q'^2/(2q) + 3q^3/2 + 4xq^2 + 2(x^2 - 2α)q`, fixed by
//! `q ~ κ D²_{α-1/2}(√2 x)` as x → +∞.
//!
//! The crate integrates these solutions through their real poles, evaluates
//! the x → -∞ asymptotic formulas and connection data, computes the
//! regularized total integrals, and evaluates Fredholm determinants of the
//! parabolic-cylinder integrable kernel whose log-derivative is the σ-form of
//! the same family.

// `!(a < b)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod fredholm;
pub mod integrals;
pub mod io;
pub mod ode;
pub mod painleve;
pub mod quadrature;
pub mod separatrix;
pub mod specfun;

pub use error::{Error, Result};
