//! Numerical toolkit for the PDE evolutions that arise as small-window limits
//! of order-p M-smoothers.
//!
//! * [`grid`]: mirrored-boundary fields and finite differences.
//! * [`mestimate`]: order-p means, modes and windowed M-smoothers.
//! * [`pde2d`]: the explicit four-step splitting scheme for 2D images.
//! * [`pde1d`]: linear and shock-filter evolutions for 1D signals.
//! * [`verify`]: quadrature oracles for the asymptotic filter limits.
//! * [`pgm`], [`signal`]: file formats used by the command-line driver.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod mestimate;
pub mod pde1d;
pub mod pde2d;
pub mod pgm;
pub mod signal;
pub mod verify;

pub use error::{Error, Result};
pub use grid::Field;
