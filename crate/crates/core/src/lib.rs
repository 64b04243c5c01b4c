//! Degradation-aware predictive energy management for islanded DC microgrids.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithm:
//! device models, device-level controllers, the ADMM quadratic-program
//! solver, centralized and distributed (dual-ascent) model predictive
//! energy management, classical economic dispatch and the two-rate
//! co-simulation driver. File formats, configuration parsing and the CLI
//! live in the `shipem` companion crate.
//!
//! All arithmetic is in SI units (W, V, A, A·s, s). The energy-management
//! QPs are internally scaled to MW so that dual step sizes around `0.1`
//! behave as expected.

#![no_std]
#![deny(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod central;
pub mod dispatch;
pub mod distributed;
pub mod dlc;
pub mod domain;
mod error;
pub mod linalg;
mod math;
pub mod plant;
pub mod qp;
pub mod sim;

pub use error::{ConfigError, EmError, SimError};
