//! First-order methods driven by relatively inexact gradients.
//!
//! A gradient oracle returns `d` with `||d - g|| <= delta ||g||`; the crate
//! provides such oracles (mantissa compression and an adversarial model),
//! step-size schedules, inexact gradient descent and its accelerated variant,
//! and worst-case rate computation through performance estimation SDPs.

pub mod error;
pub mod oracle;
pub mod pep;
pub mod problems;
pub mod schedules;
pub mod solvers;

pub use error::{Error, Result};
