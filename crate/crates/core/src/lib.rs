//! Odd and even optical cat states from photon subtraction on squeezed vacuum.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cli;
pub mod fock;
pub mod optimize;
pub mod pipeline;
pub mod verify;
