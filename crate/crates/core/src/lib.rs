//! Truncated Fock-space simulation of cat-state generation and amplification
//! with beam splitters, auxiliary coherent fields and imperfect photon
//! detection.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod fock;
pub mod optics;
pub mod purification;
pub mod qnd;
pub mod verify;
pub mod ca;
pub mod wigner;

pub use error::{Error, Result};
