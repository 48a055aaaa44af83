//! Algorithmic core of a two-tier LTE sidelink (C-V2X) simulator.
//!
//! The crate is `no_std` and only needs `alloc`. It carries everything that is a pure function
//! of its inputs:
//!
//! - [`coding`]: CRC, tail-biting convolutional code, LTE turbo code, segmentation, rate
//!   matching, channel interleaving and Gold-sequence scrambling.
//! - [`fading`]: EVA tapped-delay-line fading with Jakes Doppler, AWGN and maximal-ratio
//!   combining.
//! - [`l2s`]: the BLER(SNR, velocity) link-to-system table and its interpolation rule.
//! - [`scenario`]: highway geometry, WINNER II pathloss, shadowing and link budget terms.
//! - [`engine`]: resource assignment, interference, SINR and the packet-reception-ratio
//!   procedure.
//!
//! FFT-based symbol processing, file formats and the command-line front end live in the
//! `sidelink-sim` crate.
//!
//! Soft bits follow one convention everywhere: a positive log-likelihood ratio means bit `0` is
//! more likely.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN together with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coding;
pub mod engine;
mod error;
pub mod fading;
pub mod l2s;
pub mod math;
pub mod rng;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
