//! Sparse CDMA multiuser detection laboratory.
//!
//! The crate covers the whole numerical pipeline for sparsely spread,
//! chip-synchronous CDMA over the binary-input AWGN channel:
//!
//! * [`ensemble`]: sampling signature codes (pure random, user regular and
//!   chip+user regular), with BPSK or unmodulated entries.
//! * [`channel`]: random bits, Gaussian noise and the received chip signal.
//! * [`detector`]: the matched (`β = 1`) posterior-marginal detector, by
//!   exhaustive enumeration and by sum-product belief propagation.
//! * [`landscape`]: coupling/field form of the energy, marginal field
//!   moments and the not-all-equal clique structure of unmodulated codes.
//! * [`popdyn`]: population dynamics for the cavity fixed-point equations,
//!   free energy, bit error rate and metastable branch detection.
//!
//! The crate is `no_std` and only needs `alloc`. All randomness is drawn
//! from caller-supplied [`rand::Rng`] sources; [`seeds`] provides the
//! deterministic seed splitting used to derive per-trial streams.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod detector;
pub mod ensemble;
mod error;
pub mod factor;
pub mod landscape;
pub mod popdyn;
pub mod seeds;
pub mod stats;

pub use channel::TransmissionRecord;
pub use detector::{BpParams, MessageInit, PosteriorMarginals};
pub use ensemble::{EnsembleSpec, Modulation, Regularity, SparseCode};
pub use error::{Error, Result};
pub use popdyn::{InitMode, PdParams, SaddleSolution};
