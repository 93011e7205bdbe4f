//! Link-level simulation toolkit for amplitude-phase-time block modulation
//! (APTBM) over nonlinear power amplifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`alphabet`]: APTBM alphabets, the bit mapping and block constraints.
//! - [`pa`]: memoryless PA behavioral models, IBO/PAE math, AM-PM tables.
//! - [`waveform`]: root-raised-cosine shaping and matched filtering.
//! - [`channel`]: AWGN / symbol-spaced FIR channel and equalization.
//! - [`recon`]: the heuristic baseline, its phase-compensated variant and
//!   the two-stage (coarse + trust-region fine) reconstruction.
//! - [`demod`]: nearest-neighbour demapping, full or phase-assisted.
//! - [`harness`]: deterministic, sharded Monte Carlo experiments and sweeps.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alphabet;
pub mod channel;
pub mod demod;
mod error;
pub mod harness;
pub mod pa;
pub mod recon;
pub mod waveform;

pub use num_complex::Complex64 as Complex;

pub use alphabet::{AptbmAlphabet, AptbmBlock, BitWord, InitialPhase, SphereState};
pub use error::{Error, Result};
pub use pa::{AmPmTable, PaModel, RappParams};
pub use recon::ReconResult;
pub use waveform::RrcFilter;
