//! Resonantly driven two-level system without the rotating-wave approximation.
//!
//! The counter-rotating part of a linearly polarized drive produces a small
//! population oscillation at twice the drive frequency, the Bloch-Siegert
//! oscillation (BSO), whose phase follows the absolute phase of the field.
//! This crate computes it three independent ways and builds the detection
//! schemes on top:
//!
//! - [`dynamics`]: direct RK4 integration of the rotating-frame equations,
//!   with or without the counter-rotating term.
//! - [`floquet`]: the six-mode truncated Fourier expansion and its adiabatic
//!   closed form.
//! - [`analytic`]: the first-order lab-frame amplitudes and the π/2-pulse
//!   readout `½[1 + 2η sin(2ωτ + 2φ)]`.
//! - [`beam`]: Maxwell-Boltzmann averaging for an atomic beam and lock-in
//!   demodulation.
//! - [`signal`]: residual extraction, sinusoid fitting, spectral peaks, and
//!   absolute-phase estimation.
//! - [`sweep`]: parameter sweeps, run on rayon when the `parallel` feature is
//!   enabled.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod beam;
pub mod dynamics;
mod error;
pub mod field;
pub mod floquet;
mod integrator;
pub mod quadrature;
pub mod signal;
pub mod sweep;

pub use error::{Error, Result};
pub use field::{BsCompensation, FieldParams};

pub use num_complex::Complex64 as C64;
