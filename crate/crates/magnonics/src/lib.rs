//! Modeling toolkit for a driven photon-magnon hybrid transducer.
//!
//! A microwave cavity mode and a ferrimagnetic Kittel mode form a strongly
//! coupled pair of oscillators; a weak external tone drives the magnetic side
//! and deposits power in the cavity. This crate provides
//!
//! * [`model`] -- the analytic frequency-domain solution: steady-state
//!   response amplitudes, deposited power, hybrid-mode dispersion, the
//!   dynamical bandwidth of the transducer, and an N-mode generalisation;
//! * [`timedomain`] -- an independent time-domain oracle: RK4 integration of
//!   the coupled amplitude equations, pulsed ring-down, heterodyne readout,
//!   and pulse-energy statistics;
//! * [`spectroscopy`] -- synthetic two-port transmission spectra, Lorentzian
//!   peak fitting, and parameter extraction from a field sweep.
//!
//! All internal quantities are angular frequencies in rad/s. Conversions to
//! ordinary frequency (Hz) happen at external interfaces only. Deposited
//! power is computed in natural units (rad^2/s^2); multiply by
//! [`model::HBAR`] via [`model::power_to_watts`] to quote watts. The absolute
//! power scale is conventional, the physically meaningful outputs are
//! normalized (transduction coefficient, bandwidth, dispersion).
//!
//! Every type is an immutable value and every operation is a pure function of
//! its inputs, so sweeps can be evaluated in parallel without shared state.
//! Randomness (pulse jitter) always takes an explicit seed.

// validation guards are written `!(x > 0.0)` on purpose: they must reject
// NaN, which `x <= 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
mod linalg;
pub mod model;
pub mod spectroscopy;
pub mod timedomain;

pub use error::{Error, Result};
