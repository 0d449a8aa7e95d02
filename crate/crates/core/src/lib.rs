//! Strong-field ionization laboratory.
//!
//! Solves the time-dependent Schrödinger equation for one-electron atoms
//! (Coulomb or screened-Coulomb binding) in short shaped laser pulses, on a
//! uniform radial grid with a spherical-harmonic channel expansion (m = 0).
//! On top of the propagator it provides the kick-probe machinery: perturb the
//! pulse with a narrow Gaussian signal field at time τ, measure the change in
//! total ionization probability δP(E₀, τ), and compare the resulting response
//! surface against the quasistatic (ADK-type) reference, including the
//! contour-symmetry / delay analysis.
//!
//! Everything is in atomic units (ħ = mₑ = e = 1). One a.u. of time is
//! 24.18884 attoseconds.

// Validation deliberately writes !(x > 0.0) so NaN fails the check, and the
// numerics kernels index several slices by one counter.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adk;
pub mod atom;
pub mod cli;
pub mod config;
pub mod fields;
pub mod numerics;
pub mod propagator;
pub mod rates;
pub mod tridiag;

mod error;

pub use error::{Error, Result};

/// Attoseconds per atomic unit of time.
pub const ATTOSECONDS_PER_AU: f64 = 24.18884;
