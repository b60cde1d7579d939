// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Forward simulation and inverse fitting for an optically addressable
//! molecular triplet spin qubit.
//!
//! The crate models a seven-level system — a spin-1 ground triplet, a spin-1
//! excited triplet and an effective singlet shelf — driven by a resonant
//! laser and microwave fields. On top of that single parameterized model it
//! provides:
//!
//! - [`zfs`]: zero-field-splitting algebra, triplet spin Hamiltonians with
//!   Zeeman terms, and resonance-field / rotation-dispersion computation.
//! - [`photophysics`]: the seven-level rate model with coherent ground-state
//!   microwave drive, steady-state and time-domain solvers, and rate
//!   calibration from measured lifetimes.
//! - [`sequences`]: a pulse-sequence engine for Rabi, Hahn-echo, XY8-N and
//!   T1 experiments with complementary-difference readout.
//! - [`spectra`]: CW ODMR and fluorescence-excitation spectra, isotope
//!   ensembles, Lorentzian-triple fitting, cross-correlation and the
//!   Debye-Waller ratio.
//! - [`photon_stats`]: kinetic Monte Carlo photon streams, g²(τ)
//!   histogramming and fitting with Gaussian instrument response, and TCSPC
//!   decay simulation with bi-exponential reconvolution fitting.
//! - [`fitting`]: the shared Levenberg-Marquardt engine and Monte-Carlo
//!   uncertainty machinery used by the modules above.
//!
//! Units are MHz for energies and frequencies, mT for magnetic fields and ns
//! for times throughout; the conversion constants live in [`constants`].
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only enables `std::error::Error` impls.

#![cfg_attr(not(feature = "std"), no_std)]
// Validation guards use `!(x >= 0.0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod constants;
pub(crate) mod fm;
pub mod linalg;
pub mod rng;

pub mod fitting;
pub mod photon_stats;
pub mod photophysics;
pub mod sequences;
pub mod spectra;
pub mod zfs;

pub use linalg::Cplx;
