// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants (CODATA-2018) and the reference parameter sets of the
//! carbene qubit characterized in this codebase. Units follow the crate
//! convention: MHz, mT, ns.

/// Planck constant, J·s (exact, SI 2019).
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Bohr magneton, J/T (CODATA-2018).
pub const BOHR_MAGNETON_J_PER_T: f64 = 9.274_010_078_3e-24;

/// μ_B/h in MHz per mT.
pub const MU_B_OVER_H_MHZ_PER_MT: f64 = BOHR_MAGNETON_J_PER_T / PLANCK_J_S * 1e-9;

/// Isotropic electron g-factor used for the carbene spin.
pub const G_ISO: f64 = 2.0023;

/// Angular frequency per cyclic MHz when time is measured in ns.
pub const RAD_PER_NS_PER_MHZ: f64 = 2.0 * core::f64::consts::PI * 1e-3;

// --- Ground-state zero-field splitting -------------------------------------

/// Annealed site-1 ground ZFS (ODMR), MHz. E is negative by theory and EPR.
pub const SITE1_D_MHZ: f64 = 11_159.7;
pub const SITE1_E_MHZ: f64 = -540.9;

/// Annealed site-2 ground ZFS (ODMR), MHz.
pub const SITE2_D_MHZ: f64 = 11_186.0;
pub const SITE2_E_MHZ: f64 = -546.0;

/// Nascent (pre-anneal) site-1 ground ZFS (ODMR), MHz.
pub const NASCENT_D_MHZ: f64 = 10_930.0;
pub const NASCENT_E_MHZ: f64 = -516.0;

/// EPR rotation-dispersion simulation sets, MHz.
pub const EPR_ANNEALED_D_MHZ: f64 = 11_160.0;
pub const EPR_ANNEALED_E_MHZ: f64 = -541.0;
pub const EPR_NASCENT_D_MHZ: f64 = 10_900.0;
pub const EPR_NASCENT_E_MHZ: f64 = -520.0;

/// Tilt between the two paramagnetic sites about the tensor y-axis, degrees.
pub const SITE_TILT_DEG: f64 = 2.5;

/// CASSCF/NEVPT2 ZFS values, MHz (theory set).
pub const THEORY_GS_D_MHZ: f64 = 11_797.0;
pub const THEORY_GS_E_MHZ: f64 = -516.0;
pub const THEORY_ES_D_MHZ: f64 = -6_161.0;
pub const THEORY_ES_E_MHZ: f64 = 276.0;

// --- Excited-state zero-field splitting ------------------------------------

/// Excited ZFS from excited-state ODMR, MHz.
pub const EXCITED_D_MHZ: f64 = -4_190.5;
pub const EXCITED_E_MHZ: f64 = 232.5;

/// E of the excited triplet estimated from the optical X/Y splitting, MHz.
/// Differs by 5 MHz from [`EXCITED_E_MHZ`]; both values are kept.
pub const EXCITED_E_FROM_OPTICAL_MHZ: f64 = 237.0;

// --- Optical transitions ----------------------------------------------------

/// Splitting between the Y→Y' and X→X' optical lines, MHz (X is lower).
pub const OPTICAL_SPLITTING_XY_MHZ: f64 = 1_555.0;

/// Splitting between the Z→Z' and X→X' optical lines, MHz.
pub const OPTICAL_SPLITTING_XZ_MHZ: f64 = 16_120.0;

/// Single-molecule homogeneous optical linewidth (FWHM), MHz.
pub const HOMOGENEOUS_LINEWIDTH_MHZ: f64 = 38.0;

/// Ensemble inhomogeneous optical linewidth (FWHM), MHz.
pub const INHOMOGENEOUS_FWHM_MHZ: f64 = 3_000.0;

/// Optical line offsets (X, Y, Z) on the laser-offset axis whose zero sits
/// at the center of the composite X/Y peak, MHz.
pub const OPTICAL_LINE_OFFSETS_MHZ: [f64; 3] = [
    -OPTICAL_SPLITTING_XY_MHZ / 2.0,
    OPTICAL_SPLITTING_XY_MHZ / 2.0,
    OPTICAL_SPLITTING_XZ_MHZ - OPTICAL_SPLITTING_XY_MHZ / 2.0,
];

// --- Photophysics ------------------------------------------------------------

/// Relative ISC rates T1 → S per excited sublevel (x', y', z').
pub const ISC_RELATIVE_RATES: [f64; 3] = [0.009, 0.042, 0.949];

/// Singlet → ground branching (x, y, z); the z channel carries > 0.999.
pub const SINGLET_BRANCHING: [f64; 3] = [0.0005, 0.0005, 0.999];

/// Spin-state overlap between excited and ground sublevels. Row = excited
/// sublevel (x', y', z'), column = ground sublevel (x, y, z); each row is
/// normalized to sum to exactly 1 so that sublevel lifetimes follow the
/// closed-form rate relations.
pub const SPIN_OVERLAP: [[f64; 3]; 3] = [
    [0.993, 0.003, 0.004],
    [0.004 / 0.999, 0.977 / 0.999, 0.018 / 0.999],
    [0.003, 0.019, 0.978],
];

/// Short and long fluorescence lifetime components, ns (single molecule /
/// doped-crystal ensembles).
pub const TAU_SHORT_NS: f64 = 4.8;
pub const TAU_LONG_NS: f64 = 24.0;

/// Detector timing jitter of the single-photon counter, ns.
pub const DETECTOR_JITTER_SIGMA_NS: f64 = 0.425;

/// g²(τ) correlation bin width used in the reference analysis, ns.
pub const G2_BIN_NS: f64 = 5.0;

// --- Spin coherence ----------------------------------------------------------

/// Hahn-echo coherence time and stretch exponent.
pub const HAHN_T2_NS: f64 = 12_200.0;
pub const HAHN_BETA: f64 = 1.7;

/// XY8-N coherence time and stretch exponent.
pub const XY8_T2_NS: f64 = 2.2e6;
pub const XY8_BETA: f64 = 0.9;

/// Spin-lattice relaxation time, ns.
pub const T1_NS: f64 = 21.0e6;

/// Rabi frequency of the reference single-spin measurement, MHz.
pub const RABI_FREQUENCY_MHZ: f64 = 3.7;

// --- Isotopes and doping ------------------------------------------------------

/// Carbon atoms in the qubit molecule.
pub const CARBON_COUNT: u32 = 25;

/// Natural ¹³C abundance.
pub const C13_ABUNDANCE: f64 = 0.011;

/// Doping-ratio constant: ξ = `DOPING_CONSTANT_NM3` / d³ with d in nm.
pub const DOPING_CONSTANT_NM3: f64 = 0.4175;
