// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! The seven-level open-system model of the molecular qubit: spin-1 ground
//! triplet (T₀x, T₀y, T₀z), spin-1 excited triplet (T₁x, T₁y, T₁z) and an
//! effective singlet shelf S.
//!
//! Incoherent channels (optical pumping with a Lorentzian detuning profile,
//! spin-conserving radiative decay weighted by the spin-state overlap,
//! spin-selective ISC into the singlet, singlet decay into the ground
//! sublevels) live in a classical 7×7 rate generator. Microwave drive on the
//! ground triplet is treated coherently in the rotating-wave approximation;
//! the ground 3×3 density block keeps its off-diagonal elements. The
//! combined master equation is linear in the 13 real state components, so
//! steady states come from the null space of one matrix and time evolution
//! from fixed-order Runge-Kutta with step control keyed to the fastest rate.
//!
//! Optical excitation is incoherent: the pump acts both upward and downward
//! (stimulated) at the same rate so that a strongly driven line saturates at
//! half excited-state population. Optical coherences are not tracked; the
//! experiments this models use nW-scale excitation.

use crate::constants;
use crate::fm;
use crate::linalg::{eigvals_hermitian3, Cplx};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Triplet sublevel, usable for both ground and excited manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sub {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Sub {
    pub const ALL: [Sub; 3] = [Sub::X, Sub::Y, Sub::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// A spin transition between two sublevels of one manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinTransition {
    GroundZx,
    GroundZy,
    GroundXy,
    ExcitedZx,
    ExcitedZy,
    ExcitedXy,
}

impl SpinTransition {
    pub fn is_ground(self) -> bool {
        matches!(
            self,
            SpinTransition::GroundZx | SpinTransition::GroundZy | SpinTransition::GroundXy
        )
    }

    /// The two sublevels connected by this transition.
    pub fn levels(self) -> (Sub, Sub) {
        match self {
            SpinTransition::GroundZx | SpinTransition::ExcitedZx => (Sub::Z, Sub::X),
            SpinTransition::GroundZy | SpinTransition::ExcitedZy => (Sub::Z, Sub::Y),
            SpinTransition::GroundXy | SpinTransition::ExcitedXy => (Sub::X, Sub::Y),
        }
    }
}

/// One continuous-wave microwave tone on a ground-triplet transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwDriveTone {
    pub transition: SpinTransition,
    /// Population Rabi frequency in cyclic MHz (π-pulse time = 500/Ω ns).
    pub rabi_mhz: f64,
    pub detuning_mhz: f64,
    pub phase_rad: f64,
}

impl MwDriveTone {
    pub fn resonant(transition: SpinTransition, rabi_mhz: f64) -> Self {
        MwDriveTone {
            transition,
            rabi_mhz,
            detuning_mhz: 0.0,
            phase_rad: 0.0,
        }
    }
}

/// Phenomenological decoherence times; the pulse-sequence engine turns
/// these into stretched-exponential envelopes keyed to the sequence kind,
/// while CW solvers use 1/t2_star as a Markovian dephasing rate on the
/// ground coherences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceConfig {
    pub t2_star_ns: f64,
    pub hahn_t2_ns: f64,
    pub hahn_beta: f64,
    pub xy8_t2_ns: f64,
    pub xy8_beta: f64,
    pub t1_ns: f64,
}

impl Default for DecoherenceConfig {
    fn default() -> Self {
        DecoherenceConfig {
            t2_star_ns: 3_000.0,
            hahn_t2_ns: constants::HAHN_T2_NS,
            hahn_beta: constants::HAHN_BETA,
            xy8_t2_ns: constants::XY8_T2_NS,
            xy8_beta: constants::XY8_BETA,
            t1_ns: constants::T1_NS,
        }
    }
}

/// All rates and drive terms of the seven-level model. Units: 1/ns and MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotophysicsParams {
    /// Radiative decay rate per excited sublevel.
    pub gamma_rad_per_ns: f64,
    /// Total ISC rate scale K; per-sublevel rate is K · isc_rel.
    pub isc_scale_per_ns: f64,
    /// Relative ISC rates (x', y', z'), normalized to 1.
    pub isc_rel: [f64; 3],
    /// Singlet → ground decay rate.
    pub singlet_rate_per_ns: f64,
    /// Singlet branching into the ground sublevels (x, y, z).
    pub singlet_branching: [f64; 3],
    /// On-resonance pump rate.
    pub laser_rate_peak_per_ns: f64,
    /// Laser offset on the excitation axis (zero at the X/Y composite peak).
    pub laser_detuning_mhz: f64,
    /// FWHM of the unit-peak Lorentzian excitation profile.
    pub homogeneous_linewidth_mhz: f64,
    /// Optical line offsets of the X, Y, Z spin-conserving transitions.
    pub optical_line_offsets_mhz: [f64; 3],
    /// Emission branching: row = excited sublevel, column = ground sublevel.
    pub spin_overlap: [[f64; 3]; 3],
    pub mw_drive: Vec<MwDriveTone>,
    pub decoherence: DecoherenceConfig,
    /// Detected fraction of emitted photons.
    pub collection_efficiency: f64,
    /// Poisson dark/background count rate added to photon streams.
    pub background_rate_per_ns: f64,
}

impl PhotophysicsParams {
    /// Reference single-molecule parameter set: lifetime-calibrated rates,
    /// laser resonant with the Y line, CW microwave recycling on both
    /// ground transitions. The pump rate, microwave strength and singlet
    /// lifetime are calibrated so the photon-correlation bunching time of
    /// the simulated stream lands near 245 ns.
    pub fn single_molecule_defaults() -> Self {
        let (gamma_rad, isc_scale) = calibrate_isc_scale(
            constants::TAU_SHORT_NS,
            constants::TAU_LONG_NS,
            constants::ISC_RELATIVE_RATES,
        )
        .expect("reference lifetimes are consistent");
        PhotophysicsParams {
            gamma_rad_per_ns: gamma_rad,
            isc_scale_per_ns: isc_scale,
            isc_rel: constants::ISC_RELATIVE_RATES,
            singlet_rate_per_ns: 0.05,
            singlet_branching: constants::SINGLET_BRANCHING,
            laser_rate_peak_per_ns: 0.005,
            laser_detuning_mhz: constants::OPTICAL_LINE_OFFSETS_MHZ[1],
            homogeneous_linewidth_mhz: constants::HOMOGENEOUS_LINEWIDTH_MHZ,
            optical_line_offsets_mhz: constants::OPTICAL_LINE_OFFSETS_MHZ,
            spin_overlap: constants::SPIN_OVERLAP,
            mw_drive: alloc::vec![
                MwDriveTone::resonant(SpinTransition::GroundZy, 0.58),
                MwDriveTone::resonant(SpinTransition::GroundZx, 0.58),
            ],
            decoherence: DecoherenceConfig::default(),
            collection_efficiency: 0.01,
            background_rate_per_ns: 0.0,
        }
    }

    /// Unit-peak Lorentzian pump rate for the optical line of sublevel `s`.
    pub fn pump_rate_per_ns(&self, s: Sub) -> f64 {
        let delta = self.laser_detuning_mhz - self.optical_line_offsets_mhz[s.index()];
        let hw = self.homogeneous_linewidth_mhz / 2.0;
        self.laser_rate_peak_per_ns * hw * hw / (delta * delta + hw * hw)
    }

    /// Total decay rate of excited sublevel `s` (radiative + ISC).
    pub fn excited_decay_rate_per_ns(&self, s: Sub) -> f64 {
        let row_sum: f64 = self.spin_overlap[s.index()].iter().sum();
        self.gamma_rad_per_ns * row_sum + self.isc_scale_per_ns * self.isc_rel[s.index()]
    }

    /// Lifetimes of the three excited sublevels, ns.
    pub fn sublevel_lifetimes_ns(&self) -> [f64; 3] {
        [
            1.0 / self.excited_decay_rate_per_ns(Sub::X),
            1.0 / self.excited_decay_rate_per_ns(Sub::Y),
            1.0 / self.excited_decay_rate_per_ns(Sub::Z),
        ]
    }

    /// Check every invariant; all violations are reported together.
    pub fn validate(&self) -> Result<(), PhotophysicsError> {
        let mut violations: Vec<String> = Vec::new();
        let mut nonneg = |name: &str, v: f64| {
            if !(v >= 0.0) {
                violations.push(format!("{name} must be >= 0, got {v}"));
            }
        };
        nonneg("gamma_rad_per_ns", self.gamma_rad_per_ns);
        nonneg("isc_scale_per_ns", self.isc_scale_per_ns);
        nonneg("singlet_rate_per_ns", self.singlet_rate_per_ns);
        nonneg("laser_rate_peak_per_ns", self.laser_rate_peak_per_ns);
        nonneg("background_rate_per_ns", self.background_rate_per_ns);
        for (i, &r) in self.isc_rel.iter().enumerate() {
            nonneg(&format!("isc_rel[{i}]"), r);
        }
        for (i, &b) in self.singlet_branching.iter().enumerate() {
            nonneg(&format!("singlet_branching[{i}]"), b);
        }
        let isc_sum: f64 = self.isc_rel.iter().sum();
        if (isc_sum - 1.0).abs() > 1e-9 {
            violations.push(format!("isc_rel must sum to 1, got {isc_sum}"));
        }
        let br_sum: f64 = self.singlet_branching.iter().sum();
        if (br_sum - 1.0).abs() > 1e-9 {
            violations.push(format!("singlet_branching must sum to 1, got {br_sum}"));
        }
        if !(self.homogeneous_linewidth_mhz > 0.0) {
            violations.push(format!(
                "homogeneous_linewidth_mhz must be > 0, got {}",
                self.homogeneous_linewidth_mhz
            ));
        }
        for (i, row) in self.spin_overlap.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if s > 1.0 + 1e-9 {
                violations.push(format!("spin_overlap row {i} sums to {s} > 1"));
            }
            if row[i] < 0.97 {
                violations.push(format!(
                    "spin_overlap diagonal [{i}][{i}] = {} below 0.97",
                    row[i]
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) {
                    violations.push(format!("spin_overlap[{i}][{j}] must be >= 0, got {v}"));
                }
            }
        }
        if !(self.collection_efficiency > 0.0 && self.collection_efficiency <= 1.0) {
            violations.push(format!(
                "collection_efficiency must be in (0, 1], got {}",
                self.collection_efficiency
            ));
        }
        if !(self.decoherence.t2_star_ns > 0.0) {
            violations.push(format!(
                "t2_star_ns must be > 0, got {}",
                self.decoherence.t2_star_ns
            ));
        }
        for tone in &self.mw_drive {
            if !(tone.rabi_mhz >= 0.0) {
                violations.push(format!("mw rabi must be >= 0, got {}", tone.rabi_mhz));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(PhotophysicsError::InvalidParams(violations))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhotophysicsError {
    InvalidParams(Vec<String>),
    /// mw_drive named an excited-state transition; excited microwave
    /// response is modeled as an incoherent transfer rate instead.
    ExcitedStateMwDrive,
    /// X↔Y drive cannot share a rotating frame with Z↔X / Z↔Y tones.
    InconsistentDriveFrame,
    /// Two tones on the same transition.
    DuplicateDrive,
    /// The rate model has more than one stationary distribution; add a
    /// drive channel or evolve from an initial condition instead.
    NonUniqueSteadyState,
    SteadyStateResidual {
        residual: f64,
    },
    /// Lifetime pair does not determine the rates (r_z' = r_y').
    DegenerateLifetimes,
    /// Calibration produced a non-positive rate.
    NegativeRate {
        gamma_rad_per_ns: f64,
        isc_scale_per_ns: f64,
    },
    /// tau_short must be smaller than tau_long.
    LifetimeOrder,
    /// Integration would need too many sub-steps; the fastest rate is given.
    StepSizeUnderflow {
        max_rate_per_ns: f64,
    },
}

impl fmt::Display for PhotophysicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhotophysicsError::InvalidParams(v) => {
                write!(f, "invalid photophysics parameters: {}", v.join("; "))
            }
            PhotophysicsError::ExcitedStateMwDrive => {
                write!(f, "mw_drive must name ground-triplet transitions only")
            }
            PhotophysicsError::InconsistentDriveFrame => {
                write!(
                    f,
                    "X-Y drive cannot be combined with Z-X / Z-Y tones in one rotating frame"
                )
            }
            PhotophysicsError::DuplicateDrive => {
                write!(f, "duplicate microwave tone on one transition")
            }
            PhotophysicsError::NonUniqueSteadyState => {
                write!(
                    f,
                    "stationary state is not unique; add a drive or an initial condition"
                )
            }
            PhotophysicsError::SteadyStateResidual { residual } => {
                write!(f, "steady-state residual {residual:.2e} exceeds tolerance")
            }
            PhotophysicsError::DegenerateLifetimes => {
                write!(f, "lifetime pair cannot be inverted: relative ISC rates coincide")
            }
            PhotophysicsError::NegativeRate {
                gamma_rad_per_ns,
                isc_scale_per_ns,
            } => write!(
                f,
                "inconsistent lifetimes: gamma_rad = {gamma_rad_per_ns}, isc_scale = {isc_scale_per_ns}"
            ),
            PhotophysicsError::LifetimeOrder => write!(f, "tau_short must be < tau_long"),
            PhotophysicsError::StepSizeUnderflow { max_rate_per_ns } => {
                write!(f, "step size underflow; fastest rate {max_rate_per_ns} /ns")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PhotophysicsError {}

/// Dimension of the real state vector: 7 populations plus Re/Im of the
/// three ground coherences (xy, xz, yz).
pub const STATE_DIM: usize = 13;
const COH_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Populations of the seven levels plus the ground-triplet coherences.
///
/// Population order: T₀x, T₀y, T₀z, T₁x, T₁y, T₁z, S.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub populations: [f64; 7],
    /// Upper off-diagonal elements (xy, xz, yz) of the ground block.
    pub ground_coherences: [Cplx; 3],
}

impl SystemState {
    /// Equal ground-sublevel mixture, no coherence.
    pub fn ground_mixed() -> Self {
        let mut populations = [0.0; 7];
        populations[0] = 1.0 / 3.0;
        populations[1] = 1.0 / 3.0;
        populations[2] = 1.0 / 3.0;
        SystemState {
            populations,
            ground_coherences: [Cplx::ZERO; 3],
        }
    }

    /// All population in one ground sublevel.
    pub fn ground_pure(s: Sub) -> Self {
        let mut populations = [0.0; 7];
        populations[s.index()] = 1.0;
        SystemState {
            populations,
            ground_coherences: [Cplx::ZERO; 3],
        }
    }

    pub fn population_sum(&self) -> f64 {
        self.populations.iter().sum()
    }

    pub fn excited_population(&self) -> f64 {
        self.populations[3] + self.populations[4] + self.populations[5]
    }

    /// Ground 3×3 density block (Hermitian).
    pub fn ground_block(&self) -> [[Cplx; 3]; 3] {
        let mut rho = [[Cplx::ZERO; 3]; 3];
        for i in 0..3 {
            rho[i][i] = Cplx::real(self.populations[i]);
        }
        for (k, &(a, b)) in COH_PAIRS.iter().enumerate() {
            rho[a][b] = self.ground_coherences[k];
            rho[b][a] = self.ground_coherences[k].conj();
        }
        rho
    }

    /// Verify positivity, normalization and ground-block semidefiniteness.
    pub fn validate(&self) -> Result<(), PhotophysicsError> {
        let mut violations = Vec::new();
        if (self.population_sum() - 1.0).abs() > 1e-9 {
            violations.push(format!("populations sum to {}", self.population_sum()));
        }
        for (i, &p) in self.populations.iter().enumerate() {
            if p < -1e-9 {
                violations.push(format!("population {i} negative: {p}"));
            }
        }
        let eigs = eigvals_hermitian3(&self.ground_block());
        if eigs[0] < -1e-9 {
            violations.push(format!("ground block not PSD: min eigenvalue {}", eigs[0]));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(PhotophysicsError::InvalidParams(violations))
        }
    }

    pub fn to_vec(&self) -> [f64; STATE_DIM] {
        let mut x = [0.0; STATE_DIM];
        x[..7].copy_from_slice(&self.populations);
        for (k, c) in self.ground_coherences.iter().enumerate() {
            x[7 + 2 * k] = c.re;
            x[8 + 2 * k] = c.im;
        }
        x
    }

    pub fn from_vec(x: &[f64; STATE_DIM]) -> Self {
        let mut populations = [0.0; 7];
        populations.copy_from_slice(&x[..7]);
        let mut ground_coherences = [Cplx::ZERO; 3];
        for (k, c) in ground_coherences.iter_mut().enumerate() {
            *c = Cplx::new(x[7 + 2 * k], x[8 + 2 * k]);
        }
        SystemState {
            populations,
            ground_coherences,
        }
    }
}

/// One incoherent jump channel. Only spontaneous radiative decays emit a
/// detectable photon; the stimulated pump-down channel does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpChannel {
    pub src: usize,
    pub dest: usize,
    pub rate_per_ns: f64,
    pub radiative: bool,
}

/// Compiled model: classical generator for the incoherent channels plus the
/// rotating-frame ground-block Hamiltonian for the microwave drive.
#[derive(Debug, Clone, PartialEq)]
pub struct RateModel {
    /// generator[dest][src]; columns sum to zero.
    generator: [[f64; 7]; 7],
    channels: Vec<JumpChannel>,
    /// Ground-block Hamiltonian, cyclic MHz.
    coherent_mhz: [[Cplx; 3]; 3],
    pump_rates_per_ns: [f64; 3],
    ground_dephasing_per_ns: f64,
    mw_tones: Vec<MwDriveTone>,
    pub gamma_rad_per_ns: f64,
    pub collection_efficiency: f64,
    pub background_rate_per_ns: f64,
}

impl RateModel {
    pub fn generator(&self) -> &[[f64; 7]; 7] {
        &self.generator
    }

    pub fn coherent_part_mhz(&self) -> &[[Cplx; 3]; 3] {
        &self.coherent_mhz
    }

    pub fn pump_rates_per_ns(&self) -> [f64; 3] {
        self.pump_rates_per_ns
    }

    /// Remove Markovian ground dephasing; the pulse-sequence engine applies
    /// its own envelope instead.
    pub fn without_markovian_dephasing(mut self) -> Self {
        self.ground_dephasing_per_ns = 0.0;
        self
    }

    /// Add an incoherent population-transfer channel between two excited
    /// sublevels (microwave response of the excited state).
    pub fn add_excited_transfer(&mut self, a: Sub, b: Sub, rate_per_ns: f64) {
        let (i, j) = (3 + a.index(), 3 + b.index());
        self.generator[j][i] += rate_per_ns;
        self.generator[i][i] -= rate_per_ns;
        self.generator[i][j] += rate_per_ns;
        self.generator[j][j] -= rate_per_ns;
        self.channels.push(JumpChannel {
            src: i,
            dest: j,
            rate_per_ns,
            radiative: false,
        });
        self.channels.push(JumpChannel {
            src: j,
            dest: i,
            rate_per_ns,
            radiative: false,
        });
    }

    /// The symmetric incoherent transfer rate that one coherent tone folds
    /// into: W = (Ω²/2)·Γ₂/(Γ₂² + δ²) with Ω, δ angular and Γ₂ the pair's
    /// total coherence decay rate.
    fn folded_mw_rate(&self, tone: &MwDriveTone) -> f64 {
        let (a, b) = tone.transition.levels();
        let gamma2 = self.ground_dephasing_per_ns
            + 0.5 * (self.pump_rates_per_ns[a.index()] + self.pump_rates_per_ns[b.index()]);
        if gamma2 <= 0.0 {
            return 0.0;
        }
        let omega = tone.rabi_mhz * constants::RAD_PER_NS_PER_MHZ;
        let delta = tone.detuning_mhz * constants::RAD_PER_NS_PER_MHZ;
        0.5 * omega * omega * gamma2 / (gamma2 * gamma2 + delta * delta)
    }

    /// Fold each coherent microwave tone into symmetric incoherent transfer
    /// rates between its two ground sublevels, yielding a pure jump process
    /// for kinetic Monte Carlo.
    pub fn folded_generator(&self) -> [[f64; 7]; 7] {
        let mut gen = self.generator;
        for tone in &self.mw_tones {
            let (a, b) = tone.transition.levels();
            let (i, j) = (a.index(), b.index());
            let w = self.folded_mw_rate(tone);
            gen[j][i] += w;
            gen[i][i] -= w;
            gen[i][j] += w;
            gen[j][j] -= w;
        }
        gen
    }

    /// Jump channels of the folded process, including the microwave
    /// transfer channels.
    pub fn folded_channels(&self) -> Vec<JumpChannel> {
        let mut channels = self.channels.clone();
        for tone in &self.mw_tones {
            let (a, b) = tone.transition.levels();
            let w = self.folded_mw_rate(tone);
            if w <= 0.0 {
                continue;
            }
            channels.push(JumpChannel {
                src: a.index(),
                dest: b.index(),
                rate_per_ns: w,
                radiative: false,
            });
            channels.push(JumpChannel {
                src: b.index(),
                dest: a.index(),
                rate_per_ns: w,
                radiative: false,
            });
        }
        channels
    }

    /// Largest total escape rate over the seven levels, 1/ns.
    pub fn max_rate_per_ns(&self) -> f64 {
        (0..7).fold(0.0_f64, |m, j| m.max(-self.generator[j][j]))
    }
}

/// Assemble the rate model from the parameter set.
///
/// Channels: laser pump T₀s ↔ T₁s (up and stimulated down) at the
/// Lorentzian-weighted rate; radiative decay T₁s' → T₀s at
/// γ_rad·overlap[s'][s]; ISC T₁s' → S at K·isc_rel[s']; singlet decay
/// S → T₀s at singlet_rate·branching[s]. Microwave drive enters the
/// coherent part only.
pub fn build_rate_model(params: &PhotophysicsParams) -> Result<RateModel, PhotophysicsError> {
    params.validate()?;

    let mut seen: Vec<SpinTransition> = Vec::new();
    for tone in &params.mw_drive {
        if !tone.transition.is_ground() {
            return Err(PhotophysicsError::ExcitedStateMwDrive);
        }
        if seen.contains(&tone.transition) {
            return Err(PhotophysicsError::DuplicateDrive);
        }
        seen.push(tone.transition);
    }
    let has_xy = seen.contains(&SpinTransition::GroundXy);
    if has_xy && seen.len() > 1 {
        return Err(PhotophysicsError::InconsistentDriveFrame);
    }

    let mut generator = [[0.0; 7]; 7];
    let mut channels: Vec<JumpChannel> = Vec::new();
    let mut add = |dest: usize, src: usize, rate: f64, radiative: bool| {
        if rate <= 0.0 {
            return;
        }
        generator[dest][src] += rate;
        generator[src][src] -= rate;
        channels.push(JumpChannel {
            src,
            dest,
            rate_per_ns: rate,
            radiative,
        });
    };

    let mut pump = [0.0; 3];
    for s in Sub::ALL {
        let p = params.pump_rate_per_ns(s);
        pump[s.index()] = p;
        add(3 + s.index(), s.index(), p, false); // absorption
        add(s.index(), 3 + s.index(), p, false); // stimulated emission
    }
    for e in Sub::ALL {
        for g in Sub::ALL {
            add(
                g.index(),
                3 + e.index(),
                params.gamma_rad_per_ns * params.spin_overlap[e.index()][g.index()],
                true,
            );
        }
        add(
            6,
            3 + e.index(),
            params.isc_scale_per_ns * params.isc_rel[e.index()],
            false,
        );
    }
    for g in Sub::ALL {
        add(
            g.index(),
            6,
            params.singlet_rate_per_ns * params.singlet_branching[g.index()],
            false,
        );
    }

    let mut coherent = [[Cplx::ZERO; 3]; 3];
    for tone in &params.mw_drive {
        let (a, b) = tone.transition.levels();
        // Reference level carries no frame offset; the partner level takes
        // the negative detuning on the diagonal.
        let partner = b.index();
        coherent[partner][partner] += Cplx::real(-tone.detuning_mhz);
        let coupling = Cplx::cis(tone.phase_rad).scale(tone.rabi_mhz / 2.0);
        coherent[a.index()][b.index()] += coupling;
        coherent[b.index()][a.index()] += coupling.conj();
    }

    Ok(RateModel {
        generator,
        channels,
        coherent_mhz: coherent,
        pump_rates_per_ns: pump,
        ground_dephasing_per_ns: 1.0 / params.decoherence.t2_star_ns,
        mw_tones: params.mw_drive.clone(),
        gamma_rad_per_ns: params.gamma_rad_per_ns,
        collection_efficiency: params.collection_efficiency,
        background_rate_per_ns: params.background_rate_per_ns,
    })
}

/// Time derivative of the 13-component state under the combined master
/// equation.
pub fn rhs(model: &RateModel, x: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
    let mut dx = [0.0; STATE_DIM];

    for (dest, row) in model.generator.iter().enumerate() {
        let mut v = 0.0;
        for (src, &rate) in row.iter().enumerate() {
            v += rate * x[src];
        }
        dx[dest] = v;
    }

    // Coherent ground-block commutator −i·ω·[H, ρ].
    let h = &model.coherent_mhz;
    let mut rho = [[Cplx::ZERO; 3]; 3];
    for i in 0..3 {
        rho[i][i] = Cplx::real(x[i]);
    }
    for (k, &(a, b)) in COH_PAIRS.iter().enumerate() {
        rho[a][b] = Cplx::new(x[7 + 2 * k], x[8 + 2 * k]);
        rho[b][a] = rho[a][b].conj();
    }
    let mut comm = [[Cplx::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut v = Cplx::ZERO;
            for k in 0..3 {
                v += h[i][k] * rho[k][j] - rho[i][k] * h[k][j];
            }
            comm[i][j] = v;
        }
    }
    let omega = constants::RAD_PER_NS_PER_MHZ;
    for i in 0..3 {
        // dρ_ii = −i·ω·comm_ii; the diagonal of a commutator of Hermitian
        // matrices is purely imaginary.
        dx[i] += omega * comm[i][i].im;
    }
    for (k, &(a, b)) in COH_PAIRS.iter().enumerate() {
        dx[7 + 2 * k] += omega * comm[a][b].im;
        dx[8 + 2 * k] -= omega * comm[a][b].re;
        // Dephasing: Markovian 1/T2* plus laser-induced loss of the two
        // amplitudes at half the pump rates.
        let damp = model.ground_dephasing_per_ns
            + 0.5 * (model.pump_rates_per_ns[a] + model.pump_rates_per_ns[b]);
        dx[7 + 2 * k] -= damp * x[7 + 2 * k];
        dx[8 + 2 * k] -= damp * x[8 + 2 * k];
    }
    dx
}

/// The master equation as a 13×13 real matrix (column-built from [`rhs`]).
pub fn liouvillian_matrix(model: &RateModel) -> [[f64; STATE_DIM]; STATE_DIM] {
    let mut m = [[0.0; STATE_DIM]; STATE_DIM];
    for col in 0..STATE_DIM {
        let mut unit = [0.0; STATE_DIM];
        unit[col] = 1.0;
        let dx = rhs(model, &unit);
        for (row, v) in dx.iter().enumerate() {
            m[row][col] = *v;
        }
    }
    m
}

pub(crate) fn rk4_step(m: &[[f64; STATE_DIM]; STATE_DIM], x: &mut [f64; STATE_DIM], h: f64) {
    let matvec = |v: &[f64; STATE_DIM]| -> [f64; STATE_DIM] {
        let mut out = [0.0; STATE_DIM];
        for (row, mrow) in m.iter().enumerate() {
            let mut acc = 0.0;
            for (col, &mv) in mrow.iter().enumerate() {
                acc += mv * v[col];
            }
            out[row] = acc;
        }
        out
    };
    let k1 = matvec(x);
    let mut tmp = *x;
    for i in 0..STATE_DIM {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    let k2 = matvec(&tmp);
    for i in 0..STATE_DIM {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    let k3 = matvec(&tmp);
    for i in 0..STATE_DIM {
        tmp[i] = x[i] + h * k3[i];
    }
    let k4 = matvec(&tmp);
    for i in 0..STATE_DIM {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Largest stable Runge-Kutta step for a model matrix (0.1 of the fastest
/// timescale by the ∞-norm).
pub(crate) fn stable_step_ns(m: &[[f64; STATE_DIM]; STATE_DIM]) -> f64 {
    let norm = m
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if norm > 0.0 {
        0.1 / norm
    } else {
        f64::INFINITY
    }
}

/// Stationary state of the combined Liouvillian, normalized to unit
/// population. Fails when the null space is not one-dimensional.
pub fn steady_state(model: &RateModel) -> Result<SystemState, PhotophysicsError> {
    let m = liouvillian_matrix(model);
    let n = STATE_DIM;
    let mut a = m;

    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |mx, v| mx.max(v.abs()))
        .max(1e-300);
    let tol = 1e-10 * scale;

    // Forward elimination with partial pivoting; track pivot columns.
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let mut piv = row;
        let mut best = 0.0;
        for r in row..n {
            if a[r][col].abs() > best {
                best = a[r][col].abs();
                piv = r;
            }
        }
        if best <= tol {
            continue;
        }
        a.swap(row, piv);
        let inv = 1.0 / a[row][col];
        for r in row + 1..n {
            let f = a[r][col] * inv;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[row][c];
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == n {
            break;
        }
    }
    let nullity = n - pivot_cols.len();
    if nullity != 1 {
        return Err(PhotophysicsError::NonUniqueSteadyState);
    }

    // Back-substitute with the single free column set to 1.
    let free_col = (0..n).find(|c| !pivot_cols.contains(c)).unwrap();
    let mut x = [0.0; STATE_DIM];
    x[free_col] = 1.0;
    for (r, &col) in pivot_cols.iter().enumerate().rev() {
        let mut v = 0.0;
        for c in col + 1..n {
            v -= a[r][c] * x[c];
        }
        x[col] = v / a[r][col];
    }

    let pop_sum: f64 = x[..7].iter().sum();
    if pop_sum.abs() < 1e-12 {
        return Err(PhotophysicsError::NonUniqueSteadyState);
    }
    for v in x.iter_mut() {
        *v /= pop_sum;
    }

    // Residual check against the original matrix.
    let mut residual: f64 = 0.0;
    for mrow in m.iter() {
        let mut acc = 0.0;
        for (c, &mv) in mrow.iter().enumerate() {
            acc += mv * x[c];
        }
        residual = residual.max(acc.abs());
    }
    if residual > 1e-10 * scale.max(1.0) {
        return Err(PhotophysicsError::SteadyStateResidual { residual });
    }
    Ok(SystemState::from_vec(&x))
}

/// Integrate the master equation for `duration_ns`, sampling every `dt_ns`.
/// The integrator sub-steps internally so that each Runge-Kutta step stays
/// below 0.1 of the fastest rate's timescale; total population is conserved
/// to round-off because it is a linear invariant of the flow.
pub fn evolve(
    model: &RateModel,
    initial: &SystemState,
    duration_ns: f64,
    dt_ns: f64,
) -> Result<Vec<(f64, SystemState)>, PhotophysicsError> {
    assert!(duration_ns >= 0.0, "duration must be non-negative");
    assert!(dt_ns > 0.0, "sampling interval must be positive");
    let m = liouvillian_matrix(model);
    let h_max = stable_step_ns(&m);

    let mut out = Vec::new();
    let mut x = initial.to_vec();
    out.push((0.0, initial.clone()));
    if duration_ns == 0.0 {
        return Ok(out);
    }

    let n_samples = fm::ceil(duration_ns / dt_ns) as usize;
    let mut t = 0.0;
    for k in 1..=n_samples {
        let t_target = (k as f64 * dt_ns).min(duration_ns);
        let span = t_target - t;
        let n_sub = fm::ceil(span / h_max).max(1.0);
        if n_sub > 1e8 {
            return Err(PhotophysicsError::StepSizeUnderflow {
                max_rate_per_ns: 0.1 / h_max,
            });
        }
        let h = span / n_sub;
        for _ in 0..n_sub as usize {
            rk4_step(&m, &mut x, h);
        }
        t = t_target;
        out.push((t, SystemState::from_vec(&x)));
    }
    Ok(out)
}

/// Detected fluorescence rate: collection efficiency × radiative rate ×
/// total excited population. Linear in the excited populations.
pub fn fluorescence_rate(state: &SystemState, params: &PhotophysicsParams) -> f64 {
    params.collection_efficiency * params.gamma_rad_per_ns * state.excited_population()
}

/// Solve the two-lifetime system
/// 1/τ_long = γ_rad + K·r_y' and 1/τ_short = γ_rad + K·r_z'
/// for (γ_rad, K). The short component belongs to the fast-ISC z' sublevel.
pub fn calibrate_isc_scale(
    tau_short_ns: f64,
    tau_long_ns: f64,
    isc_rel: [f64; 3],
) -> Result<(f64, f64), PhotophysicsError> {
    if !(tau_short_ns > 0.0 && tau_long_ns > 0.0 && tau_short_ns < tau_long_ns) {
        return Err(PhotophysicsError::LifetimeOrder);
    }
    let r_y = isc_rel[Sub::Y.index()];
    let r_z = isc_rel[Sub::Z.index()];
    let denom = r_z - r_y;
    if denom.abs() < 1e-12 {
        return Err(PhotophysicsError::DegenerateLifetimes);
    }
    let isc_scale = (1.0 / tau_short_ns - 1.0 / tau_long_ns) / denom;
    let gamma_rad = 1.0 / tau_long_ns - isc_scale * r_y;
    if gamma_rad <= 0.0 || isc_scale <= 0.0 {
        return Err(PhotophysicsError::NegativeRate {
            gamma_rad_per_ns: gamma_rad,
            isc_scale_per_ns: isc_scale,
        });
    }
    Ok((gamma_rad, isc_scale))
}

/// Lifetime-limited optical linewidth Δν = 1/(2π τ) in MHz for τ in ns.
pub fn lifetime_limited_linewidth_mhz(tau_exc_ns: f64) -> f64 {
    1e3 / (2.0 * fm::PI * tau_exc_ns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn identity_overlap() -> [[f64; 3]; 3] {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    fn laser_only_params(line: Sub, pump: f64) -> PhotophysicsParams {
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.mw_drive.clear();
        p.laser_rate_peak_per_ns = pump;
        p.laser_detuning_mhz = p.optical_line_offsets_mhz[line.index()];
        p
    }

    #[test]
    fn calibration_reference_pair() {
        let (gamma, k) = calibrate_isc_scale(4.8, 24.0, constants::ISC_RELATIVE_RATES).unwrap();
        assert!((k - 0.183_756_0).abs() < 1e-6, "K = {k}");
        assert!((gamma - 0.033_948_9).abs() < 1e-6, "gamma = {gamma}");
        // Fed back through the rate relations the lifetimes return exactly.
        assert!((1.0 / (gamma + k * 0.949) - 4.8).abs() < 1e-9);
        assert!((1.0 / (gamma + k * 0.042) - 24.0).abs() < 1e-9);
        // Radiative lifetime near 29.5 ns.
        assert!((1.0 / gamma - 29.456).abs() < 0.01);
    }

    #[test]
    fn calibration_rejects_degenerate() {
        let err = calibrate_isc_scale(10.0, 10.001, [0.0, 0.5, 0.5]);
        assert!(matches!(err, Err(PhotophysicsError::DegenerateLifetimes)));
    }

    #[test]
    fn calibration_ensemble_pair_positive() {
        let (gamma, k) = calibrate_isc_scale(5.1, 26.2, constants::ISC_RELATIVE_RATES).unwrap();
        assert!(gamma > 0.0 && k > 0.0);
    }

    #[test]
    fn calibration_rejects_misordered() {
        assert!(matches!(
            calibrate_isc_scale(24.0, 4.8, constants::ISC_RELATIVE_RATES),
            Err(PhotophysicsError::LifetimeOrder)
        ));
    }

    #[test]
    fn linewidth_reference_values() {
        assert!((lifetime_limited_linewidth_mhz(24.0) - 6.63).abs() < 0.005);
        assert!((lifetime_limited_linewidth_mhz(4.8) - 33.2).abs() < 0.05);
        assert!(lifetime_limited_linewidth_mhz(1e15) < 1e-9);
    }

    #[test]
    fn generator_columns_sum_to_zero_for_random_params() {
        let mut rng = Rng::new(31);
        for _ in 0..50 {
            let mut p = PhotophysicsParams::single_molecule_defaults();
            p.laser_rate_peak_per_ns = rng.uniform() * 0.1;
            p.singlet_rate_per_ns = rng.uniform() * 0.1;
            p.laser_detuning_mhz = (rng.uniform() - 0.5) * 4000.0;
            let model = build_rate_model(&p).unwrap();
            for col in 0..7 {
                let sum: f64 = (0..7).map(|row| model.generator()[row][col]).sum();
                assert!(sum.abs() < 1e-12, "column {col} sums to {sum}");
            }
        }
    }

    #[test]
    fn no_drive_generator_leaves_ground_unmixed() {
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.mw_drive.clear();
        p.laser_rate_peak_per_ns = 0.0;
        let model = build_rate_model(&p).unwrap();
        // No channel out of any ground sublevel.
        for g in 0..3 {
            assert_eq!(model.generator()[g][g], 0.0);
            for dest in 0..7 {
                if dest != g {
                    assert_eq!(model.generator()[dest][g], 0.0);
                }
            }
        }
    }

    #[test]
    fn excited_mw_drive_rejected() {
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.mw_drive = alloc::vec![MwDriveTone::resonant(SpinTransition::ExcitedZy, 1.0)];
        assert!(matches!(
            build_rate_model(&p),
            Err(PhotophysicsError::ExcitedStateMwDrive)
        ));
    }

    #[test]
    fn xy_drive_frame_conflict_rejected() {
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.mw_drive = alloc::vec![
            MwDriveTone::resonant(SpinTransition::GroundXy, 1.0),
            MwDriveTone::resonant(SpinTransition::GroundZy, 1.0),
        ];
        assert!(matches!(
            build_rate_model(&p),
            Err(PhotophysicsError::InconsistentDriveFrame)
        ));
    }

    #[test]
    fn steady_state_no_drive_flagged_non_unique() {
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.mw_drive.clear();
        p.laser_rate_peak_per_ns = 0.0;
        let model = build_rate_model(&p).unwrap();
        assert!(matches!(
            steady_state(&model),
            Err(PhotophysicsError::NonUniqueSteadyState)
        ));
    }

    #[test]
    fn steady_state_shelves_without_microwave() {
        let p = laser_only_params(Sub::Y, 0.005);
        let model = build_rate_model(&p).unwrap();
        let ss = steady_state(&model).unwrap();
        // Nearly everything sits in dark ground sublevels.
        assert!(
            ss.populations[2] + ss.populations[0] > 0.99,
            "{:?}",
            ss.populations
        );
    }

    #[test]
    fn microwave_recycling_brightens_by_over_10x() {
        let dark = laser_only_params(Sub::Y, 0.005);
        let model_dark = build_rate_model(&dark).unwrap();
        let ss_dark = steady_state(&model_dark).unwrap();

        let mut bright = dark.clone();
        bright.mw_drive = alloc::vec![MwDriveTone::resonant(SpinTransition::GroundZy, 0.25)];
        let model_bright = build_rate_model(&bright).unwrap();
        let ss_bright = steady_state(&model_bright).unwrap();

        let ratio = fluorescence_rate(&ss_bright, &bright) / fluorescence_rate(&ss_dark, &dark);
        assert!(ratio > 10.0, "enhancement only {ratio}");
    }

    #[test]
    fn evolve_zero_duration_returns_initial() {
        let p = PhotophysicsParams::single_molecule_defaults();
        let model = build_rate_model(&p).unwrap();
        let init = SystemState::ground_mixed();
        let traj = evolve(&model, &init, 0.0, 1.0).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj[0].1, init);
    }

    #[test]
    fn mw_pi_pulse_flips_population() {
        // Pure MW drive, no laser, no decoherence: exact Rabi flip.
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.laser_rate_peak_per_ns = 0.0;
        p.decoherence.t2_star_ns = 1e15;
        p.mw_drive = alloc::vec![MwDriveTone::resonant(SpinTransition::GroundZy, 1.0)];
        let model = build_rate_model(&p).unwrap();
        let t_pi = 500.0 / 1.0;
        let traj = evolve(&model, &SystemState::ground_pure(Sub::Z), t_pi, t_pi).unwrap();
        let final_state = &traj.last().unwrap().1;
        assert!(
            final_state.populations[Sub::Y.index()] >= 0.99,
            "pi pulse reached {}",
            final_state.populations[Sub::Y.index()]
        );
    }

    #[test]
    fn population_conserved_under_random_evolution() {
        let mut rng = Rng::new(8);
        for _ in 0..10 {
            let mut p = PhotophysicsParams::single_molecule_defaults();
            p.laser_rate_peak_per_ns = rng.uniform() * 0.05;
            p.mw_drive =
                alloc::vec![MwDriveTone::resonant(SpinTransition::GroundZy, rng.uniform() * 2.0)];
            let model = build_rate_model(&p).unwrap();
            let traj = evolve(&model, &SystemState::ground_mixed(), 2_000.0, 100.0).unwrap();
            for (t, state) in &traj {
                assert!(
                    (state.population_sum() - 1.0).abs() < 1e-8,
                    "sum {} at t = {t}",
                    state.population_sum()
                );
            }
        }
    }

    #[test]
    fn cascade_photon_integral_matches_branching_oracle() {
        // Identity overlap and z-only singlet branching: expected detected
        // photons from a shelving cascade equal η·γ_rad/k_isc.
        let mut p = laser_only_params(Sub::Y, 0.05);
        p.spin_overlap = identity_overlap();
        p.singlet_branching = [0.0, 0.0, 1.0];
        let model = build_rate_model(&p).unwrap();
        let traj = evolve(&model, &SystemState::ground_pure(Sub::Y), 5_000.0, 0.5).unwrap();
        let mut detected = 0.0;
        for pair in traj.windows(2) {
            let (t0, s0) = &pair[0];
            let (t1, s1) = &pair[1];
            detected += 0.5 * (fluorescence_rate(s0, &p) + fluorescence_rate(s1, &p)) * (t1 - t0);
        }
        let k_isc = p.isc_scale_per_ns * p.isc_rel[Sub::Y.index()];
        let expected = p.collection_efficiency * p.gamma_rad_per_ns / k_isc;
        assert!(
            (detected - expected).abs() < 0.01 * expected,
            "detected {detected}, oracle {expected}"
        );
    }

    #[test]
    fn three_level_reduction_matches_closed_form() {
        // (T₀y, T₁y) dynamics decouple from the downstream shelf; compare
        // against the analytic 2×2 solution.
        let mut p = laser_only_params(Sub::Y, 0.02);
        p.spin_overlap = identity_overlap();
        p.singlet_branching = [0.0, 0.0, 1.0];
        let pump = p.pump_rate_per_ns(Sub::Y);
        let gamma = p.gamma_rad_per_ns;
        let k = p.isc_scale_per_ns * p.isc_rel[Sub::Y.index()];
        let model = build_rate_model(&p).unwrap();
        let traj = evolve(&model, &SystemState::ground_pure(Sub::Y), 600.0, 10.0).unwrap();

        // Closed form for dp/dt = A p with A = [[−P, P+γ], [P, −(P+γ+k)]]
        // (stimulated emission included), p(0) = (1, 0).
        let a = [[-pump, pump + gamma], [pump, -(pump + gamma + k)]];
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = fm::sqrt(tr * tr - 4.0 * det);
        let l1 = 0.5 * (tr + disc);
        let l2 = 0.5 * (tr - disc);
        let v1 = [a[0][1], l1 - a[0][0]];
        let v2 = [a[0][1], l2 - a[0][0]];
        let det_v = v1[0] * v2[1] - v2[0] * v1[1];
        let c1 = v2[1] / det_v;
        let c2 = -v1[1] / det_v;
        for (t, state) in &traj {
            let e1 = fm::exp(l1 * t);
            let e2 = fm::exp(l2 * t);
            let p_ground = c1 * v1[0] * e1 + c2 * v2[0] * e2;
            let p_excited = c1 * v1[1] * e1 + c2 * v2[1] * e2;
            assert!(
                (state.populations[1] - p_ground).abs() < 1e-6,
                "ground at t={t}: {} vs {p_ground}",
                state.populations[1]
            );
            assert!(
                (state.populations[4] - p_excited).abs() < 1e-6,
                "excited at t={t}: {} vs {p_excited}",
                state.populations[4]
            );
        }
    }

    #[test]
    fn shelving_monotone_and_complete() {
        let mut p = laser_only_params(Sub::Y, 0.02);
        p.spin_overlap = identity_overlap();
        let model = build_rate_model(&p).unwrap();
        let traj = evolve(&model, &SystemState::ground_pure(Sub::Y), 40_000.0, 200.0).unwrap();
        let tau_exc = 1.0 / p.excited_decay_rate_per_ns(Sub::Y);
        let mut prev = None;
        for (t, state) in &traj {
            if *t < tau_exc {
                continue;
            }
            let pz = state.populations[Sub::Z.index()];
            if let Some(prev) = prev {
                assert!(pz >= prev - 1e-12, "p_z decreased at t={t}");
            }
            prev = Some(pz);
        }
        assert!(prev.unwrap() >= 0.99, "final p_z = {}", prev.unwrap());
    }

    #[test]
    fn isc_flux_dominated_by_z() {
        let p = PhotophysicsParams::single_molecule_defaults();
        let model = build_rate_model(&p).unwrap();
        // Equal excited populations: share of ISC flux leaving via z'.
        let flux: Vec<f64> = (0..3).map(|e| model.generator()[6][3 + e]).collect();
        let total: f64 = flux.iter().sum();
        assert!(flux[2] / total >= 0.94, "z share {}", flux[2] / total);
    }

    #[test]
    fn fluorescence_rate_linear_and_zero_on_empty() {
        let p = PhotophysicsParams::single_molecule_defaults();
        let mut state = SystemState::ground_mixed();
        assert_eq!(fluorescence_rate(&state, &p), 0.0);
        state.populations = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let r1 = fluorescence_rate(&state, &p);
        assert!((r1 - p.collection_efficiency * p.gamma_rad_per_ns).abs() < 1e-15);
        state.populations = [0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0];
        assert!((fluorescence_rate(&state, &p) - 0.5 * r1).abs() < 1e-15);
    }

    #[test]
    fn fluorescence_reference_value() {
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.gamma_rad_per_ns = 0.0340;
        p.collection_efficiency = 0.01;
        let mut state = SystemState::ground_mixed();
        state.populations = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert!((fluorescence_rate(&state, &p) - 3.40e-4).abs() < 1e-12);
    }

    #[test]
    fn strong_drive_saturates_at_half() {
        // Two-level saturation: no ISC, identity overlap, huge pump.
        let mut p = laser_only_params(Sub::Y, 50.0);
        p.isc_scale_per_ns = 0.0;
        p.spin_overlap = identity_overlap();
        let model = build_rate_model(&p).unwrap();
        let traj = evolve(&model, &SystemState::ground_pure(Sub::Y), 2_000.0, 2_000.0).unwrap();
        let state = &traj.last().unwrap().1;
        let pump = p.pump_rate_per_ns(Sub::Y);
        let expected = pump / (2.0 * pump + p.gamma_rad_per_ns);
        assert!(state.populations[4] <= 0.5);
        assert!((state.populations[4] - expected).abs() < 1e-6);
        let bound = 0.5 * p.collection_efficiency * p.gamma_rad_per_ns;
        assert!(fluorescence_rate(state, &p) <= bound);
    }

    #[test]
    fn steady_state_residual_small() {
        let p = PhotophysicsParams::single_molecule_defaults();
        let model = build_rate_model(&p).unwrap();
        let ss = steady_state(&model).unwrap();
        let m = liouvillian_matrix(&model);
        let x = ss.to_vec();
        for row in &m {
            let mut acc = 0.0;
            for (c, v) in row.iter().enumerate() {
                acc += v * x[c];
            }
            assert!(acc.abs() < 1e-10);
        }
        assert!((ss.population_sum() - 1.0).abs() < 1e-12);
        ss.validate().unwrap();
    }

    #[test]
    fn folded_generator_conserves_and_adds_transfer() {
        let p = PhotophysicsParams::single_molecule_defaults();
        let model = build_rate_model(&p).unwrap();
        let folded = model.folded_generator();
        for col in 0..7 {
            let sum: f64 = (0..7).map(|row| folded[row][col]).sum();
            assert!(sum.abs() < 1e-12);
        }
        // The z→y entry gained the folded microwave rate.
        assert!(folded[1][2] > model.generator()[1][2]);
        assert!((folded[1][2] - folded[2][1]).abs() < 1e-15);
    }

    #[test]
    fn excited_transfer_channel_added_symmetrically() {
        let p = PhotophysicsParams::single_molecule_defaults();
        let mut model = build_rate_model(&p).unwrap();
        let before = model.generator()[5][4];
        model.add_excited_transfer(Sub::Y, Sub::Z, 0.02);
        assert!((model.generator()[5][4] - before - 0.02).abs() < 1e-15);
        for col in 0..7 {
            let sum: f64 = (0..7).map(|row| model.generator()[row][col]).sum();
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn validate_flags_all_violations_at_once() {
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.gamma_rad_per_ns = -1.0;
        p.isc_rel = [0.5, 0.5, 0.5];
        p.collection_efficiency = 0.0;
        match p.validate() {
            Err(PhotophysicsError::InvalidParams(v)) => {
                assert!(v.len() >= 3, "expected aggregated violations, got {v:?}")
            }
            other => panic!("expected InvalidParams, got {other:?}"),
        }
    }
}
