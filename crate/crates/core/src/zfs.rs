// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Zero-field-splitting algebra and triplet (S = 1) spin Hamiltonians.
//!
//! The ZFS Hamiltonian D_x S_x² + D_y S_y² + D_z S_z² is parameterized by
//! the axial and transverse constants (D, E) with principal values
//! D_x = −D/3 + E, D_y = −D/3 − E, D_z = 2D/3 and the standard convention
//! |D_z| > |D_x| ≥ |D_y| (equivalently |D| ≥ 3|E|). Zero-field energies of
//! the sublevels T_x, T_y, T_z are D/3 − E, D/3 + E and −2D/3.
//!
//! All operations here are pure; angle sweeps may be evaluated concurrently.

use crate::constants::MU_B_OVER_H_MHZ_PER_MT;

use crate::linalg::{
    eigvals_hermitian3, mat3_apply, mat3_det, mat3_mul, mat3_orthonormality_defect, mat3_transpose,
    normalize3, rotation_about, Cplx, Mat3, MAT3_IDENTITY,
};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ZfsError {
    /// |D| < 3|E| breaks the principal-value ordering convention.
    ConventionViolated { d_mhz: f64, e_mhz: f64 },
    /// Frame is not orthonormal with determinant +1.
    InvalidFrame { defect: f64, det: f64 },
    /// f_lo > f_hi or a negative frequency passed to the inversion.
    TransitionOrder { f_hi_mhz: f64, f_lo_mhz: f64 },
    /// g ≤ 0.
    InvalidGFactor { g_iso: f64 },
    /// Non-positive microwave frequency or degenerate field range.
    InvalidSearch,
    /// Non-finite angle or |tilt| ≥ 90°.
    InvalidRotation,
}

impl fmt::Display for ZfsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZfsError::ConventionViolated { d_mhz, e_mhz } => write!(
                f,
                "ZFS convention |D| >= 3|E| violated: D = {d_mhz} MHz, E = {e_mhz} MHz"
            ),
            ZfsError::InvalidFrame { defect, det } => write!(
                f,
                "tensor frame not a proper rotation (orthonormality defect {defect:.2e}, det {det})"
            ),
            ZfsError::TransitionOrder { f_hi_mhz, f_lo_mhz } => write!(
                f,
                "transition frequencies must satisfy f_hi >= f_lo >= 0, got ({f_hi_mhz}, {f_lo_mhz})"
            ),
            ZfsError::InvalidGFactor { g_iso } => write!(f, "g-factor must be positive, got {g_iso}"),
            ZfsError::InvalidSearch => write!(f, "resonance search needs mw_freq > 0 and a non-degenerate field range"),
            ZfsError::InvalidRotation => write!(f, "rotation angles must be finite and |site tilt| < 90 degrees"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ZfsError {}

/// Traceless ZFS tensor: axial D, transverse E (both MHz, signed) and the
/// rotation mapping the tensor eigenframe (x, y, z) to the laboratory frame.
///
/// Only |E| is observable in zero-field ODMR; the stored sign follows the
/// theory/EPR assignment (E < 0 for the ground triplet of this system).
#[derive(Debug, Clone, PartialEq)]
pub struct ZfsTensor {
    d_mhz: f64,
    e_mhz: f64,
    frame: Mat3,
}

impl ZfsTensor {
    pub fn new(d_mhz: f64, e_mhz: f64, frame: Mat3) -> Result<Self, ZfsError> {
        if d_mhz.abs() < 3.0 * e_mhz.abs() {
            return Err(ZfsError::ConventionViolated { d_mhz, e_mhz });
        }
        let defect = mat3_orthonormality_defect(&frame);
        let det = mat3_det(&frame);
        if defect > 1e-12 || (det - 1.0).abs() > 1e-12 {
            return Err(ZfsError::InvalidFrame { defect, det });
        }
        Ok(ZfsTensor { d_mhz, e_mhz, frame })
    }

    /// Tensor with eigenframe equal to the laboratory frame.
    pub fn axial(d_mhz: f64, e_mhz: f64) -> Result<Self, ZfsError> {
        ZfsTensor::new(d_mhz, e_mhz, MAT3_IDENTITY)
    }

    pub fn d_mhz(&self) -> f64 {
        self.d_mhz
    }

    pub fn e_mhz(&self) -> f64 {
        self.e_mhz
    }

    pub fn frame(&self) -> &Mat3 {
        &self.frame
    }

    /// Principal values (D_x, D_y, D_z).
    pub fn principal_values_mhz(&self) -> [f64; 3] {
        [
            -self.d_mhz / 3.0 + self.e_mhz,
            -self.d_mhz / 3.0 - self.e_mhz,
            2.0 * self.d_mhz / 3.0,
        ]
    }

    /// Same tensor with the eigenframe rotated about its own y-axis; used
    /// for the second crystallographic site.
    pub fn tilted_about_y(&self, tilt_deg: f64) -> Result<Self, ZfsError> {
        if !tilt_deg.is_finite() || tilt_deg.abs() >= 90.0 {
            return Err(ZfsError::InvalidRotation);
        }
        let frame = mat3_mul(&self.frame, &rotation_about([0.0, 1.0, 0.0], tilt_deg));
        ZfsTensor::new(self.d_mhz, self.e_mhz, frame)
    }
}

/// Zero-field energies of the three sublevels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinLevelSet {
    pub energies_mhz: [f64; 3],
}

pub const SUBLEVEL_LABELS: [&str; 3] = ["T_x", "T_y", "T_z"];

/// Static magnetic field in the laboratory frame plus isotropic g-factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeemanConfig {
    pub b_field_mt: [f64; 3],
    pub g_iso: f64,
}

impl ZeemanConfig {
    pub fn new(b_field_mt: [f64; 3], g_iso: f64) -> Result<Self, ZfsError> {
        if !(g_iso > 0.0) {
            return Err(ZfsError::InvalidGFactor { g_iso });
        }
        Ok(ZeemanConfig { b_field_mt, g_iso })
    }
}

/// (D/3 − E, D/3 + E, −2D/3) for (T_x, T_y, T_z); the sum is zero.
pub fn zero_field_energies(tensor: &ZfsTensor) -> SpinLevelSet {
    let d = tensor.d_mhz();
    let e = tensor.e_mhz();
    SpinLevelSet {
        energies_mhz: [d / 3.0 - e, d / 3.0 + e, -2.0 * d / 3.0],
    }
}

/// The three zero-field transition frequencies, all non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionFrequencies {
    /// |E(T_x) − E(T_z)| = |D − E|; the higher ground ODMR line here.
    pub f_zx_mhz: f64,
    /// |E(T_y) − E(T_z)| = |D + E|.
    pub f_zy_mhz: f64,
    /// |E(T_x) − E(T_y)| = 2|E|.
    pub f_xy_mhz: f64,
}

pub fn ground_transition_frequencies(tensor: &ZfsTensor) -> TransitionFrequencies {
    let levels = zero_field_energies(tensor).energies_mhz;
    TransitionFrequencies {
        f_zx_mhz: (levels[0] - levels[2]).abs(),
        f_zy_mhz: (levels[1] - levels[2]).abs(),
        f_xy_mhz: (levels[0] - levels[1]).abs(),
    }
}

/// Which sign assignment to use when inverting a transition pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZfsSignConvention {
    /// D > 0, E < 0: f_hi = D − E, f_lo = D + E.
    Ground,
    /// D < 0, E > 0: D = −(f_hi + f_lo)/2, E = (f_hi − f_lo)/2.
    Excited,
}

/// Invert a pair of zero-field transition frequencies into a ZFS tensor
/// (identity frame). Round-trips with [`ground_transition_frequencies`].
pub fn zfs_from_transitions(
    f_hi_mhz: f64,
    f_lo_mhz: f64,
    convention: ZfsSignConvention,
) -> Result<ZfsTensor, ZfsError> {
    if !(f_hi_mhz >= f_lo_mhz && f_lo_mhz >= 0.0) {
        return Err(ZfsError::TransitionOrder { f_hi_mhz, f_lo_mhz });
    }
    let half_sum = 0.5 * (f_hi_mhz + f_lo_mhz);
    let half_diff = 0.5 * (f_hi_mhz - f_lo_mhz);
    let (d, e) = match convention {
        ZfsSignConvention::Ground => (half_sum, -half_diff),
        ZfsSignConvention::Excited => (-half_sum, half_diff),
    };
    ZfsTensor::axial(d, e)
}

/// Spin-1 Hamiltonian in the tensor eigenbasis {T_x, T_y, T_z}:
/// zero-field energies on the diagonal plus the Zeeman term
/// g μ_B/h · B·S with (S_k)_{lm} = −i ε_{klm}. Hermitian, MHz.
pub fn spin_hamiltonian(tensor: &ZfsTensor, zeeman: &ZeemanConfig) -> [[Cplx; 3]; 3] {
    let levels = zero_field_energies(tensor).energies_mhz;
    // Field components in the tensor eigenframe.
    let b = mat3_apply(&mat3_transpose(tensor.frame()), zeeman.b_field_mt);
    let gamma = zeeman.g_iso * MU_B_OVER_H_MHZ_PER_MT;

    let mut h = [[Cplx::ZERO; 3]; 3];
    for i in 0..3 {
        h[i][i] = Cplx::real(levels[i]);
    }
    h[1][2] = Cplx::i_times(-gamma * b[0]);
    h[2][1] = h[1][2].conj();
    h[2][0] = Cplx::i_times(-gamma * b[1]);
    h[0][2] = h[2][0].conj();
    h[0][1] = Cplx::i_times(-gamma * b[2]);
    h[1][0] = h[0][1].conj();
    h
}

/// Eigenvalues of the spin Hamiltonian at the given field, ascending (MHz).
pub fn hamiltonian_eigenvalues(tensor: &ZfsTensor, zeeman: &ZeemanConfig) -> [f64; 3] {
    eigvals_hermitian3(&spin_hamiltonian(tensor, zeeman))
}

/// A field at which one eigenvalue pair matches the microwave quantum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceField {
    pub field_mt: f64,
    /// 0-based indices (i, j), i < j, into the ascending eigenvalues.
    pub pair: (u8, u8),
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const BISECTION_TOL_MT: f64 = 1e-6;
const DEDUP_TOL_MT: f64 = 1e-3;

/// All fields in `b_range_mt` where |E_i(B) − E_j(B)| = `mw_freq_mhz` for
/// some eigenvalue pair, found by sign-change bracketing on a uniform grid
/// followed by bisection. An empty list means no pair crosses resonance.
pub fn resonance_fields(
    tensor: &ZfsTensor,
    field_dir: [f64; 3],
    g_iso: f64,
    mw_freq_mhz: f64,
    b_range_mt: (f64, f64),
    grid_step_mt: f64,
) -> Result<Vec<ResonanceField>, ZfsError> {
    if !(mw_freq_mhz > 0.0) || !(b_range_mt.1 > b_range_mt.0) || !(grid_step_mt > 0.0) {
        return Err(ZfsError::InvalidSearch);
    }
    if g_iso <= 0.0 {
        return Err(ZfsError::InvalidGFactor { g_iso });
    }
    let dir = normalize3(field_dir);
    let gaps_at = |b: f64| -> [f64; 3] {
        let zee = ZeemanConfig {
            b_field_mt: [dir[0] * b, dir[1] * b, dir[2] * b],
            g_iso,
        };
        let e = hamiltonian_eigenvalues(tensor, &zee);
        [e[1] - e[0], e[2] - e[0], e[2] - e[1]]
    };

    let (b_min, b_max) = b_range_mt;
    let n_steps = ((b_max - b_min) / grid_step_mt) as usize + 1;
    let mut found: Vec<ResonanceField> = Vec::new();

    let mut prev_b = b_min;
    let mut prev = gaps_at(prev_b);
    for step in 1..=n_steps {
        let b = (b_min + step as f64 * grid_step_mt).min(b_max);
        let cur = gaps_at(b);
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            let f_prev = prev[k] - mw_freq_mhz;
            let f_cur = cur[k] - mw_freq_mhz;
            if f_prev == 0.0 {
                push_dedup(&mut found, prev_b, (i as u8, j as u8));
            } else if f_prev * f_cur < 0.0 {
                let root = bisect(&gaps_at, k, mw_freq_mhz, prev_b, b);
                push_dedup(&mut found, root, (i as u8, j as u8));
            }
        }
        prev_b = b;
        prev = cur;
        if b >= b_max {
            break;
        }
    }
    found.sort_unstable_by(|a, b| {
        a.field_mt
            .partial_cmp(&b.field_mt)
            .unwrap()
            .then(a.pair.cmp(&b.pair))
    });
    Ok(found)
}

fn bisect(gaps_at: &dyn Fn(f64) -> [f64; 3], pair_idx: usize, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = gaps_at(lo)[pair_idx] - target;
    while hi - lo > BISECTION_TOL_MT {
        let mid = 0.5 * (lo + hi);
        let f_mid = gaps_at(mid)[pair_idx] - target;
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    0.5 * (lo + hi)
}

fn push_dedup(found: &mut Vec<ResonanceField>, field_mt: f64, pair: (u8, u8)) {
    if found
        .iter()
        .any(|r| r.pair == pair && (r.field_mt - field_mt).abs() < DEDUP_TOL_MT)
    {
        return;
    }
    found.push(ResonanceField { field_mt, pair });
}

/// Resonance fields of both crystallographic sites for each crystal
/// rotation angle. The second site's eigenframe is the first pre-rotated by
/// `site_tilt_deg` about the tensor y-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationDispersionPoint {
    pub angle_deg: f64,
    pub site1: Vec<ResonanceField>,
    pub site2: Vec<ResonanceField>,
}

#[allow(clippy::too_many_arguments)]
pub fn rotation_dispersion(
    tensor: &ZfsTensor,
    rotation_axis: [f64; 3],
    field_dir_start: [f64; 3],
    angles_deg: &[f64],
    site_tilt_deg: f64,
    g_iso: f64,
    mw_freq_mhz: f64,
    b_range_mt: (f64, f64),
    grid_step_mt: f64,
) -> Result<Vec<RotationDispersionPoint>, ZfsError> {
    if angles_deg.iter().any(|a| !a.is_finite()) {
        return Err(ZfsError::InvalidRotation);
    }
    let site2 = tensor.tilted_about_y(site_tilt_deg)?;
    let mut out = Vec::with_capacity(angles_deg.len());
    for &angle in angles_deg {
        let rot = rotation_about(rotation_axis, angle);
        let dir = mat3_apply(&rot, normalize3(field_dir_start));
        out.push(RotationDispersionPoint {
            angle_deg: angle,
            site1: resonance_fields(tensor, dir, g_iso, mw_freq_mhz, b_range_mt, grid_step_mt)?,
            site2: resonance_fields(&site2, dir, g_iso, mw_freq_mhz, b_range_mt, grid_step_mt)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{G_ISO, SITE1_D_MHZ, SITE1_E_MHZ};

    fn site1() -> ZfsTensor {
        ZfsTensor::axial(SITE1_D_MHZ, SITE1_E_MHZ).unwrap()
    }

    #[test]
    fn zero_field_energies_site1() {
        let e = zero_field_energies(&site1()).energies_mhz;
        assert!((e[0] - 4260.8).abs() < 1e-9);
        assert!((e[1] - 3179.0).abs() < 1e-9);
        assert!((e[2] + 7439.8).abs() < 1e-9);
    }

    #[test]
    fn zero_field_energies_null_tensor() {
        let t = ZfsTensor::axial(0.0, 0.0).unwrap();
        assert_eq!(zero_field_energies(&t).energies_mhz, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_field_energies_excited() {
        // Direct substitution into the three closed-form expressions.
        let t = ZfsTensor::axial(-4190.5, 232.5).unwrap();
        let e = zero_field_energies(&t).energies_mhz;
        assert!((e[0] - (-4190.5 / 3.0 - 232.5)).abs() < 1e-9);
        assert!((e[1] - (-4190.5 / 3.0 + 232.5)).abs() < 1e-9);
        assert!((e[2] - (2.0 * 4190.5 / 3.0)).abs() < 1e-9);
        assert!((e[0] + 1629.3).abs() < 0.05);
        assert!((e[1] + 1164.3).abs() < 0.05);
        assert!((e[2] - 2793.7).abs() < 0.05);
    }

    #[test]
    fn traceless_for_random_tensors() {
        let mut rng = crate::rng::Rng::new(42);
        for _ in 0..200 {
            let d = (rng.uniform() - 0.5) * 20_000.0;
            let e_max = d.abs() / 3.0;
            let e = (rng.uniform() - 0.5) * 2.0 * e_max;
            let t = ZfsTensor::axial(d, e).unwrap();
            let lv = zero_field_energies(&t).energies_mhz;
            let sum: f64 = lv.iter().sum();
            let scale = lv.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            assert!(sum.abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn ground_transitions_site1() {
        let f = ground_transition_frequencies(&site1());
        assert!((f.f_zx_mhz - 11_700.6).abs() < 1e-9);
        assert!((f.f_zy_mhz - 10_618.8).abs() < 1e-9);
        assert!((f.f_xy_mhz - 1_081.8).abs() < 1e-9);
    }

    #[test]
    fn ground_transitions_degenerate_transverse() {
        let t = ZfsTensor::axial(5_000.0, 0.0).unwrap();
        let f = ground_transition_frequencies(&t);
        assert_eq!(f.f_zx_mhz, 5_000.0);
        assert_eq!(f.f_zy_mhz, 5_000.0);
        assert_eq!(f.f_xy_mhz, 0.0);
    }

    #[test]
    fn ground_transitions_nascent_site() {
        let t = ZfsTensor::axial(10_930.0, -516.0).unwrap();
        let f = ground_transition_frequencies(&t);
        assert!((f.f_zy_mhz - 10_414.0).abs() < 1e-9);
        assert!((f.f_zx_mhz - 11_446.0).abs() < 1e-9);
    }

    #[test]
    fn inversion_ground_reproduces_site1() {
        let t = zfs_from_transitions(11_700.6, 10_618.8, ZfsSignConvention::Ground).unwrap();
        assert!((t.d_mhz() - 11_159.7).abs() < 1e-9);
        assert!((t.e_mhz() + 540.9).abs() < 1e-9);
    }

    #[test]
    fn inversion_excited_state() {
        let t = zfs_from_transitions(4_423.0, 3_958.0, ZfsSignConvention::Excited).unwrap();
        assert!((t.d_mhz() + 4_190.5).abs() < 1e-9);
        assert!((t.e_mhz() - 232.5).abs() < 1e-9);
    }

    #[test]
    fn inversion_coincident_lines() {
        let t = zfs_from_transitions(7_000.0, 7_000.0, ZfsSignConvention::Ground).unwrap();
        assert_eq!(t.d_mhz(), 7_000.0);
        assert_eq!(t.e_mhz(), -0.0);
    }

    #[test]
    fn inversion_rejects_misordered() {
        assert!(matches!(
            zfs_from_transitions(3_958.0, 4_423.0, ZfsSignConvention::Excited),
            Err(ZfsError::TransitionOrder { .. })
        ));
    }

    #[test]
    fn round_trip_transitions() {
        let mut rng = crate::rng::Rng::new(7);
        for _ in 0..200 {
            let d = rng.uniform() * 15_000.0 + 1.0;
            let e = -(rng.uniform() * d / 3.0);
            let t = ZfsTensor::axial(d, e).unwrap();
            let f = ground_transition_frequencies(&t);
            let (hi, lo) = (f.f_zx_mhz.max(f.f_zy_mhz), f.f_zx_mhz.min(f.f_zy_mhz));
            let back = zfs_from_transitions(hi, lo, ZfsSignConvention::Ground).unwrap();
            assert!((back.d_mhz().abs() - d.abs()).abs() <= 1e-9 * d.abs());
            assert!((back.e_mhz().abs() - e.abs()).abs() <= 1e-9 * e.abs().max(1e-12));
        }
    }

    #[test]
    fn convention_guard_rejects() {
        assert!(matches!(
            ZfsTensor::axial(1_000.0, 400.0),
            Err(ZfsError::ConventionViolated { .. })
        ));
        assert!(ZfsTensor::axial(1_200.0, 400.0).is_ok());
    }

    #[test]
    fn frame_guard_rejects_reflection() {
        let mut frame = MAT3_IDENTITY;
        frame[0][0] = -1.0; // det −1
        assert!(matches!(
            ZfsTensor::new(100.0, 0.0, frame),
            Err(ZfsError::InvalidFrame { .. })
        ));
    }

    #[test]
    fn hamiltonian_hermitian_and_matches_levels_at_zero_field() {
        let zee = ZeemanConfig::new([0.0, 0.0, 0.0], G_ISO).unwrap();
        let h = spin_hamiltonian(&site1(), &zee);
        for i in 0..3 {
            for j in 0..3 {
                let diff = h[i][j] - h[j][i].conj();
                assert!(diff.abs() < 1e-12);
            }
        }
        let mut levels = zero_field_energies(&site1()).energies_mhz;
        levels.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let eig = hamiltonian_eigenvalues(&site1(), &zee);
        for (a, b) in eig.iter().zip(levels.iter()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn hamiltonian_null_tensor_zero_field_is_zero() {
        let t = ZfsTensor::axial(0.0, 0.0).unwrap();
        let zee = ZeemanConfig::new([0.0, 0.0, 0.0], G_ISO).unwrap();
        let h = spin_hamiltonian(&t, &zee);
        for row in &h {
            for v in row {
                assert_eq!(*v, Cplx::ZERO);
            }
        }
    }

    #[test]
    fn zeeman_splitting_along_z() {
        // Free spin in 346.1 mT: adjacent m_S levels split by g μ_B B / h.
        let t = ZfsTensor::axial(0.0, 0.0).unwrap();
        let zee = ZeemanConfig::new([0.0, 0.0, 346.1], G_ISO).unwrap();
        let e = hamiltonian_eigenvalues(&t, &zee);
        let expect = G_ISO * MU_B_OVER_H_MHZ_PER_MT * 346.1;
        assert!((e[2] - e[1] - expect).abs() < 1e-9);
        assert!((e[1] - e[0] - expect).abs() < 1e-9);
        assert!((expect - 9_700.0).abs() < 1.0);
    }

    #[test]
    fn resonance_free_spin_x_band() {
        let t = ZfsTensor::axial(0.0, 0.0).unwrap();
        let fields =
            resonance_fields(&t, [0.0, 0.0, 1.0], G_ISO, 9_700.0, (0.0, 800.0), 0.5).unwrap();
        let expect = 9_700.0 / (G_ISO * MU_B_OVER_H_MHZ_PER_MT);
        // Doubly degenerate ΔmS = ±1 resonance at a single field value.
        let single_quantum: Vec<&ResonanceField> = fields
            .iter()
            .filter(|r| r.pair == (0, 1) || r.pair == (1, 2))
            .collect();
        assert_eq!(single_quantum.len(), 2);
        for r in &single_quantum {
            assert!((r.field_mt - expect).abs() < 1e-3, "field {}", r.field_mt);
        }
        assert!((single_quantum[0].field_mt - single_quantum[1].field_mt).abs() < 1e-3);
        // The outer-pair (double-quantum) condition crosses at half field.
        let half: Vec<&ResonanceField> = fields.iter().filter(|r| r.pair == (0, 2)).collect();
        assert_eq!(half.len(), 1);
        assert!((half[0].field_mt - expect / 2.0).abs() < 1e-3);
    }

    #[test]
    fn resonance_scales_linearly_for_free_spin() {
        let t = ZfsTensor::axial(0.0, 0.0).unwrap();
        let f1 = resonance_fields(&t, [0.0, 0.0, 1.0], G_ISO, 4_000.0, (0.0, 800.0), 0.5).unwrap();
        let f2 = resonance_fields(&t, [0.0, 0.0, 1.0], G_ISO, 8_000.0, (0.0, 800.0), 0.5).unwrap();
        assert!((f2[0].field_mt - 2.0 * f1[0].field_mt).abs() < 1e-2);
    }

    #[test]
    fn resonance_residuals_below_bound() {
        let t = site1();
        let dir = normalize3([0.3, -0.2, 0.93]);
        let fields = resonance_fields(&t, dir, G_ISO, 9_700.0, (0.0, 900.0), 0.5).unwrap();
        assert!(!fields.is_empty());
        for r in &fields {
            let zee = ZeemanConfig::new(
                [
                    dir[0] * r.field_mt,
                    dir[1] * r.field_mt,
                    dir[2] * r.field_mt,
                ],
                G_ISO,
            )
            .unwrap();
            let e = hamiltonian_eigenvalues(&t, &zee);
            let gaps = [e[1] - e[0], e[2] - e[0], e[2] - e[1]];
            let best = gaps
                .iter()
                .map(|g| (g - 9_700.0).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.05, "residual {best} MHz at {} mT", r.field_mt);
        }
    }

    #[test]
    fn no_resonance_is_empty_not_error() {
        let t = site1();
        // 1 GHz quantum, but every gap at low field exceeds it.
        let fields =
            resonance_fields(&t, [0.0, 0.0, 1.0], G_ISO, 100.0, (0.0, 1.0), 0.1).unwrap();
        assert!(fields.is_empty());
    }

    #[test]
    fn rotation_dispersion_zero_tilt_sites_identical() {
        let t = site1();
        let angles: Vec<f64> = (0..12).map(|k| k as f64 * 30.0).collect();
        let pts = rotation_dispersion(
            &t,
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            &angles,
            0.0,
            G_ISO,
            9_700.0,
            (0.0, 900.0),
            0.5,
        )
        .unwrap();
        for p in &pts {
            assert_eq!(p.site1.len(), p.site2.len(), "angle {}", p.angle_deg);
            for (a, b) in p.site1.iter().zip(p.site2.iter()) {
                assert!((a.field_mt - b.field_mt).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rotation_by_180_leaves_fields_unchanged() {
        // B ⟂ rotation axis, so 180° maps B → −B; spectra are even in B.
        let t = site1();
        let pts = rotation_dispersion(
            &t,
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            &[0.0, 180.0],
            0.0,
            G_ISO,
            9_700.0,
            (0.0, 900.0),
            0.5,
        )
        .unwrap();
        assert_eq!(pts[0].site1.len(), pts[1].site1.len());
        for (a, b) in pts[0].site1.iter().zip(pts[1].site1.iter()) {
            assert!((a.field_mt - b.field_mt).abs() < 1e-4);
        }
    }

    #[test]
    fn tilted_sites_merge_when_field_parallel_tilt_axis() {
        // Tilt is about the tensor y-axis; when B ∥ y both sites see the
        // same field and their branches coincide, while at B ∥ z they split.
        let t = site1();
        let pts = rotation_dispersion(
            &t,
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            &[0.0, 90.0],
            2.5,
            G_ISO,
            9_700.0,
            (0.0, 900.0),
            0.5,
        )
        .unwrap();
        // At 90° the field lies along y.
        let merged = &pts[1];
        assert_eq!(merged.site1.len(), merged.site2.len());
        for (a, b) in merged.site1.iter().zip(merged.site2.iter()) {
            assert!((a.field_mt - b.field_mt).abs() < 1e-3);
        }
        // At 0° (B along z) the sites are split.
        let split = &pts[0];
        let max_split = split
            .site1
            .iter()
            .zip(split.site2.iter())
            .map(|(a, b)| (a.field_mt - b.field_mt).abs())
            .fold(0.0_f64, f64::max);
        assert!(max_split > 0.1, "expected visible splitting, got {max_split}");
    }
}
