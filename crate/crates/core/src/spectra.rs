// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Continuous-wave spectra and their analysis tools.
//!
//! ODMR and fluorescence-excitation spectra come from steady states of the
//! seven-level model, point by point on the sweep grid; ensemble spectra sum
//! single-molecule responses in a fixed order so results are reproducible.
//! The analysis side carries the Lorentzian-triple fitting used for isotope
//! sub-ensembles, discrete cross-correlation of excitation spectra, the
//! Debye-Waller intensity ratio, microwave-modulated excited-state ODMR and
//! the doping-ratio/distance relation.

use crate::constants;
use crate::fitting::{least_squares, Bound, FitError, FitResult, LeastSquaresOptions};
use crate::fm;
use crate::photophysics::{
    build_rate_model, fluorescence_rate, steady_state, MwDriveTone, PhotophysicsError,
    PhotophysicsParams, SpinTransition, Sub,
};
use crate::rng::Rng;
use crate::zfs::{ground_transition_frequencies, ZfsTensor};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone)]
pub enum SpectraError {
    Invalid(String),
    /// Cross-correlation needs a common uniform grid.
    GridMismatch,
    Photophysics(PhotophysicsError),
    Fit(FitError),
}

impl fmt::Display for SpectraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectraError::Invalid(m) => write!(f, "{m}"),
            SpectraError::GridMismatch => write!(f, "spectra are not on a common uniform grid"),
            SpectraError::Photophysics(e) => write!(f, "{e}"),
            SpectraError::Fit(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SpectraError {}

impl From<PhotophysicsError> for SpectraError {
    fn from(e: PhotophysicsError) -> Self {
        SpectraError::Photophysics(e)
    }
}

impl From<FitError> for SpectraError {
    fn from(e: FitError) -> Self {
        SpectraError::Fit(e)
    }
}

/// A sampled spectrum: strictly monotone axis, finite intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub axis: Vec<f64>,
    pub intensity: Vec<f64>,
    pub label: String,
}

impl Spectrum {
    pub fn new(axis: Vec<f64>, intensity: Vec<f64>, label: &str) -> Result<Self, SpectraError> {
        if axis.len() != intensity.len() {
            return Err(SpectraError::Invalid(
                "axis and intensity lengths differ".into(),
            ));
        }
        if axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SpectraError::Invalid("axis must be strictly monotone".into()));
        }
        if intensity.iter().any(|v| !v.is_finite()) {
            return Err(SpectraError::Invalid("intensities must be finite".into()));
        }
        Ok(Spectrum {
            axis,
            intensity,
            label: label.to_string(),
        })
    }

    fn uniform_step(&self) -> Option<f64> {
        if self.axis.len() < 2 {
            return None;
        }
        let step = self.axis[1] - self.axis[0];
        let ok = self
            .axis
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() < 1e-6 * step.abs());
        ok.then_some(step)
    }
}

/// Steady-state fluorescence versus swept microwave frequency. A single
/// tone addresses whichever ground transition it is near, so peaks appear
/// at |D−E| and |D+E|; the linewidth grows with the drive strength.
pub fn odmr_spectrum(
    tensor: &ZfsTensor,
    params: &PhotophysicsParams,
    mw_grid_mhz: &[f64],
    mw_rabi_khz: f64,
) -> Result<Spectrum, SpectraError> {
    let freqs = ground_transition_frequencies(tensor);
    let rabi_mhz = mw_rabi_khz * 1e-3;
    let mut intensity = Vec::with_capacity(mw_grid_mhz.len());
    for &f in mw_grid_mhz {
        let mut p = params.clone();
        p.mw_drive = vec![
            MwDriveTone {
                transition: SpinTransition::GroundZy,
                rabi_mhz,
                detuning_mhz: f - freqs.f_zy_mhz,
                phase_rad: 0.0,
            },
            MwDriveTone {
                transition: SpinTransition::GroundZx,
                rabi_mhz,
                detuning_mhz: f - freqs.f_zx_mhz,
                phase_rad: 0.0,
            },
        ];
        let model = build_rate_model(&p)?;
        let ss = steady_state(&model)?;
        intensity.push(fluorescence_rate(&ss, &p));
    }
    Spectrum::new(mw_grid_mhz.to_vec(), intensity, "odmr")
}

/// Microwave assistance applied during an excitation-spectrum scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwAssist {
    None,
    Zx,
    Zy,
    Both,
}

impl MwAssist {
    fn tones(self, rabi_mhz: f64) -> Vec<MwDriveTone> {
        match self {
            MwAssist::None => Vec::new(),
            MwAssist::Zx => vec![MwDriveTone::resonant(SpinTransition::GroundZx, rabi_mhz)],
            MwAssist::Zy => vec![MwDriveTone::resonant(SpinTransition::GroundZy, rabi_mhz)],
            MwAssist::Both => vec![
                MwDriveTone::resonant(SpinTransition::GroundZx, rabi_mhz),
                MwDriveTone::resonant(SpinTransition::GroundZy, rabi_mhz),
            ],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MwAssist::None => "none",
            MwAssist::Zx => "zx",
            MwAssist::Zy => "zy",
            MwAssist::Both => "both",
        }
    }
}

/// Fluorescence-excitation spectrum of one or more molecules whose line
/// centers are offset by `molecule_offsets_mhz` on the excitation axis.
/// Each grid point is a steady-state solve; molecules are summed in input
/// order.
pub fn excitation_spectrum(
    params: &PhotophysicsParams,
    molecule_offsets_mhz: &[f64],
    laser_grid_mhz: &[f64],
    mw: MwAssist,
    mw_rabi_mhz: f64,
) -> Result<Spectrum, SpectraError> {
    let offsets: &[f64] = if molecule_offsets_mhz.is_empty() {
        &[0.0]
    } else {
        molecule_offsets_mhz
    };
    let tones = mw.tones(mw_rabi_mhz);
    let mut intensity = vec![0.0; laser_grid_mhz.len()];
    for &mol in offsets {
        let mut p = params.clone();
        p.mw_drive = tones.clone();
        for (k, line) in p.optical_line_offsets_mhz.iter_mut().enumerate() {
            *line = params.optical_line_offsets_mhz[k] + mol;
        }
        for (i, &laser) in laser_grid_mhz.iter().enumerate() {
            p.laser_detuning_mhz = laser;
            let model = build_rate_model(&p)?;
            let ss = steady_state(&model)?;
            intensity[i] += fluorescence_rate(&ss, &p);
        }
    }
    Spectrum::new(
        laser_grid_mhz.to_vec(),
        intensity,
        &format!("excitation_mw_{}", mw.label()),
    )
}

/// Isotopologue ensemble description: which fraction of molecules carries
/// how many ¹³C atoms, and how their optical lines shift.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotopeEnsembleSpec {
    pub n_molecules: usize,
    pub carbon_count: u32,
    pub c13_abundance: f64,
    pub inhomogeneous_fwhm_mhz: f64,
    /// (Δf_XY, Δf_XZ): separations within each molecule's line triple.
    pub triple_separations_mhz: (f64, f64),
    /// Line-center shift per ¹³C count; the last entry covers all higher
    /// counts.
    pub class_shifts_mhz: Vec<f64>,
}

impl Default for IsotopeEnsembleSpec {
    fn default() -> Self {
        IsotopeEnsembleSpec {
            n_molecules: 1000,
            carbon_count: constants::CARBON_COUNT,
            c13_abundance: constants::C13_ABUNDANCE,
            inhomogeneous_fwhm_mhz: constants::INHOMOGENEOUS_FWHM_MHZ,
            triple_separations_mhz: (
                constants::OPTICAL_SPLITTING_XY_MHZ,
                constants::OPTICAL_SPLITTING_XZ_MHZ,
            ),
            class_shifts_mhz: vec![0.0, 5_000.0, 10_000.0, 17_500.0, 25_000.0],
        }
    }
}

impl IsotopeEnsembleSpec {
    pub fn validate(&self) -> Result<(), SpectraError> {
        if !(0.0..=1.0).contains(&self.c13_abundance) {
            return Err(SpectraError::Invalid(format!(
                "abundance must lie in [0, 1], got {}",
                self.c13_abundance
            )));
        }
        if !(self.triple_separations_mhz.0 > 0.0 && self.triple_separations_mhz.1 > 0.0) {
            return Err(SpectraError::Invalid(
                "triple separations must be positive".into(),
            ));
        }
        if self.class_shifts_mhz.is_empty() {
            return Err(SpectraError::Invalid("class shift table is empty".into()));
        }
        Ok(())
    }

    /// Probability that a molecule carries no ¹³C at all.
    pub fn all_c12_probability(&self) -> f64 {
        fm::powi(1.0 - self.c13_abundance, self.carbon_count as i32)
    }
}

/// One sampled molecule: isotopologue class and line-center offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoleculeSample {
    pub n_c13: u32,
    pub offset_mhz: f64,
}

/// Draw molecules: the ¹³C count is binomial over the carbon backbone, the
/// line center is the class shift plus Gaussian inhomogeneous jitter.
pub fn sample_isotope_ensemble(
    spec: &IsotopeEnsembleSpec,
    seed: u64,
) -> Result<Vec<MoleculeSample>, SpectraError> {
    spec.validate()?;
    let mut rng = Rng::new(seed);
    let sigma = spec.inhomogeneous_fwhm_mhz / 2.354_820_045;
    let mut out = Vec::with_capacity(spec.n_molecules);
    for _ in 0..spec.n_molecules {
        let n_c13 = rng.binomial(spec.carbon_count, spec.c13_abundance);
        let class = (n_c13 as usize).min(spec.class_shifts_mhz.len() - 1);
        let offset = spec.class_shifts_mhz[class] + sigma * rng.normal();
        out.push(MoleculeSample { n_c13, offset_mhz: offset });
    }
    Ok(out)
}

/// Relative steady-state brightness of the three optical lines under the
/// given microwave assist (laser parked on each line in turn).
pub fn line_weights(
    params: &PhotophysicsParams,
    mw: MwAssist,
    mw_rabi_mhz: f64,
) -> Result<[f64; 3], SpectraError> {
    let mut weights = [0.0; 3];
    for s in Sub::ALL {
        let mut p = params.clone();
        p.mw_drive = mw.tones(mw_rabi_mhz);
        p.laser_detuning_mhz = p.optical_line_offsets_mhz[s.index()];
        let model = build_rate_model(&p)?;
        let ss = steady_state(&model)?;
        weights[s.index()] = fluorescence_rate(&ss, &p);
    }
    Ok(weights)
}

fn lorentzian_unit(x: f64, fwhm: f64) -> f64 {
    let hw = fwhm / 2.0;
    hw * hw / (x * x + hw * hw)
}

/// Parametric ensemble excitation spectrum: per isotopologue class, a
/// triple of Lorentzians at (0, Δf_XY, Δf_XZ) relative to the class X line,
/// weighted by the class population and the microwave-dependent line
/// brightness.
#[allow(clippy::too_many_arguments)]
pub fn isotope_excitation_spectrum(
    spec: &IsotopeEnsembleSpec,
    params: &PhotophysicsParams,
    laser_grid_mhz: &[f64],
    mw: MwAssist,
    mw_rabi_mhz: f64,
    line_fwhm_mhz: f64,
    seed: u64,
) -> Result<Spectrum, SpectraError> {
    let molecules = sample_isotope_ensemble(spec, seed)?;
    let weights = line_weights(params, mw, mw_rabi_mhz)?;
    // X line of an unshifted molecule sits at −Δf_XY/2 on the shared axis.
    let x_base = -spec.triple_separations_mhz.0 / 2.0;
    let line_offsets = [
        0.0,
        spec.triple_separations_mhz.0,
        spec.triple_separations_mhz.1,
    ];
    let mut intensity = vec![0.0; laser_grid_mhz.len()];
    for m in &molecules {
        for (line, &w) in line_offsets.iter().zip(weights.iter()) {
            let center = x_base + m.offset_mhz + line;
            for (i, &f) in laser_grid_mhz.iter().enumerate() {
                intensity[i] += w * lorentzian_unit(f - center, line_fwhm_mhz);
            }
        }
    }
    Spectrum::new(
        laser_grid_mhz.to_vec(),
        intensity,
        &format!("isotope_mw_{}", mw.label()),
    )
}

/// Noise-free synthetic triple spectrum from explicit class weights; used
/// to exercise the triple fit against known areas.
pub fn synth_triple_spectrum(
    grid_mhz: &[f64],
    class_centers_mhz: &[f64],
    class_weights: &[f64],
    line_weights: [f64; 3],
    separations_mhz: (f64, f64),
    line_fwhm_mhz: f64,
) -> Result<Spectrum, SpectraError> {
    if class_centers_mhz.len() != class_weights.len() {
        return Err(SpectraError::Invalid(
            "class centers and weights differ in length".into(),
        ));
    }
    let offsets = [0.0, separations_mhz.0, separations_mhz.1];
    let mut intensity = vec![0.0; grid_mhz.len()];
    for (&c, &cw) in class_centers_mhz.iter().zip(class_weights.iter()) {
        for (o, &lw) in offsets.iter().zip(line_weights.iter()) {
            for (i, &f) in grid_mhz.iter().enumerate() {
                intensity[i] += cw * lw * lorentzian_unit(f - (c + o), line_fwhm_mhz);
            }
        }
    }
    Spectrum::new(grid_mhz.to_vec(), intensity, "synthetic_triples")
}

/// One fitted triple: its X-line center and its share of the total area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleSummary {
    pub center_mhz: f64,
    pub relative_area: f64,
}

#[derive(Debug, Clone)]
pub struct TriplesFit {
    pub fit: FitResult,
    /// Fitted shared separations (Δf_XY, Δf_XZ).
    pub separations_mhz: (f64, f64),
    pub triples: Vec<TripleSummary>,
}

/// Fit n triples of Lorentzians with shared within-triple separations.
/// Per-line amplitudes and widths are free; per-triple centers and the two
/// separations are shared. Centers are seeded from the strongest local
/// maxima unless given. Non-convergence is reported through the contained
/// fit result, alongside its best residual.
pub fn fit_lorentzian_triples(
    spectrum: &Spectrum,
    n_triples: usize,
    separations_init_mhz: (f64, f64),
    fwhm_init_mhz: f64,
    centers_init_mhz: Option<&[f64]>,
) -> Result<TriplesFit, SpectraError> {
    if n_triples == 0 {
        return Err(SpectraError::Invalid("need at least one triple".into()));
    }
    let n = spectrum.axis.len();
    if n < 8 * n_triples {
        return Err(SpectraError::Invalid("spectrum grid too coarse".into()));
    }

    let centers: Vec<f64> = match centers_init_mhz {
        Some(c) => {
            if c.len() != n_triples {
                return Err(SpectraError::Invalid(
                    "need one initial center per triple".into(),
                ));
            }
            c.to_vec()
        }
        None => pick_peaks(spectrum, n_triples, 3.0 * fwhm_init_mhz),
    };

    // Parameter layout: [sep1, sep2, center_0.., (amp, width) × 3 per triple].
    let mut init = Vec::with_capacity(2 + n_triples * 7);
    let mut bounds = Vec::new();
    let mut names: Vec<String> = Vec::new();
    init.push(separations_init_mhz.0);
    bounds.push(Bound::Min(0.0));
    names.push("sep_xy".into());
    init.push(separations_init_mhz.1);
    bounds.push(Bound::Min(0.0));
    names.push("sep_xz".into());
    for (t, &c) in centers.iter().enumerate() {
        init.push(c);
        bounds.push(Bound::Free);
        names.push(format!("center_{t}"));
    }
    let value_near = |x: f64| -> f64 {
        let idx = spectrum
            .axis
            .iter()
            .position(|&a| a >= x)
            .unwrap_or(n - 1);
        spectrum.intensity[idx]
    };
    for (t, &c) in centers.iter().enumerate() {
        for (l, off) in [0.0, separations_init_mhz.0, separations_init_mhz.1]
            .iter()
            .enumerate()
        {
            init.push(value_near(c + off).max(1e-12));
            bounds.push(Bound::Free);
            names.push(format!("amp_{t}_{l}"));
            init.push(fwhm_init_mhz);
            bounds.push(Bound::Min(0.0));
            names.push(format!("width_{t}_{l}"));
        }
    }

    let axis = spectrum.axis.clone();
    let nt = n_triples;
    let model = move |p: &[f64]| -> Vec<f64> {
        let (sep1, sep2) = (p[0], p[1]);
        axis.iter()
            .map(|&x| {
                let mut v = 0.0;
                for t in 0..nt {
                    let c = p[2 + t];
                    let base = 2 + nt + 6 * t;
                    for (l, off) in [0.0, sep1, sep2].iter().enumerate() {
                        let amp = p[base + 2 * l];
                        let w = p[base + 2 * l + 1];
                        v += amp * lorentzian_unit(x - (c + off), w);
                    }
                }
                v
            })
            .collect()
    };

    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let fit = least_squares(
        model,
        &spectrum.intensity,
        None,
        &init,
        &bounds,
        &name_refs,
        &LeastSquaresOptions::default(),
    )?;

    // Areas: amp × width per line (the common π/2 factor cancels in ratios).
    let mut areas = Vec::with_capacity(n_triples);
    let mut total = 0.0;
    for t in 0..n_triples {
        let base = 2 + n_triples + 6 * t;
        let mut a = 0.0;
        for l in 0..3 {
            a += (fit.params[base + 2 * l] * fit.params[base + 2 * l + 1]).abs();
        }
        areas.push(a);
        total += a;
    }
    let triples = (0..n_triples)
        .map(|t| TripleSummary {
            center_mhz: fit.params[2 + t],
            relative_area: if total > 0.0 { areas[t] / total } else { 0.0 },
        })
        .collect();
    Ok(TriplesFit {
        separations_mhz: (fit.params[0], fit.params[1]),
        triples,
        fit,
    })
}

/// Strongest local maxima separated by at least `min_dist`.
fn pick_peaks(spectrum: &Spectrum, count: usize, min_dist: f64) -> Vec<f64> {
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    let v = &spectrum.intensity;
    for i in 1..v.len() - 1 {
        if v[i] >= v[i - 1] && v[i] >= v[i + 1] {
            candidates.push((v[i], spectrum.axis[i]));
        }
    }
    candidates.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut picked: Vec<f64> = Vec::new();
    for (_, x) in candidates {
        if picked.iter().all(|&p| (p - x).abs() >= min_dist) {
            picked.push(x);
            if picked.len() == count {
                break;
            }
        }
    }
    while picked.len() < count {
        picked.push(spectrum.axis[spectrum.axis.len() / 2]);
    }
    picked
}

/// Discrete cross-correlation of two spectra on a common uniform grid:
/// d_k = Σₙ a_n · b_{n+k} / (overlap count). A positive peak shift means b's
/// features sit above a's on the axis; d_k(a, b) = d_{−k}(b, a).
pub fn cross_correlate(a: &Spectrum, b: &Spectrum) -> Result<Spectrum, SpectraError> {
    let step = a.uniform_step().ok_or(SpectraError::GridMismatch)?;
    let step_b = b.uniform_step().ok_or(SpectraError::GridMismatch)?;
    if a.axis.len() != b.axis.len()
        || (step - step_b).abs() > 1e-9 * step.abs()
        || (a.axis[0] - b.axis[0]).abs() > 1e-9 * step.abs()
    {
        return Err(SpectraError::GridMismatch);
    }
    let n = a.axis.len() as isize;
    let mut shifts = Vec::with_capacity(2 * n as usize - 1);
    let mut values = Vec::with_capacity(2 * n as usize - 1);
    for k in -(n - 1)..n {
        let mut acc = 0.0;
        let lo = 0.max(-k);
        let hi = (n - 1).min(n - 1 - k);
        for i in lo..=hi {
            acc += a.intensity[i as usize] * b.intensity[(i + k) as usize];
        }
        let count = (hi - lo + 1) as f64;
        shifts.push(k as f64 * step);
        values.push(acc / count);
    }
    Spectrum::new(shifts, values, "cross_correlation")
}

/// Lorentzian-on-a-slope fit of a correlation peak near `window_center`;
/// returns (center, FWHM).
pub fn correlation_peak(
    corr: &Spectrum,
    window_center: f64,
    window_half_width: f64,
) -> Result<(f64, f64), SpectraError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&x, &y) in corr.axis.iter().zip(corr.intensity.iter()) {
        if (x - window_center).abs() <= window_half_width {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.len() < 8 {
        return Err(SpectraError::Invalid(
            "correlation window holds too few points".into(),
        ));
    }
    // Normalize: correlation values can sit many orders below unity, which
    // would make the mixed-scale normal equations numerically singular.
    let y_scale = ys.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if y_scale <= 0.0 {
        return Err(SpectraError::Invalid("correlation window is empty".into()));
    }
    for y in ys.iter_mut() {
        *y /= y_scale;
    }
    let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let (y_max_idx, y_max) = ys
        .iter()
        .cloned()
        .enumerate()
        .fold((0, 0.0f64), |m, (i, v)| if v > m.1 { (i, v) } else { m });
    let xs_c = xs.clone();
    let model = move |p: &[f64]| -> Vec<f64> {
        xs_c.iter()
            .map(|&x| p[0] * lorentzian_unit(x - p[1], p[2]) + p[3] + p[4] * (x - window_center))
            .collect()
    };
    let fit = least_squares(
        model,
        &ys,
        None,
        &[
            (y_max - y_min).max(1e-12),
            xs[y_max_idx],
            window_half_width / 2.0,
            y_min,
            0.0,
        ],
        &[
            Bound::Free,
            Bound::Free,
            Bound::Min(0.0),
            Bound::Free,
            Bound::Free,
        ],
        &["amplitude", "center", "fwhm", "offset", "slope"],
        &LeastSquaresOptions::default(),
    )?;
    Ok((fit.params[1], fit.params[2]))
}

fn trapezoid(axis: &[f64], values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..axis.len() - 1 {
        let (x0, x1) = (axis[i], axis[i + 1]);
        if x1 <= lo || x0 >= hi {
            continue;
        }
        let (c0, c1) = (x0.max(lo), x1.min(hi));
        // Linear interpolation onto the clipped interval.
        let f = |x: f64| {
            values[i] + (values[i + 1] - values[i]) * (x - x0) / (x1 - x0)
        };
        acc += 0.5 * (f(c0) + f(c1)) * (c1 - c0);
    }
    acc
}

/// Debye-Waller ratio of an emission spectrum (nm axis): the background is
/// set to the mean below `background_max_nm`, then the ZPL integral is
/// divided by the integral from the ZPL up to `sideband_limit_nm`.
pub fn debye_waller(
    emission: &Spectrum,
    zpl_window_nm: (f64, f64),
    sideband_limit_nm: f64,
    background_max_nm: f64,
) -> Result<f64, SpectraError> {
    let axis = &emission.axis;
    let (lo, hi) = (axis[0], axis[axis.len() - 1]);
    if !(zpl_window_nm.0 >= lo
        && zpl_window_nm.1 > zpl_window_nm.0
        && sideband_limit_nm <= hi
        && sideband_limit_nm > zpl_window_nm.1)
    {
        return Err(SpectraError::Invalid(
            "integration windows must lie inside the spectrum".into(),
        ));
    }
    let mut bg_sum = 0.0;
    let mut bg_n = 0usize;
    for (&x, &y) in axis.iter().zip(emission.intensity.iter()) {
        if x <= background_max_nm {
            bg_sum += y;
            bg_n += 1;
        }
    }
    let background = if bg_n > 0 { bg_sum / bg_n as f64 } else { 0.0 };
    let corrected: Vec<f64> = emission.intensity.iter().map(|&y| y - background).collect();
    let zpl = trapezoid(axis, &corrected, zpl_window_nm.0, zpl_window_nm.1);
    let total = trapezoid(axis, &corrected, zpl_window_nm.0, sideband_limit_nm);
    if total.abs() < 1e-300 {
        return Err(SpectraError::Invalid(
            "total intensity in the window vanishes".into(),
        ));
    }
    Ok(zpl / total)
}

/// Parametric emission spectrum: a ZPL Lorentzian plus a broad phonon
/// sideband over a flat background, scaled so that the windowed-intensity
/// ratio of the extraction procedure equals `zpl_weight`. Exists to
/// exercise the Debye-Waller extraction.
#[allow(clippy::too_many_arguments)]
pub fn synth_emission_spectrum(
    grid_nm: &[f64],
    zpl_center_nm: f64,
    zpl_fwhm_nm: f64,
    zpl_weight: f64,
    zpl_window_nm: (f64, f64),
    sideband_limit_nm: f64,
    background_level: f64,
) -> Result<Spectrum, SpectraError> {
    if !(0.0 < zpl_weight && zpl_weight <= 1.0) {
        return Err(SpectraError::Invalid("zpl weight must lie in (0, 1]".into()));
    }
    // Sideband: two broad Gaussians well above the background region.
    let sideband = |x: f64| -> f64 {
        let d1 = x - zpl_center_nm - 30.0;
        let d2 = x - zpl_center_nm - 70.0;
        fm::exp(-d1 * d1 / (2.0 * 12.0 * 12.0)) + 0.5 * fm::exp(-d2 * d2 / (2.0 * 18.0 * 18.0))
    };
    let zpl: Vec<f64> = grid_nm
        .iter()
        .map(|&x| lorentzian_unit(x - zpl_center_nm, zpl_fwhm_nm))
        .collect();
    let sb: Vec<f64> = grid_nm.iter().map(|&x| sideband(x)).collect();
    // Windowed areas on this grid: the procedure computes
    // (Lz + s·Sw) / (Lz + Lt + s·S) with Lz the ZPL share inside its
    // window, Lt its tail up to the sideband limit, Sw the sideband share
    // leaking into the ZPL window and S the sideband share in the full
    // window; solve for the sideband scale s.
    let lz = trapezoid(grid_nm, &zpl, zpl_window_nm.0, zpl_window_nm.1);
    let lt = trapezoid(grid_nm, &zpl, zpl_window_nm.0, sideband_limit_nm) - lz;
    let s_win = trapezoid(grid_nm, &sb, zpl_window_nm.0, zpl_window_nm.1);
    let s_area = trapezoid(grid_nm, &sb, zpl_window_nm.0, sideband_limit_nm);
    let numerator = lz - zpl_weight * (lz + lt);
    let denominator = zpl_weight * s_area - s_win;
    if numerator <= 0.0 || denominator <= 0.0 {
        return Err(SpectraError::Invalid(
            "zpl weight unreachable with this window geometry".into(),
        ));
    }
    let sb_scale = numerator / denominator;
    let intensity: Vec<f64> = grid_nm
        .iter()
        .enumerate()
        .map(|(i, _)| zpl[i] + sb_scale * sb[i] + background_level)
        .collect();
    Spectrum::new(grid_nm.to_vec(), intensity, "synthetic_emission")
}

/// Excited-state ODMR: a swept microwave tone transfers excited population
/// into the fast-ISC z' sublevel at a Lorentzian-weighted incoherent rate,
/// producing fluorescence dips at |D'| ∓ E'. The signal sums the two bright
/// sub-populations of an inhomogeneous ensemble — molecules whose X line or
/// Y line is resonant with the laser — so both dips appear.
pub fn excited_state_odmr(
    params: &PhotophysicsParams,
    excited_tensor: &ZfsTensor,
    mw_grid_mhz: &[f64],
    transfer_rate_peak_per_ns: f64,
    es_linewidth_mhz: f64,
) -> Result<Spectrum, SpectraError> {
    let freqs = ground_transition_frequencies(excited_tensor);
    let mut intensity = vec![0.0; mw_grid_mhz.len()];
    for line in [Sub::X, Sub::Y] {
        let mut p = params.clone();
        p.laser_detuning_mhz = p.optical_line_offsets_mhz[line.index()];
        for (i, &f) in mw_grid_mhz.iter().enumerate() {
            let mut model = build_rate_model(&p)?;
            let w_zx =
                transfer_rate_peak_per_ns * lorentzian_unit(f - freqs.f_zx_mhz, es_linewidth_mhz);
            let w_zy =
                transfer_rate_peak_per_ns * lorentzian_unit(f - freqs.f_zy_mhz, es_linewidth_mhz);
            if w_zx > 0.0 {
                model.add_excited_transfer(Sub::X, Sub::Z, w_zx);
            }
            if w_zy > 0.0 {
                model.add_excited_transfer(Sub::Y, Sub::Z, w_zy);
            }
            let ss = steady_state(&model)?;
            intensity[i] += model.collection_efficiency
                * model.gamma_rad_per_ns
                * (ss.populations[3] + ss.populations[4] + ss.populations[5]);
        }
    }
    Spectrum::new(mw_grid_mhz.to_vec(), intensity, "excited_state_odmr")
}

/// Average dopant distance in nm from the doping ratio ξ = 0.4175/d³.
pub fn doping_distance_nm(ratio: f64) -> Result<f64, SpectraError> {
    if !(ratio > 0.0) {
        return Err(SpectraError::Invalid(format!(
            "doping ratio must be positive, got {ratio}"
        )));
    }
    Ok(fm::cbrt(constants::DOPING_CONSTANT_NM3 / ratio))
}
