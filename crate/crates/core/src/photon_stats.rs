// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Stochastic photon streams and their statistics.
//!
//! Continuous-wave emission is simulated with exact-time kinetic Monte Carlo
//! over the incoherent rate generator; coherent microwave drive is folded
//! into effective ground-state transfer rates first (saturation formula, see
//! [`RateModel::folded_generator`]) so the trajectory stays a pure jump
//! process. Every radiative jump is thinned by the collection efficiency.
//!
//! On top of the streams: the g²(τ) coincidence histogram, the three-level
//! g² model with Gaussian instrument-response convolution in closed form
//! (scaled complementary error functions; must and does agree with direct
//! numeric convolution), its least-squares fit with Monte-Carlo confidence
//! interval on g²(0), and TCSPC decay simulation with bi-exponential
//! reconvolution fitting.

use crate::fitting::{
    least_squares, monte_carlo_uncertainty, Bound, FitError, FitResult, LeastSquaresOptions,
};
use crate::fm;
use crate::photophysics::{PhotophysicsError, PhotophysicsParams, RateModel, Sub};
use crate::rng::Rng;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum PhotonStatsError {
    EmptyRecord,
    /// The jump process reached a state with no escape channel.
    Deadlock {
        state: usize,
    },
    Photophysics(PhotophysicsError),
    Fit(FitError),
    FitDidNotConverge {
        residual_norm: f64,
    },
    InvalidInput(&'static str),
}

impl fmt::Display for PhotonStatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhotonStatsError::EmptyRecord => write!(f, "photon record is empty"),
            PhotonStatsError::Deadlock { state } => {
                write!(f, "no escape rate from state {state}; stream stalls")
            }
            PhotonStatsError::Photophysics(e) => write!(f, "{e}"),
            PhotonStatsError::Fit(e) => write!(f, "{e}"),
            PhotonStatsError::FitDidNotConverge { residual_norm } => {
                write!(f, "fit did not converge; best residual norm {residual_norm:.3e}")
            }
            PhotonStatsError::InvalidInput(msg) => write!(f, "{msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PhotonStatsError {}

impl From<PhotophysicsError> for PhotonStatsError {
    fn from(e: PhotophysicsError) -> Self {
        PhotonStatsError::Photophysics(e)
    }
}

impl From<FitError> for PhotonStatsError {
    fn from(e: FitError) -> Self {
        PhotonStatsError::Fit(e)
    }
}

/// Timestamps of detected photons from one stochastic trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonRecord {
    /// Sorted detection times, ns.
    pub timestamps_ns: Vec<f64>,
    pub total_duration_ns: f64,
    pub seed: u64,
    /// Fraction of trajectory time spent in each of the seven levels.
    pub state_occupancy: [f64; 7],
}

impl PhotonRecord {
    pub fn mean_rate_per_ns(&self) -> f64 {
        self.timestamps_ns.len() as f64 / self.total_duration_ns
    }
}

/// Where a stochastic trajectory begins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamStart {
    /// Sample the initial level from the folded stationary distribution.
    SteadyState,
    /// Start in one ground sublevel.
    Ground(Sub),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamOptions {
    /// Gaussian timing jitter applied to each detection, ns.
    pub detector_jitter_sigma_ns: f64,
    pub start: StreamStart,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            detector_jitter_sigma_ns: 0.0,
            start: StreamStart::SteadyState,
        }
    }
}

/// Stationary distribution of a 7×7 column-generator (null vector,
/// normalized). Used for the folded jump process.
pub fn stationary_distribution(gen: &[[f64; 7]; 7]) -> Result<[f64; 7], PhotonStatsError> {
    // Solve G·p = 0 with Σp = 1 by replacing the last row.
    let n = 7;
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for row in 0..n - 1 {
        for col in 0..n {
            a[row * n + col] = gen[row][col];
        }
    }
    for col in 0..n {
        a[(n - 1) * n + col] = 1.0;
    }
    b[n - 1] = 1.0;
    let p = crate::linalg::solve_dense(a, b, n)
        .ok_or(PhotonStatsError::Photophysics(PhotophysicsError::NonUniqueSteadyState))?;
    let mut out = [0.0; 7];
    out.copy_from_slice(&p);
    Ok(out)
}

/// Expected detected count rate (1/ns) of the CW stream: collection
/// efficiency times the stationary spontaneous-emission flux, plus any
/// background rate.
pub fn expected_count_rate_per_ns(model: &RateModel) -> Result<f64, PhotonStatsError> {
    let gen = model.folded_generator();
    let p = stationary_distribution(&gen)?;
    let flux: f64 = model
        .folded_channels()
        .iter()
        .filter(|c| c.radiative)
        .map(|c| c.rate_per_ns * p[c.src])
        .sum();
    Ok(model.collection_efficiency * flux + model.background_rate_per_ns)
}

/// Exact-time kinetic Monte Carlo over the folded jump process. Radiative
/// decays are detected with the collection efficiency; background counts
/// arrive as an independent Poisson stream. Identical seeds give
/// bit-identical records.
pub fn simulate_photon_stream(
    model: &RateModel,
    duration_ns: f64,
    seed: u64,
    options: &StreamOptions,
) -> Result<PhotonRecord, PhotonStatsError> {
    if !(duration_ns > 0.0) {
        return Err(PhotonStatsError::InvalidInput("duration must be positive"));
    }
    let gen = model.folded_generator();
    let mut rng = Rng::new(seed);

    // Per-state channel table for the jump loop.
    let channels = model.folded_channels();
    let mut per_state: [Vec<&crate::photophysics::JumpChannel>; 7] = Default::default();
    for c in &channels {
        per_state[c.src].push(c);
    }
    let exit_rates: [f64; 7] = core::array::from_fn(|s| {
        per_state[s].iter().map(|c| c.rate_per_ns).sum()
    });

    let mut state: usize = match options.start {
        StreamStart::SteadyState => {
            let p = stationary_distribution(&gen)?;
            let mut u = rng.uniform();
            let mut chosen = 6;
            for (i, &pi) in p.iter().enumerate() {
                if u < pi {
                    chosen = i;
                    break;
                }
                u -= pi;
            }
            chosen
        }
        StreamStart::Ground(s) => s.index(),
    };

    let eta = model.collection_efficiency;
    let mut timestamps: Vec<f64> = Vec::new();
    let mut occupancy = [0.0; 7];
    let mut t = 0.0;
    loop {
        let exit_rate = exit_rates[state];
        if exit_rate <= 0.0 {
            return Err(PhotonStatsError::Deadlock { state });
        }
        let dwell = rng.exponential(exit_rate);
        let t_next = t + dwell;
        if t_next >= duration_ns {
            occupancy[state] += duration_ns - t;
            break;
        }
        occupancy[state] += dwell;

        // Pick the channel proportional to its rate.
        let mut u = rng.uniform() * exit_rate;
        let list = &per_state[state];
        let mut chosen = list[list.len() - 1];
        for c in list.iter() {
            if u < c.rate_per_ns {
                chosen = c;
                break;
            }
            u -= c.rate_per_ns;
        }

        if chosen.radiative && (eta >= 1.0 || rng.uniform() < eta) {
            timestamps.push(t_next);
        }
        state = chosen.dest;
        t = t_next;
    }

    if model.background_rate_per_ns > 0.0 {
        let mut tb = rng.exponential(model.background_rate_per_ns);
        while tb < duration_ns {
            timestamps.push(tb);
            tb += rng.exponential(model.background_rate_per_ns);
        }
        timestamps.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    }

    if options.detector_jitter_sigma_ns > 0.0 {
        for ts in timestamps.iter_mut() {
            *ts += options.detector_jitter_sigma_ns * rng.normal();
        }
        timestamps.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        timestamps.retain(|&ts| ts >= 0.0 && ts <= duration_ns);
    }

    for o in occupancy.iter_mut() {
        *o /= duration_ns;
    }
    Ok(PhotonRecord {
        timestamps_ns: timestamps,
        total_duration_ns: duration_ns,
        seed,
        state_occupancy: occupancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G2Mode {
    /// All ordered pairs within the correlation window (default; keeps the
    /// long-delay bunching visible).
    Full,
    /// Only the next photon after each start.
    StartStop,
}

/// Normalized g²(τ) estimate with per-bin Poisson errors.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Histogram {
    /// Bin centers, ns.
    pub tau_ns: Vec<f64>,
    pub g2: Vec<f64>,
    pub sigma: Vec<f64>,
    pub coincidences: Vec<u64>,
    pub bin_ns: f64,
    /// Fewer than 100 coincidences in total.
    pub low_counts_warning: bool,
}

/// Coincidence histogram over photon pairs, normalized by the uncorrelated
/// pair rate so that g² → 1 at large delay.
pub fn g2_histogram(
    record: &PhotonRecord,
    bin_ns: f64,
    max_tau_ns: f64,
    mode: G2Mode,
) -> Result<G2Histogram, PhotonStatsError> {
    if record.timestamps_ns.is_empty() {
        return Err(PhotonStatsError::EmptyRecord);
    }
    if !(bin_ns > 0.0 && max_tau_ns > bin_ns) {
        return Err(PhotonStatsError::InvalidInput(
            "need bin > 0 and max_tau > bin",
        ));
    }
    let ts = &record.timestamps_ns;
    let n_bins = (max_tau_ns / bin_ns) as usize;
    let mut counts = vec![0u64; n_bins];
    match mode {
        G2Mode::Full => {
            for i in 0..ts.len() {
                for j in i + 1..ts.len() {
                    let dt = ts[j] - ts[i];
                    if dt >= max_tau_ns {
                        break;
                    }
                    counts[(dt / bin_ns) as usize] += 1;
                }
            }
        }
        G2Mode::StartStop => {
            for i in 0..ts.len() - 1 {
                let dt = ts[i + 1] - ts[i];
                if dt < max_tau_ns {
                    counts[(dt / bin_ns) as usize] += 1;
                }
            }
        }
    }

    let rate = ts.len() as f64 / record.total_duration_ns;
    let mut tau = Vec::with_capacity(n_bins);
    let mut g2 = Vec::with_capacity(n_bins);
    let mut sigma = Vec::with_capacity(n_bins);
    for (k, &c) in counts.iter().enumerate() {
        let center = (k as f64 + 0.5) * bin_ns;
        // Expected uncorrelated ordered pairs in this bin.
        let denom = rate * rate * (record.total_duration_ns - center).max(0.0) * bin_ns;
        tau.push(center);
        if denom > 0.0 {
            g2.push(c as f64 / denom);
            sigma.push(fm::sqrt(c.max(1) as f64) / denom);
        } else {
            g2.push(0.0);
            sigma.push(0.0);
        }
    }
    let total: u64 = counts.iter().sum();
    Ok(G2Histogram {
        tau_ns: tau,
        g2,
        sigma,
        coincidences: counts,
        bin_ns,
        low_counts_warning: total < 100,
    })
}

/// Parameters of the three-level g² model with Gaussian timing response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Params {
    /// Depth of the antibunching dip.
    pub g0: f64,
    /// Relative bunching amplitude.
    pub amplitude: f64,
    pub tau_anti_ns: f64,
    pub tau_bunch_ns: f64,
    /// Electronic coincidence shift.
    pub tau0_ns: f64,
    /// Total Gaussian timing σ (detector jitter ⊕ binning).
    pub sigma_total_ns: f64,
    /// Overall scale ensuring normalization to 1 at large delay.
    pub baseline_scale: f64,
}

impl G2Params {
    pub fn validate(&self) -> Result<(), PhotonStatsError> {
        if !(self.tau_anti_ns > 0.0 && self.tau_bunch_ns > 0.0) {
            return Err(PhotonStatsError::InvalidInput(
                "g2 time constants must be positive",
            ));
        }
        if !(self.sigma_total_ns >= 0.0) || !(self.g0 >= 0.0) {
            return Err(PhotonStatsError::InvalidInput(
                "sigma_total must be >= 0 and g0 >= 0",
            ));
        }
        Ok(())
    }
}

/// Two-sided exponential exp(−|t|/τ) convolved with a zero-mean Gaussian of
/// width σ, evaluated in closed form. The identity
/// exponent − arg² = −t²/(2σ²) keeps both half-terms finite everywhere.
fn exp_abs_gauss_conv(t: f64, tau: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return fm::exp(-t.abs() / tau);
    }
    half_conv(t, tau, sigma) + half_conv(-t, tau, sigma)
}

/// One-sided term ½·exp(σ²/2τ² − t/τ)·erfc((σ/τ − t/σ)/√2).
fn half_conv(t: f64, tau: f64, sigma: f64) -> f64 {
    let arg = (sigma / tau - t / sigma) / fm::SQRT_2;
    if arg >= 0.0 {
        0.5 * fm::erfcx(arg) * fm::exp(-t * t / (2.0 * sigma * sigma))
    } else {
        let e = sigma * sigma / (2.0 * tau * tau) - t / tau;
        0.5 * fm::exp(e) * fm::erfc(arg)
    }
}

/// One-sided decay Θ(t)·exp(−t/τ) convolved with a Gaussian of width σ
/// (pulsed-excitation reconvolution kernel).
pub fn exp_gauss_reconv(t: f64, tau: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return if t >= 0.0 { fm::exp(-t / tau) } else { 0.0 };
    }
    2.0 * half_conv(t, tau, sigma)
}

/// The g² fit model: baseline_scale · [1 − (1−g₀+A)·e^{−|τ−τ₀|/τ_anti} +
/// A·e^{−|τ−τ₀|/τ_bunch}], convolved with the Gaussian instrument response
/// of width σ_total.
pub fn g2_model(tau_ns: f64, p: &G2Params) -> f64 {
    let dt = tau_ns - p.tau0_ns;
    let anti = exp_abs_gauss_conv(dt, p.tau_anti_ns, p.sigma_total_ns);
    let bunch = exp_abs_gauss_conv(dt, p.tau_bunch_ns, p.sigma_total_ns);
    p.baseline_scale * (1.0 - (1.0 - p.g0 + p.amplitude) * anti + p.amplitude * bunch)
}

/// Total Gaussian timing width: √(2σ_det² + bin²/12) — detector jitter on
/// both photons of a pair plus the uniform binning error.
pub fn irf_sigma(sigma_detector_ns: f64, bin_ns: f64) -> f64 {
    fm::sqrt(2.0 * sigma_detector_ns * sigma_detector_ns + bin_ns * bin_ns / 12.0)
}

/// Result of a g² fit: parameter estimates plus the Monte-Carlo interval of
/// the zero-delay value.
#[derive(Debug, Clone)]
pub struct G2Fit {
    pub fit: FitResult,
    pub params: G2Params,
    /// Model value at τ = 0.
    pub g2_zero: f64,
    /// Central 68% interval of g²(0) from covariance draws.
    pub g2_zero_interval: (f64, f64),
}

/// Nonlinear least squares of the convolved g² model on a histogram, with a
/// free baseline scale, followed by a Monte-Carlo estimate of the g²(0)
/// uncertainty from the fit covariance.
pub fn fit_g2(
    histogram: &G2Histogram,
    init: &G2Params,
    n_mc: usize,
    seed: u64,
) -> Result<G2Fit, PhotonStatsError> {
    init.validate()?;
    let sigma_total = init.sigma_total_ns;
    let tau = histogram.tau_ns.clone();
    let model = move |p: &[f64]| -> Vec<f64> {
        let gp = G2Params {
            g0: p[0],
            amplitude: p[1],
            tau_anti_ns: p[2],
            tau_bunch_ns: p[3],
            tau0_ns: p[4],
            sigma_total_ns: sigma_total,
            baseline_scale: p[5],
        };
        tau.iter().map(|&t| g2_model(t, &gp)).collect()
    };
    let weights: Vec<f64> = histogram
        .sigma
        .iter()
        .map(|&s| 1.0 / (s * s).max(1e-300))
        .collect();
    let fit = least_squares(
        model,
        &histogram.g2,
        Some(&weights),
        &[
            init.g0,
            init.amplitude,
            init.tau_anti_ns,
            init.tau_bunch_ns,
            init.tau0_ns,
            init.baseline_scale,
        ],
        &[
            // g0 and A stay free: with a vanishing true dip or bunching
            // component, a hard zero bound would stall the optimizer on the
            // transform boundary.
            Bound::Free,
            Bound::Free,
            Bound::Min(0.0),
            Bound::Min(0.0),
            Bound::Free,
            Bound::Min(0.0),
        ],
        &["g0", "amplitude", "tau_anti", "tau_bunch", "tau0", "baseline_scale"],
        &LeastSquaresOptions::default(),
    )?;
    if !fit.converged {
        return Err(PhotonStatsError::FitDidNotConverge {
            residual_norm: fit.residual_norm,
        });
    }
    let as_params = |p: &[f64]| G2Params {
        g0: p[0],
        amplitude: p[1],
        tau_anti_ns: p[2],
        tau_bunch_ns: p[3],
        tau0_ns: p[4],
        sigma_total_ns: sigma_total,
        baseline_scale: p[5],
    };
    let params = as_params(&fit.params);
    let g2_zero = g2_model(0.0, &params);
    let interval = monte_carlo_uncertainty(
        &fit,
        |p| {
            let gp = as_params(p);
            if gp.tau_anti_ns <= 0.0 || gp.tau_bunch_ns <= 0.0 {
                return g2_zero;
            }
            g2_model(0.0, &gp)
        },
        n_mc,
        seed,
    )?;
    Ok(G2Fit {
        fit,
        params,
        g2_zero,
        g2_zero_interval: (interval.lo, interval.hi),
    })
}

// ---------------------------------------------------------------------------
// TCSPC

/// Arrival-time histogram from pulsed excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct TcspcHistogram {
    /// Bin centers, ns (time after the nominal pulse trigger).
    pub t_ns: Vec<f64>,
    pub counts: Vec<u64>,
    pub bin_ns: f64,
    pub n_pulses: u64,
    /// Nominal excitation time inside the window (pre-trigger margin).
    pub t0_ns: f64,
}

/// Simulate a TCSPC measurement: each pulse excites one of the three
/// excited sublevels with probability `excitation_prob` and branching
/// `excitation`; the arrival time is an exponential draw at that sublevel's
/// total decay rate, detected through the radiative branching and the
/// collection efficiency, then smeared by the Gaussian IRF.
#[allow(clippy::too_many_arguments)]
pub fn simulate_tcspc(
    params: &PhotophysicsParams,
    excitation: [f64; 3],
    pulse_period_ns: f64,
    n_pulses: u64,
    excitation_prob: f64,
    irf_sigma_ns: f64,
    bin_ns: f64,
    seed: u64,
) -> Result<TcspcHistogram, PhotonStatsError> {
    let lifetimes = params.sublevel_lifetimes_ns();
    let longest = lifetimes.iter().cloned().fold(0.0_f64, f64::max);
    if pulse_period_ns < 10.0 * longest {
        return Err(PhotonStatsError::InvalidInput(
            "pulse period must be much longer than the longest lifetime",
        ));
    }
    if !(bin_ns > 0.0) {
        return Err(PhotonStatsError::InvalidInput("bin width must be positive"));
    }
    let exc_sum: f64 = excitation.iter().sum();
    if !(exc_sum > 0.0) {
        return Err(PhotonStatsError::InvalidInput(
            "excitation branching must not vanish",
        ));
    }

    let t0 = 5.0 * irf_sigma_ns.max(bin_ns);
    let n_bins = (pulse_period_ns / bin_ns) as usize;
    let mut counts = vec![0u64; n_bins];
    let mut rng = Rng::new(seed);
    for _ in 0..n_pulses {
        if excitation_prob < 1.0 && rng.uniform() >= excitation_prob {
            continue;
        }
        // Which sublevel the pulse populates.
        let mut u = rng.uniform() * exc_sum;
        let mut level = Sub::Z;
        for s in Sub::ALL {
            if u < excitation[s.index()] {
                level = s;
                break;
            }
            u -= excitation[s.index()];
        }
        let total_rate = params.excited_decay_rate_per_ns(level);
        let radiative_fraction = params.gamma_rad_per_ns
            * params.spin_overlap[level.index()].iter().sum::<f64>()
            / total_rate;
        if rng.uniform() >= radiative_fraction * params.collection_efficiency {
            continue;
        }
        let mut arrival = t0 + rng.exponential(total_rate);
        if irf_sigma_ns > 0.0 {
            arrival += irf_sigma_ns * rng.normal();
        }
        if arrival >= 0.0 && arrival < pulse_period_ns {
            counts[(arrival / bin_ns) as usize] += 1;
        }
    }
    let t_ns = (0..n_bins).map(|k| (k as f64 + 0.5) * bin_ns).collect();
    Ok(TcspcHistogram {
        t_ns,
        counts,
        bin_ns,
        n_pulses,
        t0_ns: t0,
    })
}

/// Bi-exponential reconvolution fit of a TCSPC histogram.
#[derive(Debug, Clone)]
pub struct BiexpFit {
    pub fit: FitResult,
    /// Short lifetime, ns.
    pub tau1_ns: f64,
    /// Long lifetime, ns.
    pub tau2_ns: f64,
    /// Normalized amplitudes (a₁ + a₂ = 1).
    pub amp1: f64,
    pub amp2: f64,
    /// Lifetimes within 5% of each other: effectively mono-exponential.
    pub collapsed: bool,
    pub residuals: Vec<f64>,
}

/// Poisson-weighted least squares of
/// IRF ⊛ (A₁·e^{−t/τ₁} + A₂·e^{−t/τ₂}) + background
/// against the histogram, with the excitation time t₀ free.
pub fn fit_biexponential_reconvolution(
    histogram: &TcspcHistogram,
    irf_sigma_ns: f64,
    init: (f64, f64, f64, f64),
) -> Result<BiexpFit, PhotonStatsError> {
    let data: Vec<f64> = histogram.counts.iter().map(|&c| c as f64).collect();
    if data.iter().sum::<f64>() <= 0.0 {
        return Err(PhotonStatsError::EmptyRecord);
    }
    let (tau1_0, a1_0, tau2_0, a2_0) = init;
    let peak = data.iter().cloned().fold(0.0_f64, f64::max);
    let t = histogram.t_ns.clone();
    let model = move |p: &[f64]| -> Vec<f64> {
        let (a1, tau1, a2, tau2, t0, bg) = (p[0], p[1], p[2], p[3], p[4], p[5]);
        t.iter()
            .map(|&ti| {
                a1 * exp_gauss_reconv(ti - t0, tau1, irf_sigma_ns)
                    + a2 * exp_gauss_reconv(ti - t0, tau2, irf_sigma_ns)
                    + bg
            })
            .collect()
    };
    let weights: Vec<f64> = data.iter().map(|&c| 1.0 / c.max(1.0)).collect();
    let fit = least_squares(
        &model,
        &data,
        Some(&weights),
        &[
            peak * a1_0 / (a1_0 + a2_0),
            tau1_0,
            peak * a2_0 / (a1_0 + a2_0),
            tau2_0,
            histogram.t0_ns,
            0.0,
        ],
        &[
            Bound::Free,
            Bound::Min(0.0),
            Bound::Free,
            Bound::Min(0.0),
            Bound::Free,
            Bound::Free,
        ],
        &["amp1", "tau1", "amp2", "tau2", "t0", "background"],
        &LeastSquaresOptions::default(),
    )?;

    // Two lifetimes within 5% (or a runaway amplitude-cancellation pair,
    // the degenerate valley of a mono-exponential truth): flag the collapse
    // and refit with a single component.
    let ratio = fit.params[3].max(fit.params[1]) / fit.params[3].min(fit.params[1]).max(1e-300);
    let cancelling = fit.params[0].min(fit.params[2]) < 0.0;
    if ratio < 1.05 || (cancelling && ratio < 2.0) {
        let t = histogram.t_ns.clone();
        let mono = move |p: &[f64]| -> Vec<f64> {
            t.iter()
                .map(|&ti| p[0] * exp_gauss_reconv(ti - p[2], p[1], irf_sigma_ns) + p[3])
                .collect()
        };
        let tau_mid = 0.5 * (tau1_0 + tau2_0);
        let mono_fit = least_squares(
            mono,
            &data,
            Some(&weights),
            &[peak, tau_mid, histogram.t0_ns, 0.0],
            &[Bound::Free, Bound::Min(0.0), Bound::Free, Bound::Free],
            &["amp", "tau", "t0", "background"],
            &LeastSquaresOptions::default(),
        )?;
        let tau = mono_fit.params[1];
        let residuals: Vec<f64> = {
            let (a, t0, bg) = (mono_fit.params[0], mono_fit.params[2], mono_fit.params[3]);
            histogram
                .t_ns
                .iter()
                .zip(data.iter())
                .map(|(&ti, &y)| a * exp_gauss_reconv(ti - t0, tau, irf_sigma_ns) + bg - y)
                .collect()
        };
        return Ok(BiexpFit {
            fit: mono_fit,
            tau1_ns: tau,
            tau2_ns: tau,
            amp1: 0.5,
            amp2: 0.5,
            collapsed: true,
            residuals,
        });
    }
    if !fit.converged {
        return Err(PhotonStatsError::FitDidNotConverge {
            residual_norm: fit.residual_norm,
        });
    }
    let predictions: Vec<f64> = {
        let (a1, tau1, a2, tau2, t0, bg) = (
            fit.params[0],
            fit.params[1],
            fit.params[2],
            fit.params[3],
            fit.params[4],
            fit.params[5],
        );
        histogram
            .t_ns
            .iter()
            .map(|&ti| {
                a1 * exp_gauss_reconv(ti - t0, tau1, irf_sigma_ns)
                    + a2 * exp_gauss_reconv(ti - t0, tau2, irf_sigma_ns)
                    + bg
            })
            .collect()
    };
    let residuals: Vec<f64> = predictions
        .iter()
        .zip(data.iter())
        .map(|(f, y)| f - y)
        .collect();

    // Order the components by lifetime; amplitudes are area-free weights.
    let (mut a1, mut tau1, mut a2, mut tau2) =
        (fit.params[0], fit.params[1], fit.params[2], fit.params[3]);
    if tau1 > tau2 {
        core::mem::swap(&mut tau1, &mut tau2);
        core::mem::swap(&mut a1, &mut a2);
    }
    let amp_sum = a1 + a2;
    let (amp1, amp2) = if amp_sum > 0.0 {
        (a1 / amp_sum, a2 / amp_sum)
    } else {
        (0.0, 0.0)
    };
    let collapsed = tau2 / tau1.max(1e-300) < 1.05;
    Ok(BiexpFit {
        fit,
        tau1_ns: tau1,
        tau2_ns: tau2,
        amp1,
        amp2,
        collapsed,
        residuals,
    })
}
