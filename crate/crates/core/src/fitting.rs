// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Shared nonlinear least-squares engine (Levenberg-Marquardt with numeric
//! Jacobian) plus the stretched-exponential fit and Monte-Carlo uncertainty
//! propagation used across the spectroscopy modules.
//!
//! Bounds are handled by smooth internal transforms (logistic for two-sided,
//! exponential for one-sided) so the optimizer never clips: rates and
//! stretch exponents stay strictly inside their domains.

use crate::fm;
use crate::linalg::{cholesky, invert_symmetric, jacobi_eigen_sym, solve_dense};
use crate::rng::Rng;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    DimensionMismatch {
        data: usize,
        predictions: usize,
    },
    /// Initial parameters violate the supplied bounds.
    InitOutOfBounds {
        index: usize,
        value: f64,
    },
    NonFiniteModel,
    TooFewPoints {
        needed: usize,
        got: usize,
    },
    /// Covariance matrix unusable even after damping.
    BadCovariance,
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::DimensionMismatch { data, predictions } => {
                write!(f, "model returned {predictions} values for {data} data points")
            }
            FitError::InitOutOfBounds { index, value } => {
                write!(f, "initial parameter {index} = {value} outside its bounds")
            }
            FitError::NonFiniteModel => write!(f, "model produced non-finite predictions at the initial point"),
            FitError::TooFewPoints { needed, got } => {
                write!(f, "fit needs at least {needed} points, got {got}")
            }
            FitError::BadCovariance => write!(f, "covariance matrix is not usable"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FitError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitWarning {
    /// Normal equations were singular; a damped pseudo-inverse was used.
    SingularNormalEquations,
    IterationCapReached,
    /// Covariance had negative eigenvalues clipped to zero during sampling.
    CovarianceClipped,
    /// Fitted time constant lies more than 10× outside the sweep range.
    Extrapolation,
}

/// Box constraint for one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Free,
    Min(f64),
    Max(f64),
    Range(f64, f64),
    /// Parameter held at its initial value.
    Fixed,
}

impl Bound {
    fn contains(self, p: f64) -> bool {
        match self {
            Bound::Free | Bound::Fixed => true,
            Bound::Min(a) => p > a,
            Bound::Max(b) => p < b,
            Bound::Range(a, b) => p > a && p < b,
        }
    }

    /// External parameter from the unconstrained internal coordinate.
    fn to_external(self, theta: f64, init: f64) -> f64 {
        match self {
            Bound::Free => theta,
            Bound::Fixed => init,
            Bound::Min(a) => a + fm::exp(theta),
            Bound::Max(b) => b - fm::exp(theta),
            Bound::Range(a, b) => a + (b - a) * logistic(theta),
        }
    }

    fn to_internal(self, p: f64) -> f64 {
        match self {
            Bound::Free | Bound::Fixed => p,
            Bound::Min(a) => fm::ln(p - a),
            Bound::Max(b) => fm::ln(b - p),
            Bound::Range(a, b) => {
                let f = (p - a) / (b - a);
                fm::ln(f / (1.0 - f))
            }
        }
    }

    /// dp/dθ at the internal coordinate.
    fn slope(self, theta: f64) -> f64 {
        match self {
            Bound::Free => 1.0,
            Bound::Fixed => 0.0,
            Bound::Min(_) => fm::exp(theta),
            Bound::Max(_) => -fm::exp(theta),
            Bound::Range(a, b) => {
                let s = logistic(theta);
                (b - a) * s * (1.0 - s)
            }
        }
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + fm::exp(-x))
    } else {
        let e = fm::exp(x);
        e / (1.0 + e)
    }
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// Row-major n×n covariance in external parameter space.
    pub covariance: Vec<f64>,
    /// √(weighted χ²) at the optimum.
    pub residual_norm: f64,
    /// √(weighted χ²) at the initial point.
    pub initial_residual_norm: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_trace: Vec<f64>,
    pub warnings: Vec<FitWarning>,
    /// Central 68% Monte-Carlo intervals, when computed.
    pub mc_intervals: Option<Vec<(f64, f64)>>,
}

impl FitResult {
    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.param_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.params[i])
    }

    /// 1σ uncertainty of parameter `i` from the covariance diagonal.
    pub fn std_err(&self, i: usize) -> f64 {
        let n = self.params.len();
        fm::sqrt(self.covariance[i * n + i].max(0.0))
    }

    pub fn has_warning(&self, w: FitWarning) -> bool {
        self.warnings.contains(&w)
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquaresOptions {
    pub max_iterations: usize,
    /// Relative cost-change convergence threshold.
    pub cost_tol: f64,
    /// Normalized-gradient (∞-norm of residual/Jacobian-column cosines)
    /// convergence threshold.
    pub grad_tol: f64,
    /// Relative parameter-step convergence threshold.
    pub step_tol: f64,
}

impl Default for LeastSquaresOptions {
    fn default() -> Self {
        LeastSquaresOptions {
            max_iterations: 500,
            cost_tol: 1e-10,
            grad_tol: 1e-8,
            step_tol: 1e-12,
        }
    }
}

/// Central-difference Jacobian of `model` at `params`, row-major n×p, with
/// step max(1e-6, 1e-6·|p|) per parameter.
pub fn numeric_jacobian<F>(model: &F, params: &[f64], n_data: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    numeric_jacobian_bounded(model, params, n_data, None)
}

fn numeric_jacobian_bounded<F>(
    model: &F,
    params: &[f64],
    n_data: usize,
    bounds: Option<&[Bound]>,
) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let p = params.len();
    let mut jac = vec![0.0; n_data * p];
    let mut work = params.to_vec();
    for j in 0..p {
        if let Some(bs) = bounds {
            if matches!(bs[j], Bound::Fixed) {
                continue;
            }
        }
        let h = (1e-6_f64).max(1e-6 * params[j].abs());
        let (hi, lo) = match bounds.map(|bs| bs[j]) {
            Some(b) => {
                let up_ok = b.contains(params[j] + h);
                let dn_ok = b.contains(params[j] - h);
                match (up_ok, dn_ok) {
                    (true, true) => (params[j] + h, params[j] - h),
                    (true, false) => (params[j] + h, params[j]),
                    (false, true) => (params[j], params[j] - h),
                    (false, false) => (params[j], params[j]),
                }
            }
            None => (params[j] + h, params[j] - h),
        };
        if hi == lo {
            continue;
        }
        work[j] = hi;
        let f_hi = model(&work);
        work[j] = lo;
        let f_lo = model(&work);
        work[j] = params[j];
        let inv = 1.0 / (hi - lo);
        for i in 0..n_data {
            jac[i * p + j] = (f_hi[i] - f_lo[i]) * inv;
        }
    }
    jac
}

/// Levenberg-Marquardt weighted least squares.
///
/// `weights` are inverse variances (1/σ²); `None` means unweighted. The
/// covariance is σ̂²·(JᵀWJ)⁻¹ with σ̂² estimated from the residuals, so a
/// uniform rescaling of the weights does not change the reported errors.
pub fn least_squares<F>(
    model: F,
    data: &[f64],
    weights: Option<&[f64]>,
    init: &[f64],
    bounds: &[Bound],
    names: &[&str],
    opts: &LeastSquaresOptions,
) -> Result<FitResult, FitError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = data.len();
    let p = init.len();
    assert_eq!(bounds.len(), p, "one bound per parameter");
    assert_eq!(names.len(), p, "one name per parameter");
    if let Some(w) = weights {
        assert_eq!(w.len(), n, "one weight per data point");
    }
    for (j, (&v, b)) in init.iter().zip(bounds.iter()).enumerate() {
        if !b.contains(v) && !matches!(b, Bound::Fixed) {
            return Err(FitError::InitOutOfBounds { index: j, value: v });
        }
    }

    let sqrt_w: Vec<f64> = match weights {
        Some(w) => w.iter().map(|&wi| fm::sqrt(wi.max(0.0))).collect(),
        None => vec![1.0; n],
    };

    let residuals = |params: &[f64]| -> Result<Vec<f64>, FitError> {
        let pred = model(params);
        if pred.len() != n {
            return Err(FitError::DimensionMismatch {
                data: n,
                predictions: pred.len(),
            });
        }
        Ok(pred
            .iter()
            .zip(data.iter())
            .zip(sqrt_w.iter())
            .map(|((&f, &y), &sw)| (f - y) * sw)
            .collect())
    };
    let cost_of = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    // Internal coordinates; Fixed parameters keep their init value.
    let mut theta: Vec<f64> = init
        .iter()
        .zip(bounds.iter())
        .map(|(&v, b)| b.to_internal(v))
        .collect();
    let external = |theta: &[f64]| -> Vec<f64> {
        theta
            .iter()
            .zip(bounds.iter())
            .zip(init.iter())
            .map(|((&t, b), &i0)| b.to_external(t, i0))
            .collect()
    };

    let mut params = external(&theta);
    let mut r = residuals(&params)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteModel);
    }
    let mut cost = cost_of(&r);
    let initial_cost = cost;
    let mut cost_trace = vec![cost];
    let mut warnings: Vec<FitWarning> = Vec::new();

    let free: Vec<usize> = (0..p)
        .filter(|&j| !matches!(bounds[j], Bound::Fixed))
        .collect();
    let pf = free.len();

    let mut lambda = 1e-10;
    let mut n_iterations = 0;
    let mut converged = false;
    let mut jtj_free: Vec<f64> = vec![0.0; pf * pf];

    if pf > 0 {
        for _iter in 0..opts.max_iterations {
            n_iterations += 1;
            if cost <= 1e-300 {
                converged = true;
                break;
            }

            // Weighted Jacobian in external space, reduced to free params
            // and mapped to internal coordinates by the chain rule.
            let jac_ext = numeric_jacobian_bounded(
                &|pp: &[f64]| {
                    let pred = model(pp);
                    pred.iter()
                        .zip(sqrt_w.iter())
                        .map(|(&f, &sw)| f * sw)
                        .collect()
                },
                &params,
                n,
                Some(bounds),
            );
            let mut jac = vec![0.0; n * pf];
            for (jf, &j) in free.iter().enumerate() {
                let slope = bounds[j].slope(theta[j]);
                for i in 0..n {
                    jac[i * pf + jf] = jac_ext[i * p + j] * slope;
                }
            }

            // g = Jᵀ r, A = Jᵀ J
            let mut grad = vec![0.0; pf];
            for (i, &ri) in r.iter().enumerate() {
                for jf in 0..pf {
                    grad[jf] += jac[i * pf + jf] * ri;
                }
            }
            for a in 0..pf {
                for b in a..pf {
                    let mut s = 0.0;
                    for i in 0..n {
                        s += jac[i * pf + a] * jac[i * pf + b];
                    }
                    jtj_free[a * pf + b] = s;
                    jtj_free[b * pf + a] = s;
                }
            }

            // Scale-free gradient criterion: largest |cos| between the
            // residual and a Jacobian column. Invariant under uniform
            // rescaling of data or weights.
            let rnorm = fm::sqrt(cost);
            let mut gcos: f64 = 0.0;
            for jf in 0..pf {
                let colnorm = fm::sqrt(jtj_free[jf * pf + jf]);
                if colnorm > 0.0 {
                    gcos = gcos.max(grad[jf].abs() / (colnorm * rnorm));
                }
            }
            if gcos < opts.grad_tol {
                converged = true;
                break;
            }

            // Try damped steps until one reduces the cost.
            let mut accepted = false;
            loop {
                let mut a = jtj_free.clone();
                for d in 0..pf {
                    let scale = jtj_free[d * pf + d];
                    a[d * pf + d] += lambda * if scale > 0.0 { scale } else { 1.0 };
                }
                let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
                let delta = match solve_dense(a, rhs, pf) {
                    Some(d) => d,
                    None => {
                        // Heavily damped fallback.
                        if !warnings.contains(&FitWarning::SingularNormalEquations) {
                            warnings.push(FitWarning::SingularNormalEquations);
                        }
                        let mut a = jtj_free.clone();
                        let big = jtj_free
                            .iter()
                            .fold(0.0_f64, |m, v| m.max(v.abs()))
                            .max(1.0);
                        for d in 0..pf {
                            a[d * pf + d] += lambda.max(1.0) * big;
                        }
                        match solve_dense(a, grad.iter().map(|g| -g).collect(), pf) {
                            Some(d) => d,
                            None => break,
                        }
                    }
                };
                let mut theta_new = theta.clone();
                for (jf, &j) in free.iter().enumerate() {
                    theta_new[j] += delta[jf];
                }
                let params_new = external(&theta_new);
                let r_new = residuals(&params_new)?;
                let cost_new = if r_new.iter().all(|v| v.is_finite()) {
                    cost_of(&r_new)
                } else {
                    f64::INFINITY
                };
                if cost_new < cost {
                    let rel_drop = (cost - cost_new) / cost.max(1e-300);
                    let rel_step = free
                        .iter()
                        .enumerate()
                        .map(|(jf, &j)| delta[jf].abs() / theta[j].abs().max(1.0))
                        .fold(0.0_f64, f64::max);
                    theta = theta_new;
                    params = params_new;
                    r = r_new;
                    cost = cost_new;
                    cost_trace.push(cost);
                    lambda = (lambda / 8.0).max(1e-12);
                    accepted = true;
                    if rel_drop < opts.cost_tol || rel_step < opts.step_tol {
                        converged = true;
                    }
                    break;
                }
                lambda *= 8.0;
                if lambda > 1e14 {
                    break;
                }
            }
            if converged {
                break;
            }
            if !accepted {
                // No downhill direction left at maximum damping.
                converged = cost_trace.len() > 1;
                break;
            }
        }
    } else {
        converged = true;
    }

    if n_iterations >= opts.max_iterations && !converged {
        warnings.push(FitWarning::IterationCapReached);
    }

    // Covariance at the optimum: σ̂²(JᵀWJ)⁻¹ in external space.
    let mut covariance = vec![0.0; p * p];
    if pf > 0 {
        let jac_ext = numeric_jacobian_bounded(
            &|pp: &[f64]| {
                let pred = model(pp);
                pred.iter()
                    .zip(sqrt_w.iter())
                    .map(|(&f, &sw)| f * sw)
                    .collect()
            },
            &params,
            n,
            Some(bounds),
        );
        let mut jtj = vec![0.0; pf * pf];
        for a in 0..pf {
            for b in a..pf {
                let mut s = 0.0;
                for i in 0..n {
                    s += jac_ext[i * p + free[a]] * jac_ext[i * p + free[b]];
                }
                jtj[a * pf + b] = s;
                jtj[b * pf + a] = s;
            }
        }
        let dof = n.saturating_sub(pf);
        let sigma2 = if dof > 0 { cost / dof as f64 } else { 1.0 };
        let inv = match invert_symmetric(&jtj, pf) {
            Some(inv) => inv,
            None => {
                if !warnings.contains(&FitWarning::SingularNormalEquations) {
                    warnings.push(FitWarning::SingularNormalEquations);
                }
                let big = jtj.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
                let mut damped = jtj.clone();
                for d in 0..pf {
                    damped[d * pf + d] += 1e-10 * big;
                }
                invert_symmetric(&damped, pf).ok_or(FitError::BadCovariance)?
            }
        };
        for a in 0..pf {
            for b in 0..pf {
                covariance[free[a] * p + free[b]] = sigma2 * inv[a * pf + b];
            }
        }
    }

    Ok(FitResult {
        param_names: names.iter().map(|s| s.to_string()).collect(),
        params,
        covariance,
        residual_norm: fm::sqrt(cost),
        initial_residual_norm: fm::sqrt(initial_cost),
        n_iterations,
        converged,
        cost_trace,
        warnings,
        mc_intervals: None,
    })
}

/// Inverse-variance weights for photon-counting data: 1/max(counts, 1).
pub fn poisson_weights(counts: &[f64]) -> Vec<f64> {
    counts.iter().map(|&c| 1.0 / c.max(1.0)).collect()
}

/// Stretched-exponential fit f(τ) = A·exp{−(τ/T)^β} + y₀.
#[derive(Debug, Clone)]
pub struct StretchedExpFit {
    pub fit: FitResult,
    pub amplitude: f64,
    pub time_constant_ns: f64,
    pub stretch: f64,
    pub offset: f64,
    /// (signal − y₀)/A, the normalization convention used for display.
    pub normalized: Vec<f64>,
}

pub fn stretched_exp(t: f64, amplitude: f64, time_constant: f64, stretch: f64, offset: f64) -> f64 {
    amplitude * fm::exp(-fm::powf(t / time_constant, stretch)) + offset
}

/// Fit a stretched exponential to `(sweep, signal)`. `fix_beta` pins the
/// stretch exponent (β = 1 for T1 data). Requires ≥ 8 points.
pub fn fit_stretched_exponential(
    sweep: &[f64],
    signal: &[f64],
    sigma: Option<&[f64]>,
    fix_beta: Option<f64>,
) -> Result<StretchedExpFit, FitError> {
    if sweep.len() < 8 {
        return Err(FitError::TooFewPoints {
            needed: 8,
            got: sweep.len(),
        });
    }
    assert_eq!(sweep.len(), signal.len());

    let y_first = signal[0];
    let y_last = *signal.last().unwrap();
    let offset0 = y_last;
    let amp0 = if (y_first - y_last).abs() > 1e-300 {
        y_first - y_last
    } else {
        1.0
    };
    // Time where signal crosses offset + A/e.
    let target = offset0 + amp0 / core::f64::consts::E;
    let mut t0 = sweep[sweep.len() / 2];
    for (i, &y) in signal.iter().enumerate() {
        let crossed = if amp0 > 0.0 { y < target } else { y > target };
        if crossed {
            t0 = sweep[i].max(sweep[0] * 1.0 + 1e-12);
            break;
        }
    }
    let beta0 = fix_beta.unwrap_or(1.0);

    let init = [amp0, t0, beta0, offset0];
    let bounds = [
        Bound::Free,
        Bound::Min(0.0),
        if fix_beta.is_some() {
            Bound::Fixed
        } else {
            Bound::Range(0.05, 3.0)
        },
        Bound::Free,
    ];
    let weights: Option<Vec<f64>> =
        sigma.map(|s| s.iter().map(|&si| 1.0 / (si * si).max(1e-300)).collect());
    let sweep_owned = sweep.to_vec();
    let model = move |p: &[f64]| -> Vec<f64> {
        sweep_owned
            .iter()
            .map(|&t| stretched_exp(t, p[0], p[1], p[2], p[3]))
            .collect()
    };
    let mut fit = least_squares(
        model,
        signal,
        weights.as_deref(),
        &init,
        &bounds,
        &["amplitude", "time_constant", "stretch", "offset"],
        &LeastSquaresOptions::default(),
    )?;

    let time_constant = fit.params[1];
    let t_min = sweep.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = sweep.iter().cloned().fold(0.0_f64, f64::max);
    if time_constant > 10.0 * t_max || (t_min > 0.0 && time_constant < t_min / 10.0) {
        fit.warnings.push(FitWarning::Extrapolation);
    }

    let amplitude = fit.params[0];
    let offset = fit.params[3];
    let normalized = signal.iter().map(|&y| (y - offset) / amplitude).collect();
    Ok(StretchedExpFit {
        amplitude,
        time_constant_ns: time_constant,
        stretch: fit.params[2],
        offset,
        normalized,
        fit,
    })
}

/// Central 68% interval of `derived` under parameter draws from the fit
/// covariance (multivariate normal around the best fit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McInterval {
    pub lo: f64,
    pub hi: f64,
    /// True when negative covariance eigenvalues had to be clipped.
    pub clipped: bool,
}

pub fn monte_carlo_uncertainty<F>(
    fit: &FitResult,
    derived: F,
    n_draws: usize,
    seed: u64,
) -> Result<McInterval, FitError>
where
    F: Fn(&[f64]) -> f64,
{
    let p = fit.params.len();
    if fit.covariance.len() != p * p {
        return Err(FitError::BadCovariance);
    }
    if n_draws == 0 {
        let v = derived(&fit.params);
        return Ok(McInterval {
            lo: v,
            hi: v,
            clipped: false,
        });
    }
    let (factor, clipped) = match cholesky(&fit.covariance, p) {
        Some(l) => (l, false),
        None => {
            // Clip negative eigenvalues at zero: factor = V √Λ⁺.
            let (evals, vecs) = jacobi_eigen_sym(&fit.covariance, p);
            let mut clipped_any = false;
            let mut f = vec![0.0; p * p];
            for (k, &lam) in evals.iter().enumerate() {
                let lam_pos = if lam < 0.0 {
                    if lam < -1e-12 * evals.iter().fold(1.0_f64, |m, v| m.max(v.abs())) {
                        clipped_any = true;
                    }
                    0.0
                } else {
                    lam
                };
                let s = fm::sqrt(lam_pos);
                for i in 0..p {
                    f[i * p + k] = vecs[i * p + k] * s;
                }
            }
            (f, clipped_any)
        }
    };

    let mut rng = Rng::new(seed);
    let mut values: Vec<f64> = Vec::with_capacity(n_draws);
    let mut draw = vec![0.0; p];
    let mut z = vec![0.0; p];
    for _ in 0..n_draws {
        for zi in z.iter_mut() {
            *zi = rng.normal();
        }
        for i in 0..p {
            let mut v = fit.params[i];
            for k in 0..p {
                v += factor[i * p + k] * z[k];
            }
            draw[i] = v;
        }
        values.push(derived(&draw));
    }
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> f64 {
        let idx = (q * (n_draws as f64 - 1.0)) as usize;
        values[idx.min(n_draws - 1)]
    };
    Ok(McInterval {
        lo: quantile(0.16),
        hi: quantile(0.84),
        clipped,
    })
}

/// Serialize a fit result as a structured-text (JSON) report.
pub fn fit_report_json(fit: &FitResult, extra: &[(&str, f64)]) -> String {
    let mut s = String::from("{\n  \"parameters\": [\n");
    let n = fit.params.len();
    for i in 0..n {
        let (lo, hi) = fit
            .mc_intervals
            .as_ref()
            .map(|m| m[i])
            .unwrap_or((f64::NAN, f64::NAN));
        s.push_str(&format!(
            "    {{\"name\": \"{}\", \"value\": {:e}, \"sigma\": {:e}",
            fit.param_names[i],
            fit.params[i],
            fit.std_err(i)
        ));
        if lo.is_finite() {
            s.push_str(&format!(", \"mc_lo\": {lo:e}, \"mc_hi\": {hi:e}"));
        }
        s.push_str("},\n");
    }
    if n > 0 {
        s.truncate(s.len() - 2);
        s.push('\n');
    }
    s.push_str("  ],\n");
    for (k, v) in extra {
        s.push_str(&format!("  \"{k}\": {v:e},\n"));
    }
    s.push_str(&format!(
        "  \"residual_norm\": {:e},\n  \"iterations\": {},\n  \"converged\": {}\n}}\n",
        fit.residual_norm, fit.n_iterations, fit.converged
    ));
    s
}
