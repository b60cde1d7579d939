// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Seeded property tests spanning module boundaries.

use molspin_core::fitting::numeric_jacobian;
use molspin_core::photon_stats::{exp_gauss_reconv, g2_model, G2Params};
use molspin_core::photophysics::PhotophysicsParams;
use molspin_core::rng::Rng;
use molspin_core::sequences::{fit_echo_curve, run_hahn};

/// Echo-envelope recovery holds across the (T, β) box, not just at the
/// reference values: random seeded draws over [1 µs, 100 ms] × [0.5, 2.5]
/// at 10⁴ shots per point refit within 5% on T and 0.1 on β.
#[test]
fn hahn_envelope_recovery_across_parameter_box() {
    let mut rng = Rng::new(2_026);
    for trial in 0..4u64 {
        // T uniform in log over [1 µs, 100 ms]; β uniform over [0.5, 2.5].
        let t2 = 1_000.0 * 10f64.powf(5.0 * rng.uniform());
        let beta = 0.5 + 2.0 * rng.uniform();
        let mut p = PhotophysicsParams::single_molecule_defaults();
        p.collection_efficiency = 1.0;
        p.decoherence.hahn_t2_ns = t2;
        p.decoherence.hahn_beta = beta;
        let grid: Vec<f64> = (0..30).map(|i| i as f64 * t2 * 6.0 / 29.0).collect();
        let curve = run_hahn(&p, &grid, 3.7, Some(10_000), 50 + trial).unwrap();
        let fit = fit_echo_curve(&curve, None).unwrap();
        assert!(
            (fit.time_constant_ns - t2).abs() <= 0.05 * t2,
            "trial {trial}: T {} vs {t2} (beta {beta})",
            fit.time_constant_ns
        );
        assert!(
            (fit.stretch - beta).abs() <= 0.1,
            "trial {trial}: beta {} vs {beta}",
            fit.stretch
        );
    }
}

/// The central-difference Jacobian agrees with a 10× finer difference on
/// the remaining fit models (g² and reconvolution kernels).
#[test]
fn jacobian_consistency_on_fit_models() {
    let taus: Vec<f64> = (0..60).map(|k| -300.0 + k as f64 * 10.0).collect();
    let taus_c = taus.clone();
    let g2 = move |p: &[f64]| -> Vec<f64> {
        let gp = G2Params {
            g0: p[0],
            amplitude: p[1],
            tau_anti_ns: p[2],
            tau_bunch_ns: p[3],
            tau0_ns: p[4],
            sigma_total_ns: 1.563,
            baseline_scale: p[5],
        };
        taus_c.iter().map(|&t| g2_model(t, &gp)).collect()
    };
    let params = [0.142, 0.9, 28.0, 245.0, 1.5, 1.0];
    check_jacobian(&g2, &params, taus.len());

    let ts: Vec<f64> = (0..80).map(|k| k as f64 * 0.5).collect();
    let ts_c = ts.clone();
    let reconv = move |p: &[f64]| -> Vec<f64> {
        ts_c.iter()
            .map(|&t| {
                p[0] * exp_gauss_reconv(t - p[4], p[1], 0.5)
                    + p[2] * exp_gauss_reconv(t - p[4], p[3], 0.5)
            })
            .collect()
    };
    let params = [0.4, 4.8, 0.6, 24.0, 2.5];
    check_jacobian(&reconv, &params, ts.len());
}

fn check_jacobian<F>(model: &F, params: &[f64], n: usize)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let jac = numeric_jacobian(model, params, n);
    let p_dim = params.len();
    let mut work = params.to_vec();
    for j in 0..p_dim {
        let h = 0.1 * (1e-6_f64).max(1e-6 * params[j].abs());
        work[j] = params[j] + h;
        let hi = model(&work);
        work[j] = params[j] - h;
        let lo = model(&work);
        work[j] = params[j];
        for i in 0..n {
            let fine = (hi[i] - lo[i]) / (2.0 * h);
            let coarse = jac[i * p_dim + j];
            let scale = fine.abs().max(1e-9);
            assert!(
                (coarse - fine).abs() <= 1e-4 * scale,
                "J[{i},{j}]: {coarse} vs {fine}"
            );
        }
    }
}
