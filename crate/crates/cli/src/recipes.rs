// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! The experiment recipes behind `molspin <recipe>`.

use std::path::Path;

use crate::assemble::{self, AssembleError};
use crate::config::Config;
use crate::output::{self, Manifest};
use molspin_core::photon_stats::{
    fit_biexponential_reconvolution, fit_g2, g2_histogram, irf_sigma, simulate_photon_stream,
    simulate_tcspc, G2Histogram, G2Mode, G2Params, StreamOptions, StreamStart, TcspcHistogram,
};
use molspin_core::photophysics::{build_rate_model, PhotophysicsParams};
use molspin_core::sequences::{
    fit_echo_curve, fit_rabi_frequency, run_hahn, run_rabi, run_t1, run_xy8, ExperimentCurve,
};
use molspin_core::spectra::{
    debye_waller, excitation_spectrum, fit_lorentzian_triples, isotope_excitation_spectrum,
    odmr_spectrum, sample_isotope_ensemble, synth_emission_spectrum, IsotopeEnsembleSpec,
    MwAssist,
};
use molspin_core::zfs;

#[derive(Debug)]
pub enum RecipeError {
    Assemble(AssembleError),
    Io(std::io::Error),
    Numerical(String),
}

impl std::fmt::Display for RecipeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecipeError::Assemble(e) => write!(f, "{e}"),
            RecipeError::Io(e) => write!(f, "io error: {e}"),
            RecipeError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RecipeError {}

impl From<AssembleError> for RecipeError {
    fn from(e: AssembleError) -> Self {
        RecipeError::Assemble(e)
    }
}

impl From<crate::config::ConfigError> for RecipeError {
    fn from(e: crate::config::ConfigError) -> Self {
        RecipeError::Assemble(AssembleError::Config(e))
    }
}

impl From<std::io::Error> for RecipeError {
    fn from(e: std::io::Error) -> Self {
        RecipeError::Io(e)
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> RecipeError {
    RecipeError::Numerical(e.to_string())
}

pub const RECIPES: [&str; 13] = [
    "odmr",
    "excitation",
    "rabi",
    "hahn",
    "xy8",
    "t1",
    "g2-sim",
    "g2-fit",
    "tcspc-sim",
    "tcspc-fit",
    "epr-rotation",
    "dw-ratio",
    "isotope-spectrum",
];

pub fn run(
    recipe: &str,
    cfg: &Config,
    out_dir: &Path,
    seed: u64,
) -> Result<Manifest, RecipeError> {
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = Manifest::new(recipe, &cfg.hash(), seed);
    match recipe {
        "odmr" => odmr(cfg, out_dir, &mut manifest)?,
        "excitation" => excitation(cfg, out_dir, seed, &mut manifest)?,
        "rabi" => rabi(cfg, out_dir, seed, &mut manifest)?,
        "hahn" => hahn(cfg, out_dir, seed, &mut manifest)?,
        "xy8" => xy8(cfg, out_dir, seed, &mut manifest)?,
        "t1" => t1(cfg, out_dir, seed, &mut manifest)?,
        "g2-sim" => g2_sim(cfg, out_dir, seed, &mut manifest)?,
        "g2-fit" => g2_fit_recipe(cfg, out_dir, seed, &mut manifest)?,
        "tcspc-sim" => tcspc_sim(cfg, out_dir, seed, &mut manifest)?,
        "tcspc-fit" => tcspc_fit_recipe(cfg, out_dir, seed, &mut manifest)?,
        "epr-rotation" => epr_rotation(cfg, out_dir, &mut manifest)?,
        "dw-ratio" => dw_ratio(cfg, out_dir, &mut manifest)?,
        "isotope-spectrum" => isotope_spectrum(cfg, out_dir, seed, &mut manifest)?,
        other => {
            return Err(RecipeError::Numerical(format!(
                "unknown recipe {other:?}; expected one of {RECIPES:?}"
            )))
        }
    }
    Ok(manifest)
}

fn shots_option(shots: u64) -> Option<u64> {
    (shots > 0).then_some(shots)
}

fn mw_assist(name: &str) -> Result<MwAssist, RecipeError> {
    match name.to_ascii_lowercase().as_str() {
        "none" => Ok(MwAssist::None),
        "zx" => Ok(MwAssist::Zx),
        "zy" => Ok(MwAssist::Zy),
        "both" => Ok(MwAssist::Both),
        other => Err(RecipeError::Numerical(format!(
            "unknown mw_assist {other:?} (expected none, zx, zy or both)"
        ))),
    }
}

fn write_curve(
    path: &Path,
    sweep_name: &str,
    curve: &ExperimentCurve,
) -> Result<(), RecipeError> {
    output::write_csv(
        path,
        &[sweep_name, "signal", "sigma"],
        &[&curve.sweep, &curve.signal, &curve.sigma],
    )?;
    Ok(())
}

fn odmr(cfg: &Config, out: &Path, manifest: &mut Manifest) -> Result<(), RecipeError> {
    let tensor = assemble::ground_tensor(cfg)?;
    let params = assemble::photophysics(cfg)?;
    let grid = assemble::grid(
        cfg.f64("odmr", "f_start_mhz")?,
        cfg.f64("odmr", "f_stop_mhz")?,
        cfg.usize("odmr", "f_points")?,
    );
    let spec = odmr_spectrum(&tensor, &params, &grid, cfg.f64("odmr", "mw_rabi_khz")?)
        .map_err(numerical)?;
    let path = out.join("odmr.csv");
    output::write_csv(&path, &["mw_mhz", "intensity"], &[&spec.axis, &spec.intensity])?;
    manifest.add(path);
    Ok(())
}

fn excitation(
    cfg: &Config,
    out: &Path,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<(), RecipeError> {
    let params = assemble::photophysics(cfg)?;
    let grid = assemble::grid(
        cfg.f64("excitation", "f_start_mhz")?,
        cfg.f64("excitation", "f_stop_mhz")?,
        cfg.usize("excitation", "f_points")?,
    );
    let assist = mw_assist(&cfg.string("excitation", "mw_assist")?)?;
    let n_molecules = cfg.usize("excitation", "n_molecules")?;
    let offsets: Vec<f64> = if n_molecules == 0 {
        Vec::new()
    } else {
        let fwhm = cfg.f64("excitation", "inhomogeneous_fwhm_mhz")?;
        let mut rng = molspin_core::rng::Rng::new(seed);
        (0..n_molecules)
            .map(|_| fwhm / 2.354_820_045 * rng.normal())
            .collect()
    };
    let spec = excitation_spectrum(
        &params,
        &offsets,
        &grid,
        assist,
        cfg.f64("excitation", "mw_rabi_mhz")?,
    )
    .map_err(numerical)?;
    let path = out.join("excitation.csv");
    output::write_csv(
        &path,
        &["offset_mhz", "intensity"],
        &[&spec.axis, &spec.intensity],
    )?;
    manifest.add(path);
    Ok(())
}

fn rabi(cfg: &Config, out: &Path, seed: u64, manifest: &mut Manifest) -> Result<(), RecipeError> {
    let params = assemble::photophysics(cfg)?;
    let grid = assemble::grid(
        cfg.f64("rabi", "tau_start_ns")?,
        cfg.f64("rabi", "tau_stop_ns")?,
        cfg.usize("rabi", "tau_points")?,
    );
    let curve = run_rabi(
        &params,
        &grid,
        cfg.f64("rabi", "omega_mhz")?,
        shots_option(cfg.u64("rabi", "shots")?),
        seed,
    )
    .map_err(numerical)?;
    let path = out.join("rabi.csv");
    write_curve(&path, "tau_ns", &curve)?;
    manifest.add(path);
    let freq = fit_rabi_frequency(&curve).map_err(numerical)?;
    let report = format!("{{\n  \"fitted_rabi_mhz\": {freq}\n}}\n");
    let fit_path = out.join("rabi_fit.json");
    output::write_atomic(&fit_path, report.as_bytes())?;
    manifest.add(fit_path);
    Ok(())
}

fn echo_report(
    curve: &ExperimentCurve,
    out: &Path,
    stem: &str,
    sweep_name: &str,
    manifest: &mut Manifest,
    fix_beta: Option<f64>,
) -> Result<(), RecipeError> {
    let path = out.join(format!("{stem}.csv"));
    write_curve(&path, sweep_name, curve)?;
    manifest.add(path);
    let fit = fit_echo_curve(curve, fix_beta).map_err(numerical)?;
    let fit_path = out.join(format!("{stem}_fit.json"));
    output::write_atomic(&fit_path, output::fit_json(&fit.fit, &[]).as_bytes())?;
    manifest.add(fit_path);
    Ok(())
}

fn hahn(cfg: &Config, out: &Path, seed: u64, manifest: &mut Manifest) -> Result<(), RecipeError> {
    let params = assemble::photophysics(cfg)?;
    let grid = assemble::grid(
        cfg.f64("hahn", "tau_start_ns")?,
        cfg.f64("hahn", "tau_stop_ns")?,
        cfg.usize("hahn", "tau_points")?,
    );
    let curve = run_hahn(
        &params,
        &grid,
        cfg.f64("hahn", "omega_mhz")?,
        shots_option(cfg.u64("hahn", "shots")?),
        seed,
    )
    .map_err(numerical)?;
    echo_report(&curve, out, "hahn", "tau_ns", manifest, None)
}

fn xy8(cfg: &Config, out: &Path, seed: u64, manifest: &mut Manifest) -> Result<(), RecipeError> {
    let params = assemble::photophysics(cfg)?;
    let blocks = assemble::log_blocks(
        cfg.u64("xy8", "n_max")? as u32,
        cfg.usize("xy8", "n_points")?,
    );
    let curve = run_xy8(
        &params,
        &blocks,
        cfg.f64("xy8", "pulse_spacing_ns")?,
        cfg.f64("xy8", "omega_mhz")?,
        shots_option(cfg.u64("xy8", "shots")?),
        seed,
    )
    .map_err(numerical)?;
    echo_report(&curve, out, "xy8", "tau_total_ns", manifest, None)
}

fn t1(cfg: &Config, out: &Path, seed: u64, manifest: &mut Manifest) -> Result<(), RecipeError> {
    let params = assemble::photophysics(cfg)?;
    let grid = assemble::grid(
        cfg.f64("t1", "tau_start_ns")?,
        cfg.f64("t1", "tau_stop_ns")?,
        cfg.usize("t1", "tau_points")?,
    );
    let curve = run_t1(
        &params,
        &grid,
        cfg.f64("t1", "omega_mhz")?,
        shots_option(cfg.u64("t1", "shots")?),
        seed,
    )
    .map_err(numerical)?;
    echo_report(&curve, out, "t1", "tau_ns", manifest, Some(1.0))
}

fn g2_stream(cfg: &Config, seed: u64) -> Result<(PhotophysicsParams, G2Histogram, Vec<f64>), RecipeError> {
    let mut params = assemble::photophysics(cfg)?;
    params.collection_efficiency = cfg.f64("g2", "collection_efficiency")?;
    let model = build_rate_model(&params).map_err(numerical)?;
    let rate = molspin_core::photon_stats::expected_count_rate_per_ns(&model).map_err(numerical)?;
    let n_photons = cfg.f64("g2", "n_photons")?;
    let duration = n_photons / rate;
    let options = StreamOptions {
        detector_jitter_sigma_ns: cfg.f64("g2", "detector_jitter_ns")?,
        start: StreamStart::SteadyState,
    };
    let record = simulate_photon_stream(&model, duration, seed, &options).map_err(numerical)?;
    let mode = match cfg.string("g2", "estimator")?.as_str() {
        "startstop" | "start-stop" => G2Mode::StartStop,
        _ => G2Mode::Full,
    };
    let hist = g2_histogram(
        &record,
        cfg.f64("g2", "bin_ns")?,
        cfg.f64("g2", "max_tau_ns")?,
        mode,
    )
    .map_err(numerical)?;
    Ok((params, hist, record.timestamps_ns))
}

fn g2_sim(cfg: &Config, out: &Path, seed: u64, manifest: &mut Manifest) -> Result<(), RecipeError> {
    let (_params, hist, timestamps) = g2_stream(cfg, seed)?;
    match cfg.string("g2", "photon_format")?.as_str() {
        "binary" => {
            let path = out.join("photons.bin");
            output::write_photons_binary(&path, &timestamps)?;
            manifest.add(path);
        }
        _ => {
            let path = out.join("photons.csv");
            output::write_csv(&path, &["t_ns"], &[&timestamps])?;
            manifest.add(path);
        }
    }
    let path = out.join("g2_hist.csv");
    output::write_csv(
        &path,
        &["tau_ns", "g2", "sigma"],
        &[&hist.tau_ns, &hist.g2, &hist.sigma],
    )?;
    manifest.add(path);
    Ok(())
}

fn g2_fit_recipe(
    cfg: &Config,
    out: &Path,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<(), RecipeError> {
    let hist = match cfg.opt_string("g2", "input_histogram") {
        Some(path) => {
            let cols = output::read_csv(Path::new(&path), 3)?;
            let coincidences = vec![1_000; cols[0].len()];
            G2Histogram {
                tau_ns: cols[0].clone(),
                g2: cols[1].clone(),
                sigma: cols[2].clone(),
                coincidences,
                bin_ns: cfg.f64("g2", "bin_ns")?,
                low_counts_warning: false,
            }
        }
        None => g2_stream(cfg, seed)?.1,
    };
    // The full-pair estimator is symmetric in the delay sign; fitting the
    // mirrored histogram pins the coincidence shift and decouples it from
    // the dip depth.
    let hist = {
        let n = hist.tau_ns.len();
        let mut tau = Vec::with_capacity(2 * n);
        let mut g2 = Vec::with_capacity(2 * n);
        let mut sigma = Vec::with_capacity(2 * n);
        let mut coincidences = Vec::with_capacity(2 * n);
        for i in (0..n).rev() {
            tau.push(-hist.tau_ns[i]);
            g2.push(hist.g2[i]);
            sigma.push(hist.sigma[i]);
            coincidences.push(hist.coincidences[i]);
        }
        for i in 0..n {
            tau.push(hist.tau_ns[i]);
            g2.push(hist.g2[i]);
            sigma.push(hist.sigma[i]);
            coincidences.push(hist.coincidences[i]);
        }
        G2Histogram {
            tau_ns: tau,
            g2,
            sigma,
            coincidences,
            bin_ns: hist.bin_ns,
            low_counts_warning: hist.low_counts_warning,
        }
    };
    let sigma_total = irf_sigma(cfg.f64("g2", "detector_jitter_ns")?, cfg.f64("g2", "bin_ns")?);
    let init = G2Params {
        g0: cfg.f64("g2", "init_g0")?,
        amplitude: cfg.f64("g2", "init_amplitude")?,
        tau_anti_ns: cfg.f64("g2", "init_tau_anti_ns")?,
        tau_bunch_ns: cfg.f64("g2", "init_tau_bunch_ns")?,
        tau0_ns: cfg.f64("g2", "init_tau0_ns")?,
        sigma_total_ns: sigma_total,
        baseline_scale: 1.0,
    };
    let fitted = fit_g2(&hist, &init, cfg.usize("g2", "n_mc")?, seed).map_err(numerical)?;
    let report = output::fit_json(
        &fitted.fit,
        &[
            ("sigma_total_ns", sigma_total),
            ("g2_zero", fitted.g2_zero),
            ("g2_zero_lo", fitted.g2_zero_interval.0),
            ("g2_zero_hi", fitted.g2_zero_interval.1),
        ],
    );
    let path = out.join("g2_fit.json");
    output::write_atomic(&path, report.as_bytes())?;
    manifest.add(path);
    Ok(())
}

fn tcspc_run(cfg: &Config, seed: u64) -> Result<TcspcHistogram, RecipeError> {
    let mut params = assemble::photophysics(cfg)?;
    params.collection_efficiency = cfg.f64("tcspc", "collection_efficiency")?;
    simulate_tcspc(
        &params,
        [
            cfg.f64("tcspc", "excitation_x")?,
            cfg.f64("tcspc", "excitation_y")?,
            cfg.f64("tcspc", "excitation_z")?,
        ],
        cfg.f64("tcspc", "pulse_period_ns")?,
        cfg.u64("tcspc", "n_pulses")?,
        cfg.f64("tcspc", "excitation_prob")?,
        cfg.f64("tcspc", "irf_sigma_ns")?,
        cfg.f64("tcspc", "bin_ns")?,
        seed,
    )
    .map_err(numerical)
}

fn tcspc_sim(
    cfg: &Config,
    out: &Path,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<(), RecipeError> {
    let hist = tcspc_run(cfg, seed)?;
    let counts: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let path = out.join("tcspc.csv");
    output::write_csv(&path, &["t_ns", "counts"], &[&hist.t_ns, &counts])?;
    manifest.add(path);
    Ok(())
}

fn tcspc_fit_recipe(
    cfg: &Config,
    out: &Path,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<(), RecipeError> {
    let hist = match cfg.opt_string("tcspc", "input_histogram") {
        Some(path) => {
            let cols = output::read_csv(Path::new(&path), 2)?;
            TcspcHistogram {
                t_ns: cols[0].clone(),
                counts: cols[1].iter().map(|&v| v.max(0.0) as u64).collect(),
                bin_ns: cfg.f64("tcspc", "bin_ns")?,
                n_pulses: cfg.u64("tcspc", "n_pulses")?,
                t0_ns: 5.0 * cfg.f64("tcspc", "irf_sigma_ns")?.max(cfg.f64("tcspc", "bin_ns")?),
            }
        }
        None => tcspc_run(cfg, seed)?,
    };
    let fitted = fit_biexponential_reconvolution(
        &hist,
        cfg.f64("tcspc", "irf_sigma_ns")?,
        (
            cfg.f64("tcspc", "init_tau1_ns")?,
            cfg.f64("tcspc", "init_a1")?,
            cfg.f64("tcspc", "init_tau2_ns")?,
            cfg.f64("tcspc", "init_a2")?,
        ),
    )
    .map_err(numerical)?;
    let report = output::fit_json(
        &fitted.fit,
        &[
            ("tau1_ns", fitted.tau1_ns),
            ("tau2_ns", fitted.tau2_ns),
            ("amp1_normalized", fitted.amp1),
            ("amp2_normalized", fitted.amp2),
            ("collapsed", if fitted.collapsed { 1.0 } else { 0.0 }),
        ],
    );
    let path = out.join("tcspc_fit.json");
    output::write_atomic(&path, report.as_bytes())?;
    manifest.add(path);
    let residual_path = out.join("tcspc_residuals.csv");
    output::write_csv(
        &residual_path,
        &["t_ns", "residual"],
        &[&hist.t_ns, &fitted.residuals],
    )?;
    manifest.add(residual_path);
    Ok(())
}

fn epr_rotation(cfg: &Config, out: &Path, manifest: &mut Manifest) -> Result<(), RecipeError> {
    let tensor = assemble::ground_tensor(cfg)?;
    let angles = assemble::grid(
        cfg.f64("epr", "angle_start_deg")?,
        cfg.f64("epr", "angle_stop_deg")?,
        cfg.usize("epr", "angle_points")?,
    );
    let points = zfs::rotation_dispersion(
        &tensor,
        [
            cfg.f64("epr", "rotation_axis_x")?,
            cfg.f64("epr", "rotation_axis_y")?,
            cfg.f64("epr", "rotation_axis_z")?,
        ],
        [
            cfg.f64("epr", "field_dir_x")?,
            cfg.f64("epr", "field_dir_y")?,
            cfg.f64("epr", "field_dir_z")?,
        ],
        &angles,
        cfg.f64("epr", "site_tilt_deg")?,
        cfg.f64("epr", "g_iso")?,
        cfg.f64("epr", "mw_freq_mhz")?,
        (cfg.f64("epr", "b_min_mt")?, cfg.f64("epr", "b_max_mt")?),
        cfg.f64("epr", "grid_step_mt")?,
    )
    .map_err(numerical)?;

    let mut angle_col = Vec::new();
    let mut site_col = Vec::new();
    let mut field_col = Vec::new();
    let mut pair_col = Vec::new();
    for point in &points {
        for (site, fields) in [(1.0, &point.site1), (2.0, &point.site2)] {
            for r in fields {
                angle_col.push(point.angle_deg);
                site_col.push(site);
                field_col.push(r.field_mt);
                pair_col.push((r.pair.0 * 10 + r.pair.1 + 11) as f64);
            }
        }
    }
    let path = out.join("epr_rotation.csv");
    output::write_csv(
        &path,
        &["angle_deg", "site", "field_mt", "transition_pair"],
        &[&angle_col, &site_col, &field_col, &pair_col],
    )?;
    manifest.add(path);
    Ok(())
}

fn dw_ratio(cfg: &Config, out: &Path, manifest: &mut Manifest) -> Result<(), RecipeError> {
    let grid = assemble::grid(
        cfg.f64("dw", "grid_start_nm")?,
        cfg.f64("dw", "grid_stop_nm")?,
        cfg.usize("dw", "grid_points")?,
    );
    let window = (
        cfg.f64("dw", "zpl_window_lo_nm")?,
        cfg.f64("dw", "zpl_window_hi_nm")?,
    );
    let sideband_limit = cfg.f64("dw", "sideband_limit_nm")?;
    let spec = synth_emission_spectrum(
        &grid,
        cfg.f64("dw", "zpl_center_nm")?,
        cfg.f64("dw", "zpl_fwhm_nm")?,
        cfg.f64("dw", "zpl_weight")?,
        window,
        sideband_limit,
        cfg.f64("dw", "background_level")?,
    )
    .map_err(numerical)?;
    let ratio = debye_waller(&spec, window, sideband_limit, cfg.f64("dw", "background_max_nm")?)
        .map_err(numerical)?;
    let path = out.join("emission.csv");
    output::write_csv(&path, &["nm", "intensity"], &[&spec.axis, &spec.intensity])?;
    manifest.add(path);
    let report = format!("{{\n  \"debye_waller_ratio\": {ratio}\n}}\n");
    let ratio_path = out.join("dw.json");
    output::write_atomic(&ratio_path, report.as_bytes())?;
    manifest.add(ratio_path);
    Ok(())
}

fn isotope_spec(cfg: &Config) -> Result<IsotopeEnsembleSpec, RecipeError> {
    Ok(IsotopeEnsembleSpec {
        n_molecules: cfg.usize("isotope", "n_molecules")?,
        carbon_count: cfg.u64("isotope", "carbon_count")? as u32,
        c13_abundance: cfg.f64("isotope", "c13_abundance")?,
        inhomogeneous_fwhm_mhz: cfg.f64("isotope", "inhomogeneous_fwhm_mhz")?,
        triple_separations_mhz: (
            cfg.f64("isotope", "sep_xy_mhz")?,
            cfg.f64("isotope", "sep_xz_mhz")?,
        ),
        class_shifts_mhz: (0..5)
            .map(|k| cfg.f64("isotope", &format!("class_shift_{k}_mhz")))
            .collect::<Result<Vec<f64>, _>>()?,
    })
}

fn isotope_spectrum(
    cfg: &Config,
    out: &Path,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<(), RecipeError> {
    let spec = isotope_spec(cfg)?;
    let params = assemble::photophysics(cfg)?;
    let assist = mw_assist(&cfg.string("isotope", "mw_assist")?)?;
    let grid = assemble::grid(
        cfg.f64("isotope", "f_start_mhz")?,
        cfg.f64("isotope", "f_stop_mhz")?,
        cfg.usize("isotope", "f_points")?,
    );
    let molecules = sample_isotope_ensemble(&spec, seed).map_err(numerical)?;
    let n_c13: Vec<f64> = molecules.iter().map(|m| m.n_c13 as f64).collect();
    let offsets: Vec<f64> = molecules.iter().map(|m| m.offset_mhz).collect();
    let mol_path = out.join("molecules.csv");
    output::write_csv(&mol_path, &["n_c13", "offset_mhz"], &[&n_c13, &offsets])?;
    manifest.add(mol_path);

    let spectrum = isotope_excitation_spectrum(
        &spec,
        &params,
        &grid,
        assist,
        cfg.f64("isotope", "mw_rabi_mhz")?,
        cfg.f64("isotope", "line_fwhm_mhz")?,
        seed,
    )
    .map_err(numerical)?;
    let path = out.join("isotope.csv");
    output::write_csv(
        &path,
        &["offset_mhz", "intensity"],
        &[&spectrum.axis, &spectrum.intensity],
    )?;
    manifest.add(path);

    if cfg.string("isotope", "fit_triples")? == "true" {
        let centers: Vec<f64> = spec
            .class_shifts_mhz
            .iter()
            .map(|s| s - spec.triple_separations_mhz.0 / 2.0)
            .collect();
        let triples = fit_lorentzian_triples(
            &spectrum,
            spec.class_shifts_mhz.len(),
            spec.triple_separations_mhz,
            cfg.f64("isotope", "line_fwhm_mhz")?,
            Some(&centers),
        )
        .map_err(numerical)?;
        let mut extra: Vec<(String, f64)> = vec![
            ("sep_xy_mhz".to_string(), triples.separations_mhz.0),
            ("sep_xz_mhz".to_string(), triples.separations_mhz.1),
        ];
        for (i, t) in triples.triples.iter().enumerate() {
            extra.push((format!("triple_{i}_center_mhz"), t.center_mhz));
            extra.push((format!("triple_{i}_relative_area"), t.relative_area));
        }
        let extra_refs: Vec<(&str, f64)> =
            extra.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let report = output::fit_json(&triples.fit, &extra_refs);
        let fit_path = out.join("triples_fit.json");
        output::write_atomic(&fit_path, report.as_bytes())?;
        manifest.add(fit_path);
    }
    Ok(())
}

/// Check every type invariant reachable from the configuration without
/// running a recipe; returns the list of violations.
pub fn validate(cfg: &Config) -> Vec<String> {
    let mut violations = Vec::new();
    if let Err(e) = assemble::ground_tensor(cfg) {
        violations.push(format!("[zfs] {e}"));
    }
    if let Err(e) = assemble::excited_tensor(cfg) {
        violations.push(format!("[excited_zfs] {e}"));
    }
    match assemble::photophysics(cfg) {
        Ok(params) => {
            if let Err(e) = params.validate() {
                violations.push(format!("[photophysics] {e}"));
            } else if let Err(e) = build_rate_model(&params) {
                violations.push(format!("[photophysics] {e}"));
            }
        }
        Err(e) => violations.push(format!("[photophysics] {e}")),
    }
    match isotope_spec(cfg) {
        Ok(spec) => {
            if let Err(e) = spec.validate() {
                violations.push(format!("[isotope] {e}"));
            }
        }
        Err(e) => violations.push(format!("[isotope] {e}")),
    }
    if let Ok(w) = cfg.f64("dw", "zpl_weight") {
        if !(0.0 < w && w <= 1.0) {
            violations.push(format!("[dw] zpl_weight must lie in (0, 1], got {w}"));
        }
    }
    for (section, key) in [("epr", "mw_freq_mhz"), ("epr", "grid_step_mt")] {
        if let Ok(v) = cfg.f64(section, key) {
            if !(v > 0.0) {
                violations.push(format!("[{section}] {key} must be positive, got {v}"));
            }
        }
    }
    violations
}
