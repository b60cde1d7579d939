// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Build domain objects from the merged configuration.

use crate::config::{Config, ConfigError};
use molspin_core::photophysics::{
    calibrate_isc_scale, DecoherenceConfig, MwDriveTone, PhotophysicsParams, SpinTransition,
};
use molspin_core::zfs::{ZfsTensor, ZfsError};

#[derive(Debug)]
pub enum AssembleError {
    Config(ConfigError),
    Zfs(ZfsError),
    Invalid(String),
}

impl std::fmt::Display for AssembleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AssembleError::Config(e) => write!(f, "{e}"),
            AssembleError::Zfs(e) => write!(f, "{e}"),
            AssembleError::Invalid(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for AssembleError {}

impl From<ConfigError> for AssembleError {
    fn from(e: ConfigError) -> Self {
        AssembleError::Config(e)
    }
}

impl From<ZfsError> for AssembleError {
    fn from(e: ZfsError) -> Self {
        AssembleError::Zfs(e)
    }
}

pub fn ground_tensor(cfg: &Config) -> Result<ZfsTensor, AssembleError> {
    Ok(ZfsTensor::axial(cfg.f64("zfs", "d_mhz")?, cfg.f64("zfs", "e_mhz")?)?)
}

pub fn excited_tensor(cfg: &Config) -> Result<ZfsTensor, AssembleError> {
    Ok(ZfsTensor::axial(
        cfg.f64("excited_zfs", "d_mhz")?,
        cfg.f64("excited_zfs", "e_mhz")?,
    )?)
}

fn transition(name: &str) -> Result<SpinTransition, AssembleError> {
    match name.to_ascii_lowercase().as_str() {
        "zx" => Ok(SpinTransition::GroundZx),
        "zy" => Ok(SpinTransition::GroundZy),
        "xy" => Ok(SpinTransition::GroundXy),
        "none" | "off" => Err(AssembleError::Invalid("tone disabled".into())),
        other => Err(AssembleError::Invalid(format!(
            "unknown ground transition {other:?} (expected zx, zy or xy)"
        ))),
    }
}

/// Photophysics parameters from the `[photophysics]` and `[decoherence]`
/// sections. Rates come from the lifetime pair unless `gamma_rad_per_ns`
/// and `isc_scale_per_ns` are given explicitly.
pub fn photophysics(cfg: &Config) -> Result<PhotophysicsParams, AssembleError> {
    let sec = "photophysics";
    let isc_rel = [
        cfg.f64(sec, "isc_rel_x")?,
        cfg.f64(sec, "isc_rel_y")?,
        cfg.f64(sec, "isc_rel_z")?,
    ];
    let (gamma_rad, isc_scale) = match (cfg.raw(sec, "gamma_rad_per_ns"), cfg.raw(sec, "isc_scale_per_ns")) {
        (Some(_), Some(_)) => (
            cfg.f64(sec, "gamma_rad_per_ns")?,
            cfg.f64(sec, "isc_scale_per_ns")?,
        ),
        _ => calibrate_isc_scale(
            cfg.f64(sec, "tau_short_ns")?,
            cfg.f64(sec, "tau_long_ns")?,
            isc_rel,
        )
        .map_err(|e| AssembleError::Invalid(e.to_string()))?,
    };

    let mut mw_drive = Vec::new();
    for tone in ["mw1", "mw2", "mw3"] {
        let key = format!("{tone}_transition");
        if let Some(name) = cfg.raw(sec, &key) {
            match transition(name) {
                Ok(tr) => {
                    let rabi = cfg.f64(sec, &format!("{tone}_rabi_mhz"))?;
                    if rabi <= 0.0 {
                        continue;
                    }
                    mw_drive.push(MwDriveTone {
                        transition: tr,
                        rabi_mhz: rabi,
                        detuning_mhz: cfg.f64(sec, &format!("{tone}_detuning_mhz"))?,
                        phase_rad: 0.0,
                    });
                }
                Err(AssembleError::Invalid(ref m)) if m == "tone disabled" => {}
                Err(e) => return Err(e),
            }
        }
    }

    let params = PhotophysicsParams {
        gamma_rad_per_ns: gamma_rad,
        isc_scale_per_ns: isc_scale,
        isc_rel,
        singlet_rate_per_ns: cfg.f64(sec, "singlet_rate_per_ns")?,
        singlet_branching: [
            cfg.f64(sec, "singlet_branching_x")?,
            cfg.f64(sec, "singlet_branching_y")?,
            cfg.f64(sec, "singlet_branching_z")?,
        ],
        laser_rate_peak_per_ns: cfg.f64(sec, "laser_rate_peak_per_ns")?,
        laser_detuning_mhz: cfg.f64(sec, "laser_detuning_mhz")?,
        homogeneous_linewidth_mhz: cfg.f64(sec, "homogeneous_linewidth_mhz")?,
        optical_line_offsets_mhz: [
            cfg.f64(sec, "line_offset_x_mhz")?,
            cfg.f64(sec, "line_offset_y_mhz")?,
            cfg.f64(sec, "line_offset_z_mhz")?,
        ],
        spin_overlap: [
            [
                cfg.f64(sec, "overlap_x_x")?,
                cfg.f64(sec, "overlap_x_y")?,
                cfg.f64(sec, "overlap_x_z")?,
            ],
            [
                cfg.f64(sec, "overlap_y_x")?,
                cfg.f64(sec, "overlap_y_y")?,
                cfg.f64(sec, "overlap_y_z")?,
            ],
            [
                cfg.f64(sec, "overlap_z_x")?,
                cfg.f64(sec, "overlap_z_y")?,
                cfg.f64(sec, "overlap_z_z")?,
            ],
        ],
        mw_drive,
        decoherence: DecoherenceConfig {
            t2_star_ns: cfg.f64("decoherence", "t2_star_ns")?,
            hahn_t2_ns: cfg.f64("decoherence", "hahn_t2_ns")?,
            hahn_beta: cfg.f64("decoherence", "hahn_beta")?,
            xy8_t2_ns: cfg.f64("decoherence", "xy8_t2_ns")?,
            xy8_beta: cfg.f64("decoherence", "xy8_beta")?,
            t1_ns: cfg.f64("decoherence", "t1_ns")?,
        },
        collection_efficiency: cfg.f64(sec, "collection_efficiency")?,
        background_rate_per_ns: cfg.f64(sec, "background_rate_per_ns")?,
    };
    Ok(params)
}

pub fn grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start];
    }
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + i as f64 * step).collect()
}

/// Log-spaced deduplicated integers from 1 to `max`.
pub fn log_blocks(max: u32, points: usize) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    let lmax = (max as f64).ln();
    for i in 0..points {
        let v = ((lmax * i as f64 / (points - 1).max(1) as f64).exp()).round() as u32;
        let v = v.clamp(1, max);
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}
