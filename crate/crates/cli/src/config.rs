// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Plain-text key/section configuration with explicit units in key names.
//!
//! Precedence: built-in defaults < config file < `MOLSPIN_<SECTION>__<KEY>`
//! environment variables. The effective (merged) configuration is what the
//! recipes read, what `validate` prints, and what the manifest hash covers.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse { line: usize, message: String },
    MissingKey { section: String, key: String },
    BadValue { section: String, key: String, value: String, expected: &'static str },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "config io error: {e}"),
            ConfigError::Parse { line, message } => {
                write!(f, "config parse error on line {line}: {message}")
            }
            ConfigError::MissingKey { section, key } => {
                write!(f, "missing required config key [{section}] {key}")
            }
            ConfigError::BadValue { section, key, value, expected } => write!(
                f,
                "config key [{section}] {key} = {value:?} is not a valid {expected}"
            ),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError::Io(e)
    }
}

/// Merged configuration: `(section, key) → value` strings.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<(String, String), String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    /// Overlay `text` onto this configuration.
    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = String::from("global");
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split(&['#', ';'][..]).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                    line: idx + 1,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            self.values.insert(
                (section.clone(), key.trim().to_ascii_lowercase()),
                value.trim().to_string(),
            );
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &std::path::Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)?;
        self.merge_text(&text)
    }

    /// Overlay `MOLSPIN_<SECTION>__<KEY>` environment variables.
    pub fn merge_env(&mut self) {
        for (name, value) in std::env::vars() {
            if let Some(rest) = name.strip_prefix("MOLSPIN_") {
                if let Some((section, key)) = rest.split_once("__") {
                    self.values.insert(
                        (section.to_ascii_lowercase(), key.to_ascii_lowercase()),
                        value,
                    );
                }
            }
        }
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_ascii_lowercase(), key.to_ascii_lowercase()))
            .map(|s| s.as_str())
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let value = self.raw(section, key).ok_or_else(|| ConfigError::MissingKey {
            section: section.into(),
            key: key.into(),
        })?;
        value.parse().map_err(|_| ConfigError::BadValue {
            section: section.into(),
            key: key.into(),
            value: value.into(),
            expected: "number",
        })
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<u64, ConfigError> {
        let value = self.raw(section, key).ok_or_else(|| ConfigError::MissingKey {
            section: section.into(),
            key: key.into(),
        })?;
        value.parse().map_err(|_| ConfigError::BadValue {
            section: section.into(),
            key: key.into(),
            value: value.into(),
            expected: "integer",
        })
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        Ok(self.u64(section, key)? as usize)
    }

    pub fn string(&self, section: &str, key: &str) -> Result<String, ConfigError> {
        self.raw(section, key)
            .map(|s| s.to_string())
            .ok_or_else(|| ConfigError::MissingKey {
                section: section.into(),
                key: key.into(),
            })
    }

    pub fn opt_string(&self, section: &str, key: &str) -> Option<String> {
        self.raw(section, key).map(|s| s.to_string())
    }

    /// Canonical text: sorted `section.key = value` lines.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for ((section, key), value) in &self.values {
            out.push_str(section);
            out.push('.');
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(value);
            out.push('\n');
        }
        out
    }

    /// FNV-1a hash of the canonicalized configuration, hex-encoded.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.canonical().bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Built-in defaults: annealed site-1 parameters with moderate sweep grids.
/// Shipped config files override the values that differ.
pub const DEFAULT_CONFIG: &str = r#"
[zfs]
d_mhz = 11159.7
e_mhz = -540.9

[excited_zfs]
d_mhz = -4190.5
e_mhz = 232.5

[photophysics]
tau_short_ns = 4.8
tau_long_ns = 24.0
singlet_rate_per_ns = 0.05
singlet_branching_x = 0.0005
singlet_branching_y = 0.0005
singlet_branching_z = 0.999
isc_rel_x = 0.009
isc_rel_y = 0.042
isc_rel_z = 0.949
laser_rate_peak_per_ns = 0.005
laser_detuning_mhz = 777.5
homogeneous_linewidth_mhz = 38.0
line_offset_x_mhz = -777.5
line_offset_y_mhz = 777.5
line_offset_z_mhz = 15342.5
overlap_x_x = 0.993
overlap_x_y = 0.003
overlap_x_z = 0.004
overlap_y_x = 0.004004004004004004
overlap_y_y = 0.977977977977978
overlap_y_z = 0.018018018018018018
overlap_z_x = 0.003
overlap_z_y = 0.019
overlap_z_z = 0.978
mw1_transition = zy
mw1_rabi_mhz = 0.58
mw1_detuning_mhz = 0
mw2_transition = zx
mw2_rabi_mhz = 0.58
mw2_detuning_mhz = 0
collection_efficiency = 0.01
background_rate_per_ns = 0.0

[decoherence]
t2_star_ns = 3000
hahn_t2_ns = 12200
hahn_beta = 1.7
xy8_t2_ns = 2200000
xy8_beta = 0.9
t1_ns = 21000000

[odmr]
f_start_mhz = 10300
f_stop_mhz = 11900
f_points = 1601
mw_rabi_khz = 40

[excitation]
f_start_mhz = -2500
f_stop_mhz = 2500
f_points = 1001
mw_assist = both
mw_rabi_mhz = 0.58
n_molecules = 0
inhomogeneous_fwhm_mhz = 3000

[rabi]
omega_mhz = 3.7
tau_start_ns = 0
tau_stop_ns = 4054
tau_points = 121
shots = 0

[hahn]
omega_mhz = 3.7
tau_start_ns = 0
tau_stop_ns = 46400
tau_points = 30
shots = 10000

[xy8]
omega_mhz = 3.7
pulse_spacing_ns = 1000
n_max = 2000
n_points = 20
shots = 10000

[t1]
omega_mhz = 3.7
tau_start_ns = 0
tau_stop_ns = 92000000
tau_points = 24
shots = 10000

[g2]
n_photons = 1000000
bin_ns = 5
max_tau_ns = 3000
detector_jitter_ns = 0.425
estimator = full
collection_efficiency = 1.0
photon_format = csv
n_mc = 1000
init_g0 = 0.05
init_amplitude = 2.0
init_tau_anti_ns = 20
init_tau_bunch_ns = 200
init_tau0_ns = 0

[tcspc]
pulse_period_ns = 400
n_pulses = 1000000
excitation_prob = 1.0
irf_sigma_ns = 0.5
bin_ns = 0.1
excitation_x = 0.0
excitation_y = 0.57
excitation_z = 0.43
collection_efficiency = 1.0
init_tau1_ns = 4.0
init_a1 = 0.5
init_tau2_ns = 20.0
init_a2 = 0.5

[epr]
mw_freq_mhz = 9700
b_min_mt = 0
b_max_mt = 900
grid_step_mt = 0.5
angle_start_deg = 0
angle_stop_deg = 180
angle_points = 91
rotation_axis_x = 1
rotation_axis_y = 0
rotation_axis_z = 0
field_dir_x = 0
field_dir_y = 0
field_dir_z = 1
site_tilt_deg = 2.5
g_iso = 2.0023

[dw]
grid_start_nm = 560
grid_stop_nm = 760
grid_points = 8001
zpl_center_nm = 595.0
zpl_fwhm_nm = 0.15
zpl_weight = 0.1947
zpl_window_lo_nm = 592
zpl_window_hi_nm = 598
sideband_limit_nm = 720
background_level = 0.02
background_max_nm = 590

[isotope]
n_molecules = 1000
carbon_count = 25
c13_abundance = 0.011
inhomogeneous_fwhm_mhz = 3000
sep_xy_mhz = 1555
sep_xz_mhz = 16120
class_shift_0_mhz = 0
class_shift_1_mhz = 5000
class_shift_2_mhz = 10000
class_shift_3_mhz = 17500
class_shift_4_mhz = 25000
line_fwhm_mhz = 180
mw_assist = both
mw_rabi_mhz = 0.58
fit_triples = true
f_start_mhz = -2000
f_stop_mhz = 42500
f_points = 1781
"#;
