// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Output files: CSV tables, JSON fit reports and the run manifest. All
//! writes go through a temp file plus rename so a crashed run never leaves
//! a half-written output; identical runs produce byte-identical CSVs.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use molspin_core::fitting::FitResult;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// CSV with a header row; every cell uses the shortest round-trip float
/// representation so outputs are reproducible byte for byte.
pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> io::Result<()> {
    assert!(!columns.is_empty());
    let rows = columns[0].len();
    for col in columns {
        assert_eq!(col.len(), rows, "ragged CSV columns");
    }
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for r in 0..rows {
        for (c, col) in columns.iter().enumerate() {
            if c > 0 {
                text.push(',');
            }
            let _ = write!(text, "{}", col[r]);
        }
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Photon timestamps as little-endian 64-bit nanosecond counts.
pub fn write_photons_binary(path: &Path, timestamps_ns: &[f64]) -> io::Result<()> {
    let mut bytes = Vec::with_capacity(timestamps_ns.len() * 8);
    for &t in timestamps_ns {
        bytes.extend_from_slice(&(t.round() as u64).to_le_bytes());
    }
    write_atomic(path, &bytes)
}

pub fn read_photons_binary(path: &Path) -> io::Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect())
}

/// Read numeric CSV columns (header skipped).
pub fn read_csv(path: &Path, n_columns: usize) -> io::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut columns = vec![Vec::new(); n_columns];
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        for col in columns.iter_mut() {
            let field = fields.next().ok_or_else(|| {
                io::Error::new(io::ErrorKind::InvalidData, format!("short row {i}"))
            })?;
            let v: f64 = field.trim().parse().map_err(|_| {
                io::Error::new(io::ErrorKind::InvalidData, format!("bad number on row {i}"))
            })?;
            col.push(v);
        }
    }
    Ok(columns)
}

pub fn fit_json(fit: &FitResult, extra: &[(&str, f64)]) -> String {
    molspin_core::fitting::fit_report_json(fit, extra)
}

/// Time-domain trajectory in the documented column layout
/// (t_ns, p1..p7, fluor_rate).
pub fn write_trajectory_csv(
    path: &Path,
    trajectory: &[(f64, molspin_core::photophysics::SystemState)],
    params: &molspin_core::photophysics::PhotophysicsParams,
) -> io::Result<()> {
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); 9];
    for (t, state) in trajectory {
        columns[0].push(*t);
        for (i, p) in state.populations.iter().enumerate() {
            columns[1 + i].push(*p);
        }
        columns[8].push(molspin_core::photophysics::fluorescence_rate(state, params));
    }
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    write_csv(
        path,
        &["t_ns", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "fluor_rate"],
        &refs,
    )
}

/// Record of one recipe invocation.
pub struct Manifest {
    pub recipe: String,
    pub config_hash: String,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(recipe: &str, config_hash: &str, seed: u64) -> Self {
        Manifest {
            recipe: recipe.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            outputs: Vec::new(),
        }
    }

    pub fn add(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    /// Write `manifest.json`; refuses to record outputs that do not exist.
    pub fn write(&self, out_dir: &Path) -> io::Result<PathBuf> {
        for path in &self.outputs {
            if !path.exists() {
                return Err(io::Error::new(
                    io::ErrorKind::NotFound,
                    format!("listed output {} does not exist", path.display()),
                ));
            }
        }
        let unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut text = String::from("{\n");
        let _ = writeln!(text, "  \"recipe\": \"{}\",", self.recipe);
        let _ = writeln!(text, "  \"config_hash\": \"{}\",", self.config_hash);
        let _ = writeln!(text, "  \"seed\": {},", self.seed);
        let _ = writeln!(text, "  \"tool_version\": \"{}\",", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "  \"completed_unix_s\": {unix_s},");
        text.push_str("  \"outputs\": [\n");
        for (i, path) in self.outputs.iter().enumerate() {
            let name = path.file_name().unwrap_or_default().to_string_lossy();
            let _ = write!(text, "    \"{name}\"");
            text.push_str(if i + 1 < self.outputs.len() { ",\n" } else { "\n" });
        }
        text.push_str("  ]\n}\n");
        let path = out_dir.join("manifest.json");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use molspin_core::photophysics::{PhotophysicsParams, SystemState};

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("molspin_output_{name}_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn csv_round_trip() {
        let dir = tmp("csv");
        let path = dir.join("t.csv");
        let a = [1.0, 2.5, -3.0e-7];
        let b = [0.5, 0.25, 0.125];
        write_csv(&path, &["a", "b"], &[&a, &b]).unwrap();
        let cols = read_csv(&path, 2).unwrap();
        assert_eq!(cols[0], a.to_vec());
        assert_eq!(cols[1], b.to_vec());
    }

    #[test]
    fn photon_binary_round_trip() {
        let dir = tmp("photons");
        let path = dir.join("p.bin");
        let ts = [12.0, 9_001.0, 1.5e9];
        write_photons_binary(&path, &ts).unwrap();
        let back = read_photons_binary(&path).unwrap();
        assert_eq!(back, vec![12.0, 9_001.0, 1.5e9]);
        // Little-endian 64-bit nanosecond counts on disk.
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], &12u64.to_le_bytes());
    }

    #[test]
    fn trajectory_layout() {
        let dir = tmp("traj");
        let path = dir.join("traj.csv");
        let params = PhotophysicsParams::single_molecule_defaults();
        let state = SystemState::ground_mixed();
        write_trajectory_csv(&path, &[(0.0, state.clone()), (1.0, state)], &params).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t_ns,p1,p2,p3,p4,p5,p6,p7,fluor_rate\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn manifest_rejects_missing_outputs() {
        let dir = tmp("manifest");
        let mut m = Manifest::new("odmr", "deadbeef", 1);
        m.add(dir.join("not_written.csv"));
        assert!(m.write(&dir).is_err());
    }
}
