// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Batch front-end for the molspin simulator: recipes driven by plain-text
//! configuration files, reproducible by (recipe, config, seed), with CSV
//! and JSON outputs plus a run manifest.

pub mod assemble;
pub mod config;
pub mod output;
pub mod recipes;

use config::{Config, DEFAULT_CONFIG};
use std::path::PathBuf;

pub const USAGE: &str = "\
molspin — forward simulation and fitting for a molecular triplet spin qubit

USAGE:
    molspin <recipe> [--config <path>] [--out <dir>] [--seed <u64>]
    molspin validate [--config <path>]
    molspin --help | --version

RECIPES (outputs per recipe, written into --out):
    odmr              odmr.csv (mw_mhz, intensity)
    excitation        excitation.csv (offset_mhz, intensity)
    rabi              rabi.csv (tau_ns, signal, sigma) + rabi_fit.json
    hahn              hahn.csv (tau_ns, signal, sigma) + hahn_fit.json
    xy8               xy8.csv (tau_total_ns, signal, sigma) + xy8_fit.json
    t1                t1.csv (tau_ns, signal, sigma) + t1_fit.json
    g2-sim            photons.csv|photons.bin + g2_hist.csv (tau_ns, g2, sigma)
    g2-fit            g2_fit.json (reads [g2] input_histogram, else simulates)
    tcspc-sim         tcspc.csv (t_ns, counts)
    tcspc-fit         tcspc_fit.json + tcspc_residuals.csv
    epr-rotation      epr_rotation.csv (angle_deg, site, field_mt, transition_pair)
    dw-ratio          emission.csv (nm, intensity) + dw.json
    isotope-spectrum  molecules.csv + isotope.csv + triples_fit.json

Every run writes manifest.json (recipe, config hash, seed, output list).
Identical (recipe, config, seed) runs produce byte-identical CSV files.

CONFIGURATION:
    Plain-text sections with unit-suffixed keys:
        [zfs]
        d_mhz = 11159.7
        e_mhz = -540.9
    Values unset in the file fall back to built-in site-1 defaults.
    Any key may be overridden by an environment variable
    MOLSPIN_<SECTION>__<KEY>, e.g. MOLSPIN_ZFS__D_MHZ=11186.
    photons.bin uses little-endian unsigned 64-bit nanosecond counts.
";

pub struct CliRun {
    pub recipe: String,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

pub enum CliAction {
    Run(CliRun),
    Help,
    Version,
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn parse_args(args: &[String]) -> Result<CliAction, UsageError> {
    let mut recipe: Option<String> = None;
    let mut config_path = None;
    let mut out_dir = PathBuf::from(".");
    let mut seed = 1u64;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--help" | "-h" => return Ok(CliAction::Help),
            "--version" | "-V" => return Ok(CliAction::Version),
            "--config" => {
                let v = it
                    .next()
                    .ok_or_else(|| UsageError("--config needs a path".into()))?;
                config_path = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = it.next().ok_or_else(|| UsageError("--out needs a directory".into()))?;
                out_dir = PathBuf::from(v);
            }
            "--seed" => {
                let v = it.next().ok_or_else(|| UsageError("--seed needs a value".into()))?;
                seed = v
                    .parse()
                    .map_err(|_| UsageError(format!("--seed expects an unsigned integer, got {v:?}")))?;
            }
            other if other.starts_with('-') => {
                return Err(UsageError(format!("unknown flag {other:?}")));
            }
            other => {
                if recipe.is_some() {
                    return Err(UsageError(format!("unexpected extra argument {other:?}")));
                }
                recipe = Some(other.to_string());
            }
        }
    }
    let recipe = recipe.ok_or_else(|| UsageError("missing recipe".into()))?;
    Ok(CliAction::Run(CliRun {
        recipe,
        config_path,
        out_dir,
        seed,
    }))
}

pub fn load_config(path: Option<&std::path::Path>) -> Result<Config, config::ConfigError> {
    let mut cfg = Config::parse(DEFAULT_CONFIG)?;
    if let Some(path) = path {
        cfg.merge_file(path)?;
    }
    cfg.merge_env();
    Ok(cfg)
}

/// Exit codes: 0 success, 1 numerical failure, 2 configuration or usage.
pub fn run_cli(args: &[String]) -> i32 {
    let action = match parse_args(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{USAGE}");
            return 2;
        }
    };
    let run = match action {
        CliAction::Help => {
            println!("{USAGE}");
            return 0;
        }
        CliAction::Version => {
            println!("molspin {}", env!("CARGO_PKG_VERSION"));
            return 0;
        }
        CliAction::Run(run) => run,
    };

    let cfg = match load_config(run.config_path.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };

    if run.recipe == "validate" {
        let violations = recipes::validate(&cfg);
        println!("# effective configuration ({} keys)", cfg.canonical().lines().count());
        print!("{}", cfg.canonical());
        if violations.is_empty() {
            println!("# valid");
            return 0;
        }
        for v in &violations {
            eprintln!("violation: {v}");
        }
        return 2;
    }

    if !recipes::RECIPES.contains(&run.recipe.as_str()) {
        eprintln!(
            "error: unknown recipe {:?}; expected one of {:?} or validate",
            run.recipe,
            recipes::RECIPES
        );
        return 2;
    }

    match recipes::run(&run.recipe, &cfg, &run.out_dir, run.seed) {
        Ok(manifest) => match manifest.write(&run.out_dir) {
            Ok(path) => {
                println!(
                    "{}: wrote {} outputs, manifest {}",
                    run.recipe,
                    manifest.outputs.len(),
                    path.display()
                );
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Err(recipes::RecipeError::Assemble(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
