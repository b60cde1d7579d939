// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(molspin_cli::run_cli(&args));
}
