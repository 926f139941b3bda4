// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mollow::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "mollow", version, about = "Entanglement between filtered emission modes of a driven two-level system")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Single-mode photon number against filter detuning.
    Spectrum(Common),
    /// First- and second-order moment maps over the detuning grid.
    Grid(Common),
    /// Log-negativity and cross-correlation maps over the detuning grid.
    EntangleMap(Common),
    /// Log-negativity against the delay of the second filter.
    DelayStudy(Common),
    /// Log-negativity of a Hermite–Gauss filter pair.
    HgStudy(Common),
    /// Synthetic measurement and state reconstruction at one operating point.
    Tomo(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply to anything omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Sub::Spectrum(c) => (Command::Spectrum, c),
        Sub::Grid(c) => (Command::Grid, c),
        Sub::EntangleMap(c) => (Command::EntangleMap, c),
        Sub::DelayStudy(c) => (Command::DelayStudy, c),
        Sub::HgStudy(c) => (Command::HgStudy, c),
        Sub::Tomo(c) => (Command::Tomo, c),
    };
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = common.threads {
        cfg.threads = threads;
    }
    let cfg = cfg.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build().context("building thread pool")?;
    let written = pool.install(|| run(cmd, &cfg, &common.out))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
