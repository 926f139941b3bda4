// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Runs a study and writes its files into an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use mollow_core::pipeline::InterleavedDataset;

use crate::config::{MethodName, RunConfig};
use crate::formats::{density_matrix_json, num, write_dataset, write_moments, write_table};
use crate::studies::{self, status_label};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Grid,
    EntangleMap,
    DelayStudy,
    HgStudy,
    Tomo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Grid => "grid",
            Command::EntangleMap => "entangle-map",
            Command::DelayStudy => "delay-study",
            Command::HgStudy => "hg-study",
            Command::Tomo => "tomo",
        }
    }
}

/// Runs `cmd` and returns the files written, `config.toml` first.
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let config_path = out.join("config.toml");
    fs::write(&config_path, cfg.to_toml()?)?;
    let mut written = vec![config_path];
    info!("running {} into {}", cmd.name(), out.display());
    match cmd {
        Command::Spectrum => spectrum(cfg, out, &mut written)?,
        Command::Grid => grid(cfg, out, &mut written)?,
        Command::EntangleMap => entangle_map(cfg, out, &mut written)?,
        Command::DelayStudy => delay(cfg, out, &mut written)?,
        Command::HgStudy => hg(cfg, out, &mut written)?,
        Command::Tomo => tomo(cfg, out, &mut written)?,
    }
    Ok(written)
}

fn table(out: &Path, name: &str, header: &[&str], rows: &[Vec<String>], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    write_table(&path, header, rows)?;
    written.push(path);
    Ok(())
}

fn spectrum(cfg: &RunConfig, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let rows: Vec<Vec<String>> = studies::spectrum(cfg)?
        .iter()
        .map(|r| vec![num(r.delta_mhz), num(r.omega_over_gamma), num(r.duration_ns), num(r.n_mean)])
        .collect();
    table(out, "spectrum.csv", &["delta_mhz", "omega_over_gamma", "duration_ns", "n_mean"], &rows, written)
}

const MOMENT_FILES: [&str; 8] = ["a1", "a2", "n1", "n2", "a1a1", "a2a2", "a1a2", "a2dag_a1"];

fn grid(cfg: &RunConfig, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let points = studies::moment_grid(cfg)?;
    for (k, name) in MOMENT_FILES.iter().enumerate() {
        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|p| vec![num(p.delta1_mhz), num(p.delta2_mhz), num(p.moments[k].re), num(p.moments[k].im)])
            .collect();
        table(out, &format!("moment_{name}.csv"), &["delta1_mhz", "delta2_mhz", "re", "im"], &rows, written)?;
    }
    Ok(())
}

fn entangle_map(cfg: &RunConfig, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let points = studies::entangle_map(cfg)?;
    let warned = points.iter().filter(|p| p.cutoff_warning).count();
    if warned > 0 {
        warn!("{warned} grid points exceed the Fock cutoff criterion");
    }
    let clamped = points.iter().filter(|p| p.non_positive).count();
    if clamped > 0 {
        warn!("{clamped} grid points produced a non-positive state and were clamped");
    }
    let header = ["delta1_mhz", "delta2_mhz", "en", "status"];
    let direct: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let status = match (p.non_positive, p.cutoff_warning) {
                (true, _) => "non_positive",
                (false, true) => "cutoff_warning",
                (false, false) => "ok",
            };
            vec![num(p.delta1_mhz), num(p.delta2_mhz), num(p.en), status.to_string()]
        })
        .collect();
    table(out, "en_direct.csv", &header, &direct, written)?;
    let g12: Vec<Vec<String>> =
        points.iter().map(|p| vec![num(p.delta1_mhz), num(p.delta2_mhz), num(p.g12)]).collect();
    table(out, "g12.csv", &["delta1_mhz", "delta2_mhz", "g12"], &g12, written)?;
    for (k, m) in cfg.grid.reconstruct.iter().enumerate() {
        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|p| {
                let e = &p.reconstructed[k];
                vec![num(p.delta1_mhz), num(p.delta2_mhz), num(e.log_negativity), status_label(e.status).to_string()]
            })
            .collect();
        table(out, &format!("en_{}.csv", m.label()), &header, &rows, written)?;
    }
    Ok(())
}

fn delay(cfg: &RunConfig, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let rows: Vec<Vec<String>> = studies::delay_study(cfg)?.iter().map(|r| vec![num(r.delay_ns), num(r.en)]).collect();
    table(out, "delay.csv", &["delay_ns", "en"], &rows, written)
}

fn hg(cfg: &RunConfig, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let rows: Vec<Vec<String>> = studies::hg_study(cfg)?
        .iter()
        .map(|r| {
            vec![
                num(r.width),
                num(r.width_ns),
                num(r.delta1_mhz),
                num(r.delta2_mhz),
                num(r.en),
                r.cutoff_warning.to_string(),
            ]
        })
        .collect();
    table(out, "hg.csv", &["width", "width_ns", "delta1_mhz", "delta2_mhz", "en", "cutoff_warning"], &rows, written)
}

fn tomo(cfg: &RunConfig, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let report = studies::tomo(cfg)?;
    let mut file = |name: &str, text: String| -> Result<()> {
        let path = out.join(name);
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    file("rho_true.json", density_matrix_json(&report.truth)?)?;
    for m in &report.methods {
        if let Some(rho) = &m.result.rho {
            file(&format!("rho_{}.json", m.method.label()), density_matrix_json(rho)?)?;
        }
    }
    let mut buf = Vec::new();
    write_moments(&mut buf, &report.exact)?;
    file("moments_exact.csv", String::from_utf8(buf)?)?;
    if let Some(measured) = &report.measured {
        let mut buf = Vec::new();
        write_moments(&mut buf, &measured.moments)?;
        file("moments_measured.csv", String::from_utf8(buf)?)?;
    }

    let mut rows = vec![vec![
        "direct".to_string(),
        "-".to_string(),
        "1".to_string(),
        num(report.truth_purity),
        num(report.direct_en),
        "NaN".to_string(),
        "NaN".to_string(),
        "0".to_string(),
    ]];
    for m in &report.methods {
        rows.push(vec![
            m.method.label().to_string(),
            status_label(Some(m.result.status)).to_string(),
            num(m.fidelity),
            num(m.purity),
            num(m.en),
            num(m.result.objective),
            num(m.result.constraint_residual),
            m.result.iterations.to_string(),
        ]);
    }
    table(
        out,
        "tomo_summary.csv",
        &["method", "status", "fidelity", "purity", "en", "objective", "constraint_residual", "iterations"],
        &rows,
        written,
    )?;

    let mut info_rows = vec![
        vec!["delta1_mhz".to_string(), num(report.delta_mhz[0])],
        vec!["delta2_mhz".to_string(), num(report.delta_mhz[1])],
        vec!["quantum_efficiency".to_string(), num(report.efficiency)],
    ];
    if let Some(measured) = &report.measured {
        info_rows.push(vec!["shots".to_string(), measured.shots.to_string()]);
        if let Some(fit) = &measured.background {
            for (k, v) in [("fit_a", fit.a), ("fit_phi_a", fit.phi_a), ("fit_b", fit.b), ("fit_phi_b", fit.phi_b), ("fit_residual", fit.residual)] {
                info_rows.push(vec![k.to_string(), num(v)]);
            }
        }
    }
    table(out, "tomo_info.csv", &["key", "value"], &info_rows, written)?;

    if cfg.pipeline.write_dataset {
        let ds = dataset(cfg, &report)?;
        let path = out.join("dataset.csv");
        let header = [
            ("gamma_mhz", num(cfg.physics.gamma_mhz)),
            ("omega_over_gamma", num(cfg.physics.omega_over_gamma)),
            ("delta1_mhz", num(report.delta_mhz[0])),
            ("delta2_mhz", num(report.delta_mhz[1])),
        ];
        write_dataset(fs::File::create(&path)?, &ds, &header)?;
        written.push(path);
    }
    for m in &report.methods {
        if m.method == MethodName::Cs && m.result.rho.is_none() {
            warn!("compressed sensing reported the data infeasible");
        }
    }
    Ok(())
}

/// The same shots the pipeline consumed, materialized.
fn dataset(cfg: &RunConfig, report: &studies::TomoReport) -> Result<InterleavedDataset> {
    let sampler = studies::sampler(cfg, &report.truth, report.delta_mhz)?;
    let mut on = Vec::with_capacity(cfg.pipeline.shots);
    let mut off = Vec::with_capacity(cfg.pipeline.shots);
    for i in 0..cfg.pipeline.shots as u64 {
        let (a, b) = sampler.shot(i)?;
        on.push(a);
        off.push(b);
    }
    Ok(InterleavedDataset::new(on, off, cfg.seed, sampler.noise())?)
}
