// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::Command as Process;

use mollow::formats::{parse_density_matrix, read_moments};
use mollow::{run, Command, RunConfig};
use mollow_core::observables::fidelity;

const SMALL: &str = r#"
seed = 5

[grid]
delta1_mhz = { start = -32.32, stop = -20.0, points = 2 }
delta2_mhz = { start = 20.0, stop = 32.32, points = 2 }

[spectrum]
delta_mhz = { start = -40.0, stop = 40.0, points = 9 }

[delay]
delay_ns = { start = -50.0, stop = 50.0, points = 3 }

[hg]
widths = [20.0]
width_unit_ns = 1.0
delta1_mhz = { start = 0.0, stop = 0.0, points = 1 }

[pipeline]
shots = 40000
background = { phase_a = 0.3, b = 1.0, phase_b = 0.7 }
write_dataset = true

[tomography]
methods = ["ls"]
"#;

fn small() -> RunConfig {
    RunConfig::from_toml(SMALL).unwrap().resolve().unwrap()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|row| row.unwrap()[k].parse().unwrap()).collect()
}

#[test]
fn identical_seeds_give_identical_files() {
    let cfg = small();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for cmd in [Command::Tomo, Command::EntangleMap] {
        let fa = run(cmd, &cfg, a.path()).unwrap();
        let fb = run(cmd, &cfg, b.path()).unwrap();
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
        }
    }
    let mut other = cfg.clone();
    other.seed += 1;
    let c = tempfile::tempdir().unwrap();
    run(Command::Tomo, &other, c.path()).unwrap();
    assert_ne!(read(&a.path().join("moments_measured.csv")), read(&c.path().join("moments_measured.csv")));
}

#[test]
fn parallel_and_serial_runs_agree() {
    let cfg = small();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    one.install(|| run(Command::Tomo, &cfg, a.path())).unwrap();
    four.install(|| run(Command::Tomo, &cfg, b.path())).unwrap();
    for name in ["moments_measured.csv", "tomo_summary.csv", "rho_ls.json"] {
        assert_eq!(read(&a.path().join(name)), read(&b.path().join(name)), "{name}");
    }
}

#[test]
fn every_run_echoes_its_configuration() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let written = run(Command::DelayStudy, &cfg, dir.path()).unwrap();
    assert_eq!(written[0], dir.path().join("config.toml"));
    assert_eq!(RunConfig::from_toml(&read(&written[0])).unwrap(), cfg);
    assert_eq!(column(&dir.path().join("delay.csv"), "delay_ns"), vec![-50.0, 0.0, 50.0]);
}

#[test]
fn no_drive_gives_an_empty_spectrum() {
    let mut cfg = small();
    cfg.physics.omega_over_gamma = 0.0;
    let dir = tempfile::tempdir().unwrap();
    run(Command::Spectrum, &cfg, dir.path()).unwrap();
    let n = column(&dir.path().join("spectrum.csv"), "n_mean");
    assert_eq!(n.len(), 9);
    assert!(n.iter().all(|v| v.abs() < 1e-12), "{n:?}");
}

#[test]
fn spectrum_sweeps_every_drive_and_duration() {
    let mut cfg = small();
    cfg.spectrum.omega_over_gamma = vec![1.0, 4.04];
    cfg.spectrum.duration_ns = vec![50.0, 100.0];
    let dir = tempfile::tempdir().unwrap();
    run(Command::Spectrum, &cfg, dir.path()).unwrap();
    let n = column(&dir.path().join("spectrum.csv"), "n_mean");
    assert_eq!(n.len(), 4 * 9);
    assert!(n.iter().all(|v| *v > 0.0));
}

#[test]
fn grid_writes_one_map_per_moment() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let written = run(Command::Grid, &cfg, dir.path()).unwrap();
    assert_eq!(written.len(), 9);
    let n1 = column(&dir.path().join("moment_n1.csv"), "re");
    assert_eq!(n1.len(), 4);
    assert!(n1.iter().all(|v| *v > 0.0));
    assert!(column(&dir.path().join("moment_n1.csv"), "im").iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn entangle_map_reconstructions_track_the_direct_map() {
    let mut cfg = small();
    cfg.tomography.moments = 325;
    let dir = tempfile::tempdir().unwrap();
    run(Command::EntangleMap, &cfg, dir.path()).unwrap();
    let direct = column(&dir.path().join("en_direct.csv"), "en");
    let ls = column(&dir.path().join("en_ls.csv"), "en");
    for (d, l) in direct.iter().zip(&ls) {
        assert!((d - l).abs() < 0.01, "{d} vs {l}");
    }
    assert_eq!(column(&dir.path().join("g12.csv"), "g12").len(), 4);
}

#[test]
fn noiseless_tomography_recovers_the_state() {
    let mut cfg = small();
    cfg.tomography.moments = 325;
    cfg.tomography.sigma_source = mollow::config::SigmaSource::Exact;
    let dir = tempfile::tempdir().unwrap();
    run(Command::Tomo, &cfg, dir.path()).unwrap();
    let truth = parse_density_matrix(&read(&dir.path().join("rho_true.json"))).unwrap();
    let ls = parse_density_matrix(&read(&dir.path().join("rho_ls.json"))).unwrap();
    assert!(fidelity(&ls, &truth).unwrap() > 0.99);
    assert!(!dir.path().join("moments_measured.csv").exists());
    let exact = read_moments(fs::File::open(dir.path().join("moments_exact.csv")).unwrap()).unwrap();
    assert_eq!(exact.len(), 325);
}

#[test]
fn tomography_writes_the_dataset_and_fit() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    run(Command::Tomo, &cfg, dir.path()).unwrap();
    let ds = mollow::formats::read_dataset(fs::File::open(dir.path().join("dataset.csv")).unwrap()).unwrap();
    assert_eq!(ds.len(), 40000);
    assert_eq!(ds.seed(), 5);
    let info = read(&dir.path().join("tomo_info.csv"));
    assert!(info.contains("quantum_efficiency,0.043478"));
    assert!(info.contains("fit_b,"));
    assert_eq!(read_moments(fs::File::open(dir.path().join("moments_measured.csv")).unwrap()).unwrap().len(), 27);
}

#[test]
fn pipeline_rejects_moments_beyond_its_order() {
    let mut cfg = small();
    cfg.tomography.moments = 325;
    let dir = tempfile::tempdir().unwrap();
    let err = run(Command::Tomo, &cfg, dir.path()).unwrap_err();
    assert!(err.to_string().contains("sigma_source"), "{err}");
}

#[test]
fn binary_runs_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, SMALL).unwrap();
    let out = dir.path().join("out");
    let status = Process::new(env!("CARGO_BIN_EXE_mollow"))
        .args(["hg-study", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "9", "--threads", "1"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let echoed = RunConfig::from_toml(&read(&out.join("config.toml"))).unwrap();
    assert_eq!((echoed.seed, echoed.threads), (9, 1));
    assert_eq!(column(&out.join("hg.csv"), "width_ns"), vec![20.0]);

    fs::write(&config, "[physics]\ngama_mhz = 8.0\n").unwrap();
    let bad = Process::new(env!("CARGO_BIN_EXE_mollow")).args(["spectrum", "--config"]).arg(&config).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("gama_mhz"));
}
