// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! File formats.
//!
//! - Moment vectors: CSV with columns `m1,n1,m2,n2,re,im,sigma`.
//! - Density matrices: JSON `{"dims": [d1, d2], "entries": [[re, im], ...]}`
//!   with entries in row-major order.
//! - Shot datasets: CSV with `#`-prefixed `key=value` header lines (seed,
//!   n_added and any run parameters) followed by columns
//!   `shot_index,kind,re_s1,im_s1,re_s2,im_s2`, `kind` being `on` or `off`.
//! - Entanglement grids: CSV with columns `delta1_mhz,delta2_mhz,en,status`;
//!   points without a state have `en = NaN`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use mollow_core::observables::{MomentIndex, MomentVector};
use mollow_core::pipeline::{InterleavedDataset, NoiseModel};
use mollow_core::quantum::{CMatrix, DensityMatrix, HilbertSpace, C64};
use serde::{Deserialize, Serialize};

pub fn write_moments<W: Write>(out: W, m: &MomentVector) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m1", "n1", "m2", "n2", "re", "im", "sigma"])?;
    for (idx, v, s) in m.iter() {
        w.write_record([
            idx.m1.to_string(),
            idx.n1.to_string(),
            idx.m2.to_string(),
            idx.n2.to_string(),
            v.re.to_string(),
            v.im.to_string(),
            s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_moments<R: Read>(input: R) -> Result<MomentVector> {
    #[derive(Deserialize)]
    struct Row {
        m1: u32,
        n1: u32,
        m2: u32,
        n2: u32,
        re: f64,
        im: f64,
        sigma: f64,
    }
    let mut r = csv::Reader::from_reader(input);
    let (mut idx, mut vals, mut sig) = (Vec::new(), Vec::new(), Vec::new());
    for row in r.deserialize() {
        let row: Row = row?;
        idx.push(MomentIndex::new(row.m1, row.n1, row.m2, row.n2));
        vals.push(C64::new(row.re, row.im));
        sig.push(row.sigma);
    }
    Ok(MomentVector::new(idx, vals, sig)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixJson {
    dims: Vec<usize>,
    entries: Vec<[f64; 2]>,
}

pub fn density_matrix_json(rho: &DensityMatrix) -> Result<String> {
    let m = rho.matrix();
    let entries = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| [m[(i, j)].re, m[(i, j)].im])).collect();
    Ok(serde_json::to_string_pretty(&MatrixJson { dims: rho.space().dims().to_vec(), entries })?)
}

pub fn parse_density_matrix(text: &str) -> Result<DensityMatrix> {
    let parsed: MatrixJson = serde_json::from_str(text)?;
    let space = HilbertSpace::new(&parsed.dims)?;
    let d = space.total();
    if parsed.entries.len() != d * d {
        bail!("expected {} entries, found {}", d * d, parsed.entries.len());
    }
    let m = CMatrix::from_fn(d, d, |i, j| {
        let [re, im] = parsed.entries[i * d + j];
        C64::new(re, im)
    });
    Ok(DensityMatrix::new(space, m)?)
}

/// Writes `ds` with extra header entries.
pub fn write_dataset<W: Write>(out: W, ds: &InterleavedDataset, header: &[(&str, String)]) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "# seed={}", ds.seed())?;
    writeln!(out, "# n_added={}", ds.noise().n_added)?;
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shot_index", "kind", "re_s1", "im_s1", "re_s2", "im_s2"])?;
    for (i, (on, off)) in ds.on_shots().iter().zip(ds.off_shots()).enumerate() {
        for (kind, s) in [("on", on), ("off", off)] {
            w.write_record([
                i.to_string(),
                kind.to_string(),
                s[0].re.to_string(),
                s[0].im.to_string(),
                s[1].re.to_string(),
                s[1].im.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<InterleavedDataset> {
    let mut reader = BufReader::new(input);
    let (mut seed, mut n_added) = (None, None);
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        if let Some(h) = line.strip_prefix('#') {
            if let Some((k, v)) = h.trim().split_once('=') {
                match k.trim() {
                    "seed" => seed = Some(v.trim().parse::<u64>()?),
                    "n_added" => n_added = Some(v.trim().parse::<f64>()?),
                    _ => {}
                }
            }
        } else {
            body.push_str(&line);
            reader.read_to_string(&mut body)?;
            break;
        }
    }
    let seed = seed.context("dataset header lacks seed")?;
    let noise = NoiseModel::new(n_added.context("dataset header lacks n_added")?)?;

    #[derive(Deserialize)]
    struct Row {
        shot_index: usize,
        kind: String,
        re_s1: f64,
        im_s1: f64,
        re_s2: f64,
        im_s2: f64,
    }
    let mut on = Vec::new();
    let mut off = Vec::new();
    for row in csv::Reader::from_reader(body.as_bytes()).deserialize() {
        let row: Row = row?;
        let s = [C64::new(row.re_s1, row.im_s1), C64::new(row.re_s2, row.im_s2)];
        let target = match row.kind.as_str() {
            "on" => &mut on,
            "off" => &mut off,
            other => bail!("unknown shot kind {other:?}"),
        };
        if row.shot_index != target.len() {
            bail!("shot {} out of order", row.shot_index);
        }
        target.push(s);
    }
    Ok(InterleavedDataset::new(on, off, seed, noise)?)
}

/// Writes a CSV table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Formats a float for tables; non-finite values print as `NaN`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "NaN".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mollow_core::observables::enumerate_moments;
    use mollow_core::quantum::random_state;
    use rand::SeedableRng;

    fn state() -> DensityMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        random_state(HilbertSpace::new(&[3, 3]).unwrap(), 2, &mut rng).unwrap()
    }

    #[test]
    fn moments_round_trip() {
        let idx = enumerate_moments(2, Some(4), false);
        let exact = MomentVector::exact(&state(), &idx).unwrap();
        let m = MomentVector::new(idx.clone(), exact.values().to_vec(), (0..idx.len()).map(|k| k as f64 * 0.01).collect())
            .unwrap();
        let mut buf = Vec::new();
        write_moments(&mut buf, &m).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("m1,n1,m2,n2,re,im,sigma\n"));
        assert_eq!(read_moments(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn density_matrix_round_trip() {
        let rho = state();
        let text = density_matrix_json(&rho).unwrap();
        assert_eq!(parse_density_matrix(&text).unwrap(), rho);
        assert!(parse_density_matrix("{\"dims\":[2],\"entries\":[[1,0]]}").is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let ds = mollow_core::pipeline::synthesize_dataset(&state(), NoiseModel::new(11.0).unwrap(), 50, 9).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds, &[("gamma_mhz", "8".into())]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=9\n# n_added=11\n# gamma_mhz=8\nshot_index,kind,"));
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn nan_formatting() {
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(num(0.25), "0.25");
    }
}
