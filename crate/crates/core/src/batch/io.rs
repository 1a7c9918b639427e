use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainSpec, Field, Grid, Pair};

use super::SweepResult;

const HEADER: [&str; 18] = [
    "index",
    "lambda1",
    "lambda2",
    "beta",
    "method",
    "clause",
    "outside_theory",
    "converged",
    "energy",
    "residual_inf",
    "overlap",
    "fully_nontrivial",
    "semi_trivial",
    "constant",
    "positive",
    "sign_changing",
    "iterations",
    "error",
];

/// CSV summary, one row per tuple in input order. Floats use the shortest
/// round-trip representation, the same one the JSON reports use.
pub fn sweep_csv(result: &SweepResult, timing: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = HEADER.to_vec();
    if timing {
        header.push("wall_time");
    }
    w.write_record(&header)?;
    for (i, row) in result.rows.iter().enumerate() {
        let p = row.params;
        let mut rec = vec![i.to_string(), p.lambda1.to_string(), p.lambda2.to_string(), p.beta.to_string()];
        match &row.choice {
            Some(c) => rec.extend([c.method.to_string(), c.clause.clone()]),
            None => rec.extend([String::new(), String::new()]),
        }
        match &row.report {
            Some(r) => {
                let f = r.flags;
                rec.extend([
                    r.outside_theory.to_string(),
                    r.converged.to_string(),
                    r.energy.to_string(),
                    r.residual_inf.to_string(),
                    r.overlap.to_string(),
                    f.fully_nontrivial.to_string(),
                    f.semi_trivial.to_string(),
                    f.constant.to_string(),
                    f.positive.to_string(),
                    f.sign_changing.to_string(),
                    r.iterations.to_string(),
                ]);
            }
            None => rec.extend(std::iter::repeat(String::new()).take(11)),
        }
        rec.push(row.error.clone().unwrap_or_default());
        if timing {
            rec.push(row.wall_time.map(|t| t.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Metadata written next to raw field dumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub domain: DomainSpec,
    pub nodes: Vec<usize>,
    /// Always `"f64-le"`.
    pub dtype: String,
    /// Always `"row-major, axis 0 slowest"`.
    pub layout: String,
    pub files: Vec<String>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_raw(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn dump_components(grid: &Grid, comps: &[(&str, &[f64])], prefix: &Path) -> Result<FieldSidecar> {
    let mut files = Vec::new();
    for (name, values) in comps {
        let path = with_suffix(prefix, &format!(".{name}.f64"));
        write_raw(&path, values)?;
        files.push(path.file_name().expect("prefix has a file name").to_string_lossy().into_owned());
    }
    let sidecar = FieldSidecar {
        domain: grid.domain().clone(),
        nodes: grid.nodes_per_axis().to_vec(),
        dtype: "f64-le".into(),
        layout: "row-major, axis 0 slowest".into(),
        files,
    };
    fs::write(with_suffix(prefix, ".json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

/// Writes `<prefix>.u.f64`, `<prefix>.v.f64` and the sidecar `<prefix>.json`.
pub fn dump_fields(pair: &Pair, prefix: &Path) -> Result<FieldSidecar> {
    dump_components(pair.grid(), &[("u", pair.u.values()), ("v", pair.v.values())], prefix)
}

/// Writes `<prefix>.z.f64` and the sidecar `<prefix>.json`.
pub fn dump_scalar_field(z: &Field, prefix: &Path) -> Result<FieldSidecar> {
    dump_components(z.grid(), &[("z", z.values())], prefix)
}

/// Reads a dump written by [`dump_fields`].
pub fn load_fields(prefix: &Path) -> Result<Pair> {
    let sidecar: FieldSidecar = serde_json::from_str(&fs::read_to_string(with_suffix(prefix, ".json"))?)?;
    let grid = Grid::new(sidecar.domain.clone(), &sidecar.nodes)?;
    let dir = prefix.parent().unwrap_or(Path::new(""));
    let mut comps = Vec::new();
    for name in &sidecar.files {
        let bytes = fs::read(dir.join(name))?;
        if bytes.len() != grid.len() * 8 {
            return Err(Error::InvalidResolution(format!("{name} holds {} bytes, expected {}", bytes.len(), grid.len() * 8)));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        comps.push(Field::new(grid.clone(), values)?);
    }
    let v = comps.pop().ok_or_else(|| Error::InvalidParams("sidecar lists no files".into()))?;
    let u = comps.pop().ok_or_else(|| Error::InvalidParams("sidecar lists one file".into()))?;
    Pair::new(u, v)
}

/// `summary.csv`, `sweep.json`, `reports/row_NNNN.json` and optional
/// `fields/row_NNNN.*` under `dir`.
pub fn write_sweep(result: &SweepResult, dir: &Path, timing: bool, fields: bool) -> Result<()> {
    fs::create_dir_all(dir.join("reports"))?;
    fs::write(dir.join("summary.csv"), sweep_csv(result, timing)?)?;
    fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(result)?)?;
    if fields {
        fs::create_dir_all(dir.join("fields"))?;
    }
    for (i, row) in result.rows.iter().enumerate() {
        fs::write(dir.join(format!("reports/row_{i:04}.json")), serde_json::to_string_pretty(row)?)?;
        if let (true, Some(r)) = (fields, &row.report) {
            dump_fields(&r.pair, &dir.join(format!("fields/row_{i:04}")))?;
        }
    }
    Ok(())
}
