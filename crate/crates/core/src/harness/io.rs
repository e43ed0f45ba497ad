//! CSV and JSON interchange. Reals are written with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, RunLog, RunSummary, StepRecord};
use crate::processes::{ProcessSpec, RNG_ALGORITHM};
use crate::tree::TreeSnapshot;
use crate::{Error, Result};

/// `printf("%.17g", v)`.
pub fn format_g17(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, v);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| format_g17(v)).collect::<Vec<_>>().join(";")
}

fn csv_error(row: usize, e: impl std::fmt::Display) -> Error {
    Error::Csv { row, message: e.to_string() }
}

fn parse_real(row: usize, column: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| csv_error(row, format!("column {column}: {s:?} is not a number")))
}

fn parse_list(row: usize, column: &str, s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|v| parse_real(row, column, v)).collect()
}

/// Reads a series (`t,y` or `y`) or covariate CSV (`x` or `x1..xd`, then `y`;
/// an optional `t` column is ignored). Rows are numbered from 1 at the header.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(1, e))?;
    let headers = reader.headers().map_err(|e| csv_error(1, e))?.clone();
    let mut y_col = None;
    let mut x_cols = Vec::new();
    for (k, h) in headers.iter().enumerate() {
        match h {
            "t" => {}
            "y" => y_col = Some(k),
            "x" => x_cols.push((1, k)),
            _ => match h.strip_prefix('x').and_then(|n| n.parse::<usize>().ok()) {
                Some(n) if n >= 1 => x_cols.push((n, k)),
                _ => return Err(csv_error(1, format!("unknown column {h:?}"))),
            },
        }
    }
    let y_col = y_col.ok_or_else(|| csv_error(1, "missing column y"))?;
    x_cols.sort();
    if x_cols.iter().enumerate().any(|(k, &(n, _))| n != k + 1) {
        return Err(csv_error(1, "covariate columns must be x, or x1..xd without gaps"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| csv_error(row, e))?;
        let y = parse_real(row, "y", &rec[y_col])?;
        if !(0.0..=1.0).contains(&y) {
            return Err(csv_error(row, format!("y = {y} is outside [0, 1]")));
        }
        let x = x_cols
            .iter()
            .map(|&(n, c)| {
                let v = parse_real(row, &format!("x{n}"), &rec[c])?;
                if (0.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(csv_error(row, format!("x{n} = {v} is outside [0, 1]")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        xs.push(x);
        ys.push(y);
    }
    Dataset::with_covariates(x_cols.len(), xs, ys)
}

/// Writes `t,y` rows (or `t,x1..xd,y` with covariates).
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(1, e))?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=data.dim).map(|k| format!("x{k}")));
    header.push("y".into());
    w.write_record(&header).map_err(|e| csv_error(1, e))?;
    for (k, (x, &y)) in data.xs.iter().zip(&data.ys).enumerate() {
        let mut rec = vec![(k + 1).to_string()];
        rec.extend(x.iter().map(|&v| format_g17(v)));
        rec.push(format_g17(y));
        w.write_record(&rec).map_err(|e| csv_error(k + 2, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series(path: &Path, ys: &[f64]) -> Result<()> {
    write_dataset(path, &Dataset::series(ys.to_vec())?)
}

/// Provenance of a simulated series, stored next to it as `<name>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSidecar {
    pub spec: ProcessSpec,
    pub seed: u64,
    pub rng: String,
    pub steps: usize,
    pub clipped: usize,
    pub clip_rate: f64,
}

impl SeriesSidecar {
    pub fn new(spec: ProcessSpec, seed: u64, steps: usize, clipped: usize) -> Self {
        Self { spec, seed, rng: RNG_ALGORITHM.into(), steps, clipped, clip_rate: clipped as f64 / steps as f64 }
    }
}

pub fn sidecar_path(series: &Path) -> PathBuf {
    series.with_extension("json")
}

pub fn write_sidecar(series: &Path, sidecar: &SeriesSidecar) -> Result<()> {
    fs::write(sidecar_path(series), serde_json::to_string_pretty(sidecar)? + "\n")?;
    Ok(())
}

/// The sidecar of `series`, if one exists.
pub fn read_sidecar(series: &Path) -> Result<Option<SeriesSidecar>> {
    let path = sidecar_path(series);
    if path == series || !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(path)?)?))
}

const STEP_COLUMNS: [&str; 10] =
    ["t", "x", "pred", "y", "loss", "leaf", "expert_predictions", "weights", "nodes", "height"];

pub fn write_log(dir: &Path, log: &RunLog) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("steps.csv")).map_err(|e| csv_error(1, e))?;
    w.write_record(STEP_COLUMNS).map_err(|e| csv_error(1, e))?;
    for (k, s) in log.steps.iter().enumerate() {
        w.write_record([
            s.t.to_string(),
            join(&s.x),
            format_g17(s.pred),
            format_g17(s.y),
            format_g17(s.loss),
            s.leaf.clone().unwrap_or_default(),
            join(&s.expert_predictions),
            join(&s.weights),
            s.nodes.to_string(),
            s.height.to_string(),
        ])
        .map_err(|e| csv_error(k + 2, e))?;
    }
    w.flush()?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&log.summary)? + "\n")?;
    let tree_path = dir.join("tree.json");
    match &log.tree {
        Some(t) => fs::write(tree_path, serde_json::to_string(t)? + "\n")?,
        None if tree_path.exists() => fs::remove_file(tree_path)?,
        None => {}
    }
    Ok(())
}

pub fn read_log(dir: &Path) -> Result<RunLog> {
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
    let mut reader = csv::Reader::from_path(dir.join("steps.csv")).map_err(|e| csv_error(1, e))?;
    let headers = reader.headers().map_err(|e| csv_error(1, e))?;
    if headers.iter().ne(STEP_COLUMNS) {
        return Err(csv_error(1, format!("expected header {}", STEP_COLUMNS.join(","))));
    }
    let mut steps = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| csv_error(row, e))?;
        let int = |c: usize| {
            rec[c].parse::<u64>().map_err(|_| csv_error(row, format!("column {}: {:?} is not an integer", STEP_COLUMNS[c], &rec[c])))
        };
        steps.push(StepRecord {
            t: int(0)?,
            x: parse_list(row, "x", &rec[1])?,
            pred: parse_real(row, "pred", &rec[2])?,
            y: parse_real(row, "y", &rec[3])?,
            loss: parse_real(row, "loss", &rec[4])?,
            leaf: (!rec[5].is_empty()).then(|| rec[5].to_string()),
            expert_predictions: parse_list(row, "expert_predictions", &rec[6])?,
            weights: parse_list(row, "weights", &rec[7])?,
            nodes: int(8)? as usize,
            height: int(9)? as u32,
        });
    }
    let tree_path = dir.join("tree.json");
    let tree: Option<TreeSnapshot> =
        if tree_path.exists() { Some(serde_json::from_str(&fs::read_to_string(tree_path)?)?) } else { None };
    Ok(RunLog { steps, summary, tree })
}

/// Wall-clock figures, kept apart from the deterministic log files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_secs: f64,
    pub steps_per_sec: f64,
}

pub fn write_timing(dir: &Path, timing: &Timing) -> Result<()> {
    fs::write(dir.join("timing.json"), serde_json::to_string_pretty(timing)? + "\n")?;
    Ok(())
}
