//! Aggregation of replicate runs into summary tables and plot-ready CSVs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{format_g17, RunLog, VerifyReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub forecaster: String,
    pub loss: String,
    pub steps: u64,
    pub runs: usize,
    pub mean_average_loss: f64,
    pub min_average_loss: f64,
    pub max_average_loss: f64,
    /// Shared `L*` of the group's generating process, when known.
    pub l_star: Option<f64>,
}

/// One point of a curve aggregated over a group's replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub group: String,
    pub t: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPoint {
    pub run: usize,
    pub t: u64,
    pub expert: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretPoint {
    pub run: usize,
    pub check: String,
    pub bound: f64,
    pub achieved: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub average_loss: Vec<CurvePoint>,
    pub node_count: Vec<CurvePoint>,
    pub weights: Vec<WeightPoint>,
    pub regret: Vec<RegretPoint>,
}

/// `1, 2, 5, 10, 20, 50, …` up to `steps`, plus `steps` itself.
fn checkpoints(steps: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            match decade.checked_mul(m) {
                Some(t) if t < steps => out.push(t),
                _ => break 'outer,
            }
        }
        decade = match decade.checked_mul(10) {
            Some(d) => d,
            None => break,
        };
    }
    out.push(steps);
    out
}

fn stats(values: &[f64]) -> (f64, f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

fn group_name(log: &RunLog) -> (String, String, u64) {
    let s = &log.summary;
    let forecaster = serde_json::to_value(s.config.forecaster).ok().and_then(|v| v.as_str().map(String::from));
    (forecaster.unwrap_or_default(), s.config.meta.loss.name().to_string(), s.steps)
}

/// Aggregates runs grouped by forecaster, loss and length. Each run may come
/// with the verification report of its bounds.
pub fn report(runs: &[(RunLog, Option<VerifyReport>)]) -> Report {
    let mut groups: BTreeMap<(String, String, u64), Vec<usize>> = BTreeMap::new();
    for (k, (log, _)) in runs.iter().enumerate() {
        if !log.steps.is_empty() {
            groups.entry(group_name(log)).or_default().push(k);
        }
    }
    let mut out = Report::default();
    for ((forecaster, loss, steps), members) in &groups {
        let averages: Vec<f64> = members.iter().map(|&k| runs[k].0.summary.average_loss).collect();
        let (mean, min, max) = stats(&averages);
        let first = runs[members[0]].0.summary.l_star;
        let l_star = first.filter(|_| members.iter().all(|&k| runs[k].0.summary.l_star == first));
        out.rows.push(ReportRow {
            forecaster: forecaster.clone(),
            loss: loss.clone(),
            steps: *steps,
            runs: members.len(),
            mean_average_loss: mean,
            min_average_loss: min,
            max_average_loss: max,
            l_star,
        });
        let group = format!("{forecaster}/{loss}/T={steps}");
        // Running sums, so each checkpoint costs O(1) per run.
        let prefix: Vec<Vec<f64>> = members
            .iter()
            .map(|&k| {
                runs[k].0.steps.iter().scan(0.0, |acc, s| {
                    *acc += s.loss;
                    Some(*acc)
                })
                .collect()
            })
            .collect();
        for t in checkpoints(*steps) {
            let i = t as usize - 1;
            let avg: Vec<f64> = prefix.iter().map(|p| p[i] / t as f64).collect();
            let (mean, min, max) = stats(&avg);
            out.average_loss.push(CurvePoint { group: group.clone(), t, mean, min, max });
            let nodes: Vec<f64> = members.iter().map(|&k| runs[k].0.steps[i].nodes as f64).collect();
            let (mean, min, max) = stats(&nodes);
            out.node_count.push(CurvePoint { group: group.clone(), t, mean, min, max });
        }
    }
    for (run, (log, verify)) in runs.iter().enumerate() {
        for t in checkpoints(log.steps.len() as u64).into_iter().filter(|&t| t > 0) {
            let s = &log.steps[t as usize - 1];
            for (d, &w) in s.weights.iter().enumerate() {
                out.weights.push(WeightPoint { run, t, expert: d + 1, weight: w });
            }
        }
        for c in verify.iter().flat_map(|v| &v.checks) {
            out.regret.push(RegretPoint {
                run,
                check: c.name.clone(),
                bound: c.bound,
                achieved: c.achieved,
                slack: c.slack,
            });
        }
    }
    out
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let err = |e: csv::Error| Error::Csv { row: 0, message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(format_g17).unwrap_or_default()
}

impl Report {
    /// Writes `summary.csv`, `average_loss.csv`, `node_count.csv`,
    /// `weights.csv`, `regret_vs_bound.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_csv(
            &dir.join("summary.csv"),
            &["forecaster", "loss", "T", "runs", "avg_loss_mean", "avg_loss_min", "avg_loss_max", "l_star"],
            self.rows.iter().map(|r| {
                vec![
                    r.forecaster.clone(),
                    r.loss.clone(),
                    r.steps.to_string(),
                    r.runs.to_string(),
                    format_g17(r.mean_average_loss),
                    format_g17(r.min_average_loss),
                    format_g17(r.max_average_loss),
                    opt(r.l_star),
                ]
            }),
        )?;
        for (name, curve) in [("average_loss.csv", &self.average_loss), ("node_count.csv", &self.node_count)] {
            write_csv(
                &dir.join(name),
                &["group", "t", "mean", "min", "max"],
                curve.iter().map(|p| {
                    vec![p.group.clone(), p.t.to_string(), format_g17(p.mean), format_g17(p.min), format_g17(p.max)]
                }),
            )?;
        }
        write_csv(
            &dir.join("weights.csv"),
            &["run", "t", "expert", "weight"],
            self.weights
                .iter()
                .map(|w| vec![w.run.to_string(), w.t.to_string(), w.expert.to_string(), format_g17(w.weight)]),
        )?;
        write_csv(
            &dir.join("regret_vs_bound.csv"),
            &["run", "check", "bound", "achieved", "slack"],
            self.regret.iter().map(|r| {
                vec![r.run.to_string(), r.check.clone(), format_g17(r.bound), format_g17(r.achieved), format_g17(r.slack)]
            }),
        )?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
