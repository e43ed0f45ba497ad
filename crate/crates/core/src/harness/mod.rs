//! Experiment driver: run a forecaster over a dataset, keep a per-step log,
//! check the finite-time bounds against offline oracles, aggregate runs.
//!
//! A run log on disk is a directory with `steps.csv`, `summary.json`, an
//! optional `tree.json` snapshot and `timing.json`. Only `timing.json`
//! depends on the machine; everything else is byte-identical across runs
//! with the same configuration and input.

mod io;
mod report;
mod verify;

pub use io::{
    format_g17, read_dataset, read_log, read_sidecar, sidecar_path, write_dataset, write_log, write_series,
    write_sidecar, write_timing, SeriesSidecar, Timing,
};
pub use report::{report, Report, ReportRow};
pub use verify::{expert_regret_bound, verify_bounds, BoundCheck, VerifyReport};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::processes::ProcessSpec;
use crate::tree::TreeSnapshot;
use crate::{check_unit, EgState, Error, MetaConfig, MetaForecaster, NestedEgTree, Result};

/// Outcomes with optional covariates. `dim == 0` is a plain series.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl Dataset {
    pub fn series(ys: Vec<f64>) -> Result<Self> {
        Self::with_covariates(0, vec![Vec::new(); ys.len()], ys)
    }

    pub fn with_covariates(dim: usize, xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: ys.len(), got: xs.len() });
        }
        for x in &xs {
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
            }
            x.iter().try_for_each(|&v| check_unit("covariate", v))?;
        }
        ys.iter().try_for_each(|&y| check_unit("outcome", y))?;
        Ok(Self { dim, xs, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// SHA-256 over the dimension and the IEEE bit patterns of all values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        h.update((self.ys.len() as u64).to_le_bytes());
        for (x, y) in self.xs.iter().zip(&self.ys) {
            for v in x {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(y.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecasterKind {
    /// Single EG instance on the outcomes, ignoring covariates.
    Eg,
    /// Nested EG tree on the covariate columns.
    Tree,
    /// Autoregressive meta forecaster on the outcomes.
    #[default]
    Meta,
}

impl std::str::FromStr for ForecasterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eg" => Ok(Self::Eg),
            "tree" => Ok(Self::Tree),
            "meta" => Ok(Self::Meta),
            other => Err(Error::InvalidParameter(format!("unknown forecaster {other:?}"))),
        }
    }
}

/// Run configuration JSON: the meta config fields plus `"forecaster"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub forecaster: ForecasterKind,
    #[serde(flatten)]
    pub meta: MetaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    /// Covariate for tree runs, empty otherwise.
    pub x: Vec<f64>,
    pub pred: f64,
    pub y: f64,
    pub loss: f64,
    /// Leaf `(h,i)` that produced the prediction, tree runs only.
    pub leaf: Option<String>,
    pub expert_predictions: Vec<f64>,
    pub weights: Vec<f64>,
    /// Node count after the update (summed over experts for meta).
    pub nodes: usize,
    /// Height after the update (largest over experts for meta).
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafCount {
    pub leaf: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub steps: u64,
    pub dim: usize,
    pub cumulative_loss: f64,
    pub average_loss: f64,
    pub nodes: usize,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub leaves: Vec<LeafCount>,
    /// `D_{T+1}`, meta runs only.
    #[serde(default)]
    pub active_next: usize,
    /// `t_1, …, t_{D_T}`, meta runs only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub start_times: Vec<u64>,
    pub data_digest: String,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    pub process: Option<ProcessSpec>,
    /// Optimal loss of the generating process under the run's loss, when known.
    pub l_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub steps: Vec<StepRecord>,
    pub summary: RunSummary,
    pub tree: Option<TreeSnapshot>,
}

/// Runs the configured forecaster over `data`, predicting before observing
/// every outcome. `source` describes the generator when the data is synthetic.
pub fn run(config: &RunConfig, data: &Dataset, source: Option<&SeriesSidecar>) -> Result<RunLog> {
    let loss = config.meta.loss;
    loss.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("input series"));
    }
    let mut steps = Vec::with_capacity(data.len());
    let mut tree_out = None;
    let mut active_next = 0;
    let mut start_times = Vec::new();
    match config.forecaster {
        ForecasterKind::Eg => {
            let mut eg = EgState::for_loss(&loss);
            for (k, &y) in data.ys.iter().enumerate() {
                let pred = eg.predict();
                eg = eg.update(pred, y, &loss)?;
                steps.push(record(k, Vec::new(), pred, y, loss.loss(pred, y)?, None, 1, 0));
            }
        }
        ForecasterKind::Tree => {
            if data.dim == 0 {
                return Err(Error::InvalidParameter(
                    "the tree forecaster needs covariate columns (x or x1..xd)".into(),
                ));
            }
            let mut tree = NestedEgTree::new(data.dim, loss, config.meta.effective_range)?;
            for (k, (x, &y)) in data.xs.iter().zip(&data.ys).enumerate() {
                let p = tree.predict(x)?;
                let leaf = tree.node(p.leaf).label().to_string();
                tree.update(&p, y)?;
                let l = loss.loss(p.value, y)?;
                steps.push(record(k, x.clone(), p.value, y, l, Some(leaf), tree.node_count(), tree.height()));
            }
            tree_out = Some(tree);
        }
        ForecasterKind::Meta => {
            let mut meta = MetaForecaster::new(config.meta.clone())?;
            for (k, &y) in data.ys.iter().enumerate() {
                let p = meta.predict()?;
                meta.update(y)?;
                let (nodes, height) = meta.tree_totals();
                let mut r = record(k, Vec::new(), p.value, y, loss.loss(p.value, y)?, None, nodes, height);
                r.expert_predictions = p.expert_predictions;
                r.weights = p.weights;
                steps.push(r);
            }
            active_next = meta.active();
            start_times = meta.experts().iter().map(|e| e.start_time).collect();
            // The last update may already have added the expert for step T+1.
            if steps.last().map(|s| s.expert_predictions.len()) != Some(active_next) {
                start_times.pop();
            }
        }
    }
    let cumulative_loss: f64 = steps.iter().map(|s| s.loss).sum();
    let last = steps.last().expect("non-empty run");
    let leaves = tree_out
        .as_ref()
        .map(|t| {
            t.stats().leaves.into_iter().map(|(l, count)| LeafCount { leaf: l.to_string(), count }).collect()
        })
        .unwrap_or_default();
    let l_star = match source {
        Some(s) => s.spec.l_star(&loss).ok(),
        None => None,
    };
    let summary = RunSummary {
        config: config.clone(),
        steps: steps.len() as u64,
        dim: data.dim,
        cumulative_loss,
        average_loss: cumulative_loss / steps.len() as f64,
        nodes: last.nodes,
        height: last.height,
        leaves,
        active_next,
        start_times,
        data_digest: data.digest(),
        seed: source.map(|s| s.seed),
        rng: source.map(|s| s.rng.clone()),
        process: source.map(|s| s.spec.clone()),
        l_star,
    };
    Ok(RunLog { steps, summary, tree: tree_out.map(|t| t.snapshot()) })
}

#[allow(clippy::too_many_arguments)]
fn record(k: usize, x: Vec<f64>, pred: f64, y: f64, loss: f64, leaf: Option<String>, nodes: usize, height: u32) -> StepRecord {
    StepRecord {
        t: k as u64 + 1,
        x,
        pred,
        y,
        loss,
        leaf,
        expert_predictions: Vec::new(),
        weights: Vec::new(),
        nodes,
        height,
    }
}
