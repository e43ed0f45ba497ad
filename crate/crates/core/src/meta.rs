//! Autoregressive forecasting over all window lengths at once.
//!
//! A [`FixedPastForecaster`] of order `d` feeds the lag window
//! `(y_{t−d}, …, y_{t−1})` (oldest first) to its own nested EG tree over
//! `[0,1]^d`, starting at step `t_d`. The [`MetaForecaster`] mixes the active
//! forecasters with exponential weights and learning rate `η_t = 2/√t`:
//!
//! ```text
//! p_{d,t+1} = (D_t / D_{t+1}) · p_{d,t}^{η_{t+1}/η_t} e^{−η_{t+1} ℓ(f_{d,t}, y_t)} / Z_t
//! ```
//!
//! and a forecaster entering at `t + 1` receives weight `1/D_{t+1}`. Weights
//! live in the log domain, where the power step is a multiplication.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::harness::RunLog;
use crate::tree::TreePrediction;
use crate::{check_unit, Error, LossSpec, NestedEgTree, Result};

/// Starting times `t_d` of the order-`d` forecasters (`t_1 = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `t_d = 2^d`.
    #[default]
    PowersOfTwo,
    /// `t_1 = 2`, `t_d = d² + 1` for `d ≥ 2`.
    Quadratic,
}

impl Schedule {
    /// `t_d` for `d ≥ 1`; saturates at `u64::MAX` for very large `d`.
    pub fn start_time(&self, d: usize) -> u64 {
        assert!(d >= 1, "orders start at 1");
        match self {
            Schedule::PowersOfTwo => 1u64.checked_shl(d as u32).unwrap_or(u64::MAX),
            Schedule::Quadratic if d == 1 => 2,
            Schedule::Quadratic => (d as u64).saturating_mul(d as u64).saturating_add(1),
        }
    }

    pub fn start_times(&self) -> impl Iterator<Item = u64> + '_ {
        (1..).map(move |d| self.start_time(d))
    }

    /// `D_s = sup{d : t_d ≤ s}`, optionally capped at `max_d`.
    pub fn active_count(&self, s: u64, max_d: Option<usize>) -> usize {
        let cap = max_d.unwrap_or(usize::MAX);
        let mut d = 0;
        while d < cap && self.start_time(d + 1) <= s {
            d += 1;
        }
        d
    }
}

/// Configuration of a [`MetaForecaster`], also the JSON config format:
/// `{"loss": …, "schedule": …, "effective_range": bool, "max_d": int?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    pub loss: LossSpec,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub effective_range: bool,
    #[serde(default)]
    pub max_d: Option<usize>,
}

impl MetaConfig {
    pub fn new(loss: LossSpec) -> Self {
        Self { loss, schedule: Schedule::PowersOfTwo, effective_range: false, max_d: None }
    }
}

/// Order-`d` autoregressive forecaster, active from `start_time` on.
#[derive(Debug, Clone)]
pub struct FixedPastForecaster {
    pub dim: usize,
    pub start_time: u64,
    pub tree: NestedEgTree,
}

/// Everything the meta forecaster produced for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaPrediction {
    pub value: f64,
    /// `f_{d,t}` for `d = 1..=D_t`.
    pub expert_predictions: Vec<f64>,
    /// `p_{d,t}` for `d = 1..=D_t`.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Pending {
    tree_preds: Vec<TreePrediction>,
}

#[derive(Debug, Clone)]
pub struct MetaForecaster {
    config: MetaConfig,
    experts: Vec<FixedPastForecaster>,
    log_weights: Vec<f64>,
    step: u64,
    history: VecDeque<f64>,
    pending: Option<Pending>,
}

impl MetaForecaster {
    pub fn new(config: MetaConfig) -> Result<Self> {
        config.loss.validate()?;
        if config.max_d == Some(0) {
            return Err(Error::InvalidParameter("max_d must be at least 1".into()));
        }
        Ok(Self {
            config,
            experts: Vec::new(),
            log_weights: Vec::new(),
            step: 1,
            history: VecDeque::new(),
            pending: None,
        })
    }

    pub fn config(&self) -> &MetaConfig {
        &self.config
    }

    /// Index `t` of the step about to be predicted (starts at 1).
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Number of active forecasters `D_t`.
    pub fn active(&self) -> usize {
        self.experts.len()
    }

    pub fn experts(&self) -> &[FixedPastForecaster] {
        &self.experts
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    /// Total node count across expert trees and the largest tree height.
    pub fn tree_totals(&self) -> (usize, u32) {
        self.experts.iter().fold((0, 0), |(n, h), e| {
            (n + e.tree.node_count(), h.max(e.tree.height()))
        })
    }

    pub fn predict(&mut self) -> Result<MetaPrediction> {
        let len = self.history.len();
        let mut tree_preds = Vec::with_capacity(self.experts.len());
        for e in &self.experts {
            let window: Vec<f64> = self.history.range(len - e.dim..).copied().collect();
            tree_preds.push(e.tree.predict(&window)?);
        }
        let weights = self.weights();
        let expert_predictions: Vec<f64> = tree_preds.iter().map(|p| p.value).collect();
        let value = if self.experts.is_empty() {
            0.5
        } else {
            let v: f64 = weights.iter().zip(&expert_predictions).map(|(p, f)| p * f).sum();
            v.clamp(0.0, 1.0)
        };
        self.pending = Some(Pending { tree_preds });
        Ok(MetaPrediction { value, expert_predictions, weights })
    }

    pub fn update(&mut self, outcome: f64) -> Result<()> {
        check_unit("outcome", outcome)?;
        let pending = self.pending.take().ok_or_else(|| {
            Error::ContractViolation(format!("update at step {} without a prediction", self.step))
        })?;
        let loss = self.config.loss;
        let t = self.step as f64;
        let eta_next = 2.0 / (t + 1.0).sqrt();
        let ratio = (t / (t + 1.0)).sqrt();

        let mut losses = Vec::with_capacity(self.experts.len());
        for (e, p) in self.experts.iter_mut().zip(&pending.tree_preds) {
            e.tree.update(p, outcome)?;
            losses.push(loss.loss(p.value, outcome)?);
        }

        let d_now = self.experts.len();
        let d_next = self.config.schedule.active_count(self.step + 1, self.config.max_d);
        debug_assert!(d_next == d_now || d_next == d_now + 1);

        if d_now > 0 {
            for (lw, l) in self.log_weights.iter_mut().zip(&losses) {
                *lw = ratio * *lw - eta_next * l;
            }
            let norm = log_sum_exp(&self.log_weights);
            let shift = (d_now as f64 / d_next as f64).ln();
            for lw in &mut self.log_weights {
                *lw += shift - norm;
            }
        }
        if d_next > d_now {
            let dim = d_next;
            self.experts.push(FixedPastForecaster {
                dim,
                start_time: self.step + 1,
                tree: NestedEgTree::new(dim, loss, self.config.effective_range)?,
            });
            self.log_weights.push(-(d_next as f64).ln());
        }

        self.history.push_back(outcome);
        while self.history.len() > d_next + 1 {
            self.history.pop_front();
        }
        self.step += 1;
        Ok(())
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `Σ_{t=t_d}^{T} [ℓ(ŷ_t, y_t) − ℓ(f_{d,t}, y_t)]` from a meta run log.
pub fn regret_vs_expert(log: &RunLog, d: usize) -> Result<f64> {
    let loss = log.summary.config.meta.loss;
    let mut regret = 0.0;
    let mut active = false;
    for s in &log.steps {
        if let Some(&f) = s.expert_predictions.get(d.wrapping_sub(1)) {
            active = true;
            regret += s.loss - loss.loss(f, s.y)?;
        }
    }
    if d == 0 || !active {
        return Err(Error::InvalidParameter(format!("expert {d} was never active")));
    }
    Ok(regret)
}

/// `√(T+1)·ln D_{T+1}`.
pub fn meta_regret_bound(steps: u64, active_next: usize) -> f64 {
    ((steps + 1) as f64).sqrt() * (active_next as f64).ln()
}

/// `ln(D_{T+1})/η_{T+1} + (1/8)·Σ_{t=t_d}^{T} η_t` with `η_t = 2/√t`.
pub fn meta_regret_bound_raw(steps: u64, active_next: usize, start_time: u64) -> f64 {
    let eta_end = 2.0 / ((steps + 1) as f64).sqrt();
    let eta_sum: f64 = (start_time..=steps).map(|t| 2.0 / (t as f64).sqrt()).sum();
    (active_next as f64).ln() / eta_end + eta_sum / 8.0
}
