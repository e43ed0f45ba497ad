//! Exponentiated-gradient forecaster over the two constant experts 0 and 1.
//!
//! With the linearised losses `ℓ'_s · 0` and `ℓ'_s · 1`, the exponentially
//! weighted mixture of the two experts reduces to a logistic of the
//! cumulative subgradient:
//!
//! ```text
//! ŷ_t = 1 / (1 + exp(η_t · G_{t−1})),   η_t = √(ln 2 / t) / M
//! ```
//!
//! where `G_{t−1}` sums the subgradients of the previous `t − 1` steps. The
//! cumulative loss stays within `2M√(T ln 2)` of the best constant in `[0,1]`.

use serde::{Deserialize, Serialize};

use crate::{check_unit, Error, LossSpec, Result};

/// State of one EG instance. Value type: [`EgState::update`] returns a new state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgState {
    /// Number of completed observe-steps.
    pub steps: u64,
    /// Cumulative subgradient over completed steps.
    pub grad_sum: f64,
    /// Bound `M` on the subgradient magnitude.
    pub lipschitz: f64,
}

impl EgState {
    pub fn new(lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        Ok(Self { steps: 0, grad_sum: 0.0, lipschitz })
    }

    pub fn for_loss(loss: &LossSpec) -> Self {
        Self { steps: 0, grad_sum: 0.0, lipschitz: loss.lipschitz_constant() }
    }

    /// Learning rate for the upcoming step `steps + 1`.
    pub fn learning_rate(&self) -> f64 {
        (std::f64::consts::LN_2 / (self.steps + 1) as f64).sqrt() / self.lipschitz
    }

    /// Prediction for the upcoming step. In `(0,1)` up to rounding: for
    /// `|η·G|` beyond about 37 the result is exactly 0 or 1 in `f64`.
    pub fn predict(&self) -> f64 {
        logistic(-self.learning_rate() * self.grad_sum)
    }

    /// Feeds the outcome for the step that `pred` was issued for.
    pub fn update(&self, pred: f64, outcome: f64, loss: &LossSpec) -> Result<Self> {
        check_unit("outcome", outcome)?;
        let g = loss.subgradient(pred, outcome)?;
        Ok(Self { steps: self.steps + 1, grad_sum: self.grad_sum + g, lipschitz: self.lipschitz })
    }
}

/// `1 / (1 + e^{−z})` without overflow for large `|z|`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `2M√(T ln 2)`, the cumulative regret bound against the best constant.
pub fn regret_bound(lipschitz: f64, steps: u64) -> f64 {
    2.0 * lipschitz * (steps as f64 * std::f64::consts::LN_2).sqrt()
}
