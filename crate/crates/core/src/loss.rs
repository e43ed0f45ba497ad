//! Convex losses on `[0,1]²`, bounded in `[0,1]` and Lipschitz in the prediction.
//!
//! All three losses are evaluated as `loss(pred, outcome)`; subgradients are
//! taken with respect to `pred`. At a kink the returned element is 0 whenever
//! 0 belongs to the subdifferential.

use serde::{Deserialize, Serialize};

use crate::{check_unit, Error, Result};

/// A loss function. Serialized as `{"kind": "absolute"|"square"|"pinball", "alpha": number?}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossSpec {
    Absolute,
    Square,
    /// Quantile check-loss `ρ_α(outcome − pred)`.
    Pinball { alpha: f64 },
}

impl LossSpec {
    pub fn pinball(alpha: f64) -> Result<Self> {
        let spec = LossSpec::Pinball { alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::Pinball { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(
                Error::InvalidParameter(format!("pinball alpha must lie in (0,1), got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::Absolute => "absolute",
            LossSpec::Square => "square",
            LossSpec::Pinball { .. } => "pinball",
        }
    }

    /// `loss(pred, outcome)` with domain checks on both arguments.
    pub fn loss(&self, pred: f64, outcome: f64) -> Result<f64> {
        check_unit("prediction", pred)?;
        check_unit("outcome", outcome)?;
        Ok(self.loss_unchecked(pred, outcome))
    }

    /// Element of the subdifferential of `loss(·, outcome)` at `pred`.
    pub fn subgradient(&self, pred: f64, outcome: f64) -> Result<f64> {
        check_unit("prediction", pred)?;
        check_unit("outcome", outcome)?;
        Ok(self.subgradient_unchecked(pred, outcome))
    }

    /// Bound on `|subgradient|` over the unit square.
    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            LossSpec::Absolute => 1.0,
            LossSpec::Square => 2.0,
            LossSpec::Pinball { alpha } => alpha.max(1.0 - alpha),
        }
    }

    /// Same as [`LossSpec::loss`] without range checks. Also valid outside
    /// `[0,1]`, which the oracles use for finite differences.
    #[inline]
    pub fn loss_unchecked(&self, pred: f64, outcome: f64) -> f64 {
        match *self {
            LossSpec::Absolute => (pred - outcome).abs(),
            LossSpec::Square => (pred - outcome) * (pred - outcome),
            LossSpec::Pinball { alpha } => {
                let u = outcome - pred;
                if u >= 0.0 {
                    alpha * u
                } else {
                    (alpha - 1.0) * u
                }
            }
        }
    }

    /// Right derivative of `loss(·, outcome)` at `pred`; at a kink this is the
    /// largest element of the subdifferential.
    #[inline]
    pub fn right_derivative_unchecked(&self, pred: f64, outcome: f64) -> f64 {
        match *self {
            LossSpec::Absolute => {
                if pred >= outcome {
                    1.0
                } else {
                    -1.0
                }
            }
            LossSpec::Square => 2.0 * (pred - outcome),
            LossSpec::Pinball { alpha } => {
                if pred >= outcome {
                    1.0 - alpha
                } else {
                    -alpha
                }
            }
        }
    }

    #[inline]
    pub fn subgradient_unchecked(&self, pred: f64, outcome: f64) -> f64 {
        match *self {
            LossSpec::Absolute => {
                if pred > outcome {
                    1.0
                } else if pred < outcome {
                    -1.0
                } else {
                    0.0
                }
            }
            LossSpec::Square => 2.0 * (pred - outcome),
            LossSpec::Pinball { alpha } => {
                if pred > outcome {
                    1.0 - alpha
                } else if pred < outcome {
                    -alpha
                } else {
                    0.0
                }
            }
        }
    }
}
