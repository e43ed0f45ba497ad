//! Seeded stationary ergodic processes on `[0,1]` with known optimal loss `L*`.
//!
//! Three kinds are available:
//!
//! - `iid`: draws from a finite distribution on `[0,1]`.
//! - `markov`: an order-1 chain observed through distinct emission values,
//!   started from its stationary distribution.
//! - `ar1`: a stationary Gaussian AR(1) latent around `mean`, clipped to `[0,1]`.
//!
//! All randomness comes from ChaCha8 ([`RNG_ALGORITHM`]), so a spec and a
//! seed regenerate the same series bit for bit on every platform.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::oracles::best_constant_weighted;
use crate::{Error, LossSpec, Result};

/// Identifier of the generator recorded in run logs and sidecars.
pub const RNG_ALGORITHM: &str = "chacha8";

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProcessKind {
    Iid { support: Vec<f64>, probs: Vec<f64> },
    Markov { emissions: Vec<f64>, transition: Vec<Vec<f64>> },
    Ar1 {
        a: f64,
        sigma: f64,
        #[serde(default = "half")]
        mean: f64,
    },
}

fn half() -> f64 {
    0.5
}

/// A process and an optional default seed, e.g.
/// `{"kind":"markov","emissions":[0.25,0.75],"transition":[[0.9,0.1],[0.1,0.9]],"seed":7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub kind: ProcessKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub values: Vec<f64>,
    /// Number of ar1 draws that fell outside `[0,1]` and were clipped.
    pub clipped: usize,
}

impl Generated {
    pub fn clip_rate(&self) -> f64 {
        self.clipped as f64 / self.values.len() as f64
    }
}

fn check_distribution(what: &str, probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidProcess(format!("{what} has a negative or NaN entry")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidProcess(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

fn check_values(what: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidProcess(format!("{what} is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidProcess(format!("{what} contains {v}, outside [0,1]")));
    }
    Ok(())
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind) -> Self {
        Self { kind, seed: None }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProcessKind::Iid { support, probs } => {
                check_values("support", support)?;
                if support.len() != probs.len() {
                    return Err(Error::InvalidProcess("support and probs differ in length".into()));
                }
                check_distribution("probs", probs)
            }
            ProcessKind::Markov { emissions, transition } => {
                check_values("emissions", emissions)?;
                if transition.len() != emissions.len() {
                    return Err(Error::InvalidProcess(format!(
                        "{} states but {} transition rows",
                        emissions.len(),
                        transition.len()
                    )));
                }
                for (s, row) in transition.iter().enumerate() {
                    if row.len() != emissions.len() {
                        return Err(Error::InvalidProcess(format!("transition row {s} has {} entries", row.len())));
                    }
                    check_distribution(&format!("transition row {s}"), row)?;
                }
                check_ergodic(transition)
            }
            ProcessKind::Ar1 { a, sigma, mean } => {
                if !(0.0..1.0).contains(a) {
                    return Err(Error::InvalidProcess(format!("ar1 coefficient {a} outside [0,1)")));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidProcess(format!("ar1 sigma {sigma} must be >= 0")));
                }
                if !(0.0..=1.0).contains(mean) {
                    return Err(Error::InvalidProcess(format!("ar1 mean {mean} outside [0,1]")));
                }
                Ok(())
            }
        }
    }

    /// `T` observations from the stationary process. The seed argument
    /// overrides the spec's own seed; one of them must be present.
    pub fn generate(&self, steps: usize, seed: Option<u64>) -> Result<Generated> {
        self.validate()?;
        if steps == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        let seed = seed
            .or(self.seed)
            .ok_or_else(|| Error::InvalidParameter("no seed given".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clipped = 0;
        let values = match &self.kind {
            ProcessKind::Iid { support, probs } => {
                let dist = weighted(probs)?;
                (0..steps).map(|_| support[dist.sample(&mut rng)]).collect()
            }
            ProcessKind::Markov { emissions, transition } => {
                let pi = stationary_distribution(transition)?;
                let rows = transition.iter().map(|r| weighted(r)).collect::<Result<Vec<_>>>()?;
                let mut state = weighted(&pi)?.sample(&mut rng);
                let mut out = Vec::with_capacity(steps);
                for _ in 0..steps {
                    out.push(emissions[state]);
                    state = rows[state].sample(&mut rng);
                }
                out
            }
            ProcessKind::Ar1 { a, sigma, mean } => {
                let noise = Normal::new(0.0, *sigma).map_err(|e| Error::InvalidProcess(e.to_string()))?;
                let stationary_sd = sigma / (1.0 - a * a).sqrt();
                let mut z = Normal::new(0.0, stationary_sd)
                    .map_err(|e| Error::InvalidProcess(e.to_string()))?
                    .sample(&mut rng);
                let mut out = Vec::with_capacity(steps);
                for _ in 0..steps {
                    let y = mean + z;
                    if !(0.0..=1.0).contains(&y) {
                        clipped += 1;
                    }
                    out.push(y.clamp(0.0, 1.0));
                    z = a * z + noise.sample(&mut rng);
                }
                out
            }
        };
        Ok(Generated { values, clipped })
    }

    /// Optimal expected per-step loss given the infinite past.
    pub fn l_star(&self, loss: &LossSpec) -> Result<f64> {
        self.validate()?;
        loss.validate()?;
        match &self.kind {
            ProcessKind::Iid { support, probs } => Ok(best_constant_weighted(support, probs, loss)?.loss),
            ProcessKind::Markov { emissions, transition } => {
                let mut sorted = emissions.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Unsupported(
                        "L* needs distinct emissions; repeated values hide the state".into(),
                    ));
                }
                let pi = stationary_distribution(transition)?;
                pi.iter()
                    .zip(transition)
                    .map(|(p, row)| Ok(p * best_constant_weighted(emissions, row, loss)?.loss))
                    .sum()
            }
            ProcessKind::Ar1 { .. } => Err(Error::Unsupported("L* has no closed form for ar1".into())),
        }
    }
}

fn weighted(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|e| Error::InvalidProcess(e.to_string()))
}

/// Rejects reducible or periodic transition matrices.
pub fn check_ergodic(transition: &[Vec<f64>]) -> Result<()> {
    let n = transition.len();
    let reach = |forward: bool| {
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let p = if forward { transition[u][v] } else { transition[v][u] };
                if p > 0.0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    };
    let level = reach(true);
    if level.contains(&usize::MAX) || reach(false).contains(&usize::MAX) {
        return Err(Error::InvalidProcess("transition matrix is reducible".into()));
    }
    // The period is the gcd of level[u] + 1 − level[v] over all edges u → v.
    let mut period = 0usize;
    for u in 0..n {
        for v in 0..n {
            if transition[u][v] > 0.0 {
                period = gcd(period, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    if period != 1 {
        return Err(Error::InvalidProcess(format!("transition matrix has period {period}")));
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Solves `π P = π`, `Σ π = 1` for an ergodic chain.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = transition.len();
    // Rows 0..n−1 of (Pᵀ − I) π = 0, with the last equation replaced by Σ π = 1.
    let mut a = DMatrix::from_fn(n, n, |i, j| transition[j][i] - if i == j { 1.0 } else { 0.0 });
    let mut b = nalgebra::DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidProcess("stationary distribution is not unique".into()))?;
    Ok(pi.iter().map(|p| p.max(0.0)).collect())
}
