//! Offline comparators: the right-hand sides of the regret inequalities.
//!
//! - [`best_constant`]: `min_{y∈[0,1]} Σ ℓ(y, y_t)` by bisection on the right derivative.
//! - [`best_histogram`]: best constant per box of a uniform grid over `[0,1]^d`.
//! - [`best_lipschitz_1d`]: best `L`-Lipschitz function of a scalar covariate.
//!
//! The Lipschitz comparator only needs the fitted values at the sorted
//! distinct covariates `x_1 < … < x_n`, subject to
//! `|f_i − f_{i+1}| ≤ L (x_{i+1} − x_i)` and `f_i ∈ [0,1]`. It is solved
//! exactly by dynamic programming over convex value functions
//! `V_i(f) = Σ_{groups ≤ i} ℓ(f, ·)` + the min over compatible predecessors,
//! each represented by its piecewise-affine derivative. The inf-convolution
//! with the constraint window splits `V_i'` at the minimiser and pushes the
//! two halves `c_i = L·gap` apart, inserting a flat piece.
//!
//! The `*_grid` functions are brute-force counterparts used for cross-checks.

use serde::{Deserialize, Serialize};

use crate::{check_unit, Error, LossSpec, Result};

/// Lowest minimiser of a convex function on `[0,1]` from its right derivative:
/// bisection for the first point where the right derivative turns non-negative,
/// run until the bracket can no longer be halved in `f64`.
pub fn lowest_minimiser(right_derivative: impl Fn(f64) -> f64) -> f64 {
    if right_derivative(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if right_derivative(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestConstant {
    pub argmin: f64,
    pub loss: f64,
}

fn check_outcomes(ys: &[f64]) -> Result<()> {
    if ys.is_empty() {
        return Err(Error::Empty("outcome sequence"));
    }
    ys.iter().try_for_each(|&y| check_unit("outcome", y))
}

/// Best constant prediction in hindsight; the argmin is the lowest one, to the last bit.
pub fn best_constant(ys: &[f64], loss: &LossSpec) -> Result<BestConstant> {
    check_outcomes(ys)?;
    let argmin = lowest_minimiser(|c| ys.iter().map(|&y| loss.right_derivative_unchecked(c, y)).sum());
    let value = ys.iter().map(|&y| loss.loss_unchecked(argmin, y)).sum();
    Ok(BestConstant { argmin, loss: value })
}

/// `min_y Σ_k w_k ℓ(y, v_k)` for a finite distribution.
pub fn best_constant_weighted(values: &[f64], weights: &[f64], loss: &LossSpec) -> Result<BestConstant> {
    check_outcomes(values)?;
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: weights.len() });
    }
    let argmin = lowest_minimiser(|c| {
        values.iter().zip(weights).map(|(&v, &w)| w * loss.right_derivative_unchecked(c, v)).sum()
    });
    let value = values.iter().zip(weights).map(|(&v, &w)| w * loss.loss_unchecked(argmin, v)).sum();
    Ok(BestConstant { argmin, loss: value })
}

/// Best constant over the grid `{0, step, 2·step, …, 1}`; ties go to the lower value.
pub fn best_constant_grid(ys: &[f64], loss: &LossSpec, step: f64) -> Result<BestConstant> {
    check_outcomes(ys)?;
    let n = (1.0 / step).round() as usize;
    let mut best = BestConstant { argmin: 0.0, loss: f64::INFINITY };
    for k in 0..=n {
        let c = (k as f64 * step).min(1.0);
        let v: f64 = ys.iter().map(|&y| loss.loss_unchecked(c, y)).sum();
        if v < best.loss {
            best = BestConstant { argmin: c, loss: v };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramFit {
    pub loss: f64,
    pub bins_per_axis: usize,
    /// Best constant per box in row-major order (first coordinate slowest);
    /// `None` for boxes without data.
    pub values: Vec<Option<f64>>,
}

fn check_points(xs: &[Vec<f64>], ys: &[f64], dim: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    for x in xs {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        x.iter().try_for_each(|&v| check_unit("covariate", v))?;
    }
    Ok(())
}

/// Best uniform histogram with `bins` equal boxes over `[0,1]^dim`.
/// `bins` must be `m^dim` for an integer `m ≥ 1`.
pub fn best_histogram(xs: &[Vec<f64>], ys: &[f64], bins: usize, dim: usize, loss: &LossSpec) -> Result<HistogramFit> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    check_outcomes(ys)?;
    check_points(xs, ys, dim)?;
    let m = (bins as f64).powf(1.0 / dim as f64).round() as usize;
    if bins == 0 || m.checked_pow(dim as u32) != Some(bins) {
        return Err(Error::InvalidParameter(format!(
            "{bins} bins is not a {dim}-th power of an integer"
        )));
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (x, &y) in xs.iter().zip(ys) {
        let idx = x.iter().fold(0usize, |acc, &v| acc * m + ((v * m as f64) as usize).min(m - 1));
        groups[idx].push(y);
    }
    let mut total = 0.0;
    let mut values = Vec::with_capacity(bins);
    for g in &groups {
        if g.is_empty() {
            values.push(None);
        } else {
            let bc = best_constant(g, loss)?;
            total += bc.loss;
            values.push(Some(bc.argmin));
        }
    }
    Ok(HistogramFit { loss: total, bins_per_axis: m, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzFit {
    pub loss: f64,
    /// Fitted `(x, f(x))` at the sorted distinct covariates.
    pub knots: Vec<(f64, f64)>,
}

/// Distinct sorted covariates with the outcomes observed at each.
fn group_by_x(xs: &[Vec<f64>], ys: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    check_outcomes(ys)?;
    if let Some(x) = xs.iter().find(|x| x.len() != 1) {
        return Err(Error::Unsupported(format!(
            "the Lipschitz comparator is one-dimensional; got {}-dimensional covariates",
            x.len()
        )));
    }
    check_points(xs, ys, 1)?;
    let mut pairs: Vec<(f64, f64)> = xs.iter().map(|x| x[0]).zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for (x, y) in pairs {
        match groups.last_mut() {
            Some((gx, g)) if *gx == x => g.push(y),
            _ => groups.push((x, vec![y])),
        }
    }
    Ok(groups)
}

fn check_lipschitz(l: f64) -> Result<()> {
    if l >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Lipschitz constant must be non-negative, got {l}")))
    }
}

/// Derivative `a·f + b` on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Piece {
    fn at(&self, f: f64) -> f64 {
        self.a * f + self.b
    }
}

/// Convex function on `[0,1]` through its derivative and one anchored value.
struct ConvexPiecewise {
    pieces: Vec<Piece>,
    anchor: f64,
    anchor_value: f64,
}

impl ConvexPiecewise {
    fn zero() -> Self {
        Self { pieces: vec![Piece { lo: 0.0, hi: 1.0, a: 0.0, b: 0.0 }], anchor: 0.0, anchor_value: 0.0 }
    }

    fn split_at(&mut self, at: f64) {
        if let Some(k) = self.pieces.iter().position(|p| p.lo < at && at < p.hi) {
            let p = self.pieces[k];
            self.pieces[k].hi = at;
            self.pieces.insert(k + 1, Piece { lo: at, ..p });
        }
    }

    fn add_loss(&mut self, y: f64, loss: &LossSpec) {
        self.anchor_value += loss.loss_unchecked(self.anchor, y);
        let (below, above) = match *loss {
            LossSpec::Square => {
                for p in &mut self.pieces {
                    p.a += 2.0;
                    p.b -= 2.0 * y;
                }
                return;
            }
            LossSpec::Absolute => (-1.0, 1.0),
            LossSpec::Pinball { alpha } => (-alpha, 1.0 - alpha),
        };
        self.split_at(y);
        for p in &mut self.pieces {
            p.b += if p.hi <= y { below } else { above };
        }
    }

    /// Lowest minimiser.
    fn argmin(&self) -> f64 {
        for p in &self.pieces {
            if p.at(p.lo) >= 0.0 {
                return p.lo;
            }
            if p.at(p.hi) > 0.0 {
                return (-p.b / p.a).clamp(p.lo, p.hi);
            }
        }
        1.0
    }

    fn integral(&self, from: f64, to: f64) -> f64 {
        let (u, v, sign) = if from <= to { (from, to, 1.0) } else { (to, from, -1.0) };
        let mut total = 0.0;
        for p in &self.pieces {
            let lo = p.lo.max(u);
            let hi = p.hi.min(v);
            if lo < hi {
                total += 0.5 * p.a * (hi * hi - lo * lo) + p.b * (hi - lo);
            }
        }
        sign * total
    }

    fn value_at(&self, f: f64) -> f64 {
        self.anchor_value + self.integral(self.anchor, f)
    }

    /// `f ↦ min_{|g−f| ≤ c, g∈[0,1]} V(g)`.
    fn window_min(&mut self, c: f64) {
        let m = self.argmin();
        let vm = self.value_at(m);
        let c = c.min(2.0);
        if c > 0.0 {
            self.split_at(m);
            let mut next = Vec::with_capacity(self.pieces.len() + 1);
            for p in self.pieces.iter().filter(|p| p.hi <= m) {
                next.push(Piece { lo: p.lo - c, hi: p.hi - c, a: p.a, b: p.b + p.a * c });
            }
            next.push(Piece { lo: m - c, hi: m + c, a: 0.0, b: 0.0 });
            for p in self.pieces.iter().filter(|p| p.lo >= m) {
                next.push(Piece { lo: p.lo + c, hi: p.hi + c, a: p.a, b: p.b - p.a * c });
            }
            self.pieces = next
                .into_iter()
                .filter_map(|p| {
                    let lo = p.lo.max(0.0);
                    let hi = p.hi.min(1.0);
                    (lo < hi).then_some(Piece { lo, hi, ..p })
                })
                .collect();
        }
        self.anchor = m;
        self.anchor_value = vm;
    }
}

/// Best `L`-Lipschitz predictor of `y` from a scalar covariate, exactly.
pub fn best_lipschitz_1d(xs: &[Vec<f64>], ys: &[f64], l: f64, loss: &LossSpec) -> Result<LipschitzFit> {
    check_lipschitz(l)?;
    let groups = group_by_x(xs, ys)?;
    let mut v = ConvexPiecewise::zero();
    let mut minimisers = Vec::with_capacity(groups.len());
    let mut gaps = Vec::with_capacity(groups.len());
    for (k, (x, g)) in groups.iter().enumerate() {
        for &y in g {
            v.add_loss(y, loss);
        }
        minimisers.push(v.argmin());
        if let Some((next_x, _)) = groups.get(k + 1) {
            let c = l * (next_x - x);
            gaps.push(c);
            v.window_min(c);
        }
    }
    let m = *minimisers.last().expect("non-empty groups");
    let value = v.value_at(m);
    // Backtrack: the best f_i given f_{i+1} projects the minimiser of V_i onto the window.
    let mut fitted = vec![0.0; groups.len()];
    fitted[groups.len() - 1] = m;
    for k in (0..groups.len() - 1).rev() {
        let c = gaps[k];
        fitted[k] = minimisers[k].clamp(fitted[k + 1] - c, fitted[k + 1] + c);
    }
    Ok(LipschitzFit { loss: value, knots: groups.iter().map(|(x, _)| *x).zip(fitted).collect() })
}

/// Exhaustive minimum over all grid-valued fits `f_i ∈ {0, step, …, 1}`
/// satisfying the Lipschitz constraints (min-plus recursion over the grid).
pub fn best_lipschitz_1d_grid(xs: &[Vec<f64>], ys: &[f64], l: f64, loss: &LossSpec, step: f64) -> Result<f64> {
    check_lipschitz(l)?;
    let groups = group_by_x(xs, ys)?;
    let n = (1.0 / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(1.0)).collect();
    let cost = |g: &[f64], c: f64| g.iter().map(|&y| loss.loss_unchecked(c, y)).sum::<f64>();
    let mut best: Vec<f64> = grid.iter().map(|&c| cost(&groups[0].1, c)).collect();
    for w in groups.windows(2) {
        let window = l * (w[1].0 - w[0].0) + 1e-9;
        best = grid
            .iter()
            .map(|&c| {
                let reach = grid
                    .iter()
                    .zip(&best)
                    .filter(|(&g, _)| (g - c).abs() <= window)
                    .map(|(_, &v)| v)
                    .fold(f64::INFINITY, f64::min);
                reach + cost(&w[1].1, c)
            })
            .collect();
    }
    Ok(best.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    fn objective(fit: &LipschitzFit, xs: &[f64], ys: &[f64], loss: &LossSpec) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let f = fit.knots.iter().find(|k| k.0 == x).unwrap().1;
                loss.loss_unchecked(f, y)
            })
            .sum()
    }

    /// Nested enumeration of every grid vector, no recursion tricks.
    fn enumerate_grid(xs: &[f64], ys: &[f64], l: f64, loss: &LossSpec, step: f64) -> f64 {
        let n = (1.0 / step).round() as usize;
        let k = xs.len();
        let mut idx = vec![0usize; k];
        let mut best = f64::INFINITY;
        loop {
            let f: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
            let feasible = (0..k).all(|i| {
                (0..k).all(|j| (f[i] - f[j]).abs() <= l * (xs[i] - xs[j]).abs() + 1e-9)
            });
            if feasible {
                let v: f64 = f.iter().zip(ys).map(|(&a, &y)| loss.loss_unchecked(a, y)).sum();
                best = best.min(v);
            }
            let mut p = 0;
            loop {
                if p == k {
                    return best;
                }
                idx[p] += 1;
                if idx[p] <= n {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    #[test]
    fn best_constant_examples() {
        for loss in [LossSpec::Absolute, LossSpec::Square, LossSpec::Pinball { alpha: 0.3 }] {
            let bc = best_constant(&[0.37; 9], &loss).unwrap();
            assert!((bc.argmin - 0.37).abs() < 1e-9);
            assert!(bc.loss < 1e-9);
        }
        let ys: Vec<f64> = (0..10).map(|k| (k % 2) as f64).collect();
        let bc = best_constant(&ys, &LossSpec::Absolute).unwrap();
        assert!((bc.loss - 5.0).abs() < 1e-9);
        let bc = best_constant(&[0.2, 0.4, 0.9], &LossSpec::Square).unwrap();
        assert!((bc.argmin - 0.5).abs() < 1e-9);
        assert!((bc.loss - 0.26).abs() < 1e-12);
        assert!(matches!(best_constant(&[], &LossSpec::Square), Err(Error::Empty(_))));
        assert!(best_constant(&[0.5, 1.5], &LossSpec::Square).is_err());
    }

    #[test]
    fn pinball_ties_resolve_low() {
        // α = 0.5 on {0.2, 0.8}: every y in [0.2, 0.8] is optimal.
        let bc = best_constant(&[0.2, 0.8], &LossSpec::Pinball { alpha: 0.5 }).unwrap();
        assert!((bc.argmin - 0.2).abs() < 1e-9, "{}", bc.argmin);
        assert!((bc.loss - 0.3).abs() < 1e-12);
    }

    #[test]
    fn golden_agrees_with_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let n = rng.random_range(1..40);
            let ys: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            for loss in [LossSpec::Absolute, LossSpec::Square, LossSpec::Pinball { alpha: 0.7 }] {
                let g = best_constant(&ys, &loss).unwrap();
                let grid = best_constant_grid(&ys, &loss, 1e-4).unwrap();
                assert!(g.loss <= grid.loss + 1e-12);
                assert!((grid.loss - g.loss) / n as f64 <= 1e-4);
            }
            let sq = best_constant(&ys, &LossSpec::Square).unwrap();
            let mean = ys.iter().sum::<f64>() / n as f64;
            assert!((sq.argmin - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn weighted_matches_repetition() {
        let loss = LossSpec::Absolute;
        let w = best_constant_weighted(&[0.25, 0.75], &[0.9, 0.1], &loss).unwrap();
        assert!((w.argmin - 0.25).abs() < 1e-9);
        assert!((w.loss - 0.05).abs() < 1e-12);
        let mut reps = vec![0.25; 9];
        reps.push(0.75);
        let r = best_constant(&reps, &loss).unwrap();
        assert!((r.loss / 10.0 - w.loss).abs() < 1e-12);
    }

    #[test]
    fn histogram_examples() {
        let xs = pts(&[0.1, 0.2, 0.8, 0.9]);
        let ys = [0.0, 0.0, 1.0, 1.0];
        let h = best_histogram(&xs, &ys, 2, 1, &LossSpec::Absolute).unwrap();
        assert!(h.loss < 1e-9);
        let h1 = best_histogram(&xs, &ys, 1, 1, &LossSpec::Square).unwrap();
        let bc = best_constant(&ys, &LossSpec::Square).unwrap();
        assert_eq!(h1.loss, bc.loss);
        let xs2: Vec<Vec<f64>> = vec![vec![0.1, 0.9], vec![0.9, 0.1], vec![1.0, 1.0]];
        let h = best_histogram(&xs2, &[0.3, 0.6, 0.9], 4, 2, &LossSpec::Square).unwrap();
        assert!(h.loss < 1e-9);
        assert_eq!(h.values.iter().filter(|v| v.is_some()).count(), 3);
        assert!(best_histogram(&xs2, &[0.3, 0.6, 0.9], 3, 2, &LossSpec::Square).is_err());
        assert!(best_histogram(&xs2, &[0.3, 0.6, 0.9], 0, 2, &LossSpec::Square).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let loss = LossSpec::Absolute;
        let xs = [0.0, 1.0, 0.5];
        let ys = [0.0, 1.0, 1.0];
        let fit = best_lipschitz_1d(&pts(&xs), &ys, 1.0, &loss).unwrap();
        assert!((fit.loss - 0.5).abs() < 1e-9, "{}", fit.loss);
        assert!((enumerate_grid(&xs, &ys, 1.0, &loss, 0.02) - 0.5).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..50).map(|_| rng.random()).collect();
        let ys: Vec<f64> = (0..50).map(|_| rng.random()).collect();
        for loss in [LossSpec::Absolute, LossSpec::Square, LossSpec::Pinball { alpha: 0.2 }] {
            let flat = best_lipschitz_1d(&pts(&xs), &ys, 0.0, &loss).unwrap();
            let bc = best_constant(&ys, &loss).unwrap();
            assert!((flat.loss - bc.loss).abs() < 1e-8, "{loss:?}: {} vs {}", flat.loss, bc.loss);
            let free = best_lipschitz_1d(&pts(&xs), &ys, 1e9, &loss).unwrap();
            assert!(free.loss.abs() < 1e-8, "{loss:?}: {}", free.loss);
        }
    }

    #[test]
    fn lipschitz_rejects_multidimensional_input() {
        let xs = vec![vec![0.1, 0.2]];
        assert!(matches!(
            best_lipschitz_1d(&xs, &[0.5], 1.0, &LossSpec::Square),
            Err(Error::Unsupported(_))
        ));
        assert!(best_lipschitz_1d(&pts(&[0.1]), &[0.5], -1.0, &LossSpec::Square).is_err());
    }

    #[test]
    fn duplicate_covariates_share_a_value() {
        let xs = pts(&[0.5, 0.5, 0.5]);
        let ys = [0.1, 0.2, 0.9];
        let fit = best_lipschitz_1d(&xs, &ys, 100.0, &LossSpec::Square).unwrap();
        let bc = best_constant(&ys, &LossSpec::Square).unwrap();
        assert!((fit.loss - bc.loss).abs() < 1e-12);
        assert_eq!(fit.knots.len(), 1);
    }

    #[test]
    fn dp_matches_exhaustive_enumeration_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..60 {
            let k = rng.random_range(1..=3);
            let xs: Vec<f64> = (0..k).map(|_| rng.random_range(0..=10) as f64 / 10.0).collect();
            let ys: Vec<f64> = (0..k).map(|_| rng.random_range(0..=50) as f64 / 50.0).collect();
            let l = [0.2, 0.4, 1.0, 2.0][rng.random_range(0..4)];
            for loss in [LossSpec::Absolute, LossSpec::Square, LossSpec::Pinball { alpha: 0.5 }] {
                let dp = best_lipschitz_1d(&pts(&xs), &ys, l, &loss).unwrap().loss;
                let brute = enumerate_grid(&xs, &ys, l, &loss, 0.02);
                let grid = best_lipschitz_1d_grid(&pts(&xs), &ys, l, &loss, 0.02).unwrap();
                assert!((brute - grid).abs() < 1e-9);
                assert!(dp <= brute + 1e-9 && brute - dp <= 2e-2, "{loss:?} {xs:?} {ys:?} L={l}: {dp} vs {brute}");
            }
        }
    }

    #[test]
    fn fitted_values_are_feasible_and_attain_the_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let n = rng.random_range(2..300);
            let xs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let ys: Vec<f64> = xs.iter().map(|x| (0.5 + 0.4 * (6.0 * x).sin() + 0.2 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0)).collect();
            let l = rng.random_range(0.0..5.0);
            for loss in [LossSpec::Absolute, LossSpec::Square, LossSpec::Pinball { alpha: 0.8 }] {
                let fit = best_lipschitz_1d(&pts(&xs), &ys, l, &loss).unwrap();
                for w in fit.knots.windows(2) {
                    assert!((w[1].1 - w[0].1).abs() <= l * (w[1].0 - w[0].0) + 1e-9);
                }
                assert!(fit.knots.iter().all(|k| (0.0..=1.0).contains(&k.1)));
                let direct = objective(&fit, &xs, &ys, &loss);
                assert!((direct - fit.loss).abs() < 1e-8, "{loss:?}: {direct} vs {}", fit.loss);
            }
        }
    }

    #[test]
    fn constant_gap_within_regret_bound() {
        // best_constant − best_lipschitz ≤ M·L·n·δ on a node of diameter δ.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let lo = rng.random_range(0.0..0.9);
            let delta = rng.random_range(0.0..(1.0 - lo));
            let n = rng.random_range(1..60);
            let xs: Vec<f64> = (0..n).map(|_| lo + delta * rng.random::<f64>()).collect();
            let ys: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let l = rng.random_range(0.0..10.0);
            for loss in [LossSpec::Absolute, LossSpec::Square, LossSpec::Pinball { alpha: 0.4 }] {
                let c = best_constant(&ys, &loss).unwrap().loss;
                let f = best_lipschitz_1d(&pts(&xs), &ys, l, &loss).unwrap().loss;
                let m = loss.lipschitz_constant();
                assert!(c - f <= m * l * n as f64 * delta + 1e-9);
                assert!(f <= c + 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn lipschitz_loss_non_increasing_in_l(
            data in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..40),
            l1 in 0.0f64..5.0, dl in 0.0f64..5.0,
        ) {
            let xs: Vec<Vec<f64>> = data.iter().map(|d| vec![d.0]).collect();
            let ys: Vec<f64> = data.iter().map(|d| d.1).collect();
            for loss in [LossSpec::Absolute, LossSpec::Square] {
                let a = best_lipschitz_1d(&xs, &ys, l1, &loss).unwrap().loss;
                let b = best_lipschitz_1d(&xs, &ys, l1 + dl, &loss).unwrap().loss;
                prop_assert!(b <= a + 1e-9);
                let c = best_constant(&ys, &loss).unwrap().loss;
                prop_assert!(a <= c + 1e-9);
            }
        }

        #[test]
        fn histogram_refinement_never_hurts(
            data in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), 1..60),
            m in 1usize..5,
        ) {
            let xs: Vec<Vec<f64>> = data.iter().map(|d| vec![d.0, d.1]).collect();
            let ys: Vec<f64> = data.iter().map(|d| d.2).collect();
            let loss = LossSpec::Absolute;
            let coarse = best_histogram(&xs, &ys, m * m, 2, &loss).unwrap().loss;
            let fine = best_histogram(&xs, &ys, 4 * m * m, 2, &loss).unwrap().loss;
            prop_assert!(fine <= coarse + 1e-9);
            let c = best_constant(&ys, &loss).unwrap().loss;
            prop_assert!(coarse <= c + 1e-9);
        }
    }
}
