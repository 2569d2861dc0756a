//! Cyclic backfitting over monotone coordinates.
//!
//! Every covariate contributes one coordinate per monotone part: increasing
//! and decreasing covariates one each, unconstrained covariates a pair
//! (increasing + decreasing) whose sum is the fitted component. A decreasing
//! coordinate is solved as an increasing fit of the negated partial residual.
//! Each coordinate update is the exact univariate solution on the partial
//! residual, so the loss never increases.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{CycleOrder, Direction, LisoConfig};
use super::data::Dataset;
use super::model::{AdditiveModel, Component, Diagnostics};
use crate::error::{LisoError, Result};
use crate::numeric::{compensated_sum, KahanSum};
use crate::shrink::{thresholded_pava, ShrinkWork};
use crate::stepfn::StepFunction;

/// Residuals are rebuilt from scratch this often to shed accumulated rounding.
const RECOMPUTE_EVERY: usize = 50;
/// Consecutive settled-fit cycles before the drift rule stops the loop.
const DRIFT_CYCLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Coord {
    pub covariate: usize,
    /// +1 for an increasing part, −1 for a decreasing part.
    pub sign: f64,
    pub weight: f64,
}

pub(crate) fn coords_for(p: usize, cfg: &LisoConfig) -> Vec<Coord> {
    let mut out = Vec::new();
    for k in 0..p {
        if cfg.is_excluded(k) {
            continue;
        }
        let weight = cfg.penalty_weight(k);
        let mut push = |sign| out.push(Coord { covariate: k, sign, weight });
        match cfg.direction(k) {
            Direction::Increasing => push(1.0),
            Direction::Decreasing => push(-1.0),
            Direction::Unconstrained => {
                push(1.0);
                push(-1.0);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub(crate) struct CoordFit {
    /// Per coordinate, its contribution at each distinct covariate value.
    pub values: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

struct Scratch {
    sums: Vec<f64>,
    target: Vec<f64>,
    out: Vec<f64>,
    work: ShrinkWork,
}

impl Scratch {
    fn new() -> Self {
        Self {
            sums: Vec::new(),
            target: Vec::new(),
            out: Vec::new(),
            work: ShrinkWork::default(),
        }
    }
}

/// Exact update of coordinate `c` against residual `r`; the new contribution
/// is left in `s.out`.
fn refit(d: &Dataset, c: &Coord, lambda: f64, r: &[f64], old: &[f64], s: &mut Scratch) {
    let idx = d.column_index(c.covariate);
    let gw = idx.group_weights();
    let m = idx.groups();
    s.sums.clear();
    s.sums.resize(m, 0.0);
    for ((&g, &ri), &wi) in idx.group_of().iter().zip(r).zip(d.weights()) {
        s.sums[g] += wi * ri;
    }
    s.target.clear();
    s.target
        .extend((0..m).map(|g| c.sign * (s.sums[g] / gw[g] + old[g])));
    s.out.clear();
    s.out.resize(m, 0.0);
    let t = thresholded_pava(&s.target, gw, lambda * c.weight, &mut s.work, &mut s.out);
    if t.at_mean {
        s.out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (&v, &w) in s.out.iter().zip(gw) {
        num.add(v * w);
        den.add(w);
    }
    let centre = num.value() / den.value();
    for v in s.out.iter_mut() {
        *v = c.sign * (*v - centre);
    }
}

fn residuals(d: &Dataset, coords: &[Coord], values: &[Vec<f64>], r: &mut Vec<f64>) {
    r.clear();
    r.extend_from_slice(d.y());
    for (c, v) in coords.iter().zip(values) {
        let group_of = d.column_index(c.covariate).group_of();
        for (ri, &g) in r.iter_mut().zip(group_of) {
            *ri -= v[g];
        }
    }
}

fn tv(v: &[f64]) -> f64 {
    compensated_sum(v.windows(2).map(|w| (w[1] - w[0]).abs()))
}

fn loss(d: &Dataset, coords: &[Coord], values: &[Vec<f64>], lambda: f64, r: &[f64]) -> f64 {
    let fit = 0.5 * compensated_sum(r.iter().zip(d.weights()).map(|(r, w)| w * r * r));
    let pen = compensated_sum(coords.iter().zip(values).map(|(c, v)| c.weight * tv(v)));
    fit + lambda * pen
}

pub(crate) fn solve(
    d: &Dataset,
    coords: &[Coord],
    cfg: &LisoConfig,
    init: Option<Vec<Vec<f64>>>,
) -> Result<CoordFit> {
    let lambda = cfg.lambda;
    let mut values = match init {
        Some(v) => {
            if v.len() != coords.len()
                || v.iter()
                    .zip(coords)
                    .any(|(v, c)| v.len() != d.column_index(c.covariate).groups())
            {
                return Err(LisoError::InvalidConfig("warm start does not match the data".into()));
            }
            v
        }
        None => coords
            .iter()
            .map(|c| vec![0.0; d.column_index(c.covariate).groups()])
            .collect(),
    };

    let mut r = Vec::with_capacity(d.n());
    residuals(d, coords, &values, &mut r);
    let mut current = loss(d, coords, &values, lambda, &r);
    let mut trace = vec![current];
    let mut diag = Diagnostics::default();
    if coords.is_empty() {
        diag.converged = true;
        diag.final_loss = current;
        diag.loss_trace = trace;
        return Ok(CoordFit { values, diagnostics: diag });
    }

    let mut order: Vec<usize> = (0..coords.len()).collect();
    let mut rng = match cfg.cycle_order {
        CycleOrder::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        CycleOrder::Fixed => None,
    };
    let mut s = Scratch::new();
    let mut r_start = Vec::with_capacity(d.n());
    let mut settled = 0usize;

    for cycle in 1..=cfg.max_cycles {
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        r_start.clone_from(&r);
        let mut max_change: f64 = 0.0;
        for &ci in &order {
            let c = &coords[ci];
            refit(d, c, lambda, &r, &values[ci], &mut s);
            let group_of = d.column_index(c.covariate).group_of();
            let old = &mut values[ci];
            let mut moved = false;
            for (o, &n) in old.iter().zip(&s.out) {
                let delta = n - *o;
                if delta != 0.0 {
                    max_change = max_change.max(delta.abs());
                    moved = true;
                }
            }
            if moved {
                for (ri, &g) in r.iter_mut().zip(group_of) {
                    *ri -= s.out[g] - old[g];
                }
                old.copy_from_slice(&s.out);
            }
        }
        if cycle % RECOMPUTE_EVERY == 0 {
            residuals(d, coords, &values, &mut r);
        }
        let next = loss(d, coords, &values, lambda, &r);
        let rel = if current > 0.0 {
            ((current - next) / current).max(0.0)
        } else {
            0.0
        };
        let fit_change = r
            .iter()
            .zip(&r_start)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        current = next;
        trace.push(next);
        diag.cycles = cycle;
        diag.last_relative_decrease = rel;
        diag.last_max_change = max_change;

        if rel < cfg.tol_loss && max_change < cfg.tol_change {
            diag.converged = true;
            break;
        }
        if rel < cfg.tol_loss && fit_change < cfg.tol_change {
            settled += 1;
            if settled >= DRIFT_CYCLES {
                diag.converged = true;
                diag.drift = true;
                break;
            }
        } else {
            settled = 0;
        }
    }
    if !diag.converged {
        diag.notes.push(format!(
            "stopped after {} cycles without meeting the tolerances",
            cfg.max_cycles
        ));
    }
    residuals(d, coords, &values, &mut r);
    diag.final_loss = loss(d, coords, &values, lambda, &r);
    diag.loss_trace = trace;
    Ok(CoordFit { values, diagnostics: diag })
}

/// Largest single-coordinate change one further exact update would make.
pub(crate) fn refit_gap(d: &Dataset, coords: &[Coord], values: &[Vec<f64>], lambda: f64) -> f64 {
    let mut r = Vec::with_capacity(d.n());
    residuals(d, coords, values, &mut r);
    let mut s = Scratch::new();
    let mut gap: f64 = 0.0;
    for (c, v) in coords.iter().zip(values) {
        refit(d, c, lambda, &r, v, &mut s);
        for (a, b) in s.out.iter().zip(v) {
            gap = gap.max((a - b).abs());
        }
    }
    gap
}

/// Coordinate values reproducing `model` (unconstrained components are split
/// into their increasing and decreasing parts).
pub(crate) fn values_from_model(
    d: &Dataset,
    coords: &[Coord],
    model: &AdditiveModel,
) -> Result<Vec<Vec<f64>>> {
    if model.p() != d.p() {
        return Err(LisoError::DimensionMismatch {
            what: "model covariates",
            expected: d.p(),
            got: model.p(),
        });
    }
    let mut out = Vec::with_capacity(coords.len());
    let mut i = 0;
    while i < coords.len() {
        let k = coords[i].covariate;
        let idx = d.column_index(k);
        let f = model.component(k);
        let on_knots: Vec<f64> = idx.knots().iter().map(|&x| f.evaluate(x)).collect();
        let pair = i + 1 < coords.len() && coords[i + 1].covariate == k;
        if pair {
            let g = StepFunction::from_parts_unchecked(idx.knots().to_vec(), on_knots);
            let parts = g.decompose(idx.group_weights())?;
            out.push(parts.plus.values().to_vec());
            out.push(parts.minus.values().to_vec());
            i += 2;
        } else {
            out.push(on_knots);
            i += 1;
        }
    }
    Ok(out)
}

pub(crate) fn assemble(d: &Dataset, cfg: &LisoConfig, coords: &[Coord], fit: CoordFit) -> AdditiveModel {
    let directions: Vec<Direction> = (0..d.p()).map(|k| cfg.direction(k)).collect();
    let mut model = AdditiveModel::zero(d, cfg.lambda, &directions);
    let mut gap = None::<f64>;
    let mut i = 0;
    while i < coords.len() {
        let k = coords[i].covariate;
        let pair = i + 1 < coords.len() && coords[i + 1].covariate == k;
        let values = if pair {
            let (g, h) = (&fit.values[i], &fit.values[i + 1]);
            let sum: Vec<f64> = g.iter().zip(h).map(|(a, b)| a + b).collect();
            let lost = tv(g) + tv(h) - tv(&sum);
            gap = Some(gap.unwrap_or(0.0).max(lost));
            i += 2;
            sum
        } else {
            i += 1;
            fit.values[i - 1].clone()
        };
        let knots = d.column_index(k).knots().to_vec();
        model.components[k] = Component {
            covariate: k,
            direction: directions[k],
            function: StepFunction::from_parts_unchecked(knots, values),
        };
    }
    model.diagnostics = fit.diagnostics;
    model.diagnostics.canonicalization_gap = gap;
    model
}

/// Fits the penalized additive model at `cfg.lambda`.
pub fn liso_fit(d: &Dataset, cfg: &LisoConfig) -> Result<AdditiveModel> {
    cfg.validate(d.p())?;
    let coords = coords_for(d.p(), cfg);
    let fit = solve(d, &coords, cfg, None)?;
    Ok(assemble(d, cfg, &coords, fit))
}

/// As [`liso_fit`], starting the cycles from `warm`.
pub fn liso_fit_warm(d: &Dataset, cfg: &LisoConfig, warm: &AdditiveModel) -> Result<AdditiveModel> {
    cfg.validate(d.p())?;
    let coords = coords_for(d.p(), cfg);
    let init = values_from_model(d, &coords, warm)?;
    let fit = solve(d, &coords, cfg, Some(init))?;
    Ok(assemble(d, cfg, &coords, fit))
}

/// Fits along a strictly decreasing grid, warm-starting each fit from the last.
pub fn liso_path(d: &Dataset, grid: &[f64], cfg: &LisoConfig) -> Result<Vec<AdditiveModel>> {
    let mut out = Vec::with_capacity(grid.len());
    liso_path_until(d, grid, cfg, |m| {
        out.push(m.clone());
        false
    })?;
    Ok(out)
}

/// Walks the warm-started path, handing each model to `stop`; ends early
/// once it returns true. Returns the number of grid points fitted.
pub fn liso_path_until(
    d: &Dataset,
    grid: &[f64],
    cfg: &LisoConfig,
    mut stop: impl FnMut(&AdditiveModel) -> bool,
) -> Result<usize> {
    check_grid(grid)?;
    cfg.with_lambda(grid[0]).validate(d.p())?;
    let coords = coords_for(d.p(), cfg);
    let mut warm: Option<Vec<Vec<f64>>> = None;
    for (j, &lambda) in grid.iter().enumerate() {
        let c = cfg.with_lambda(lambda);
        let fit = solve(d, &coords, &c, warm.take())?;
        warm = Some(fit.values.clone());
        if stop(&assemble(d, &c, &coords, fit)) {
            return Ok(j + 1);
        }
    }
    Ok(grid.len())
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(LisoError::Empty("lambda grid"));
    }
    for &l in grid {
        crate::error::check_lambda(l)?;
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(LisoError::InvalidConfig("lambda grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// `max_m |Σ_{i ≤ m} w_i y_i|` over the distinct values of covariate `k`
/// (response already centred).
pub fn covariate_zero_threshold(d: &Dataset, k: usize) -> f64 {
    let idx = d.column_index(k);
    let mut sums = vec![0.0; idx.groups()];
    for ((&g, &y), &w) in idx.group_of().iter().zip(d.y()).zip(d.weights()) {
        sums[g] += w * y;
    }
    let mut acc = KahanSum::new();
    let mut best: f64 = 0.0;
    // the final partial sum is the full centred total, zero up to rounding
    for &s in &sums[..sums.len() - 1] {
        acc.add(s);
        best = best.max(acc.value().abs());
    }
    best
}

/// Smallest λ guaranteed to give the constant model: every penalized
/// coordinate's univariate fit to the response is then constant.
pub fn lambda_max(d: &Dataset, cfg: &LisoConfig) -> f64 {
    (0..d.p())
        .filter(|&k| !cfg.is_excluded(k) && cfg.penalty_weight(k) > 0.0)
        .map(|k| covariate_zero_threshold(d, k) / cfg.penalty_weight(k))
        .fold(0.0, f64::max)
}

/// 50 log-spaced values from `lambda_max` down to `lambda_max / 1000`.
pub fn default_grid(d: &Dataset, cfg: &LisoConfig) -> Result<Vec<f64>> {
    let hi = lambda_max(d, cfg);
    if !(hi > 0.0) {
        return Err(LisoError::InvalidConfig(
            "response has no penalized signal; lambda_max is zero".into(),
        ));
    }
    Ok(crate::numeric::log_grid(hi, hi * 1e-3, 50))
}

/// Penalized objective of `model` on `d` at `cfg.lambda` with `cfg`'s weights.
pub fn objective(d: &Dataset, model: &AdditiveModel, cfg: &LisoConfig) -> Result<f64> {
    let fitted = model.fitted(d)?;
    let y = d.response();
    let fit = 0.5
        * compensated_sum(
            y.iter()
                .zip(&fitted)
                .zip(d.weights())
                .map(|((y, f), w)| w * (y - f) * (y - f)),
        );
    let weights: Vec<f64> = (0..d.p()).map(|k| cfg.penalty_weight(k)).collect();
    Ok(fit + cfg.lambda * model.penalty(&weights))
}

/// Largest change one more exact coordinate update would make to `model`;
/// below the change tolerance the model is a fixed point of the updates.
pub fn fixed_point_gap(d: &Dataset, model: &AdditiveModel, cfg: &LisoConfig) -> Result<f64> {
    cfg.validate(d.p())?;
    let coords = coords_for(d.p(), cfg);
    let values = values_from_model(d, &coords, model)?;
    Ok(refit_gap(d, &coords, &values, cfg.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pava::merge_ties;
    use crate::shrink::univariate_liso;
    use rand::Rng;

    fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| (rng.gen_range(-1.0..1.0f64) * 8.0).round()).collect())
            .collect();
        let y = (0..n)
            .map(|i| cols[0][i] - 0.5 * cols[1 % p][i] + rng.gen_range(-1.0..1.0))
            .collect();
        Dataset::new(cols, y, None).unwrap()
    }

    #[test]
    fn single_covariate_matches_univariate_solution() {
        let d = random_data(40, 1, 1);
        let s = merge_ties(d.column(0), d.y(), d.weights()).unwrap();
        for lambda in [0.0, 0.5, 3.0, 20.0] {
            let m = liso_fit(&d, &LisoConfig::new(lambda)).unwrap();
            let u = univariate_liso(&s, lambda, 1.0).unwrap();
            for (a, b) in m.component(0).values().iter().zip(u.values()) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(m.diagnostics.converged);
        }
    }

    #[test]
    fn zero_at_lambda_max() {
        let d = random_data(60, 4, 2);
        let cfg = LisoConfig::new(0.0);
        let lmax = lambda_max(&d, &cfg);
        let m = liso_fit(&d, &cfg.with_lambda(lmax)).unwrap();
        assert!(m.components.iter().all(|c| c.function.is_zero()));
        assert_eq!(m.intercept, d.y_mean());
        let m = liso_fit(&d, &cfg.with_lambda(0.999 * lmax)).unwrap();
        assert!(!m.is_zero());
    }

    #[test]
    fn loss_trace_descends_and_components_are_centred() {
        let d = random_data(80, 5, 3);
        let cfg = LisoConfig::new(2.0)
            .with_directions(vec![
                Direction::Increasing,
                Direction::Decreasing,
                Direction::Unconstrained,
                Direction::Increasing,
                Direction::Unconstrained,
            ])
            .with_cycle_order(CycleOrder::Random { seed: 9 });
        let m = liso_fit(&d, &cfg).unwrap();
        assert!(m.diagnostics.converged);
        for w in m.diagnostics.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0));
        }
        for (k, c) in m.components.iter().enumerate() {
            let gw = d.column_index(k).group_weights();
            assert!(c.function.weighted_mean(gw).unwrap().abs() < 1e-10);
        }
        assert!(m.components[0].function.is_non_decreasing());
        assert!(m.components[1].function.is_non_increasing());
        assert!(fixed_point_gap(&d, &m, &cfg).unwrap() < 10.0 * cfg.tol_change);
        let obj = objective(&d, &m, &cfg).unwrap();
        assert!((obj - m.diagnostics.final_loss).abs() < 1e-8 * obj.max(1.0));
    }

    #[test]
    fn warm_start_reaches_same_fit() {
        let d = random_data(50, 3, 4);
        let cfg = LisoConfig::new(1.0);
        let cold = liso_fit(&d, &cfg).unwrap();
        let warm = liso_fit_warm(&d, &cfg, &liso_fit(&d, &cfg.with_lambda(3.0)).unwrap()).unwrap();
        let (a, b) = (cold.fitted(&d).unwrap(), warm.fitted(&d).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn path_is_sparse_at_the_top() {
        let d = random_data(50, 3, 5);
        let cfg = LisoConfig::new(0.0);
        let grid = default_grid(&d, &cfg).unwrap();
        assert_eq!(grid.len(), 50);
        let path = liso_path(&d, &grid, &cfg).unwrap();
        assert!(path[0].is_zero());
        assert!(!path[49].is_zero());
        assert!(liso_path(&d, &[1.0, 1.0], &cfg).is_err());
        assert!(liso_path(&d, &[], &cfg).is_err());
    }

    #[test]
    fn excluded_and_unpenalized_covariates() {
        let d = random_data(50, 3, 6);
        let mut cfg = LisoConfig::new(1e6).with_penalty_weights(vec![0.0, 1.0, 1.0]);
        cfg.excluded = vec![2];
        let m = liso_fit(&d, &cfg).unwrap();
        assert!(!m.components[0].function.is_zero());
        assert!(m.components[1].function.is_zero());
        assert!(m.components[2].function.is_zero());
        assert!(liso_fit(&d, &LisoConfig::new(-1.0)).is_err());
    }
}
