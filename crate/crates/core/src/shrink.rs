//! The one-covariate penalized fit: the isotonic (PAVA) fit clipped into
//! `[a, b]`, where the clip levels are the exact roots of the piecewise-linear
//! threshold equations
//!
//! ```text
//! Σ w_i (fit_i − b)_+ = λ        Σ w_i (a − fit_i)_+ = λ
//! ```
//!
//! or `a = b = ȳ` once `2λ ≥ Σ w_i |fit_i − ȳ|`.

use crate::error::{check_lambda, LisoError, Result};
use crate::numeric::KahanSum;
use crate::pava::{pava_pools, Pool, Regressogram, SortedSeries};
use crate::stepfn::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPair {
    pub a: f64,
    pub b: f64,
    /// Both thresholds sit at the weighted mean: the fit is constant.
    pub at_mean: bool,
}

impl ThresholdPair {
    #[inline]
    pub fn clip(&self, v: f64) -> f64 {
        if self.at_mean {
            self.a
        } else {
            v.clamp(self.a, self.b)
        }
    }
}

/// Thresholds from ascending block levels and their weights.
pub(crate) fn thresholds_from_levels(levels: &[f64], weights: &[f64], lambda: f64) -> ThresholdPair {
    let m = levels.len();
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (&l, &w) in levels.iter().zip(weights) {
        num.add(w * l);
        den.add(w);
    }
    let mean = num.value() / den.value();

    let mut spread = KahanSum::new();
    let mut scale = KahanSum::new();
    for (&l, &w) in levels.iter().zip(weights) {
        spread.add(w * (l - mean).abs());
        scale.add(w * (l.abs() + mean.abs()));
    }
    // the boundary is computed two ways (here and by the cumulative sums in
    // the zero thresholds); treat rounding-level disagreement as a tie
    if 2.0 * lambda >= spread.value() - 8.0 * f64::EPSILON * scale.value() {
        return ThresholdPair {
            a: mean,
            b: mean,
            at_mean: true,
        };
    }

    // upper: on [L_{j-1}, L_j] the left side is S_j − W_j b for the blocks >= j
    let mut b = levels[m - 1];
    let (mut s, mut w) = (KahanSum::new(), KahanSum::new());
    for j in (0..m).rev() {
        s.add(weights[j] * levels[j]);
        w.add(weights[j]);
        let floor = if j > 0 { levels[j - 1] } else { f64::NEG_INFINITY };
        if j == 0 || s.value() - w.value() * floor >= lambda {
            b = (s.value() - lambda) / w.value();
            break;
        }
    }

    let mut a = levels[0];
    let (mut s, mut w) = (KahanSum::new(), KahanSum::new());
    for j in 0..m {
        s.add(weights[j] * levels[j]);
        w.add(weights[j]);
        let ceil = if j + 1 < m { levels[j + 1] } else { f64::INFINITY };
        if j + 1 == m || w.value() * ceil - s.value() >= lambda {
            a = (s.value() + lambda) / w.value();
            break;
        }
    }

    // rounding can only push the roots past the mean by an ulp or so
    ThresholdPair {
        a: a.min(mean),
        b: b.max(mean),
        at_mean: false,
    }
}

pub fn thresholds_for(r: &Regressogram, s: &SortedSeries, lambda: f64) -> Result<ThresholdPair> {
    check_lambda(lambda)?;
    let blocks = r.blocks();
    if blocks.last().map(|b| b.end) != Some(s.len()) {
        return Err(LisoError::DimensionMismatch {
            what: "regressogram points",
            expected: s.len(),
            got: blocks.last().map(|b| b.end).unwrap_or(0),
        });
    }
    let levels: Vec<f64> = blocks.iter().map(|b| b.level).collect();
    let weights: Vec<f64> = blocks.iter().map(|b| b.weight).collect();
    Ok(thresholds_from_levels(&levels, &weights, lambda))
}

/// Scratch buffers for repeated thresholded PAVA solves.
#[derive(Debug, Default)]
pub(crate) struct ShrinkWork {
    pools: Vec<Pool>,
    levels: Vec<f64>,
    weights: Vec<f64>,
}

/// Thresholded PAVA over sorted, tie-free points; writes the fit into `out`.
pub(crate) fn thresholded_pava(
    y: &[f64],
    w: &[f64],
    lambda: f64,
    work: &mut ShrinkWork,
    out: &mut [f64],
) -> ThresholdPair {
    pava_pools(y, w, &mut work.pools);
    work.levels.clear();
    work.weights.clear();
    for p in &work.pools {
        work.levels.push(p.level());
        work.weights.push(p.weight.value());
    }
    let t = thresholds_from_levels(&work.levels, &work.weights, lambda);
    for (p, &level) in work.pools.iter().zip(&work.levels) {
        let v = t.clip(level);
        out[p.start..p.end].iter_mut().for_each(|o| *o = v);
    }
    t
}

/// Minimizer of `½ Σ w_i (y_i − f(x_i))² + λ·penalty_weight·Δ(f)` over
/// non-decreasing `f`, as a step function on the series points.
pub fn univariate_liso(s: &SortedSeries, lambda: f64, penalty_weight: f64) -> Result<StepFunction> {
    check_lambda(lambda)?;
    if !(penalty_weight > 0.0) || !penalty_weight.is_finite() {
        return Err(LisoError::InvalidConfig(format!(
            "penalty weight must be positive, got {penalty_weight}"
        )));
    }
    let mut out = vec![0.0; s.len()];
    let mut work = ShrinkWork::default();
    thresholded_pava(s.y(), s.w(), lambda * penalty_weight, &mut work, &mut out);
    Ok(StepFunction::from_parts_unchecked(s.x().to_vec(), out))
}

/// `max_m |Σ_{i ≤ m} w_i (y_i − ȳ)|` over the sorted points. At or above this
/// level the penalized fit is constant in either monotone direction and for
/// the unconstrained total-variation fit.
pub fn zero_threshold(s: &SortedSeries) -> f64 {
    let mean = s.weighted_mean();
    let mut acc = KahanSum::new();
    let mut best: f64 = 0.0;
    for (&y, &w) in s.y().iter().zip(s.w()) {
        acc.add(w * (y - mean));
        best = best.max(acc.value().abs());
    }
    best
}

/// Smallest level at which the non-decreasing fit alone is constant:
/// `½ Σ w_i |fit_i − ȳ|`, equivalently `max_m (−Σ_{i ≤ m} w_i (y_i − ȳ))`.
pub fn increasing_zero_threshold(s: &SortedSeries) -> f64 {
    let mean = s.weighted_mean();
    let mut acc = KahanSum::new();
    let mut best: f64 = 0.0;
    for (&y, &w) in s.y().iter().zip(s.w()) {
        acc.add(w * (y - mean));
        best = best.max(-acc.value());
    }
    best
}
