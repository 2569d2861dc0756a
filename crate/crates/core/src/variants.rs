//! Reweighted and sign-free fits built on the backfitting engine.
//!
//! * Adaptive: refit with penalty weights `1/Δ(f⁰_k)` from a first-stage fit.
//! * SCAD: refit with weights from the derivative of the SCAD penalty at
//!   `Δ(f⁰_k)`, which leaves large components unpenalized.
//! * Signed: each covariate gets an increasing part and a decreasing part with
//!   separate weights; their sum is a component of bounded total variation.

use serde::{Deserialize, Serialize};

use crate::backfit::engine::{self, Coord};
use crate::backfit::{liso_fit, AdditiveModel, Component, Dataset, Direction, LisoConfig};
use crate::error::{check_lambda, LisoError, Result};
use crate::numeric::compensated_sum;
use crate::stepfn::StepFunction;

/// Components with total variation below this are treated as absent.
pub const DROP_THRESHOLD: f64 = 1e-10;
/// Upper bound on any data-driven penalty weight.
pub const WEIGHT_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    Adaptive,
    Scad { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ZeroPolicy {
    /// Covariates fitted as zero are removed from later stages.
    #[default]
    Drop,
    /// Covariates fitted as zero stay in with unit weight (SCAD only).
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReweightSpec {
    pub scheme: Scheme,
    pub iterations: usize,
    pub zero_policy: ZeroPolicy,
}

impl ReweightSpec {
    pub fn adaptive() -> Self {
        Self {
            scheme: Scheme::Adaptive,
            iterations: 1,
            zero_policy: ZeroPolicy::Drop,
        }
    }

    pub fn scad(a: f64) -> Self {
        Self {
            scheme: Scheme::Scad { a },
            iterations: 1,
            zero_policy: ZeroPolicy::Drop,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(LisoError::InvalidConfig("iterations must be at least 1".into()));
        }
        match self.scheme {
            Scheme::Scad { a } if !(a > 2.0) || !a.is_finite() => Err(LisoError::InvalidConfig(
                format!("SCAD parameter must exceed 2, got {a}"),
            )),
            Scheme::Adaptive if self.zero_policy == ZeroPolicy::Keep => Err(LisoError::InvalidConfig(
                "adaptive weights are infinite for zero components; they must be dropped".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// `SCAD′(t; λ, a) / λ`: one up to `λ`, then linearly down to zero at `aλ`.
pub fn scad_weight(t: f64, lambda: f64, a: f64) -> f64 {
    if t <= lambda {
        1.0
    } else {
        (a * lambda - t).max(0.0) / ((a - 1.0) * lambda)
    }
}

pub fn scad_weights(f0: &AdditiveModel, lambda: f64, a: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(LisoError::InvalidLambda(lambda));
    }
    if !(a > 2.0) {
        return Err(LisoError::InvalidConfig(format!("SCAD parameter must exceed 2, got {a}")));
    }
    Ok(f0
        .components
        .iter()
        .map(|c| scad_weight(c.total_variation(), lambda, a))
        .collect())
}

/// Stage-2 penalty weights and the covariates dropped from stage 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Reweight {
    pub weights: Vec<f64>,
    pub excluded: Vec<usize>,
}

/// Weights for the next stage given the previous fit. `scad_lambda` is the
/// SCAD knee on the total-variation scale.
pub fn reweight(prev: &AdditiveModel, spec: &ReweightSpec, scad_lambda: f64, already: &[usize]) -> Reweight {
    let mut weights = Vec::with_capacity(prev.p());
    let mut excluded = already.to_vec();
    for (k, c) in prev.components.iter().enumerate() {
        let tv = c.total_variation();
        let zero = tv < DROP_THRESHOLD;
        if zero && spec.zero_policy == ZeroPolicy::Drop && !excluded.contains(&k) {
            excluded.push(k);
        }
        let w = match spec.scheme {
            Scheme::Adaptive if zero => 1.0,
            Scheme::Adaptive => (1.0 / tv).min(WEIGHT_CAP),
            Scheme::Scad { a } => scad_weight(tv, scad_lambda, a),
        };
        weights.push(w);
    }
    excluded.sort_unstable();
    Reweight { weights, excluded }
}

/// Two-stage (or iterated) reweighted fit: a first fit at `lambda0` sets the
/// penalty weights of a refit at `lambda1`. Directions, tolerances and cycle
/// order come from `base`; its λ is ignored.
///
/// For SCAD the knee is `lambda1 / Σw`, the penalty level on the
/// per-observation scale of the total variations it is compared against.
pub fn adaptive_liso(
    d: &Dataset,
    lambda0: f64,
    lambda1: f64,
    spec: &ReweightSpec,
    base: &LisoConfig,
) -> Result<AdditiveModel> {
    check_lambda(lambda0)?;
    check_lambda(lambda1)?;
    spec.validate()?;
    let first = liso_fit(d, &base.with_lambda(lambda0))?;
    adaptive_from_stage1(d, &first, lambda1, spec, base)
}

/// As [`adaptive_liso`] with the first stage already fitted.
pub fn adaptive_from_stage1(
    d: &Dataset,
    first: &AdditiveModel,
    lambda1: f64,
    spec: &ReweightSpec,
    base: &LisoConfig,
) -> Result<AdditiveModel> {
    check_lambda(lambda1)?;
    spec.validate()?;
    let directions: Vec<Direction> = (0..d.p()).map(|k| base.direction(k)).collect();
    if first.is_zero() {
        let mut m = AdditiveModel::zero(d, lambda1, &directions);
        m.diagnostics
            .notes
            .push("first-stage fit is zero; returning the zero model".into());
        return Ok(m);
    }
    let total_weight = compensated_sum(d.weights().iter().copied());
    let knee = lambda1 / total_weight;
    let mut prev = first.clone();
    let mut excluded = base.excluded.clone();
    for _ in 0..spec.iterations {
        let rw = reweight(&prev, spec, knee, &excluded);
        excluded = rw.excluded;
        if excluded.len() == d.p() {
            let mut m = AdditiveModel::zero(d, lambda1, &directions);
            m.diagnostics.notes.push("every covariate was dropped".into());
            return Ok(m);
        }
        let mut cfg = base.with_lambda(lambda1).with_penalty_weights(rw.weights);
        cfg.excluded = excluded.clone();
        prev = liso_fit(d, &cfg)?;
    }
    Ok(prev)
}

/// Penalty weights of the increasing and decreasing parts of one covariate;
/// `None` removes that part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartWeights {
    pub plus: Option<f64>,
    pub minus: Option<f64>,
}

impl PartWeights {
    pub const BOTH: PartWeights = PartWeights {
        plus: Some(1.0),
        minus: Some(1.0),
    };

    pub fn from_direction(d: Direction) -> Self {
        match d {
            Direction::Increasing => Self {
                plus: Some(1.0),
                minus: None,
            },
            Direction::Decreasing => Self {
                plus: None,
                minus: Some(1.0),
            },
            Direction::Unconstrained => Self::BOTH,
        }
    }

    fn direction(&self) -> Direction {
        match (self.plus, self.minus) {
            (Some(_), None) => Direction::Increasing,
            (None, Some(_)) => Direction::Decreasing,
            _ => Direction::Unconstrained,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedPart {
    pub covariate: usize,
    pub plus: StepFunction,
    pub minus: StepFunction,
}

/// A fit whose components split into increasing and decreasing parts.
/// `components[k] = plus + minus`, with the split minimal:
/// `Δ(plus) + Δ(minus) = Δ(components[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedModel {
    #[serde(flatten)]
    pub model: AdditiveModel,
    pub parts: Vec<SignedPart>,
}

impl SignedModel {
    /// `Σ_k w⁺_k Δ(plus_k) + w⁻_k Δ(minus_k)`; empty weights mean all ones.
    pub fn split_penalty(&self, weights: &[PartWeights]) -> f64 {
        compensated_sum(self.parts.iter().map(|p| {
            let w = weights.get(p.covariate).copied().unwrap_or(PartWeights::BOTH);
            w.plus.unwrap_or(0.0) * p.plus.total_variation()
                + w.minus.unwrap_or(0.0) * p.minus.total_variation()
        }))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn signed_zero(d: &Dataset, lambda: f64, weights: &[PartWeights]) -> SignedModel {
    let dirs: Vec<Direction> = (0..d.p())
        .map(|k| weights.get(k).copied().unwrap_or(PartWeights::BOTH).direction())
        .collect();
    let model = AdditiveModel::zero(d, lambda, &dirs);
    let parts = model
        .components
        .iter()
        .map(|c| SignedPart {
            covariate: c.covariate,
            plus: c.function.clone(),
            minus: c.function.clone(),
        })
        .collect();
    SignedModel { model, parts }
}

/// Minimizes `½Σw(y − Σ_k (g_k + h_k))² + λ Σ_k (w⁺_k Δ(g_k) + w⁻_k Δ(h_k))`
/// over increasing `g_k` and decreasing `h_k`. With unit weights the combined
/// fit minimizes the total-variation penalized loss. Tolerances and cycle
/// order come from `base`; its directions and λ are ignored.
pub fn signed_liso(
    d: &Dataset,
    lambda: f64,
    weights: &[PartWeights],
    base: &LisoConfig,
) -> Result<SignedModel> {
    check_lambda(lambda)?;
    if !weights.is_empty() && weights.len() != d.p() {
        return Err(LisoError::DimensionMismatch {
            what: "part weights",
            expected: d.p(),
            got: weights.len(),
        });
    }
    let pw = |k: usize| weights.get(k).copied().unwrap_or(PartWeights::BOTH);
    for k in 0..d.p() {
        let w = pw(k);
        if [w.plus, w.minus]
            .iter()
            .flatten()
            .any(|&v| !(v >= 0.0) || !v.is_finite())
        {
            return Err(LisoError::InvalidConfig(
                "part weights must be finite and non-negative".into(),
            ));
        }
    }
    let mut coords = Vec::new();
    for k in 0..d.p() {
        if base.is_excluded(k) {
            continue;
        }
        let w = pw(k);
        if let Some(weight) = w.plus {
            coords.push(Coord { covariate: k, sign: 1.0, weight });
        }
        if let Some(weight) = w.minus {
            coords.push(Coord { covariate: k, sign: -1.0, weight });
        }
    }
    let cfg = base.with_lambda(lambda);
    cfg.validate(d.p())?;
    let fit = engine::solve(d, &coords, &cfg, None)?;

    let mut out = signed_zero(d, lambda, weights);
    if base.excluded.len() == d.p() {
        out.model.diagnostics = fit.diagnostics;
        return Ok(out);
    }
    let mut gap: f64 = 0.0;
    for k in 0..d.p() {
        let idx = d.column_index(k);
        let m = idx.groups();
        let mut g = vec![0.0; m];
        let mut h = vec![0.0; m];
        for (c, v) in coords.iter().zip(&fit.values) {
            if c.covariate == k {
                let dst = if c.sign > 0.0 { &mut g } else { &mut h };
                dst.copy_from_slice(v);
            }
        }
        let knots = idx.knots().to_vec();
        let combined: Vec<f64> = g.iter().zip(&h).map(|(a, b)| a + b).collect();
        let f = StepFunction::from_parts_unchecked(knots, combined);
        let before = StepFunction::from_parts_unchecked(idx.knots().to_vec(), g).total_variation()
            + StepFunction::from_parts_unchecked(idx.knots().to_vec(), h).total_variation();
        gap = gap.max(before - f.total_variation());
        let parts = f.decompose(idx.group_weights())?;
        out.model.components[k] = Component {
            covariate: k,
            direction: pw(k).direction(),
            function: f,
        };
        out.parts[k] = SignedPart {
            covariate: k,
            plus: parts.plus,
            minus: parts.minus,
        };
    }
    out.model.diagnostics = fit.diagnostics;
    out.model.diagnostics.canonicalization_gap = Some(gap);
    Ok(out)
}

/// Two-stage sign discovery: an unweighted signed fit at `lambda0`, then a
/// refit at `lambda1` with each part weighted by the inverse of its
/// first-stage total variation and vanished parts removed.
pub fn adaptive_sign_discovery(
    d: &Dataset,
    lambda0: f64,
    lambda1: f64,
    base: &LisoConfig,
) -> Result<SignedModel> {
    let first = signed_liso(d, lambda0, &[], base)?;
    sign_discovery_from_stage1(d, &first, lambda1, base)
}

/// Second-stage weights from a first-stage signed fit.
pub fn signed_reweight(first: &SignedModel) -> Vec<PartWeights> {
    let inv = |f: &StepFunction| {
        let tv = f.total_variation();
        (tv >= DROP_THRESHOLD).then(|| (1.0 / tv).min(WEIGHT_CAP))
    };
    first
        .parts
        .iter()
        .map(|p| PartWeights {
            plus: inv(&p.plus),
            minus: inv(&p.minus),
        })
        .collect()
}

pub fn sign_discovery_from_stage1(
    d: &Dataset,
    first: &SignedModel,
    lambda1: f64,
    base: &LisoConfig,
) -> Result<SignedModel> {
    check_lambda(lambda1)?;
    if first.model.is_zero() {
        let mut m = signed_zero(d, lambda1, &[]);
        m.model
            .diagnostics
            .notes
            .push("first-stage fit is zero; returning the zero model".into());
        return Ok(m);
    }
    let weights = signed_reweight(first);
    let mut cfg = base.clone();
    for (k, w) in weights.iter().enumerate() {
        if w.plus.is_none() && w.minus.is_none() && !cfg.excluded.contains(&k) {
            cfg.excluded.push(k);
        }
    }
    signed_liso(d, lambda1, &weights, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backfit::objective;
    use crate::pava::merge_ties;
    use crate::shrink::univariate_liso;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exact minimizer of `½Σw(y−f)² + λΣ|f_{i+1} − f_i|` for short series:
    /// the optimum is constant on consecutive blocks, and on each block the
    /// stationarity condition with the jump signs `σ` to its neighbours fixes
    /// the level, `v_b = (S_b − λ(σ_{b−1} − σ_b)) / W_b` (σ = +1 for a rise
    /// into the next block). Enumerate splits and sign patterns, keep the
    /// consistent candidates and take the best.
    pub(crate) fn brute_tv(y: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
        let n = y.len();
        let obj = |f: &[f64]| {
            let fit: f64 = f.iter().zip(y).zip(w).map(|((f, y), w)| 0.5 * w * (y - f) * (y - f)).sum();
            fit + lambda * f.windows(2).map(|p| (p[1] - p[0]).abs()).sum::<f64>()
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << (n - 1)) {
            let mut bounds = vec![0];
            for i in 0..n - 1 {
                if mask & (1 << i) != 0 {
                    bounds.push(i + 1);
                }
            }
            bounds.push(n);
            let nb = bounds.len() - 1;
            let jumps = nb - 1;
            for signs in 0u32..(1 << jumps) {
                let sigma = |j: usize| if signs & (1 << j) != 0 { 1.0 } else { -1.0 };
                let mut f = vec![0.0; n];
                let mut levels = Vec::with_capacity(nb);
                for b in 0..nb {
                    let (s, e) = (bounds[b], bounds[b + 1]);
                    let sw: f64 = w[s..e].iter().sum();
                    let sy: f64 = (s..e).map(|i| w[i] * y[i]).sum();
                    let left = if b > 0 { sigma(b - 1) } else { 0.0 };
                    let right = if b + 1 < nb { sigma(b) } else { 0.0 };
                    let v = (sy - lambda * (left - right)) / sw;
                    levels.push(v);
                    f[s..e].iter_mut().for_each(|x| *x = v);
                }
                let consistent = (0..jumps).all(|j| (levels[j + 1] - levels[j]) * sigma(j) >= -1e-12);
                if consistent {
                    let o = obj(&f);
                    if best.as_ref().map_or(true, |(bo, _)| o < *bo) {
                        best = Some((o, f));
                    }
                }
            }
        }
        best.unwrap().1
    }

    #[test]
    fn brute_tv_small_example() {
        // y = [0, 2, 0], λ = 0.5: the middle block drops by λ/1 on each side
        let f = brute_tv(&[0.0, 2.0, 0.0], &[1.0; 3], 0.5);
        let expect = [0.5, 1.0, 0.5];
        for (a, b) in f.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scad_weight_examples() {
        assert_eq!(scad_weight(0.0, 1.0, 3.7), 1.0);
        assert_eq!(scad_weight(3.7, 1.0, 3.7), 0.0);
        assert_eq!(scad_weight(10.0, 1.0, 3.7), 0.0);
        assert!((scad_weight(2.0, 1.0, 3.7) - 1.7 / 2.7).abs() < 1e-15);
        // large a approaches plain weights for Δ ≤ λ
        assert_eq!(scad_weight(0.9, 1.0, 1e12), 1.0);
        assert!(ReweightSpec::scad(2.0).validate().is_err());
        let mut s = ReweightSpec::adaptive();
        s.iterations = 0;
        assert!(s.validate().is_err());
    }

    fn data(n: usize, p: usize, seed: u64, signal: impl Fn(&[f64]) -> f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y = rows.iter().map(|r| signal(r) + 0.1 * rng.gen_range(-1.0..1.0)).collect();
        Dataset::from_rows(&rows, y, None).unwrap()
    }

    #[test]
    fn adaptive_shrinks_active_set() {
        let d = data(80, 6, 1, |r| r[0] + 2.0 * r[1].powi(3));
        let base = LisoConfig::default();
        let l0 = 0.05 * engine::lambda_max(&d, &base);
        let first = liso_fit(&d, &base.with_lambda(l0)).unwrap();
        let m = adaptive_liso(&d, l0, l0, &ReweightSpec::adaptive(), &base).unwrap();
        let s1 = first.active_set();
        assert!(m.active_set().iter().all(|k| s1.contains(k)));
        assert!(m.active_set().contains(&0) && m.active_set().contains(&1));
    }

    #[test]
    fn unit_reweight_reduces_to_plain_fit() {
        let d = data(40, 3, 2, |r| r[0] - r[2]);
        let base = LisoConfig::default().with_directions(vec![
            Direction::Increasing,
            Direction::Increasing,
            Direction::Decreasing,
        ]);
        // a → ∞ with a tiny first stage: every Δ sits below the knee
        let spec = ReweightSpec {
            scheme: Scheme::Scad { a: 1e12 },
            iterations: 1,
            zero_policy: ZeroPolicy::Keep,
        };
        let lmax = engine::lambda_max(&d, &base);
        let l1 = 0.2 * lmax;
        let first = liso_fit(&d, &base.with_lambda(lmax * 0.999)).unwrap();
        assert!(first.components.iter().all(|c| c.total_variation() <= l1 / 40.0));
        let m = adaptive_from_stage1(&d, &first, l1, &spec, &base).unwrap();
        let plain = liso_fit(&d, &base.with_lambda(l1)).unwrap();
        let (a, b) = (m.fitted(&d).unwrap(), plain.fitted(&d).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_first_stage_gives_zero_model() {
        let d = data(30, 2, 3, |r| r[0]);
        let base = LisoConfig::default();
        let lmax = engine::lambda_max(&d, &base);
        let m = adaptive_liso(&d, lmax, 0.1, &ReweightSpec::adaptive(), &base).unwrap();
        assert!(m.is_zero());
        assert!(!m.diagnostics.notes.is_empty());
        let s = adaptive_sign_discovery(&d, 10.0 * lmax, 0.1, &base).unwrap();
        assert!(s.model.is_zero());
    }

    #[test]
    fn signed_fit_of_increasing_signal_matches_univariate() {
        let d = data(30, 1, 4, |r| 2.0 * r[0]);
        let lambda = 1.0;
        let s = signed_liso(&d, lambda, &[], &LisoConfig::default()).unwrap();
        assert!(s.parts[0].minus.is_zero());
        let series = merge_ties(d.column(0), d.y(), d.weights()).unwrap();
        let u = univariate_liso(&series, lambda, 1.0).unwrap();
        for (a, b) in s.model.component(0).values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-7);
        }

        let d = data(30, 1, 4, |r| -2.0 * r[0]);
        let s = signed_liso(&d, lambda, &[], &LisoConfig::default()).unwrap();
        assert!(s.parts[0].plus.is_zero());
        assert!(s.parts[0].minus.total_variation() > 1.0);
    }

    #[test]
    fn signed_fit_matches_tv_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 8;
            let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let y: Vec<f64> = x
                .iter()
                .map(|&v| (v - 3.5).abs() * 0.5 + rng.gen_range(-1.0..1.0))
                .collect();
            let d = Dataset::new(vec![x], y.clone(), None).unwrap();
            let lambda = rng.gen_range(0.05..1.5);
            let s = signed_liso(&d, lambda, &[], &LisoConfig::default()).unwrap();
            let oracle = brute_tv(d.y(), &[1.0; 8], lambda);
            for (a, b) in s.model.component(0).values().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn signed_parts_are_minimal_and_objectives_agree() {
        let d = data(60, 3, 6, |r| r[0] * r[0] - r[1]);
        let s = signed_liso(&d, 0.8, &[], &LisoConfig::default()).unwrap();
        for (p, c) in s.parts.iter().zip(&s.model.components) {
            let split = p.plus.total_variation() + p.minus.total_variation();
            assert!((split - c.total_variation()).abs() < 1e-10);
            let sum = p.plus.add(&p.minus).unwrap();
            for (a, b) in sum.values().iter().zip(c.function.values()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let cfg = LisoConfig::new(0.8);
        let l = objective(&d, &s.model, &cfg).unwrap();
        let fit = l - 0.8 * s.model.penalty(&[]);
        let m = fit + 0.8 * s.split_penalty(&[]);
        assert!((l - m).abs() < 1e-10);
        let back = SignedModel::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.parts, s.parts);
        assert_eq!(back.model.components, s.model.components);
    }

    #[test]
    fn sign_discovery_restricts_to_observed_direction() {
        let d = data(100, 3, 7, |r| 2.0 * r[0] - 2.0 * r[1]);
        let base = LisoConfig::default();
        let l0 = 0.05 * engine::lambda_max(&d, &base);
        let first = signed_liso(&d, l0, &[], &base).unwrap();
        let w = signed_reweight(&first);
        let m = sign_discovery_from_stage1(&d, &first, l0, &base).unwrap();
        for k in 0..3 {
            if w[k].minus.is_none() {
                assert!(m.parts[k].minus.is_zero());
            }
            if w[k].plus.is_none() {
                assert!(m.parts[k].plus.is_zero());
            }
        }
        assert!(m.parts[0].plus.total_variation() > 1.0);
        assert!(m.parts[1].minus.total_variation() > 1.0);
    }
}
