//! Tuning-parameter selection: k-fold cross-validation with the minimum and
//! one-standard-deviation rules, and hold-out validation for one or two
//! penalty levels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backfit::engine::check_grid;
use crate::backfit::{
    covariate_zero_threshold, lambda_max, liso_fit, liso_path, AdditiveModel, Dataset, LisoConfig,
};
use crate::error::{LisoError, Result};
use crate::numeric::{compensated_sum, log_grid};
use crate::variants::{
    adaptive_from_stage1, reweight, sign_discovery_from_stage1, signed_liso, signed_reweight,
    PartWeights, ReweightSpec, Scheme, SignedModel,
};

/// Anything that can fit a model per λ of a decreasing grid.
pub trait PathFitter: Sync {
    fn fit_path(&self, train: &Dataset, grid: &[f64]) -> Result<Vec<AdditiveModel>>;
    /// Smallest λ giving the zero model on `d`.
    fn lambda_max(&self, d: &Dataset) -> Result<f64>;
}

/// Plain penalized fits with warm starts along the grid.
pub struct Plain(pub LisoConfig);

impl PathFitter for Plain {
    fn fit_path(&self, train: &Dataset, grid: &[f64]) -> Result<Vec<AdditiveModel>> {
        liso_path(train, grid, &self.0)
    }

    fn lambda_max(&self, d: &Dataset) -> Result<f64> {
        Ok(lambda_max(d, &self.0))
    }
}

/// Signed (increasing + decreasing part) fits with fixed part weights.
pub struct Signed {
    pub base: LisoConfig,
    pub weights: Vec<PartWeights>,
}

fn signed_lambda_max(d: &Dataset, weights: &[PartWeights], base: &LisoConfig) -> f64 {
    (0..d.p())
        .filter(|&k| !base.is_excluded(k))
        .filter_map(|k| {
            let w = weights.get(k).copied().unwrap_or(PartWeights::BOTH);
            let smallest = [w.plus, w.minus].into_iter().flatten().fold(f64::INFINITY, f64::min);
            (smallest.is_finite() && smallest > 0.0).then(|| covariate_zero_threshold(d, k) / smallest)
        })
        .fold(0.0, f64::max)
}

impl PathFitter for Signed {
    fn fit_path(&self, train: &Dataset, grid: &[f64]) -> Result<Vec<AdditiveModel>> {
        check_grid(grid)?;
        grid.iter()
            .map(|&l| signed_liso(train, l, &self.weights, &self.base).map(|s| s.model))
            .collect()
    }

    fn lambda_max(&self, d: &Dataset) -> Result<f64> {
        Ok(signed_lambda_max(d, &self.weights, &self.base))
    }
}

/// Second stage of a reweighted fit, the first stage fixed at `lambda0` and
/// refitted on every training split.
pub struct AdaptiveStage2 {
    pub base: LisoConfig,
    pub spec: ReweightSpec,
    pub lambda0: f64,
}

impl AdaptiveStage2 {
    fn stage2_config(&self, train: &Dataset, first: &AdditiveModel) -> LisoConfig {
        let rw = reweight(first, &self.spec, f64::INFINITY, &self.base.excluded);
        let weights = match self.spec.scheme {
            Scheme::Adaptive => rw.weights,
            // at the top of the grid the SCAD knee is large and every weight is one
            Scheme::Scad { .. } => vec![1.0; train.p()],
        };
        let mut cfg = self.base.clone().with_penalty_weights(weights);
        cfg.excluded = rw.excluded;
        cfg
    }
}

impl PathFitter for AdaptiveStage2 {
    fn fit_path(&self, train: &Dataset, grid: &[f64]) -> Result<Vec<AdditiveModel>> {
        check_grid(grid)?;
        self.spec.validate()?;
        let first = liso_fit(train, &self.base.with_lambda(self.lambda0))?;
        if self.spec.scheme == Scheme::Adaptive && self.spec.iterations == 1 && !first.is_zero() {
            let cfg = self.stage2_config(train, &first);
            if cfg.excluded.len() < train.p() {
                return liso_path(train, grid, &cfg);
            }
        }
        grid.iter()
            .map(|&l| adaptive_from_stage1(train, &first, l, &self.spec, &self.base))
            .collect()
    }

    fn lambda_max(&self, d: &Dataset) -> Result<f64> {
        let first = liso_fit(d, &self.base.with_lambda(self.lambda0))?;
        if first.is_zero() {
            return Ok(0.0);
        }
        Ok(lambda_max(d, &self.stage2_config(d, &first)))
    }
}

/// Second stage of sign discovery with the first stage fixed at `lambda0`.
pub struct SignDiscoveryStage2 {
    pub base: LisoConfig,
    pub lambda0: f64,
}

impl SignDiscoveryStage2 {
    fn first(&self, d: &Dataset) -> Result<SignedModel> {
        signed_liso(d, self.lambda0, &[], &self.base)
    }
}

impl PathFitter for SignDiscoveryStage2 {
    fn fit_path(&self, train: &Dataset, grid: &[f64]) -> Result<Vec<AdditiveModel>> {
        check_grid(grid)?;
        let first = self.first(train)?;
        grid.iter()
            .map(|&l| sign_discovery_from_stage1(train, &first, l, &self.base).map(|s| s.model))
            .collect()
    }

    fn lambda_max(&self, d: &Dataset) -> Result<f64> {
        let first = self.first(d)?;
        if first.model.is_zero() {
            return Ok(0.0);
        }
        Ok(signed_lambda_max(d, &signed_reweight(&first), &self.base))
    }
}

/// 50 log-spaced values from the fitter's `lambda_max` on `d` down by 1000×.
pub fn default_grid(d: &Dataset, fitter: &dyn PathFitter) -> Result<Vec<f64>> {
    let hi = fitter.lambda_max(d)?;
    if !(hi > 0.0) {
        return Err(LisoError::InvalidConfig("lambda_max is zero; nothing to tune".into()));
    }
    Ok(log_grid(hi, hi * 1e-3, 50))
}

/// Weighted mean squared error of `model` on `d` (original response scale).
pub fn holdout_mse(model: &AdditiveModel, d: &Dataset) -> Result<f64> {
    let pred = model.predict_columns(d.columns())?;
    let w = d.weights();
    let num = compensated_sum(
        d.y()
            .iter()
            .zip(&pred)
            .zip(w)
            .map(|((y, p), w)| w * (y + d.y_mean() - p).powi(2)),
    );
    Ok(num / compensated_sum(w.iter().copied()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub grid: Vec<f64>,
    /// `fold_mse[f][j]`: held-out error of fold `f` at `grid[j]`.
    pub fold_mse: Vec<Vec<f64>>,
    pub mean_mse: Vec<f64>,
    pub sd_mse: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_1se: f64,
    pub index_min: usize,
    pub index_1se: usize,
    pub folds: usize,
    pub seed: u64,
}

impl CvReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `lambda,mean_mse,sd_mse` rows in grid order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,mean_mse,sd_mse\n");
        for ((l, m), sd) in self.grid.iter().zip(&self.mean_mse).zip(&self.sd_mse) {
            s.push_str(&format!("{l},{m},{sd}\n"));
        }
        s
    }
}

/// Fold label of every observation: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![0; n];
    for (i, &obs) in perm.iter().enumerate() {
        out[obs] = i % folds;
    }
    out
}

pub fn cross_validate(
    d: &Dataset,
    grid: &[f64],
    folds: usize,
    fitter: &dyn PathFitter,
    seed: u64,
) -> Result<CvReport> {
    check_grid(grid)?;
    let n = d.n();
    if folds < 2 || folds > n {
        return Err(LisoError::InvalidConfig(format!(
            "folds must lie in [2, {n}], got {folds}"
        )));
    }
    if n - n.div_ceil(folds) < 2 {
        return Err(LisoError::InvalidConfig(
            "every training split needs at least 2 observations".into(),
        ));
    }
    let label = fold_assignment(n, folds, seed);
    let fold_mse: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..n).filter(|&i| label[i] != f).collect();
            let test_idx: Vec<usize> = (0..n).filter(|&i| label[i] == f).collect();
            let train = d.subset(&train_idx)?;
            let y: Vec<f64> = test_idx.iter().map(|&i| d.y()[i] + d.y_mean()).collect();
            let w: Vec<f64> = test_idx.iter().map(|&i| d.weights()[i]).collect();
            let cols: Vec<Vec<f64>> = d
                .columns()
                .iter()
                .map(|c| test_idx.iter().map(|&i| c[i]).collect())
                .collect();
            let wsum = compensated_sum(w.iter().copied());
            fitter
                .fit_path(&train, grid)?
                .iter()
                .map(|m| {
                    let pred = m.predict_columns(&cols)?;
                    Ok(compensated_sum(
                        y.iter().zip(&pred).zip(&w).map(|((y, p), w)| w * (y - p).powi(2)),
                    ) / wsum)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let k = folds as f64;
    let mean_mse: Vec<f64> = (0..grid.len())
        .map(|j| compensated_sum(fold_mse.iter().map(|f| f[j])) / k)
        .collect();
    let sd_mse: Vec<f64> = (0..grid.len())
        .map(|j| {
            let ss = compensated_sum(fold_mse.iter().map(|f| (f[j] - mean_mse[j]).powi(2)));
            (ss / (k - 1.0)).sqrt()
        })
        .collect();
    // grid is descending: scanning forward with a strict comparison keeps the larger λ on ties
    let mut index_min = 0;
    for j in 1..grid.len() {
        if mean_mse[j] < mean_mse[index_min] {
            index_min = j;
        }
    }
    let bound = mean_mse[index_min] + sd_mse[index_min];
    let index_1se = (0..=index_min).find(|&j| mean_mse[j] <= bound).unwrap_or(index_min);
    Ok(CvReport {
        grid: grid.to_vec(),
        fold_mse,
        mean_mse,
        sd_mse,
        lambda_min: grid[index_min],
        lambda_1se: grid[index_1se],
        index_min,
        index_1se,
        folds,
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct Tuned {
    pub lambda: f64,
    pub index: usize,
    pub validation_mse: f64,
    pub model: AdditiveModel,
}

/// The grid λ whose training fit predicts `valid` best (ties to larger λ).
pub fn validation_tune(
    train: &Dataset,
    valid: &Dataset,
    grid: &[f64],
    fitter: &dyn PathFitter,
) -> Result<Tuned> {
    check_grid(grid)?;
    let models = fitter.fit_path(train, grid)?;
    let mut best: Option<Tuned> = None;
    for (j, m) in models.into_iter().enumerate() {
        let mse = holdout_mse(&m, valid)?;
        if best.as_ref().map_or(true, |b| mse < b.validation_mse) {
            best = Some(Tuned {
                lambda: grid[j],
                index: j,
                validation_mse: mse,
                model: m,
            });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Two-stage procedures whose penalty pair is tuned jointly.
#[derive(Debug, Clone)]
pub enum TwoStage {
    Reweighted { base: LisoConfig, spec: ReweightSpec },
    SignDiscovery { base: LisoConfig },
}

impl TwoStage {
    fn stage2(&self, lambda0: f64) -> Box<dyn PathFitter> {
        match self {
            TwoStage::Reweighted { base, spec } => Box::new(AdaptiveStage2 {
                base: base.clone(),
                spec: *spec,
                lambda0,
            }),
            TwoStage::SignDiscovery { base } => Box::new(SignDiscoveryStage2 {
                base: base.clone(),
                lambda0,
            }),
        }
    }

    fn stage1_lambda_max(&self, d: &Dataset) -> f64 {
        match self {
            TwoStage::Reweighted { base, .. } => lambda_max(d, base),
            TwoStage::SignDiscovery { base } => signed_lambda_max(d, &[], base),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairTuned {
    pub lambda0: f64,
    pub lambda1: f64,
    pub validation_mse: f64,
    pub model: AdditiveModel,
}

/// Points per axis of the coarse product grid.
pub const PAIR_GRID: usize = 10;
/// Points per axis of the local refinement.
pub const PAIR_REFINE: usize = 5;

/// Hold-out tuning of `(λ₀, λ₁)`: a 10×10 product grid (λ₀ log-spaced below
/// the first-stage `lambda_max`, λ₁ as log-spaced fractions of the
/// second-stage `lambda_max`), then a 5×5 log grid spanning the neighbours of
/// the best coarse cell. Ties go to the larger penalties.
pub fn validation_tune_pair(train: &Dataset, valid: &Dataset, stage: &TwoStage) -> Result<PairTuned> {
    let hi = stage.stage1_lambda_max(train);
    if !(hi > 0.0) {
        return Err(LisoError::InvalidConfig("lambda_max is zero; nothing to tune".into()));
    }
    let l0_grid = log_grid(hi, hi * 1e-3, PAIR_GRID);
    let ratios = log_grid(1.0, 1e-3, PAIR_GRID);

    let eval = |l0s: &[f64], rs: &[f64]| -> Result<Vec<(usize, usize, PairTuned)>> {
        l0s.par_iter()
            .enumerate()
            .map(|(i, &l0)| {
                let fitter = stage.stage2(l0);
                let top = fitter.lambda_max(train)?;
                if !(top > 0.0) {
                    // first stage is zero: the pair reduces to the constant model
                    let m = fitter.fit_path(train, &[0.0])?.remove(0);
                    let mse = holdout_mse(&m, valid)?;
                    return Ok(vec![(i, 0, PairTuned { lambda0: l0, lambda1: 0.0, validation_mse: mse, model: m })]);
                }
                let grid: Vec<f64> = rs.iter().map(|r| r * top).collect();
                let models = fitter.fit_path(train, &grid)?;
                models
                    .into_iter()
                    .enumerate()
                    .map(|(j, m)| {
                        let mse = holdout_mse(&m, valid)?;
                        Ok((i, j, PairTuned { lambda0: l0, lambda1: grid[j], validation_mse: mse, model: m }))
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<_>>>>()
            .map(|v| v.into_iter().flatten().collect())
    };
    let pick = |cands: Vec<(usize, usize, PairTuned)>| {
        let mut best: Option<(usize, usize, PairTuned)> = None;
        for c in cands {
            if best.as_ref().map_or(true, |b| c.2.validation_mse < b.2.validation_mse) {
                best = Some(c);
            }
        }
        best.expect("non-empty candidate set")
    };

    let (bi, bj, coarse) = pick(eval(&l0_grid, &ratios)?);
    let span = |g: &[f64], i: usize| {
        let hi = g[i.saturating_sub(1)];
        let lo = g[(i + 1).min(g.len() - 1)];
        log_grid(hi, lo, PAIR_REFINE)
    };
    let (fine0, fine1) = (span(&l0_grid, bi), span(&ratios, bj));
    let (_, _, fine) = pick(eval(&fine0, &fine1)?);
    Ok(if fine.validation_mse < coarse.validation_mse { fine } else { coarse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn data(n: usize, p: usize, seed: u64, noise: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| 2.0 * r[0] + (r[1] > 0.0) as u8 as f64 + noise * rng.gen_range(-1.0..1.0))
            .collect();
        Dataset::from_rows(&rows, y, None).unwrap()
    }

    #[test]
    fn folds_partition() {
        let a = fold_assignment(23, 5, 1);
        assert_eq!(a, fold_assignment(23, 5, 1));
        for f in 0..5 {
            let c = a.iter().filter(|&&x| x == f).count();
            assert!(c == 4 || c == 5);
        }
    }

    #[test]
    fn above_lambda_max_scores_training_mean() {
        let d = data(20, 2, 2, 0.5);
        let fitter = Plain(LisoConfig::default());
        let top = 10.0 * fitter.lambda_max(&d).unwrap();
        let r = cross_validate(&d, &[top], 4, &fitter, 3).unwrap();
        let label = fold_assignment(20, 4, 3);
        let y = d.response();
        for f in 0..4 {
            let tr: Vec<f64> = (0..20).filter(|&i| label[i] != f).map(|i| y[i]).collect();
            let te: Vec<f64> = (0..20).filter(|&i| label[i] == f).map(|i| y[i]).collect();
            let m = tr.iter().sum::<f64>() / tr.len() as f64;
            let mse = te.iter().map(|v| (v - m).powi(2)).sum::<f64>() / te.len() as f64;
            assert!((r.fold_mse[f][0] - mse).abs() < 1e-12);
        }
    }

    #[test]
    fn leave_one_out_and_rules() {
        let d = data(5, 2, 4, 0.1);
        let fitter = Plain(LisoConfig::default());
        let grid = default_grid(&d, &fitter).unwrap();
        let r = cross_validate(&d, &grid, 5, &fitter, 0).unwrap();
        assert!(r.lambda_1se >= r.lambda_min);
        let min = r.mean_mse.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(r.mean_mse[r.index_min], min);
        let bound = r.mean_mse[r.index_min] + r.sd_mse[r.index_min];
        assert!(r.mean_mse[r.index_1se] <= bound);
        assert!((0..r.index_1se).all(|j| r.mean_mse[j] > bound));
        assert!(cross_validate(&d, &grid, 1, &fitter, 0).is_err());
        assert!(cross_validate(&d, &grid, 6, &fitter, 0).is_err());
        assert!(cross_validate(&d, &[], 2, &fitter, 0).is_err());
    }

    #[test]
    fn cv_is_deterministic_and_u_shaped() {
        let d = data(100, 10, 5, 1.0);
        let fitter = Plain(LisoConfig::default());
        let grid = default_grid(&d, &fitter).unwrap();
        let a = cross_validate(&d, &grid, 5, &fitter, 7).unwrap();
        let b = cross_validate(&d, &grid, 5, &fitter, 7).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(a.mean_mse[0] > a.mean_mse[a.index_min]);
        assert!(a.to_csv().starts_with("lambda,mean_mse,sd_mse\n"));
    }

    #[test]
    fn validation_tuning() {
        let d = data(60, 3, 6, 0.0);
        let fitter = Plain(LisoConfig::default());
        let grid = default_grid(&d, &fitter).unwrap();
        let t = validation_tune(&d, &d, &grid, &fitter).unwrap();
        assert!(t.index > 40);
        assert!(t.validation_mse < 1e-2);
        let single = validation_tune(&d, &d, &[0.5], &fitter).unwrap();
        assert_eq!(single.lambda, 0.5);
    }

    #[test]
    fn noise_selects_large_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mk = |rng: &mut ChaCha8Rng| {
            let rows: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.gen(), rng.gen()]).collect();
            let y = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Dataset::from_rows(&rows, y, None).unwrap()
        };
        let (train, valid) = (mk(&mut rng), mk(&mut rng));
        let fitter = Plain(LisoConfig::default());
        let grid = default_grid(&train, &fitter).unwrap();
        let t = validation_tune(&train, &valid, &grid, &fitter).unwrap();
        assert!(t.index < grid.len() / 4, "index {}", t.index);
    }

    #[test]
    fn pair_tuning_runs_for_both_procedures() {
        let train = data(60, 4, 9, 0.3);
        let valid = data(60, 4, 10, 0.3);
        let base = LisoConfig::default();
        let a = validation_tune_pair(
            &train,
            &valid,
            &TwoStage::Reweighted { base: base.clone(), spec: ReweightSpec::adaptive() },
        )
        .unwrap();
        assert!(a.validation_mse < 0.2);
        let s = validation_tune_pair(&train, &valid, &TwoStage::SignDiscovery { base }).unwrap();
        assert!(s.validation_mse < 0.3);
    }
}
