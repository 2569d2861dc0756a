//! Simulation scenarios, comparison studies and the sparsity-recovery study.
//!
//! Every replication draws from its own ChaCha stream (master seed, stream =
//! replication index), so results do not depend on thread scheduling.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::backfit::{liso_path_until, AdditiveModel, Dataset, LisoConfig};
use crate::error::{LisoError, Result};
use crate::modelsel::{default_grid, holdout_mse, validation_tune, validation_tune_pair, Plain, TwoStage};
use crate::numeric::{compensated_sum, log_grid};
use crate::variants::ReweightSpec;

/// Seed of the large draw used to calibrate the noise level.
pub const CALIBRATION_SEED: u64 = 0x5EED_CA11;
pub const CALIBRATION_SAMPLES: usize = 100_000;
/// Correlation between neighbouring covariates in the correlated design.
pub const AR_RHO: f64 = 0.5;
const SIGNALS: usize = 5;
const POWERS: [f64; 5] = [0.2, 0.3, 0.4, 0.8, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    AllLinear,
    MixedPowers,
    Artificial4Var,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::AllLinear => "all_linear",
            ScenarioKind::MixedPowers => "mixed_powers",
            ScenarioKind::Artificial4Var => "artificial_4var",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all_linear" => Ok(ScenarioKind::AllLinear),
            "mixed_powers" => Ok(ScenarioKind::MixedPowers),
            "artificial_4var" => Ok(ScenarioKind::Artificial4Var),
            _ => Err(LisoError::InvalidConfig(format!("unknown scenario '{s}'"))),
        }
    }

    fn signal_count(&self) -> usize {
        match self {
            ScenarioKind::Artificial4Var => 4,
            _ => SIGNALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub p: usize,
    /// `Var(signal) / σ²`; infinite means noiseless.
    pub snr: f64,
    pub correlated: bool,
    pub seed: u64,
    /// Size of the noiseless test set.
    pub n_test: usize,
}

impl SimScenario {
    pub fn new(kind: ScenarioKind, n: usize, p: usize, snr: f64, seed: u64) -> Self {
        Self {
            kind,
            n,
            p,
            snr,
            correlated: false,
            seed,
            n_test: 10_000,
        }
    }

    pub fn label(&self) -> String {
        if self.correlated {
            format!("{}_correlated", self.kind.as_str())
        } else {
            self.kind.as_str().to_string()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.snr > 0.0) {
            return Err(LisoError::InvalidConfig(format!("snr must be positive, got {}", self.snr)));
        }
        if self.p < self.kind.signal_count() {
            return Err(LisoError::InvalidConfig(format!(
                "{} needs at least {} covariates, got {}",
                self.kind.as_str(),
                self.kind.signal_count(),
                self.p
            )));
        }
        if self.n < 2 || self.n_test < 2 {
            return Err(LisoError::InvalidConfig("need at least 2 observations".into()));
        }
        Ok(())
    }
}

/// The regression function of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub kind: ScenarioKind,
    pub covariates: Vec<usize>,
    pub shifts: Vec<f64>,
}

fn signed_power(x: f64, a: f64) -> f64 {
    x.signum() * x.abs().powf(a)
}

impl Signal {
    fn draw(kind: ScenarioKind, p: usize, rng: &mut ChaCha8Rng) -> Self {
        match kind {
            ScenarioKind::Artificial4Var => Self {
                kind,
                covariates: vec![0, 1, 2, 3],
                shifts: vec![],
            },
            ScenarioKind::AllLinear => Self {
                kind,
                covariates: sample(rng, p, SIGNALS).into_vec(),
                shifts: vec![],
            },
            ScenarioKind::MixedPowers => {
                let covariates = sample(rng, p, SIGNALS).into_vec();
                let shifts = (0..SIGNALS).map(|_| rng.gen_range(-0.25..0.25)).collect();
                Self { kind, covariates, shifts }
            }
        }
    }

    /// The signal at one observation, `x(j)` giving covariate `j`.
    pub fn value(&self, x: impl Fn(usize) -> f64) -> f64 {
        let c = &self.covariates;
        match self.kind {
            ScenarioKind::AllLinear => c.iter().map(|&j| x(j)).sum(),
            ScenarioKind::MixedPowers => c
                .iter()
                .zip(&self.shifts)
                .zip(POWERS)
                .map(|((&j, s), a)| signed_power(x(j) + s, a))
                .sum(),
            ScenarioKind::Artificial4Var => {
                let x1 = x(c[0]).max(0.0);
                2.0 * x1 * x1
                    + x(c[1])
                    + signed_power(x(c[2]), 0.2)
                    + if x(c[3]) > 0.0 { 2.0 } else { 0.0 }
            }
        }
    }

    fn max_covariate(&self) -> usize {
        self.covariates.iter().copied().max().unwrap_or(0)
    }
}

/// Covariate columns `0..cols` on `(−1, 1)`: independent uniforms, or the
/// rescaled Gaussian copula of an AR(1) chain with correlation `2^{−|i−j|}`.
pub fn draw_design(rng: &mut ChaCha8Rng, n: usize, cols: usize, correlated: bool) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(n); cols];
    if !correlated {
        for col in out.iter_mut() {
            col.extend((0..n).map(|_| rng.gen_range(-1.0..1.0)));
        }
        return out;
    }
    let phi = Normal::new(0.0, 1.0).expect("standard normal");
    let innov = (1.0 - AR_RHO * AR_RHO).sqrt();
    for _ in 0..n {
        let mut z: f64 = rng.sample(StandardNormal);
        for (j, col) in out.iter_mut().enumerate() {
            if j > 0 {
                let e: f64 = rng.sample(StandardNormal);
                z = AR_RHO * z + innov * e;
            }
            col.push(2.0 * phi.cdf(z) - 1.0);
        }
    }
    out
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = compensated_sum(v.iter().copied()) / n;
    compensated_sum(v.iter().map(|x| (x - m).powi(2))) / (n - 1.0)
}

/// Signal values of `signal` on a design with columns `0..=max_covariate`.
fn signal_on(signal: &Signal, cols: &[Vec<f64>], n: usize) -> Vec<f64> {
    (0..n).map(|i| signal.value(|j| cols[j][i])).collect()
}

/// Noise standard deviation giving `Var(signal)/σ² = snr`, the signal
/// variance taken from a fixed large Monte Carlo draw of the design.
pub fn calibrate_sigma(signal: &Signal, correlated: bool, snr: f64) -> f64 {
    if snr.is_infinite() {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED);
    let cols = draw_design(&mut rng, CALIBRATION_SAMPLES, signal.max_covariate() + 1, correlated);
    let values = signal_on(signal, &cols, CALIBRATION_SAMPLES);
    (sample_variance(&values) / snr).sqrt()
}

#[derive(Debug, Clone)]
pub struct SimData {
    pub train: Dataset,
    pub validation: Dataset,
    /// Noiseless responses.
    pub test: Dataset,
    pub sigma: f64,
    pub signal: Signal,
}

/// The generator of replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Train and validation sets of size `n` with independent noise, and a
/// noiseless test set, for one replication of `s` (its stream is `s.seed`).
pub fn generate(s: &SimScenario) -> Result<SimData> {
    generate_replication(s, 0)
}

pub fn generate_replication(s: &SimScenario, rep: u64) -> Result<SimData> {
    s.validate()?;
    let mut rng = replication_rng(s.seed, rep);
    let signal = Signal::draw(s.kind, s.p, &mut rng);
    let sigma = calibrate_sigma(&signal, s.correlated, s.snr);
    // population standardization of U(−1, 1) for the four-covariate model
    let scale = if s.kind == ScenarioKind::Artificial4Var { 3f64.sqrt() } else { 1.0 };
    let make = |rng: &mut ChaCha8Rng, n: usize, noisy: bool| -> Result<Dataset> {
        let cols = draw_design(rng, n, s.p, s.correlated);
        let mut y = signal_on(&signal, &cols, n);
        if noisy && sigma > 0.0 {
            for v in y.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *v += sigma * e;
            }
        }
        let cols = cols
            .into_iter()
            .map(|c| c.into_iter().map(|v| v * scale).collect())
            .collect();
        Dataset::new(cols, y, None)
    };
    let train = make(&mut rng, s.n, true)?;
    let validation = make(&mut rng, s.n, true)?;
    let test = make(&mut rng, s.n_test, false)?;
    Ok(SimData {
        train,
        validation,
        test,
        sigma,
        signal,
    })
}

/// Mean squared prediction error on a (noiseless) test set.
pub fn mse(model: &AdditiveModel, test: &Dataset) -> Result<f64> {
    holdout_mse(model, test)
}

/// Each run's errors divided by that run's smallest error.
pub fn relative_mse(table: &[Vec<f64>]) -> Vec<Vec<f64>> {
    table
        .iter()
        .map(|run| {
            let best = run.iter().copied().fold(f64::INFINITY, f64::min);
            run.iter().map(|v| v / best).collect()
        })
        .collect()
}

/// One-sided paired t-test of `mean(a − b) > 0`; returns `(t, p-value)`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> (f64, f64) {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let mean = compensated_sum(diffs.iter().copied()) / n;
    let sd = sample_variance(&diffs).sqrt();
    if sd == 0.0 {
        let p = if mean > 0.0 { 0.0 } else { 1.0 };
        return (if mean > 0.0 { f64::INFINITY } else { 0.0 }, p);
    }
    let t = mean / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("degrees of freedom");
    (t, 1.0 - dist.cdf(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Plain,
    Adaptive,
    Scad { a: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Plain => "liso",
            Method::Adaptive => "liso_adaptive",
            Method::Scad { .. } => "liso_scad",
        }
    }

    /// Fit on `train` with penalties tuned on `valid`.
    pub fn fit_tuned(&self, train: &Dataset, valid: &Dataset, base: &LisoConfig) -> Result<AdditiveModel> {
        match self {
            Method::Plain => {
                let fitter = Plain(base.clone());
                let grid = default_grid(train, &fitter)?;
                Ok(validation_tune(train, valid, &grid, &fitter)?.model)
            }
            Method::Adaptive | Method::Scad { .. } => {
                let spec = match self {
                    Method::Scad { a } => ReweightSpec::scad(*a),
                    _ => ReweightSpec::adaptive(),
                };
                let stage = TwoStage::Reweighted { base: base.clone(), spec };
                Ok(validation_tune_pair(train, valid, &stage)?.model)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub method: String,
    pub snr: f64,
    pub mean_mse: f64,
    pub mean_relative_mse: f64,
    /// Standard error of `mean_mse`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub methods: Vec<Method>,
    /// `mse[r][m]`: test error of method `m` in replication `r`.
    pub mse: Vec<Vec<f64>>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonResult {
    pub fn method_mse(&self, m: usize) -> Vec<f64> {
        self.mse.iter().map(|r| r[m]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scenario,method,snr,mean_mse,mean_relative_mse,se\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.scenario, r.method, r.snr, r.mean_mse, r.mean_relative_mse, r.se
            ));
        }
        s
    }

    /// Per-replication errors, one row per replication.
    pub fn replications_csv(&self) -> String {
        let mut s = String::from("replication");
        for m in &self.methods {
            s.push(',');
            s.push_str(m.name());
        }
        s.push('\n');
        for (r, row) in self.mse.iter().enumerate() {
            s.push_str(&r.to_string());
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Runs every method on `replications` independent draws of `s`, tuning each
/// on the validation set and scoring on the noiseless test set.
pub fn comparison_study(
    s: &SimScenario,
    methods: &[Method],
    replications: usize,
    base: &LisoConfig,
) -> Result<ComparisonResult> {
    if replications == 0 || methods.is_empty() {
        return Err(LisoError::InvalidConfig("need at least one replication and one method".into()));
    }
    s.validate()?;
    let mse: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let data = generate_replication(s, r as u64)?;
            methods
                .iter()
                .map(|m| mse(&m.fit_tuned(&data.train, &data.validation, base)?, &data.test))
                .collect()
        })
        .collect::<Result<_>>()?;
    let rel = relative_mse(&mse);
    let reps = replications as f64;
    let rows = methods
        .iter()
        .enumerate()
        .map(|(m, method)| {
            let col: Vec<f64> = mse.iter().map(|r| r[m]).collect();
            let mean = compensated_sum(col.iter().copied()) / reps;
            let se = if replications > 1 {
                (sample_variance(&col) / reps).sqrt()
            } else {
                0.0
            };
            ComparisonRow {
                scenario: s.label(),
                method: method.name().to_string(),
                snr: s.snr,
                mean_mse: mean,
                mean_relative_mse: compensated_sum(rel.iter().map(|r| r[m])) / reps,
                se,
            }
        })
        .collect();
    Ok(ComparisonResult {
        methods: methods.to_vec(),
        mse,
        rows,
    })
}

/// The fixed master data set of the recovery study: standardized covariate
/// columns and the response of the four-covariate model.
#[derive(Debug, Clone)]
pub struct MasterData {
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub sigma: f64,
}

pub fn recovery_master(n: usize, p: usize, snr: f64, seed: u64) -> Result<MasterData> {
    let s = SimScenario {
        n,
        ..SimScenario::new(ScenarioKind::Artificial4Var, n, p, snr, seed)
    };
    s.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signal = Signal::draw(ScenarioKind::Artificial4Var, p, &mut rng);
    let sigma = calibrate_sigma(&signal, false, snr);
    let mut columns = draw_design(&mut rng, n, p, false);
    let mut y = signal_on(&signal, &columns, n);
    if sigma > 0.0 {
        for v in y.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v += sigma * e;
        }
    }
    let nf = n as f64;
    for col in columns.iter_mut() {
        let m = compensated_sum(col.iter().copied()) / nf;
        let sd = (compensated_sum(col.iter().map(|v| (v - m).powi(2))) / nf).sqrt();
        col.iter_mut().for_each(|v| *v = (*v - m) / sd);
    }
    let m = compensated_sum(y.iter().copied()) / nf;
    y.iter_mut().for_each(|v| *v -= m);
    Ok(MasterData { columns, y, sigma })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub p_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub snr: f64,
    pub seed: u64,
    pub master_n: usize,
    /// Penalty grid: `grid_points` log-spaced values from each subsample's
    /// `lambda_max` down by the factor `grid_ratio`.
    pub grid_points: usize,
    pub grid_ratio: f64,
}

impl RecoveryConfig {
    pub fn new(p_list: Vec<usize>, n_list: Vec<usize>, replications: usize, snr: f64, seed: u64) -> Self {
        Self {
            p_list,
            n_list,
            replications,
            snr,
            seed,
            master_n: 1024,
            grid_points: 100,
            grid_ratio: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub p: usize,
    pub n: usize,
    pub replications: usize,
    pub successes: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub rows: Vec<RecoveryRow>,
}

impl RecoveryResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,n,replications,successes,proportion\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.p, r.n, r.replications, r.successes, r.proportion
            ));
        }
        s
    }

    /// Proportions for one `p`, in `n` order.
    pub fn curve(&self, p: usize) -> Vec<(usize, f64)> {
        self.rows.iter().filter(|r| r.p == p).map(|r| (r.n, r.proportion)).collect()
    }
}

/// Whether some grid fit is active on exactly `truth`.
pub fn recovers(d: &Dataset, grid: &[f64], truth: &[usize]) -> Result<bool> {
    let mut found = false;
    liso_path_until(d, grid, &LisoConfig::default(), |m| {
        found = m.active_set() == truth;
        found
    })?;
    Ok(found)
}

pub fn recovery_study(cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    if cfg.replications == 0 || cfg.grid_points == 0 || !(cfg.grid_ratio > 0.0 && cfg.grid_ratio < 1.0) {
        return Err(LisoError::InvalidConfig("invalid recovery configuration".into()));
    }
    if let Some(&n) = cfg.n_list.iter().find(|&&n| n > cfg.master_n || n < 2) {
        return Err(LisoError::InvalidConfig(format!(
            "subsample size {n} must lie in [2, {}]",
            cfg.master_n
        )));
    }
    let p_max = cfg.p_list.iter().copied().max().unwrap_or(0);
    if p_max < 4 {
        return Err(LisoError::InvalidConfig("p must be at least 4".into()));
    }
    let master = recovery_master(cfg.master_n, p_max, cfg.snr, cfg.seed)?;
    let truth = [0usize, 1, 2, 3];
    let cells: Vec<(usize, usize)> = cfg
        .p_list
        .iter()
        .flat_map(|&p| cfg.n_list.iter().map(move |&n| (p, n)))
        .collect();
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(p, n))| {
            let successes = (0..cfg.replications)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replication_rng(cfg.seed, ((cell as u64) << 32) | r as u64);
                    let rows = sample(&mut rng, cfg.master_n, n).into_vec();
                    let cols: Vec<Vec<f64>> = master.columns[..p]
                        .iter()
                        .map(|c| rows.iter().map(|&i| c[i]).collect())
                        .collect();
                    let y = rows.iter().map(|&i| master.y[i]).collect();
                    let d = Dataset::new(cols, y, None)?;
                    let hi = crate::backfit::lambda_max(&d, &LisoConfig::default());
                    if !(hi > 0.0) {
                        return Ok(false);
                    }
                    recovers(&d, &log_grid(hi, hi * cfg.grid_ratio, cfg.grid_points), &truth)
                })
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&s| s)
                .count();
            Ok(RecoveryRow {
                p,
                n,
                replications: cfg.replications,
                successes,
                proportion: successes as f64 / cfg.replications as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryResult { rows })
}

/// Monotone trend check for success proportions ordered by `n`: no
/// consecutive pair shows a significant decrease (one-sided two-proportion
/// z-test at `alpha`), and the last proportion is at least the first.
pub fn trend_non_decreasing(props: &[f64], replications: usize, alpha: f64) -> bool {
    let z_crit = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - alpha);
    let m = replications as f64;
    let significant_drop = props.windows(2).any(|w| {
        let pooled = 0.5 * (w[0] + w[1]);
        let se = (pooled * (1.0 - pooled) * 2.0 / m).sqrt();
        if se == 0.0 {
            w[0] > w[1]
        } else {
            (w[0] - w[1]) / se > z_crit
        }
    });
    !significant_drop && props.last() >= props.first()
}
