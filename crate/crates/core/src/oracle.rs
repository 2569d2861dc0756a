//! Small-instance reference solvers.
//!
//! A monotone step component on covariate `k` is a constant plus a
//! non-negative combination of the indicators `1{x_k ≥ u_i}` over the
//! distinct values `u_2 < … < u_m`, and its total variation is the sum of the
//! coefficients. The penalized additive fit is therefore a non-negative
//! lasso on these indicator columns, solved here by plain coordinate descent
//! on weighted-centred columns. Slow, but independent of the backfitting code.

use nalgebra::{DMatrix, DVector};

use crate::backfit::{AdditiveModel, Dataset, Direction, LisoConfig};
use crate::error::{check_lambda, LisoError, Result};
use crate::numeric::{compensated_sum, weighted_mean};

/// Hard cap on the number of expanded columns.
pub const MAX_COLUMNS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnKey {
    pub covariate: usize,
    /// The column indicates `x ≥ u_{step+1}` (0-based distinct values).
    pub step: usize,
    /// +1 for an increasing part, −1 for a decreasing one.
    pub sign: f64,
    pub penalty_weight: f64,
}

#[derive(Debug, Clone)]
pub struct ExpandedDesign {
    /// Raw signed 0/±1 indicator columns.
    pub columns: Vec<Vec<f64>>,
    pub column_index: Vec<ColumnKey>,
    weights: Vec<f64>,
}

/// Increasing columns for every covariate.
pub fn build_expanded(d: &Dataset) -> Result<ExpandedDesign> {
    build_expanded_with(d, &LisoConfig::default())
}

/// Columns for the directions, exclusions and penalty weights of `cfg`;
/// unconstrained covariates get both an increasing and a decreasing set.
pub fn build_expanded_with(d: &Dataset, cfg: &LisoConfig) -> Result<ExpandedDesign> {
    let bound = d.p() * (d.n() - 1);
    if bound > MAX_COLUMNS {
        return Err(LisoError::OracleGuard {
            columns: bound,
            limit: MAX_COLUMNS,
        });
    }
    let mut columns = Vec::new();
    let mut column_index = Vec::new();
    for k in 0..d.p() {
        if cfg.is_excluded(k) {
            continue;
        }
        let signs: &[f64] = match cfg.direction(k) {
            Direction::Increasing => &[1.0],
            Direction::Decreasing => &[-1.0],
            Direction::Unconstrained => &[1.0, -1.0],
        };
        let knots = d.column_index(k).knots();
        for &sign in signs {
            for step in 0..knots.len() - 1 {
                let cut = knots[step + 1];
                columns.push(
                    d.column(k)
                        .iter()
                        .map(|&x| if x >= cut { sign } else { 0.0 })
                        .collect(),
                );
                column_index.push(ColumnKey {
                    covariate: k,
                    step,
                    sign,
                    penalty_weight: cfg.penalty_weight(k),
                });
            }
        }
    }
    Ok(ExpandedDesign {
        columns,
        column_index,
        weights: d.weights().to_vec(),
    })
}

impl ExpandedDesign {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Columns shifted to weighted mean zero.
    pub fn centred(&self) -> Vec<Vec<f64>> {
        self.columns
            .iter()
            .map(|c| {
                let m = weighted_mean(c, &self.weights);
                c.iter().map(|v| v - m).collect()
            })
            .collect()
    }

    /// `offset + X̃β` with the raw columns.
    pub fn reconstruct(&self, beta: &[f64], offset: f64) -> Vec<f64> {
        let n = self.weights.len();
        (0..n)
            .map(|i| {
                offset
                    + compensated_sum(self.columns.iter().zip(beta).map(|(c, b)| c[i] * b))
            })
            .collect()
    }

    /// Coefficients and offset reproducing `model` on the training data:
    /// each step of a component becomes the coefficient of its column.
    /// Fails if a component steps against every available column sign.
    pub fn coefficients(&self, d: &Dataset, model: &AdditiveModel) -> Result<(Vec<f64>, f64)> {
        let mut beta = vec![0.0; self.len()];
        let mut offset = model.intercept;
        for k in 0..d.p() {
            let knots = d.column_index(k).knots();
            let f = model.component(k);
            let vals: Vec<f64> = knots.iter().map(|&x| f.evaluate(x)).collect();
            offset += vals[0];
            for step in 0..knots.len() - 1 {
                let inc = vals[step + 1] - vals[step];
                if inc == 0.0 {
                    continue;
                }
                let pos = self
                    .column_index
                    .iter()
                    .position(|c| c.covariate == k && c.step == step && c.sign * inc > 0.0)
                    .ok_or_else(|| {
                        LisoError::InvalidConfig(format!(
                            "component {k} steps in a direction the design does not allow"
                        ))
                    })?;
                beta[pos] = inc.abs();
            }
        }
        Ok((beta, offset))
    }
}

#[derive(Debug, Clone)]
pub struct NnLassoFit {
    pub beta: Vec<f64>,
    /// Weighted-centred fitted values (the response is centred too).
    pub fitted: Vec<f64>,
    pub objective: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

/// Minimizes `½Σw(y − X̃_c β)² + λ Σ_j pw_j β_j` over `β ≥ 0` for the centred
/// response of `d`, to per-coordinate KKT residual `tol`.
pub fn nn_lasso_solve(x: &ExpandedDesign, d: &Dataset, lambda: f64, tol: f64) -> Result<NnLassoFit> {
    nn_lasso_solve_capped(x, d, lambda, tol, 1_000_000)
}

pub fn nn_lasso_solve_capped(
    x: &ExpandedDesign,
    d: &Dataset,
    lambda: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<NnLassoFit> {
    check_lambda(lambda)?;
    let w = d.weights();
    let cols = x.centred();
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().zip(w).map(|(v, w)| w * v * v).sum())
        .collect();
    let pen: Vec<f64> = x.column_index.iter().map(|c| lambda * c.penalty_weight).collect();
    let mut beta = vec![0.0; cols.len()];
    let mut r = d.y().to_vec();
    let grad = |c: &[f64], r: &[f64]| -> f64 { c.iter().zip(r).zip(w).map(|((c, r), w)| w * c * r).sum() };

    let kkt = |beta: &[f64], r: &[f64]| -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..cols.len() {
            if norms[j] == 0.0 {
                continue;
            }
            let g = grad(&cols[j], r);
            let v = if beta[j] > 0.0 { (g - pen[j]).abs() } else { (g - pen[j]).max(0.0) };
            worst = worst.max(v);
        }
        worst
    };

    let mut sweeps = 0;
    loop {
        let resid = kkt(&beta, &r);
        if resid <= tol {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(LisoError::NotConverged {
                iterations: sweeps,
                residual: resid,
            });
        }
        // a batch of sweeps between (comparatively costly) KKT checks
        for _ in 0..10 {
            for j in 0..cols.len() {
                if norms[j] == 0.0 {
                    continue;
                }
                let g = grad(&cols[j], &r);
                let new = ((g + norms[j] * beta[j] - pen[j]) / norms[j]).max(0.0);
                let delta = new - beta[j];
                if delta != 0.0 {
                    for (ri, c) in r.iter_mut().zip(&cols[j]) {
                        *ri -= delta * c;
                    }
                    beta[j] = new;
                }
            }
            sweeps += 1;
        }
        // refresh the residual to keep rounding from accumulating
        r.copy_from_slice(d.y());
        for (c, &b) in cols.iter().zip(&beta) {
            if b != 0.0 {
                for (ri, v) in r.iter_mut().zip(c) {
                    *ri -= b * v;
                }
            }
        }
    }
    let fitted: Vec<f64> = d.y().iter().zip(&r).map(|(y, r)| y - r).collect();
    let fit = 0.5 * compensated_sum(r.iter().zip(w).map(|(r, w)| w * r * r));
    let penalty = compensated_sum(beta.iter().zip(&pen).map(|(b, p)| b * p));
    let kkt_residual = kkt(&beta, &r);
    Ok(NnLassoFit {
        beta,
        fitted,
        objective: fit + penalty,
        sweeps,
        kkt_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrrepresentableReport {
    /// `X_{S^c}ᵀ X_S (X_Sᵀ X_S)⁻¹ λ1`, one entry per column outside `S`.
    pub values: Vec<f64>,
    pub pass: bool,
    /// Some entry equals `λ` to rounding.
    pub boundary: bool,
}

/// Irrepresentable check on arbitrary columns with observation weights.
pub fn irrepresentable(
    columns: &[Vec<f64>],
    weights: &[f64],
    active: &[usize],
    lambda: f64,
) -> Result<IrrepresentableReport> {
    check_lambda(lambda)?;
    let n = weights.len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(LisoError::DimensionMismatch {
            what: "design column length",
            expected: n,
            got: columns.iter().map(|c| c.len()).find(|&l| l != n).unwrap_or(0),
        });
    }
    if let Some(&j) = active.iter().find(|&&j| j >= columns.len()) {
        return Err(LisoError::InvalidConfig(format!("active column {j} out of range")));
    }
    let inactive: Vec<usize> = (0..columns.len()).filter(|j| !active.contains(j)).collect();
    if inactive.is_empty() || active.is_empty() {
        return Ok(IrrepresentableReport {
            values: vec![0.0; inactive.len()],
            pass: true,
            boundary: false,
        });
    }
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mat = |idx: &[usize]| {
        DMatrix::from_fn(n, idx.len(), |i, j| columns[idx[j]][i] * sw[i])
    };
    let xs = mat(active);
    let xc = mat(&inactive);
    let gram = xs.transpose() * &xs;
    let svd = gram.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax.max(f64::MIN_POSITIVE)) {
        return Err(LisoError::RankDeficient);
    }
    let rhs = DVector::from_element(active.len(), lambda);
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or(LisoError::RankDeficient)?;
    let values: Vec<f64> = (xc.transpose() * (&xs * coef)).iter().copied().collect();
    let slack = 1e-9 * lambda.max(f64::MIN_POSITIVE);
    let pass = values.iter().all(|&v| v <= lambda + slack);
    let boundary = values.iter().any(|&v| (v - lambda).abs() <= slack);
    Ok(IrrepresentableReport { values, pass, boundary })
}

/// Irrepresentable check on the weighted-centred expanded design.
pub fn irrepresentable_check(x: &ExpandedDesign, active: &[usize], lambda: f64) -> Result<IrrepresentableReport> {
    irrepresentable(&x.centred(), &x.weights, active, lambda)
}
