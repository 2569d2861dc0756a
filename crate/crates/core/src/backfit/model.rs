use serde::{Deserialize, Serialize};

use super::config::Direction;
use super::data::Dataset;
use crate::error::{LisoError, Result};
use crate::numeric::compensated_sum;
use crate::stepfn::{EvalMode, StepFunction};

/// Increments smaller than this do not count as steps.
pub const STEP_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub covariate: usize,
    pub direction: Direction,
    #[serde(flatten)]
    pub function: StepFunction,
}

impl Component {
    pub fn is_active(&self) -> bool {
        self.steps() > 0
    }

    pub fn steps(&self) -> usize {
        self.function
            .values()
            .windows(2)
            .filter(|w| (w[1] - w[0]).abs() >= STEP_SNAP)
            .count()
    }

    pub fn total_variation(&self) -> f64 {
        self.function.total_variation()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub cycles: usize,
    pub converged: bool,
    pub final_loss: f64,
    pub last_relative_decrease: f64,
    pub last_max_change: f64,
    /// Stopped by the slow-drift rule: the fit had settled while individual
    /// components were still trading mass.
    #[serde(default)]
    pub drift: bool,
    /// Penalty lost when paired increasing/decreasing parts were merged into
    /// one unconstrained component; zero at an exact optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonicalization_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub loss_trace: Vec<f64>,
}

/// `intercept + Σ_k f_k(x_k)` with each `f_k` a step function centred to
/// weighted mean zero over the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveModel {
    pub intercept: f64,
    pub lambda: f64,
    pub components: Vec<Component>,
    pub diagnostics: Diagnostics,
}

impl AdditiveModel {
    /// The constant model at the response mean.
    pub fn zero(d: &Dataset, lambda: f64, directions: &[Direction]) -> Self {
        let components = (0..d.p())
            .map(|k| Component {
                covariate: k,
                direction: directions.get(k).copied().unwrap_or_default(),
                function: StepFunction::from_parts_unchecked(
                    d.column_index(k).knots().to_vec(),
                    vec![0.0; d.column_index(k).groups()],
                ),
            })
            .collect();
        Self {
            intercept: d.y_mean(),
            lambda,
            components,
            diagnostics: Diagnostics {
                converged: true,
                ..Diagnostics::default()
            },
        }
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> &StepFunction {
        &self.components[k].function
    }

    pub fn active_set(&self) -> Vec<usize> {
        self.components
            .iter()
            .filter(|c| c.is_active())
            .map(|c| c.covariate)
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| !c.is_active())
    }

    /// `Σ_k weight_k Δ(f_k)`; empty weights mean all ones.
    pub fn penalty(&self, weights: &[f64]) -> f64 {
        compensated_sum(
            self.components
                .iter()
                .enumerate()
                .map(|(k, c)| weights.get(k).copied().unwrap_or(1.0) * c.total_variation()),
        )
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        self.predict_row_with(row, EvalMode::Step)
    }

    pub fn predict_row_with(&self, row: &[f64], mode: EvalMode) -> Result<f64> {
        if row.len() != self.p() {
            return Err(LisoError::DimensionMismatch {
                what: "prediction row",
                expected: self.p(),
                got: row.len(),
            });
        }
        let mut acc = self.intercept;
        for (c, &x) in self.components.iter().zip(row) {
            if !x.is_finite() {
                return Err(LisoError::NonFinite("prediction covariates"));
            }
            acc += c.function.evaluate_with(x, mode);
        }
        Ok(acc)
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn predict_with(&self, rows: &[Vec<f64>], mode: EvalMode) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_row_with(r, mode)).collect()
    }

    /// Predictions for column-major covariates.
    pub fn predict_columns(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
        if columns.len() != self.p() {
            return Err(LisoError::DimensionMismatch {
                what: "prediction columns",
                expected: self.p(),
                got: columns.len(),
            });
        }
        let n = columns.first().map(|c| c.len()).unwrap_or(0);
        let mut out = vec![self.intercept; n];
        for (c, col) in self.components.iter().zip(columns) {
            if col.len() != n {
                return Err(LisoError::DimensionMismatch {
                    what: "prediction column length",
                    expected: n,
                    got: col.len(),
                });
            }
            if c.function.is_zero() {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(col) {
                if !x.is_finite() {
                    return Err(LisoError::NonFinite("prediction covariates"));
                }
                *o += c.function.evaluate(x);
            }
        }
        Ok(out)
    }

    pub fn fitted(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.predict_columns(d.columns())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> AdditiveModel {
        AdditiveModel {
            intercept: 1.5,
            lambda: 0.25,
            components: vec![
                Component {
                    covariate: 0,
                    direction: Direction::Increasing,
                    function: StepFunction::new(vec![0.0, 1.0, 2.0], vec![-1.0, 0.0, 1.0]).unwrap(),
                },
                Component {
                    covariate: 1,
                    direction: Direction::Unconstrained,
                    function: StepFunction::new(vec![-1.0, 1.0], vec![0.1 + 0.2, -0.3]).unwrap(),
                },
            ],
            diagnostics: Diagnostics {
                cycles: 3,
                converged: true,
                final_loss: 0.1,
                loss_trace: vec![1.0, 0.5, 0.1],
                ..Diagnostics::default()
            },
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = model();
        let back = AdditiveModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.components, m.components);
        assert_eq!(back.intercept, m.intercept);
        assert!(back.diagnostics.loss_trace.is_empty());
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["components"][1]["direction"], "unconstrained");
        assert!(v["components"][0]["knots"].is_array());
    }

    #[test]
    fn rejects_malformed_component() {
        let s = r#"{"intercept":0,"lambda":0,"components":[{"covariate":0,"direction":"increasing",
            "knots":[1.0,0.0],"values":[0.0,0.0]}],"diagnostics":{"cycles":0,"converged":true,
            "final_loss":0,"last_relative_decrease":0,"last_max_change":0}}"#;
        assert!(AdditiveModel::from_json(s).is_err());
    }

    #[test]
    fn predicts_right_continuous_steps() {
        let m = model();
        assert_eq!(m.predict_row(&[1.0, 1.0]).unwrap(), 1.5 + 0.0 - 0.3);
        assert_eq!(m.predict_row(&[-5.0, 0.0]).unwrap(), 1.5 - 1.0 + 0.1 + 0.2);
        assert!(m.predict_row(&[1.0]).is_err());
        assert_eq!(
            m.predict_columns(&[vec![1.0, -5.0], vec![1.0, 0.0]]).unwrap(),
            m.predict(&[vec![1.0, 1.0], vec![-5.0, 0.0]]).unwrap()
        );
        assert_eq!(m.active_set(), vec![0, 1]);
        assert!((m.penalty(&[2.0, 1.0]) - 4.6).abs() < 1e-12);
    }
}
