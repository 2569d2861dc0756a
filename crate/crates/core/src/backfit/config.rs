use serde::{Deserialize, Serialize};

use crate::error::{check_lambda, LisoError, Result};

/// Shape constraint on one additive component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Increasing,
    Decreasing,
    /// Any shape, penalized by total variation; fitted as a paired
    /// increasing/decreasing component on the same covariate.
    Unconstrained,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Increasing => "increasing",
            Direction::Decreasing => "decreasing",
            Direction::Unconstrained => "unconstrained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CycleOrder {
    #[default]
    Fixed,
    /// Fresh random permutation of the coordinates every cycle.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LisoConfig {
    pub lambda: f64,
    /// One per covariate; empty means all ones. Zero leaves a covariate unpenalized.
    pub penalty_weights: Vec<f64>,
    /// One per covariate; empty means all increasing.
    pub directions: Vec<Direction>,
    /// Covariates held at zero.
    pub excluded: Vec<usize>,
    /// Stop once the relative loss decrease over a cycle is below this...
    pub tol_loss: f64,
    /// ...and no fitted component value moved by more than this.
    pub tol_change: f64,
    pub max_cycles: usize,
    pub cycle_order: CycleOrder,
}

impl Default for LisoConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            penalty_weights: Vec::new(),
            directions: Vec::new(),
            excluded: Vec::new(),
            tol_loss: 1e-9,
            tol_change: 1e-8,
            max_cycles: 10_000,
            cycle_order: CycleOrder::Fixed,
        }
    }
}

impl LisoConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_directions(mut self, directions: Vec<Direction>) -> Self {
        self.directions = directions;
        self
    }

    pub fn with_penalty_weights(mut self, weights: Vec<f64>) -> Self {
        self.penalty_weights = weights;
        self
    }

    pub fn with_cycle_order(mut self, order: CycleOrder) -> Self {
        self.cycle_order = order;
        self
    }

    pub fn direction(&self, k: usize) -> Direction {
        self.directions.get(k).copied().unwrap_or_default()
    }

    pub fn penalty_weight(&self, k: usize) -> f64 {
        self.penalty_weights.get(k).copied().unwrap_or(1.0)
    }

    pub fn is_excluded(&self, k: usize) -> bool {
        self.excluded.contains(&k)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        check_lambda(self.lambda)?;
        if !self.penalty_weights.is_empty() && self.penalty_weights.len() != p {
            return Err(LisoError::DimensionMismatch {
                what: "penalty weights",
                expected: p,
                got: self.penalty_weights.len(),
            });
        }
        if self
            .penalty_weights
            .iter()
            .any(|&w| !(w >= 0.0) || !w.is_finite())
        {
            return Err(LisoError::InvalidConfig(
                "penalty weights must be finite and non-negative".into(),
            ));
        }
        if !self.directions.is_empty() && self.directions.len() != p {
            return Err(LisoError::DimensionMismatch {
                what: "directions",
                expected: p,
                got: self.directions.len(),
            });
        }
        if let Some(&k) = self.excluded.iter().find(|&&k| k >= p) {
            return Err(LisoError::InvalidConfig(format!(
                "excluded covariate {k} out of range"
            )));
        }
        if !(self.tol_loss > 0.0) || !(self.tol_change > 0.0) {
            return Err(LisoError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_cycles == 0 {
            return Err(LisoError::InvalidConfig("max_cycles must be at least 1".into()));
        }
        Ok(())
    }
}
