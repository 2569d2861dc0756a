//! Right-continuous step functions on the real line.
//!
//! A [`StepFunction`] takes `values[j]` on `[knots[j], knots[j + 1])`, the last
//! value on `[knots[last], ∞)` and the first value on `(−∞, knots[0])`, so it is
//! flat outside the observed range. Component fits of an additive model are
//! stored this way, with one knot per distinct observed covariate value.

use serde::{Deserialize, Serialize};

use crate::error::{LisoError, Result};
use crate::numeric::{weighted_mean, KahanSum};

/// Relative size below which a successive difference counts as no change.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepFunction")]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawStepFunction> for StepFunction {
    type Error = LisoError;

    fn try_from(raw: RawStepFunction) -> Result<Self> {
        StepFunction::new(raw.knots, raw.values)
    }
}

/// How a step function is evaluated between knots. Fitting always uses `Step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    #[default]
    Step,
    /// Linear interpolation between adjacent knots, flat outside. Prediction only.
    Linear,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(LisoError::Empty("step function knots"));
        }
        if knots.len() != values.len() {
            return Err(LisoError::DimensionMismatch {
                what: "step function values",
                expected: knots.len(),
                got: values.len(),
            });
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(LisoError::NonFinite("step function"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LisoError::InvalidConfig(
                "step function knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots, values })
    }

    /// The identically-zero function on the given knots.
    pub fn zero(knots: Vec<f64>) -> Result<Self> {
        let values = vec![0.0; knots.len()];
        Self::new(knots, values)
    }

    pub(crate) fn from_parts_unchecked(knots: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(knots.len(), values.len());
        debug_assert!(!knots.is_empty());
        Self { knots, values }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        // number of knots <= x
        let idx = self.knots.partition_point(|&k| k <= x);
        self.values[idx.saturating_sub(1)]
    }

    pub fn evaluate_with(&self, x: f64, mode: EvalMode) -> f64 {
        match mode {
            EvalMode::Step => self.evaluate(x),
            EvalMode::Linear => {
                let idx = self.knots.partition_point(|&k| k <= x);
                if idx == 0 {
                    self.values[0]
                } else if idx == self.knots.len() {
                    self.values[idx - 1]
                } else {
                    let (x0, x1) = (self.knots[idx - 1], self.knots[idx]);
                    let (y0, y1) = (self.values[idx - 1], self.values[idx]);
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    pub fn total_variation(&self) -> f64 {
        let mut acc = KahanSum::new();
        for w in self.values.windows(2) {
            acc.add((w[1] - w[0]).abs());
        }
        acc.value()
    }

    /// Number of knot intervals across which the value changes.
    pub fn step_count(&self) -> usize {
        self.values
            .windows(2)
            .filter(|w| !is_tied(w[0], w[1]))
            .count()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| is_tied(w[0], w[1]))
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self::from_parts_unchecked(
            self.knots.clone(),
            self.values.iter().map(|v| v + c).collect(),
        )
    }

    pub fn negated(&self) -> Self {
        Self::from_parts_unchecked(self.knots.clone(), self.values.iter().map(|v| -v).collect())
    }

    /// Pointwise sum of two functions defined on the same knots.
    pub fn add(&self, other: &StepFunction) -> Result<Self> {
        if self.knots != other.knots {
            return Err(LisoError::InvalidConfig(
                "cannot add step functions with different knots".into(),
            ));
        }
        Ok(Self::from_parts_unchecked(
            self.knots.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn weighted_mean(&self, knot_weights: &[f64]) -> Result<f64> {
        check_knot_weights(knot_weights, self.len())?;
        Ok(weighted_mean(&self.values, knot_weights))
    }

    /// Subtracts the weighted mean of the knot values.
    pub fn center(&self, knot_weights: &[f64]) -> Result<Self> {
        let m = self.weighted_mean(knot_weights)?;
        Ok(self.shifted(-m))
    }

    /// Splits the function into a non-decreasing part collecting the upward
    /// increments and a non-increasing part collecting the downward ones, each
    /// recentred to weighted mean zero over the knots.
    pub fn decompose(&self, knot_weights: &[f64]) -> Result<SignedParts> {
        check_knot_weights(knot_weights, self.len())?;
        let n = self.len();
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        let (mut up, mut down) = (0.0, 0.0);
        plus.push(0.0);
        minus.push(0.0);
        for w in self.values.windows(2) {
            let d = w[1] - w[0];
            if !is_tied(w[0], w[1]) {
                if d > 0.0 {
                    up += d;
                } else {
                    down += d;
                }
            }
            plus.push(up);
            minus.push(down);
        }
        let mp = weighted_mean(&plus, knot_weights);
        let mm = weighted_mean(&minus, knot_weights);
        plus.iter_mut().for_each(|v| *v -= mp);
        minus.iter_mut().for_each(|v| *v -= mm);
        Ok(SignedParts {
            plus: Self::from_parts_unchecked(self.knots.clone(), plus),
            minus: Self::from_parts_unchecked(self.knots.clone(), minus),
        })
    }
}

/// The monotone plus/minus decomposition of a step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedParts {
    pub plus: StepFunction,
    pub minus: StepFunction,
}

impl SignedParts {
    pub fn sum(&self) -> StepFunction {
        self.plus
            .add(&self.minus)
            .expect("decomposition parts share knots")
    }
}

pub(crate) fn is_tied(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

fn check_knot_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(LisoError::DimensionMismatch {
            what: "knot weights",
            expected: n,
            got: w.len(),
        });
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(LisoError::InvalidWeights("knot weights must be non-negative".into()));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(LisoError::InvalidWeights("knot weights sum to zero".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sf(knots: &[f64], values: &[f64]) -> StepFunction {
        StepFunction::new(knots.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_is_right_continuous_and_flat_outside() {
        let f = sf(&[0.0, 1.0], &[2.0, 5.0]);
        assert_eq!(f.evaluate(0.5), 2.0);
        assert_eq!(f.evaluate(1.0), 5.0);
        assert_eq!(f.evaluate(-7.0), 2.0);
        assert_eq!(f.evaluate(9.0), 5.0);
        assert_eq!(f.evaluate(0.0), 2.0);
    }

    #[test]
    fn linear_mode_interpolates_between_knots_only() {
        let f = sf(&[0.0, 1.0], &[2.0, 5.0]);
        assert_eq!(f.evaluate_with(0.5, EvalMode::Linear), 3.5);
        assert_eq!(f.evaluate_with(-1.0, EvalMode::Linear), 2.0);
        assert_eq!(f.evaluate_with(3.0, EvalMode::Linear), 5.0);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(StepFunction::new(vec![], vec![]).is_err());
        assert!(StepFunction::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(StepFunction::new(vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(StepFunction::new(vec![0.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn total_variation_examples() {
        let k4 = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(sf(&k4, &[0.0, 1.0, 1.0, 3.0]).total_variation(), 3.0);
        assert_eq!(sf(&k4[..3], &[0.0, 1.0, -1.0]).total_variation(), 3.0);
        assert_eq!(sf(&k4[..3], &[2.5, 2.5, 2.5]).total_variation(), 0.0);
    }

    #[test]
    fn center_examples() {
        let f = sf(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).center(&[1.0; 3]).unwrap();
        assert_eq!(f.values(), &[-1.0, 0.0, 1.0]);
        let g = sf(&[0.0, 1.0], &[0.0, 0.0]).center(&[1.0, 3.0]).unwrap();
        assert_eq!(g.values(), &[0.0, 0.0]);
        let h = sf(&[0.0, 1.0], &[4.0, 0.0]).center(&[1.0, 3.0]).unwrap();
        assert_eq!(h.values(), &[3.0, -1.0]);
        assert!(sf(&[0.0], &[1.0]).center(&[0.0]).is_err());
    }

    #[test]
    fn decompose_examples() {
        let k = [0.0, 1.0, 2.0];
        let w = [1.0; 3];
        let mono = sf(&k, &[-1.0, 0.0, 1.0]).decompose(&w).unwrap();
        assert_eq!(mono.plus.values(), &[-1.0, 0.0, 1.0]);
        assert!(mono.minus.is_zero());

        // hand recursion: plus increments [0, +1, 0] -> [0,1,1] - 2/3,
        // minus increments [0, 0, -2] -> [0,0,-2] + 2/3
        let v = sf(&k, &[0.0, 1.0, -1.0]).decompose(&w).unwrap();
        let ep = [-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let em = [2.0 / 3.0, 2.0 / 3.0, -4.0 / 3.0];
        for j in 0..3 {
            assert!((v.plus.values()[j] - ep[j]).abs() < 1e-15);
            assert!((v.minus.values()[j] - em[j]).abs() < 1e-15);
        }

        let z = sf(&k, &[0.0; 3]).decompose(&w).unwrap();
        assert!(z.plus.is_zero() && z.minus.is_zero());
    }

    fn arb_function() -> impl Strategy<Value = (StepFunction, Vec<f64>)> {
        (1usize..25).prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(0.1f64..4.0, n),
            )
                .prop_map(move |(values, w)| {
                    let knots = (0..n).map(|i| i as f64 * 0.5).collect();
                    (StepFunction::new(knots, values).unwrap(), w)
                })
        })
    }

    proptest! {
        #[test]
        fn decomposition_reconstructs_and_splits_variation((f, w) in arb_function()) {
            let fc = f.center(&w).unwrap();
            let parts = fc.decompose(&w).unwrap();
            prop_assert!(parts.plus.is_non_decreasing());
            prop_assert!(parts.minus.is_non_increasing());
            let sum = parts.sum();
            for (a, b) in sum.values().iter().zip(fc.values()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            let tv = fc.total_variation();
            let split = parts.plus.total_variation() + parts.minus.total_variation();
            prop_assert!((tv - split).abs() <= 1e-12 * tv.max(1.0));

            // uncentred input: the offset is one constant across knots
            let raw = f.decompose(&w).unwrap().sum();
            let offs: Vec<f64> = raw.values().iter().zip(f.values()).map(|(a, b)| a - b).collect();
            for o in &offs {
                prop_assert!((o - offs[0]).abs() < 1e-10);
            }
        }

        #[test]
        fn variation_is_shift_invariant((f, _w) in arb_function(), c in -10.0f64..10.0) {
            let a = f.total_variation();
            let b = f.shifted(c).total_variation();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }

        #[test]
        fn monotone_input_has_zero_minus((f, w) in arb_function()) {
            let mut v = f.values().to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let g = StepFunction::new(f.knots().to_vec(), v).unwrap().center(&w).unwrap();
            let parts = g.decompose(&w).unwrap();
            prop_assert!(parts.minus.values().iter().all(|&m| m.abs() < 1e-12));
        }
    }

    #[test]
    fn json_uses_knots_and_values_and_round_trips() {
        let f = sf(&[0.1, 0.7], &[1.0 / 3.0, 2.0]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with("{\"knots\":[0.1,0.7],\"values\":[0.3333333333333333,"));
        let back: StepFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<StepFunction>("{\"knots\":[1,0],\"values\":[0,0]}").is_err());
    }
}
