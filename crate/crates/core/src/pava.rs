//! Weighted isotonic least squares on a totally ordered covariate.

use crate::error::{LisoError, Result};
use crate::numeric::KahanSum;

/// Observations sorted by covariate with tied covariate values merged.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSeries {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    counts: Vec<usize>,
}

impl SortedSeries {
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn w(&self) -> &[f64] {
        &self.w
    }
    /// Number of raw observations merged into each point.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    pub fn total_weight(&self) -> f64 {
        let mut s = KahanSum::new();
        self.w.iter().for_each(|&v| s.add(v));
        s.value()
    }
    pub fn weighted_mean(&self) -> f64 {
        crate::numeric::weighted_mean(&self.y, &self.w)
    }

    /// Same points with the responses replaced.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.len() {
            return Err(LisoError::DimensionMismatch {
                what: "series responses",
                expected: self.len(),
                got: y.len(),
            });
        }
        Ok(Self { y, ..self.clone() })
    }
}

/// Sorts by `x` and collapses duplicates into one point carrying the summed
/// weight and the weighted mean response.
pub fn merge_ties(x: &[f64], y: &[f64], w: &[f64]) -> Result<SortedSeries> {
    if x.is_empty() {
        return Err(LisoError::Empty("series"));
    }
    for (what, len) in [("series responses", y.len()), ("series weights", w.len())] {
        if len != x.len() {
            return Err(LisoError::DimensionMismatch {
                what,
                expected: x.len(),
                got: len,
            });
        }
    }
    if x.iter().chain(y).chain(w).any(|v| !v.is_finite()) {
        return Err(LisoError::NonFinite("series"));
    }
    if w.iter().any(|&v| v <= 0.0) {
        return Err(LisoError::InvalidWeights("observation weights must be positive".into()));
    }

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));

    let mut out = SortedSeries {
        x: Vec::new(),
        y: Vec::new(),
        w: Vec::new(),
        counts: Vec::new(),
    };
    let mut i = 0;
    while i < order.len() {
        let xv = x[order[i]];
        let mut num = KahanSum::new();
        let mut den = KahanSum::new();
        let mut count = 0;
        while i < order.len() && x[order[i]] == xv {
            let j = order[i];
            num.add(w[j] * y[j]);
            den.add(w[j]);
            count += 1;
            i += 1;
        }
        out.x.push(xv);
        out.y.push(num.value() / den.value());
        out.w.push(den.value());
        out.counts.push(count);
    }
    Ok(out)
}

/// One pooled block of a PAVA fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Index range `[start, end)` into the series points.
    pub start: usize,
    pub end: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub level: f64,
    pub weight: f64,
    pub count: usize,
}

/// Piecewise-constant isotonic fit; levels strictly increase across blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressogram {
    blocks: Vec<Block>,
    points: usize,
}

impl Regressogram {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().map(|b| b.level)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Pool {
    pub start: usize,
    pub end: usize,
    pub sum: KahanSum,
    pub weight: KahanSum,
}

impl Pool {
    #[inline]
    pub fn level(&self) -> f64 {
        self.sum.value() / self.weight.value()
    }
}

/// Stack-based pool adjacent violators over already sorted, tie-free points.
/// Blocks whose levels agree to 1e-14 (relative) are merged afterwards.
pub(crate) fn pava_pools(y: &[f64], w: &[f64], out: &mut Vec<Pool>) {
    out.clear();
    for i in 0..y.len() {
        let mut sum = KahanSum::new();
        sum.add(w[i] * y[i]);
        let mut weight = KahanSum::new();
        weight.add(w[i]);
        let mut cur = Pool {
            start: i,
            end: i + 1,
            sum,
            weight,
        };
        while let Some(prev) = out.last() {
            if prev.level() > cur.level() {
                let prev = out.pop().expect("non-empty");
                let mut sum = prev.sum;
                sum.merge(&cur.sum);
                let mut weight = prev.weight;
                weight.merge(&cur.weight);
                cur = Pool {
                    start: prev.start,
                    end: cur.end,
                    sum,
                    weight,
                };
            } else {
                break;
            }
        }
        out.push(cur);
    }
    // strictly increasing levels
    let mut k = 0;
    for j in 1..out.len() {
        let (a, b) = (out[k].level(), out[j].level());
        if (b - a).abs() <= 1e-14 * a.abs().max(b.abs()) {
            let other = out[j];
            out[k].end = other.end;
            out[k].sum.merge(&other.sum);
            out[k].weight.merge(&other.weight);
        } else {
            k += 1;
            out[k] = out[j];
        }
    }
    out.truncate(k + 1);
}

pub fn pava_fit(s: &SortedSeries) -> Regressogram {
    let mut pools = Vec::with_capacity(s.len());
    pava_pools(&s.y, &s.w, &mut pools);
    let blocks = pools
        .iter()
        .map(|p| Block {
            start: p.start,
            end: p.end,
            x_lo: s.x[p.start],
            x_hi: s.x[p.end - 1],
            level: p.level(),
            weight: p.weight.value(),
            count: s.counts[p.start..p.end].iter().sum(),
        })
        .collect();
    Regressogram {
        blocks,
        points: s.len(),
    }
}

/// Fitted value at every series point.
pub fn fitted_values(r: &Regressogram, s: &SortedSeries) -> Result<Vec<f64>> {
    if r.points != s.len() {
        return Err(LisoError::DimensionMismatch {
            what: "regressogram points",
            expected: s.len(),
            got: r.points,
        });
    }
    let mut out = vec![0.0; s.len()];
    for b in &r.blocks {
        out[b.start..b.end].iter_mut().for_each(|v| *v = b.level);
    }
    Ok(out)
}
