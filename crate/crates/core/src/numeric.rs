//! Small numeric helpers shared by the solvers.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = KahanSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

/// Weighted mean with compensated sums. Caller guarantees a positive total weight.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (&v, &w) in values.iter().zip(weights) {
        num.add(v * w);
        den.add(w);
    }
    num.value() / den.value()
}

/// `count` log-spaced points from `hi` down to `lo` (inclusive).
pub fn log_grid(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (lh, ll) = (hi.ln(), lo.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        hi
                    } else if i == count - 1 {
                        lo
                    } else {
                        (lh + (ll - lh) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

pub fn linear_grid(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..count)
            .map(|i| hi + (lo - hi) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
