use crate::error::{LisoError, Result};
use crate::numeric::{weighted_mean, KahanSum};
use crate::pava::{merge_ties, SortedSeries};

/// Sort order and tie groups of one covariate column.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    order: Vec<usize>,
    bounds: Vec<usize>,
    knots: Vec<f64>,
    group_weight: Vec<f64>,
    group_of: Vec<usize>,
}

impl ColumnIndex {
    fn build(col: &[f64], w: &[f64]) -> Self {
        let n = col.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let mut bounds = vec![0];
        let mut knots = Vec::new();
        let mut group_weight = Vec::new();
        let mut group_of = vec![0; n];
        let mut i = 0;
        while i < n {
            let v = col[order[i]];
            let mut ws = KahanSum::new();
            while i < n && col[order[i]] == v {
                group_of[order[i]] = knots.len();
                ws.add(w[order[i]]);
                i += 1;
            }
            knots.push(v);
            group_weight.push(ws.value());
            bounds.push(i);
        }
        Self {
            order,
            bounds,
            knots,
            group_weight,
            group_of,
        }
    }

    /// Observation indices in ascending covariate order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Distinct covariate values, ascending.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Total observation weight at each distinct value.
    pub fn group_weights(&self) -> &[f64] {
        &self.group_weight
    }

    pub fn groups(&self) -> usize {
        self.knots.len()
    }

    /// Observations sharing the `g`-th distinct value.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.order[self.bounds[g]..self.bounds[g + 1]]
    }

    /// Distinct-value index of every observation.
    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }
}

/// Training data: centred response, covariate columns, observation weights
/// and cached per-covariate sort orders.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>,
    y_mean: f64,
    x: Vec<Vec<f64>>,
    w: Vec<f64>,
    index: Vec<ColumnIndex>,
}

impl Dataset {
    /// Builds a dataset from covariate columns. The response is centred to
    /// weighted mean zero; its mean becomes the model intercept.
    pub fn new(columns: Vec<Vec<f64>>, y: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(LisoError::DimensionMismatch {
                what: "observations (need at least 2)",
                expected: 2,
                got: n,
            });
        }
        if columns.is_empty() {
            return Err(LisoError::Empty("covariate columns"));
        }
        for col in &columns {
            if col.len() != n {
                return Err(LisoError::DimensionMismatch {
                    what: "covariate column length",
                    expected: n,
                    got: col.len(),
                });
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(LisoError::NonFinite("covariates"));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(LisoError::NonFinite("response"));
        }
        let w = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(LisoError::DimensionMismatch {
                        what: "observation weights",
                        expected: n,
                        got: w.len(),
                    });
                }
                if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(LisoError::InvalidWeights(
                        "observation weights must be positive and finite".into(),
                    ));
                }
                w
            }
            None => vec![1.0; n],
        };
        let y_mean = weighted_mean(&y, &w);
        let y = y.into_iter().map(|v| v - y_mean).collect();
        let index = columns.iter().map(|c| ColumnIndex::build(c, &w)).collect();
        Ok(Self {
            y,
            y_mean,
            x: columns,
            w,
            index,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        let p = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for row in rows {
            if row.len() != p {
                return Err(LisoError::DimensionMismatch {
                    what: "row length",
                    expected: p,
                    got: row.len(),
                });
            }
            for (c, &v) in columns.iter_mut().zip(row) {
                c.push(v);
            }
        }
        Self::new(columns, y, weights)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.len()
    }

    /// Centred response.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    /// Response on its original scale.
    pub fn response(&self) -> Vec<f64> {
        self.y.iter().map(|v| v + self.y_mean).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.x[k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.iter().map(|c| c[i]).collect()
    }

    pub fn column_index(&self, k: usize) -> &ColumnIndex {
        &self.index[k]
    }

    /// Permutation sorting covariate `k` ascending.
    pub fn sort_index(&self, k: usize) -> &[usize] {
        self.index[k].order()
    }

    /// `values` (one per observation) sorted by covariate `k` with ties merged.
    pub fn series(&self, k: usize, values: &[f64]) -> Result<SortedSeries> {
        merge_ties(&self.x[k], values, &self.w)
    }

    /// The rows at `idx`, with the response recentred on the subset.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let columns = self
            .x
            .iter()
            .map(|c| idx.iter().map(|&i| c[i]).collect())
            .collect();
        let y = idx.iter().map(|&i| self.y[i] + self.y_mean).collect();
        let w = idx.iter().map(|&i| self.w[i]).collect();
        Self::new(columns, y, Some(w))
    }

    /// The first `p` covariates only.
    pub fn leading_columns(&self, p: usize) -> Result<Self> {
        let p = p.min(self.p());
        Self::new(self.x[..p].to_vec(), self.response(), Some(self.w.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centres_response_and_indexes_ties() {
        let d = Dataset::new(
            vec![vec![2.0, 1.0, 2.0, 0.0]],
            vec![1.0, 2.0, 3.0, 6.0],
            Some(vec![1.0, 1.0, 1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(d.y_mean(), 3.0);
        assert_eq!(d.y(), &[-2.0, -1.0, 0.0, 3.0]);
        let ci = d.column_index(0);
        assert_eq!(ci.knots(), &[0.0, 1.0, 2.0]);
        assert_eq!(ci.group_weights(), &[1.0, 1.0, 2.0]);
        assert_eq!(ci.members(2), &[0, 2]);
        assert_eq!(ci.group_of(), &[2, 1, 2, 0]);
        assert_eq!(d.sort_index(0), &[3, 1, 0, 2]);
        assert_eq!(d.response(), vec![1.0, 2.0, 3.0, 6.0]);
    }

    #[test]
    fn weighted_centring() {
        let d = Dataset::new(vec![vec![0.0, 1.0]], vec![4.0, 0.0], Some(vec![1.0, 3.0])).unwrap();
        assert_eq!(d.y_mean(), 1.0);
        assert_eq!(d.y(), &[3.0, -1.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Dataset::new(vec![vec![0.0]], vec![1.0], None).is_err());
        assert!(Dataset::new(vec![vec![0.0, 1.0]], vec![1.0, 2.0, 3.0], None).is_err());
        assert!(Dataset::new(vec![], vec![1.0, 2.0], None).is_err());
        assert!(Dataset::new(vec![vec![0.0, f64::NAN]], vec![1.0, 2.0], None).is_err());
        assert!(Dataset::new(vec![vec![0.0, 1.0]], vec![1.0, 2.0], Some(vec![1.0, 0.0])).is_err());
        assert!(Dataset::from_rows(&[vec![0.0, 1.0], vec![1.0]], vec![1.0, 2.0], None).is_err());
    }

    #[test]
    fn subset_recentres() {
        let d = Dataset::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0.0, 1.0, 2.0, 10.0],
            None,
        )
        .unwrap();
        let s = d.subset(&[0, 1, 2]).unwrap();
        assert_eq!(s.y_mean(), 1.0);
        assert_eq!(s.y(), &[-1.0, 0.0, 1.0]);
        assert_eq!(s.column(0), &[0.0, 1.0, 2.0]);
    }
}
