use crate::error::{invalid, Result};
use crate::linalg::{sq_distances, Mat};

use super::SmootherSet;

/// Training rows ordered by distance for every in-sample and query row.
/// Ties are broken by the lower training index.
#[derive(Debug, Clone)]
pub struct KnnOrder {
    n: usize,
    train: Vec<Vec<usize>>,
    query: Vec<Vec<usize>>,
}

fn order_rows(dist: &Mat) -> Vec<Vec<usize>> {
    dist.row_iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

impl KnnOrder {
    pub fn new(x: &Mat, x_q: &Mat) -> Result<Self> {
        let train = order_rows(&sq_distances(x, x)?);
        let query = if x_q.nrows() > 0 {
            order_rows(&sq_distances(x_q, x)?)
        } else {
            Vec::new()
        };
        Ok(Self {
            n: x.nrows(),
            train,
            query,
        })
    }

    fn block(&self, order: &[Vec<usize>], k: usize) -> Mat {
        let w = 1.0 / k as f64;
        let mut m = Mat::zeros(order.len(), self.n);
        for (i, idx) in order.iter().enumerate() {
            for &j in &idx[..k] {
                m[(i, j)] = w;
            }
        }
        m
    }

    pub fn smoother(&self, k: usize) -> Result<SmootherSet> {
        if k == 0 || k > self.n {
            return Err(invalid(format!("k must lie in 1..={}, got {k}", self.n)));
        }
        let s = self.block(&self.train, k);
        let s_v = (!self.query.is_empty()).then(|| self.block(&self.query, k));
        SmootherSet::new(s, s_v, None)
    }
}

/// Each row puts `1/k` on its `k` nearest training rows.
pub fn knn_smoother(x: &Mat, x_q: &Mat, k: usize) -> Result<SmootherSet> {
    if k == 0 || k > x.nrows() {
        return Err(invalid(format!("k must lie in 1..={}, got {k}", x.nrows())));
    }
    KnnOrder::new(x, x_q)?.smoother(k)
}
