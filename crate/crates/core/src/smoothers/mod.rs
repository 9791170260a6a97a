//! Smoother matrices for every closed-form model family.
//!
//! No constructor here takes the response. The only exception is
//! [`fit_forest`], whose `y_build` is meant to be a random response.

mod forest;
mod knn;
mod spectral;
mod spline;

pub use forest::{
    fit_forest, rf_classify, rf_smoother, BuildTarget, Forest, ForestTask, MaxFeatures, Tree,
    TreeParams, DEFAULT_TREES,
};
pub use knn::{knn_smoother, KnnOrder};
pub use spectral::{
    expected_outer_gf, expected_outer_lrr, gradient_flow_smoother, krr_smoother, lrr_smoother,
    Filter, KernelSpec, RidgeScaling, SpectralSmoother,
};
pub use spline::{spline_smoother, spline_smoother_on, SplineSystem};

use crate::error::{invalid, shape, Error, Result};
use crate::linalg::{all_finite, Mat, Vector};

/// In-sample block `s` (n x n), validation block `s_v` and test block
/// `s_star`, each with one column per training row.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherSet {
    pub s: Mat,
    pub s_v: Option<Mat>,
    pub s_star: Option<Mat>,
}

impl SmootherSet {
    pub fn new(s: Mat, s_v: Option<Mat>, s_star: Option<Mat>) -> Result<Self> {
        let n = s.ncols();
        if s.nrows() != n {
            return Err(shape(format!("in-sample smoother is {}x{}", s.nrows(), n)));
        }
        for (name, block) in [("S_v", &s_v), ("S*", &s_star)] {
            if let Some(b) = block {
                if b.ncols() != n {
                    return Err(shape(format!(
                        "{name} has {} columns, expected {n}",
                        b.ncols()
                    )));
                }
            }
        }
        let set = Self { s, s_v, s_star };
        if !set.blocks().all(all_finite) {
            return Err(Error::Numerical("smoother has non-finite entries".into()));
        }
        Ok(set)
    }

    pub fn n(&self) -> usize {
        self.s.ncols()
    }

    fn blocks(&self) -> impl Iterator<Item = &Mat> {
        std::iter::once(&self.s)
            .chain(self.s_v.as_ref())
            .chain(self.s_star.as_ref())
    }

    pub fn validation(&self) -> Result<&Mat> {
        self.s_v
            .as_ref()
            .ok_or_else(|| invalid("smoother has no validation block"))
    }

    pub fn test(&self) -> Result<&Mat> {
        self.s_star
            .as_ref()
            .ok_or_else(|| invalid("smoother has no test block"))
    }

    /// Moves rows `n_v..` of the query block into the test block.
    pub fn split_query(mut self, n_v: usize) -> Result<Self> {
        let q = self
            .s_v
            .take()
            .ok_or_else(|| invalid("no query block to split"))?;
        if n_v > q.nrows() {
            return Err(shape(format!(
                "cannot take {n_v} validation rows from {}",
                q.nrows()
            )));
        }
        let rest = q.nrows() - n_v;
        self.s_star = Some(q.rows(n_v, rest).into_owned());
        self.s_v = Some(q.rows(0, n_v).into_owned());
        Ok(self)
    }
}

/// `S (y - f0_train) + f0`, the offset form used by network smoothers.
/// With no offsets this is the plain `S y`.
pub fn predict(
    s_block: &Mat,
    y: &Vector,
    f0: Option<&Vector>,
    f0_train: Option<&Vector>,
) -> Result<Vector> {
    if s_block.ncols() != y.len() {
        return Err(shape(format!(
            "smoother has {} columns but y has {} entries",
            s_block.ncols(),
            y.len()
        )));
    }
    let mut pred = match f0_train {
        Some(f) if f.len() != y.len() => {
            return Err(shape("training offset length differs from y"));
        }
        Some(f) => s_block * (y - f),
        None => s_block * y,
    };
    if let Some(f) = f0 {
        if f.len() != pred.len() {
            return Err(shape("offset length differs from smoother rows"));
        }
        pred += f;
    }
    Ok(pred)
}

/// `S Y` for a multi-column response such as a compact one-hot matrix.
pub fn predict_multi(s_block: &Mat, y: &Mat) -> Result<Mat> {
    if s_block.ncols() != y.nrows() {
        return Err(shape(format!(
            "smoother has {} columns but Y has {} rows",
            s_block.ncols(),
            y.nrows()
        )));
    }
    Ok(s_block * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_plain_and_offset() {
        let s = Mat::identity(3, 3);
        let y = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(predict(&s, &y, None, None).unwrap(), y);
        let f0 = Vector::from_element(3, 1.0);
        let p = predict(&s, &y, Some(&f0), Some(&f0)).unwrap();
        assert_eq!(p, y);
        assert!(predict(&Mat::zeros(2, 2), &y, None, None).is_err());
    }

    #[test]
    fn split_query_rows() {
        let set =
            SmootherSet::new(Mat::zeros(2, 2), Some(Mat::from_element(5, 2, 1.0)), None).unwrap();
        let set = set.split_query(3).unwrap();
        assert_eq!(set.validation().unwrap().nrows(), 3);
        assert_eq!(set.test().unwrap().nrows(), 2);
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!(SmootherSet::new(Mat::zeros(2, 3), None, None).is_err());
        assert!(SmootherSet::new(Mat::zeros(2, 2), Some(Mat::zeros(1, 3)), None).is_err());
        let mut s = Mat::zeros(2, 2);
        s[0] = f64::NAN;
        assert!(SmootherSet::new(s, None, None).is_err());
    }
}
