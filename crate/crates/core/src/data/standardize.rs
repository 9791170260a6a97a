use crate::error::{invalid, shape, Result};
use crate::linalg::{Mat, Vector};

/// Column means and population standard deviations. Zero-variance columns
/// get scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mean: Vector,
    pub scale: Vector,
}

impl StandardizationStats {
    pub fn fit(x: &Mat) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(invalid("cannot standardize an empty matrix"));
        }
        let n = x.nrows() as f64;
        let d = x.ncols();
        let mut mean = Vector::zeros(d);
        let mut scale = Vector::zeros(d);
        for (j, col) in x.column_iter().enumerate() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean[j] = m;
            scale[j] = if sd > f64::EPSILON * m.abs().max(1.0) {
                sd
            } else {
                1.0
            };
        }
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, x: &Mat) -> Result<Mat> {
        if x.ncols() != self.mean.len() {
            return Err(shape(format!(
                "fitted on {} columns, applied to {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (m, s) = (self.mean[j], self.scale[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
        Ok(out)
    }
}

/// Fits mean/scale on `x_fit` and applies them to `x_apply`.
pub fn standardize(x_fit: &Mat, x_apply: &Mat) -> Result<(Mat, StandardizationStats)> {
    let stats = StandardizationStats::fit(x_fit)?;
    Ok((stats.apply(x_apply)?, stats))
}

/// Subtracts the mean; returns the centered vector and the mean.
pub fn center(y: &Vector) -> (Vector, f64) {
    let m = if y.is_empty() { 0.0 } else { y.mean() };
    (y.map(|v| v - m), m)
}
