use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, shape, Result};
use crate::linalg::{Mat, Vector};

const PROB_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    /// `1/2 |y - f|^2` on the raw outputs.
    #[default]
    Squared,
    /// Cross-entropy on compact one-hot targets, with outputs mapped through
    /// the compact softmax.
    CrossEntropy,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Squared => "squared",
            LossKind::CrossEntropy => "cross_entropy",
        })
    }
}

impl FromStr for LossKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squared" | "mse" => Ok(LossKind::Squared),
            "cross_entropy" | "ce" | "xent" => Ok(LossKind::CrossEntropy),
            other => Err(invalid(format!("unknown loss {other:?}"))),
        }
    }
}

/// `f_j = e^{g_j} / (1 + sum_k e^{g_k})`, the last class taking the rest.
pub fn compact_softmax(g: &[f64]) -> Vector {
    // shift by max(0, g) so the implied class's 1 is scaled too
    let m = g.iter().copied().fold(0.0f64, f64::max);
    let e: Vec<f64> = g.iter().map(|v| (v - m).exp()).collect();
    let denom = (-m).exp() + e.iter().sum::<f64>();
    Vector::from_iterator(g.len(), e.iter().map(|v| v / denom))
}

/// Clips each probability to `[1e-9, 1 - 1e-9]` and rescales the row if its
/// sum reaches `1 - 1e-9`.
pub fn clamp_probabilities(f: &[f64]) -> Result<Vector> {
    if f.is_empty() {
        return Err(invalid("probability row is empty"));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(invalid("probabilities must be finite"));
    }
    let mut v = Vector::from_iterator(f.len(), f.iter().map(|p| p.clamp(PROB_EPS, 1.0 - PROB_EPS)));
    let total = v.sum();
    if total >= 1.0 - PROB_EPS {
        v *= (1.0 - PROB_EPS) / total;
    }
    Ok(v)
}

/// `diag(1/f) + 11^T / (1 - sum f)`, the matrix with
/// `dL/df = F (f - y)` for one observation.
pub fn ce_weight_matrix(f_row: &[f64]) -> Result<Mat> {
    let f = clamp_probabilities(f_row)?;
    let c = f.len();
    let tail = 1.0 / (1.0 - f.sum());
    let mut m = Mat::from_element(c, c, tail);
    for j in 0..c {
        m[(j, j)] += 1.0 / f[j];
    }
    Ok(m)
}

/// Cross-entropy of one observation with compact one-hot target `y`.
pub fn ce_loss(f_row: &[f64], y_row: &[f64]) -> Result<f64> {
    if f_row.len() != y_row.len() {
        return Err(shape("prediction and target rows differ in length"));
    }
    let f = clamp_probabilities(f_row)?;
    let rest_y = 1.0 - y_row.iter().sum::<f64>();
    let rest_f = 1.0 - f.sum();
    let mut l = -rest_y * rest_f.ln();
    for (fj, yj) in f.iter().zip(y_row) {
        l -= yj * fj.ln();
    }
    Ok(l)
}

/// The analytic gradient `dL/df` of [`ce_loss`].
pub fn ce_gradient(f_row: &[f64], y_row: &[f64]) -> Result<Vector> {
    if f_row.len() != y_row.len() {
        return Err(shape("prediction and target rows differ in length"));
    }
    let w = ce_weight_matrix(f_row)?;
    let f = clamp_probabilities(f_row)?;
    let y = Vector::from_column_slice(y_row);
    Ok(w * (f - y))
}

/// Model outputs under `loss` and `d output / d g` per row block.
pub(crate) fn link(loss: LossKind, g: &Mat) -> (Mat, Vec<Mat>) {
    match loss {
        LossKind::Squared => (g.clone(), Vec::new()),
        LossKind::CrossEntropy => {
            let (rows, c) = g.shape();
            let mut f = Mat::zeros(rows, c);
            let mut blocks = Vec::with_capacity(rows);
            for i in 0..rows {
                let gi: Vec<f64> = g.row(i).iter().copied().collect();
                let p = compact_softmax(&gi);
                f.row_mut(i).copy_from(&p.transpose());
                blocks.push(Mat::from_diagonal(&p) - &p * p.transpose());
            }
            (f, blocks)
        }
    }
}

/// Applies per-row `c x c` blocks to the vectorized rows of `m`.
pub(crate) fn apply_row_blocks(blocks: &[Mat], m: &Mat) -> Mat {
    let c = blocks.first().map_or(1, |b| b.nrows());
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    for (i, b) in blocks.iter().enumerate() {
        let rows = m.rows(i * c, c);
        out.rows_mut(i * c, c).copy_from(&(b * rows));
    }
    out
}

/// Applies per-row blocks on the right, `m diag(blocks)`.
pub(crate) fn apply_col_blocks(m: &Mat, blocks: &[Mat]) -> Mat {
    let c = blocks.first().map_or(1, |b| b.nrows());
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    for (i, b) in blocks.iter().enumerate() {
        let cols = m.columns(i * c, c);
        out.columns_mut(i * c, c).copy_from(&(cols * b));
    }
    out
}

/// Total training loss on `f` (outputs after the link) against `y`.
pub fn total_loss(loss: LossKind, f: &Mat, y: &Mat) -> Result<f64> {
    if f.shape() != y.shape() {
        return Err(shape("predictions and targets differ in shape"));
    }
    match loss {
        LossKind::Squared => Ok(0.5 * (f - y).norm_squared()),
        LossKind::CrossEntropy => {
            let mut total = 0.0;
            for i in 0..f.nrows() {
                let fi: Vec<f64> = f.row(i).iter().copied().collect();
                let yi: Vec<f64> = y.row(i).iter().copied().collect();
                total += ce_loss(&fi, &yi)?;
            }
            Ok(total)
        }
    }
}
