use crate::error::{invalid, shape, Error, Result};
use crate::linalg::Mat;

/// Compact one-hot encoding: `c - 1` columns, the last class is the zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactOneHot {
    pub y: Mat,
    pub classes: usize,
}

pub fn one_hot_compact(labels: &[usize], classes: usize) -> Result<CompactOneHot> {
    if classes < 2 {
        return Err(invalid("compact one-hot needs c >= 2"));
    }
    let mut y = Mat::zeros(labels.len(), classes - 1);
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 || l > classes {
            return Err(invalid(format!(
                "label {l} at row {i} outside 1..={classes}"
            )));
        }
        if l < classes {
            y[(i, l - 1)] = 1.0;
        }
    }
    Ok(CompactOneHot { y, classes })
}

/// Argmax over the `c - 1` scores and the implied last-class score
/// `1 - sum(f)`. Ties go to the lowest class index.
pub fn decode_labels(f_hat: &Mat, classes: usize) -> Result<Vec<usize>> {
    if classes < 2 {
        return Err(invalid("decoding needs c >= 2"));
    }
    if f_hat.ncols() != classes - 1 {
        return Err(shape(format!(
            "{} score columns for {} classes",
            f_hat.ncols(),
            classes
        )));
    }
    let mut out = Vec::with_capacity(f_hat.nrows());
    for (i, row) in f_hat.row_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite scores in row {i}")));
        }
        let mut best = 1;
        let mut best_score = row[0];
        for j in 1..classes - 1 {
            if row[j] > best_score {
                best = j + 1;
                best_score = row[j];
            }
        }
        if 1.0 - row.sum() > best_score {
            best = classes;
        }
        out.push(best);
    }
    Ok(out)
}
