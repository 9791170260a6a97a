//! Datasets, encodings, standardization, synthetic generators, samplers and
//! metrics.

mod encode;
mod metrics;
pub(crate) mod sampling;
mod standardize;

pub use encode::{decode_labels, one_hot_compact, CompactOneHot};
pub use metrics::{accuracy, r_squared};
pub use sampling::{
    random_response, rng, sample_validation_covariates, split_seed, synth_linear, synth_sin,
    LinearData, RandomResponse, ResponseKind, SinData,
};
pub use standardize::{center, standardize, StandardizationStats};

use crate::error::{invalid, shape, Result};
use crate::linalg::{Mat, Vector};

/// Response attached to a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Response(Vector),
    /// Class labels in `1..=classes`.
    Labels {
        labels: Vec<usize>,
        classes: usize,
    },
    Absent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Mat,
    target: Target,
}

impl Dataset {
    pub fn new(x: Mat, target: Target) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(invalid("dataset needs at least one row and one column"));
        }
        match &target {
            Target::Response(y) => {
                if y.len() != x.nrows() {
                    return Err(shape(format!(
                        "{} responses for {} rows",
                        y.len(),
                        x.nrows()
                    )));
                }
                if let Some(i) = y.iter().position(|v| !v.is_finite()) {
                    return Err(invalid(format!("response {i} is not finite")));
                }
            }
            Target::Labels { labels, classes } => {
                if labels.len() != x.nrows() {
                    return Err(shape(format!(
                        "{} labels for {} rows",
                        labels.len(),
                        x.nrows()
                    )));
                }
                if *classes < 2 {
                    return Err(invalid("need at least two classes"));
                }
                if let Some(l) = labels.iter().find(|&&l| l == 0 || l > *classes) {
                    return Err(invalid(format!("label {l} outside 1..={classes}")));
                }
            }
            Target::Absent => {}
        }
        Ok(Self { x, target })
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn response(&self) -> Option<&Vector> {
        match &self.target {
            Target::Response(y) => Some(y),
            _ => None,
        }
    }

    pub fn labels(&self) -> Option<(&[usize], usize)> {
        match &self.target {
            Target::Labels { labels, classes } => Some((labels, *classes)),
            _ => None,
        }
    }

    pub fn is_classification(&self) -> bool {
        matches!(self.target, Target::Labels { .. })
    }

    /// Rows in the given order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let x = self.x.select_rows(rows);
        let target = match &self.target {
            Target::Response(y) => Target::Response(Vector::from_iterator(
                rows.len(),
                rows.iter().map(|&r| y[r]),
            )),
            Target::Labels { labels, classes } => Target::Labels {
                labels: rows.iter().map(|&r| labels[r]).collect(),
                classes: *classes,
            },
            Target::Absent => Target::Absent,
        };
        Dataset { x, target }
    }

    pub fn with_x(&self, x: Mat) -> Result<Dataset> {
        Dataset::new(x, self.target.clone())
    }

    pub fn without_target(&self) -> Dataset {
        Dataset {
            x: self.x.clone(),
            target: Target::Absent,
        }
    }
}
