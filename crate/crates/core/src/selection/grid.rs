use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Lambda,
    Sigma,
    K,
    T,
    Epochs,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Lambda => "lambda",
            Axis::Sigma => "sigma",
            Axis::K => "k",
            Axis::T => "t",
            Axis::Epochs => "epochs",
        }
    }

    /// Whether larger values smooth more.
    pub fn larger_is_smoother(self) -> bool {
        matches!(self, Axis::Lambda | Axis::Sigma | Axis::K)
    }

    fn integral(self) -> bool {
        matches!(self, Axis::K | Axis::Epochs)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lambda" => Ok(Axis::Lambda),
            "sigma" => Ok(Axis::Sigma),
            "k" => Ok(Axis::K),
            "t" => Ok(Axis::T),
            "epochs" => Ok(Axis::Epochs),
            other => Err(invalid(format!("unknown grid axis {other:?}"))),
        }
    }
}

/// One grid cell, with values in the grid's axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint(pub Vec<(Axis, f64)>);

impl GridPoint {
    pub fn get(&self, axis: Axis) -> Option<f64> {
        self.0.iter().find(|(a, _)| *a == axis).map(|(_, v)| *v)
    }

    pub fn k(&self) -> Option<usize> {
        self.get(Axis::K).map(|v| v as usize)
    }

    /// `Less` when `self` is the more regularized point. Axes are compared in
    /// order and the first difference decides.
    pub fn regularization_cmp(&self, other: &GridPoint) -> Ordering {
        for ((axis, a), (_, b)) in self.0.iter().zip(&other.0) {
            let ord = if axis.larger_is_smoother() {
                b.total_cmp(a)
            } else {
                a.total_cmp(b)
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (axis, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{axis}={v}")?;
        }
        Ok(())
    }
}

/// Named candidate axes; every axis is nonempty, finite and ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HyperGrid {
    axes: Vec<(Axis, Vec<f64>)>,
}

impl HyperGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(axis: Axis, values: Vec<f64>) -> Result<Self> {
        Self::new().with(axis, values)
    }

    /// Adds an axis. Values are sorted and deduplicated.
    pub fn with(mut self, axis: Axis, mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid(format!("axis {axis} is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("axis {axis} has non-finite values")));
        }
        if axis.integral() && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(invalid(format!("axis {axis} needs nonnegative integers")));
        }
        if self.axes.iter().any(|(a, _)| *a == axis) {
            return Err(invalid(format!("axis {axis} given twice")));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        self.axes.push((axis, values));
        Ok(self)
    }

    pub fn axes(&self) -> impl Iterator<Item = Axis> + '_ {
        self.axes.iter().map(|(a, _)| *a)
    }

    pub fn values(&self, axis: Axis) -> Option<&[f64]> {
        self.axes
            .iter()
            .find(|(a, _)| *a == axis)
            .map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|(_, v)| v.len()).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product, first axis varying slowest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = vec![GridPoint(Vec::new())];
        for (axis, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.0.clone();
                        q.push((*axis, *v));
                        GridPoint(q)
                    })
                })
                .collect();
        }
        if self.axes.is_empty() {
            Vec::new()
        } else {
            out
        }
    }

    pub(crate) fn require(&self, axes: &[Axis]) -> Result<()> {
        let have: Vec<Axis> = self.axes().collect();
        let mut want = axes.to_vec();
        let mut sorted = have.clone();
        sorted.sort();
        want.sort();
        if sorted != want {
            let names: Vec<&str> = axes.iter().map(|a| a.name()).collect();
            let got: Vec<&str> = have.iter().map(|a| a.name()).collect();
            return Err(invalid(format!("grid needs axes {names:?}, got {got:?}")));
        }
        Ok(())
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
        return Err(invalid("log grid needs 0 < lo <= hi and count >= 1"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
            }
        })
        .collect())
}

/// 200 log-spaced values in `[1e-4, 20]` plus `1e6`.
pub fn default_penalty_grid() -> Vec<f64> {
    let mut v = log_grid(1e-4, 20.0, 200).expect("static grid");
    v.push(1e6);
    v
}

/// 100 log-spaced values in `[1e-4, 1]`, the small-sample demo grid.
pub fn demo_grid() -> Vec<f64> {
    log_grid(1e-4, 1.0, 100).expect("static grid")
}

/// `k` in `2..=30` (capped at `n`) plus `n`.
pub fn default_k_grid(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (2..=30.min(n)).map(|k| k as f64).collect();
    v.push(n as f64);
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-4, 1.0, 100).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[99], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_penalty_grid().len(), 201);
    }

    #[test]
    fn points_are_a_product() {
        let g = HyperGrid::new()
            .with(Axis::Lambda, vec![2.0, 1.0])
            .unwrap()
            .with(Axis::Sigma, vec![0.5, 1.5, 1.0])
            .unwrap();
        let p = g.points();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0].0, vec![(Axis::Lambda, 1.0), (Axis::Sigma, 0.5)]);
        assert_eq!(p[5].0, vec![(Axis::Lambda, 2.0), (Axis::Sigma, 1.5)]);
    }

    #[test]
    fn regularization_order() {
        let a = GridPoint(vec![(Axis::Lambda, 2.0)]);
        let b = GridPoint(vec![(Axis::Lambda, 1.0)]);
        assert_eq!(a.regularization_cmp(&b), Ordering::Less);
        let a = GridPoint(vec![(Axis::T, 2.0)]);
        let b = GridPoint(vec![(Axis::T, 1.0)]);
        assert_eq!(a.regularization_cmp(&b), Ordering::Greater);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(HyperGrid::single(Axis::Lambda, vec![]).is_err());
        assert!(HyperGrid::single(Axis::K, vec![1.5]).is_err());
        assert!(HyperGrid::single(Axis::Sigma, vec![f64::NAN]).is_err());
        let g = HyperGrid::single(Axis::K, vec![1.0]).unwrap();
        assert!(g.with(Axis::K, vec![2.0]).is_err());
    }

    #[test]
    fn k_grid_includes_n() {
        assert_eq!(default_k_grid(5), vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(*default_k_grid(100).last().unwrap(), 100.0);
    }
}
