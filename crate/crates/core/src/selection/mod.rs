//! Grid search binding model families to criteria.
//!
//! [`grid_select`] is the y-free path and has no response parameter;
//! [`grid_select_y`] and [`kfold_cv_select`] are the y-based baselines.

mod fast;
mod grid;

pub use grid::{
    default_k_grid, default_penalty_grid, demo_grid, log_grid, Axis, GridPoint, HyperGrid,
};

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::criteria::{evaluate_with_y, evaluate_yfree, CriterionKind, CriterionSpec};
use crate::data::{decode_labels, one_hot_compact, rng, Dataset, Target};
use crate::error::{invalid, shape, Error, Result};
use crate::linalg::{Mat, Vector};
use crate::smoothers::{
    knn_smoother, Filter, KernelSpec, KnnOrder, RidgeScaling, SmootherSet, SpectralSmoother,
    SplineSystem,
};
use fast::SpectralCache;

/// Smoother families with grid hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Lrr {
        scaling: RidgeScaling,
    },
    Krr,
    Spline {
        domain: Option<(f64, f64)>,
    },
    /// Gradient flow on least squares with linear features, stopped at `t`.
    GradientFlow,
    Knn,
}

impl Family {
    pub fn axes(&self) -> &'static [Axis] {
        match self {
            Family::Lrr { .. } | Family::Spline { .. } => &[Axis::Lambda],
            Family::Krr => &[Axis::Lambda, Axis::Sigma],
            Family::GradientFlow => &[Axis::T],
            Family::Knn => &[Axis::K],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Lrr { .. } => "lrr",
            Family::Krr => "krr",
            Family::Spline { .. } => "spline",
            Family::GradientFlow => "gf",
            Family::Knn => "knn",
        }
    }

    fn spectral(&self) -> bool {
        matches!(
            self,
            Family::Lrr { .. } | Family::Krr | Family::GradientFlow
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lrr" | "ridge" => Ok(Family::Lrr {
                scaling: RidgeScaling::default(),
            }),
            "krr" => Ok(Family::Krr),
            "spline" => Ok(Family::Spline { domain: None }),
            "gf" | "gradient_flow" => Ok(Family::GradientFlow),
            "knn" => Ok(Family::Knn),
            other => Err(invalid(format!("unknown model family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub point: GridPoint,
    /// `None` where the criterion is undefined.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen: GridPoint,
    pub value: f64,
    pub trace: Vec<TracePoint>,
    /// Every point sharing the minimal value, the chosen one included.
    pub ties: Vec<GridPoint>,
}

/// Minimum of the defined values; exact ties go to the most regularized
/// point, so the result does not depend on grid order.
fn argmin(trace: Vec<TracePoint>) -> Result<SelectionResult> {
    let mut best: Option<(f64, &GridPoint)> = None;
    for tp in &trace {
        let Some(v) = tp.value else { continue };
        best = match best {
            None => Some((v, &tp.point)),
            Some((b, p)) => match v.total_cmp(&b) {
                Ordering::Less => Some((v, &tp.point)),
                Ordering::Equal if tp.point.regularization_cmp(p) == Ordering::Less => {
                    Some((v, &tp.point))
                }
                _ => Some((b, p)),
            },
        };
    }
    let (value, chosen) = best.ok_or(Error::Undefined("the criterion at every grid point"))?;
    let chosen = chosen.clone();
    let ties = trace
        .iter()
        .filter(|tp| tp.value == Some(value))
        .map(|tp| tp.point.clone())
        .collect();
    Ok(SelectionResult {
        chosen,
        value,
        trace,
        ties,
    })
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn spline_abscissae(x: &Mat) -> Result<&[f64]> {
    if x.ncols() != 1 {
        return Err(shape(format!(
            "spline needs one covariate, got {}",
            x.ncols()
        )));
    }
    Ok(x.as_slice())
}

fn filter_at(family: &Family, point: &GridPoint, n: usize) -> Filter {
    match family {
        Family::Lrr { scaling } => {
            Filter::Ridge(scaling.effective(point.get(Axis::Lambda).unwrap_or(0.0), n))
        }
        Family::Krr => Filter::Ridge(point.get(Axis::Lambda).unwrap_or(0.0)),
        _ => Filter::GradientFlow(point.get(Axis::T).unwrap_or(0.0)),
    }
}

fn spectral_at(family: &Family, point: &GridPoint, x: &Mat, x_q: &Mat) -> Result<SpectralSmoother> {
    match family {
        Family::Krr => {
            let sigma = point
                .get(Axis::Sigma)
                .ok_or_else(|| invalid("KRR needs sigma"))?;
            SpectralSmoother::kernel(x, x_q, KernelSpec::new(sigma)?)
        }
        _ => SpectralSmoother::linear(x, x_q),
    }
}

/// The smoother of `family` at one grid point, with `x_q` as query rows.
pub fn smoother_at(family: &Family, point: &GridPoint, x: &Mat, x_q: &Mat) -> Result<SmootherSet> {
    match family {
        Family::Spline { domain } => {
            let lambda = point
                .get(Axis::Lambda)
                .ok_or_else(|| invalid("spline needs lambda"))?;
            SplineSystem::new(spline_abscissae(x)?, spline_abscissae(x_q)?, *domain)?
                .smoother(lambda)
        }
        Family::Knn => {
            let k = point.k().ok_or_else(|| invalid("kNN needs k"))?;
            knn_smoother(x, x_q, k)
        }
        _ => spectral_at(family, point, x, x_q)?.smoother_set(filter_at(family, point, x.nrows())),
    }
}

/// `E[s* s*^T]` for isotropic linear features.
pub fn expected_outer_at(family: &Family, point: &GridPoint, x: &Mat) -> Result<Mat> {
    match family {
        Family::Lrr { .. } | Family::GradientFlow => {
            let empty = Mat::zeros(0, x.ncols());
            SpectralSmoother::linear(x, &empty)?.expected_outer(filter_at(family, point, x.nrows()))
        }
        _ => Err(invalid(format!(
            "msv_expected is only available for linear features, not {family}"
        ))),
    }
}

#[derive(Clone, Copy)]
enum Eval<'a> {
    YFree(&'a CriterionSpec),
    WithY(&'a CriterionSpec, &'a Vector),
}

impl Eval<'_> {
    fn spec(&self) -> &CriterionSpec {
        match self {
            Eval::YFree(s) | Eval::WithY(s, _) => s,
        }
    }

    fn y(&self) -> Option<&Vector> {
        match self {
            Eval::YFree(_) => None,
            Eval::WithY(_, y) => Some(y),
        }
    }

    fn dense(&self, set: &SmootherSet) -> Result<f64> {
        match self {
            Eval::YFree(spec) => evaluate_yfree(spec, set, None).map(|v| v.value),
            Eval::WithY(spec, y) => evaluate_with_y(spec, y, set).map(|v| v.value),
        }
    }
}

fn evaluate_grid(
    family: &Family,
    grid: &HyperGrid,
    x: &Mat,
    x_v: &Mat,
    eval: Eval,
) -> Result<Vec<TracePoint>> {
    grid.require(family.axes())?;
    let spec = eval.spec();
    spec.validate()?;
    if spec.kind == CriterionKind::KfoldCv {
        return Err(invalid("k-fold CV refits the model; use kfold_cv_select"));
    }
    if matches!(
        spec.kind,
        CriterionKind::Msv | CriterionKind::MsvTr | CriterionKind::MsvNorm
    ) && x_v.nrows() == 0
    {
        return Err(invalid("MSV needs validation covariates"));
    }
    if x_v.nrows() > 0 && x_v.ncols() != x.ncols() {
        return Err(shape("validation covariates have a different column count"));
    }
    if spec.kind == CriterionKind::MsvExpected
        && !matches!(family, Family::Lrr { .. } | Family::GradientFlow)
    {
        return Err(invalid(format!(
            "msv_expected is only available for linear features, not {family}"
        )));
    }
    if let Some(y) = eval.y() {
        if y.len() != x.nrows() {
            return Err(shape(format!(
                "y has {} entries for {} rows",
                y.len(),
                x.nrows()
            )));
        }
    }
    let points = grid.points();
    let n = x.nrows();
    let values: Vec<Option<f64>> = if family.spectral() {
        // one decomposition per sigma (a single one for linear features)
        let sigmas: Vec<Option<f64>> = match family {
            Family::Krr => grid
                .values(Axis::Sigma)
                .expect("required")
                .iter()
                .map(|s| Some(*s))
                .collect(),
            _ => vec![None],
        };
        let per_sigma: Vec<Vec<(usize, Option<f64>)>> = sigmas
            .par_iter()
            .map(|sigma| -> Result<Vec<(usize, Option<f64>)>> {
                let mine: Vec<usize> = (0..points.len())
                    .filter(|&i| sigma.is_none() || points[i].get(Axis::Sigma) == *sigma)
                    .collect();
                let sm = spectral_at(family, &points[mine[0]], x, x_v)?;
                let cache = SpectralCache::new(&sm, eval.y());
                mine.iter()
                    .map(|&i| {
                        Ok((
                            i,
                            defined(cache.evaluate(spec, filter_at(family, &points[i], n)))?,
                        ))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut out = vec![None; points.len()];
        for (i, v) in per_sigma.into_iter().flatten() {
            out[i] = v;
        }
        out
    } else {
        match family {
            Family::Spline { domain } => {
                let sys = SplineSystem::new(spline_abscissae(x)?, spline_abscissae(x_v)?, *domain)?;
                points
                    .par_iter()
                    .map(|p| {
                        let set = sys.smoother(p.get(Axis::Lambda).expect("required"))?;
                        defined(eval.dense(&set))
                    })
                    .collect::<Result<_>>()?
            }
            Family::Knn => {
                let order = KnnOrder::new(x, x_v)?;
                points
                    .par_iter()
                    .map(|p| defined(eval.dense(&order.smoother(p.k().expect("required"))?)))
                    .collect::<Result<_>>()?
            }
            _ => unreachable!("spectral families handled above"),
        }
    };
    Ok(points
        .into_iter()
        .zip(values)
        .map(|(point, value)| TracePoint { point, value })
        .collect())
}

/// y-free grid search: every point is scored from covariates alone.
pub fn grid_select(
    family: &Family,
    grid: &HyperGrid,
    criterion: &CriterionSpec,
    x: &Mat,
    x_v: &Mat,
) -> Result<SelectionResult> {
    if criterion.requires_y() {
        return Err(invalid(format!(
            "{} needs the response; use grid_select_y",
            criterion.label()
        )));
    }
    argmin(evaluate_grid(family, grid, x, x_v, Eval::YFree(criterion))?)
}

/// Grid search with a closed-form y-based criterion (`msv`, `gcv`, `loocv`).
pub fn grid_select_y(
    family: &Family,
    grid: &HyperGrid,
    criterion: &CriterionSpec,
    x: &Mat,
    y: &Vector,
    x_v: &Mat,
) -> Result<SelectionResult> {
    if !criterion.requires_y() {
        return Err(invalid(format!(
            "{} is y-free; use grid_select",
            criterion.label()
        )));
    }
    argmin(evaluate_grid(
        family,
        grid,
        x,
        x_v,
        Eval::WithY(criterion, y),
    )?)
}

/// y-free choice of `k` for nearest neighbours.
pub fn knn_k_select(
    criterion: &CriterionSpec,
    x: &Mat,
    x_v: &Mat,
    k_range: &[usize],
) -> Result<SelectionResult> {
    let n = x.nrows();
    if k_range.iter().any(|&k| k == 0 || k > n) {
        return Err(invalid(format!("k must lie in 1..={n}")));
    }
    let grid = HyperGrid::single(Axis::K, k_range.iter().map(|&k| k as f64).collect())?;
    grid_select(&Family::Knn, &grid, criterion, x, x_v)
}

/// Seeded fold labels: a shuffled `0..n` dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(invalid("k-fold CV needs at least 2 folds"));
    }
    if n < folds {
        return Err(invalid(format!("{n} rows cannot fill {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    Ok(fold)
}

/// Held-out predictions for every grid point on one fold. Regression
/// responses are centred on the fold's training mean.
fn fold_predictions(
    family: &Family,
    points: &[GridPoint],
    x_tr: &Mat,
    y_tr: &Mat,
    x_ho: &Mat,
) -> Result<Vec<Mat>> {
    let n = x_tr.nrows();
    if family.spectral() {
        let mut out: Vec<Option<Mat>> = vec![None; points.len()];
        let mut done = vec![false; points.len()];
        for i in 0..points.len() {
            if done[i] {
                continue;
            }
            let sigma = points[i].get(Axis::Sigma);
            let sm = spectral_at(family, &points[i], x_tr, x_ho)?;
            let c = sm.u().transpose() * y_tr;
            let group: Vec<usize> = (i..points.len())
                .filter(|&j| !done[j] && points[j].get(Axis::Sigma) == sigma)
                .collect();
            let preds: Vec<(usize, Mat)> = group
                .par_iter()
                .map(|&j| {
                    let w = sm.weights(filter_at(family, &points[j], n))?;
                    let mut wc = c.clone();
                    for (r, mut row) in wc.row_iter_mut().enumerate() {
                        row *= w[r];
                    }
                    Ok((j, sm.query_factor() * wc))
                })
                .collect::<Result<_>>()?;
            for (j, p) in preds {
                out[j] = Some(p);
                done[j] = true;
            }
        }
        Ok(out
            .into_iter()
            .map(|m| m.expect("every point visited"))
            .collect())
    } else {
        points
            .par_iter()
            .map(|p| {
                // k beyond the fold size averages the whole fold
                let p = match (family, p.k()) {
                    (Family::Knn, Some(k)) if k > n => &GridPoint(vec![(Axis::K, n as f64)]),
                    _ => p,
                };
                let set = smoother_at(family, p, x_tr, x_ho)?;
                Ok(set.validation()? * y_tr)
            })
            .collect()
    }
}

/// k-fold cross-validation: pooled held-out squared error for regression,
/// misclassification rate for classification.
pub fn kfold_cv_select(
    family: &Family,
    grid: &HyperGrid,
    folds: usize,
    data: &Dataset,
    seed: u64,
) -> Result<SelectionResult> {
    grid.require(family.axes())?;
    let n = data.n();
    let assignment = fold_assignment(n, folds, seed)?;
    let points = grid.points();
    let mut loss = vec![0.0; points.len()];
    for f in 0..folds {
        let tr: Vec<usize> = (0..n).filter(|&i| assignment[i] != f).collect();
        let ho: Vec<usize> = (0..n).filter(|&i| assignment[i] == f).collect();
        if ho.is_empty() || tr.is_empty() {
            return Err(invalid(format!("fold {f} is empty")));
        }
        let x_tr = data.x().select_rows(&tr);
        let x_ho = data.x().select_rows(&ho);
        match data.target() {
            Target::Response(y) => {
                let y_tr = y.select_rows(&tr);
                let mean = y_tr.mean();
                let y_tr = Mat::from_iterator(tr.len(), 1, y_tr.iter().map(|v| v - mean));
                let preds = fold_predictions(family, &points, &x_tr, &y_tr, &x_ho)?;
                for (l, p) in loss.iter_mut().zip(&preds) {
                    *l += ho
                        .iter()
                        .enumerate()
                        .map(|(r, &i)| (y[i] - mean - p[(r, 0)]).powi(2))
                        .sum::<f64>();
                }
            }
            Target::Labels { labels, classes } => {
                let tr_labels: Vec<usize> = tr.iter().map(|&i| labels[i]).collect();
                let y_tr = one_hot_compact(&tr_labels, *classes)?.y;
                let preds = fold_predictions(family, &points, &x_tr, &y_tr, &x_ho)?;
                for (l, p) in loss.iter_mut().zip(&preds) {
                    let decoded = decode_labels(p, *classes)?;
                    *l += ho
                        .iter()
                        .zip(&decoded)
                        .filter(|(&i, &d)| labels[i] != d)
                        .count() as f64;
                }
            }
            Target::Absent => return Err(invalid("k-fold CV needs a response")),
        }
    }
    let trace = points
        .into_iter()
        .zip(loss)
        .map(|(point, l)| TracePoint {
            point,
            value: Some(l / n as f64),
        })
        .collect();
    argmin(trace)
}
