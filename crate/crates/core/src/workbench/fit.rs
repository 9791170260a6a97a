//! One model, one selection method: select, then attach `y` and predict.

use rand::seq::SliceRandom;

use crate::criteria::{CriterionKind, CriterionSpec};
use crate::data::{
    decode_labels, one_hot_compact, random_response, rng, split_seed, Dataset, ResponseKind, Target,
};
use crate::error::{invalid, Result};
use crate::linalg::{Mat, Vector};
use crate::ntk::{
    fit_early_stopping, outputs, train_smoother, Architecture, LossKind, Network, TraceRow,
    TrainConfig,
};
use crate::selection::{
    grid_select, grid_select_y, kfold_cv_select, smoother_at, Family, TracePoint,
};
use crate::smoothers::{fit_forest, rf_classify, rf_smoother, BuildTarget, TreeParams};

use super::{family_grid, BuildKind, ExperimentConfig, ModelKind};

/// Seed streams below one repetition seed.
pub(crate) mod stream {
    pub const SPLIT: u64 = 0;
    pub const VALIDATION: u64 = 1;
    pub const BUILD: u64 = 2;
    pub const INIT: u64 = 3;
    pub const FOREST: u64 = 4;
    pub const FOLDS: u64 = 5;
    pub const DATA: u64 = 6;
    pub const HOLDOUT: u64 = 7;
}

pub(crate) struct FitContext<'a> {
    pub x: &'a Mat,
    pub x_v: &'a Mat,
    pub x_test: &'a Mat,
    /// Training target; regression responses are centred.
    pub target: &'a Target,
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Values(Vector),
    Labels(Vec<usize>),
}

#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub method: String,
    pub yfree: bool,
    pub chosen: String,
    pub value: Option<f64>,
    pub grid_trace: Vec<TracePoint>,
    pub epoch_trace: Vec<TraceRow>,
    pub prediction: Prediction,
    /// Test rows of the selected smoother; `None` for y-trained networks.
    pub smoother: Option<Mat>,
}

/// Method name in output tables. Networks and forests have one y-based
/// method each, whatever criterion asked for it.
pub(crate) fn method_label(model: &ModelKind, crit: &CriterionSpec) -> String {
    match (model, crit.requires_y()) {
        (ModelKind::Nn, true) => "standard".into(),
        (ModelKind::Rf, true) => "y".into(),
        (ModelKind::Rf, false) => "y_free".into(),
        _ => crit.label(),
    }
}

fn apply_smoother(s: &Mat, target: &Target) -> Result<Prediction> {
    match target {
        Target::Response(y) => Ok(Prediction::Values(s * y)),
        Target::Labels { labels, classes } => {
            let enc = one_hot_compact(labels, *classes)?;
            Ok(Prediction::Labels(decode_labels(&(s * &enc.y), *classes)?))
        }
        Target::Absent => Err(invalid("prediction needs a target")),
    }
}

fn target_matrix(target: &Target) -> Result<(Mat, Option<usize>)> {
    match target {
        Target::Response(y) => Ok((Mat::from_column_slice(y.len(), 1, y.as_slice()), None)),
        Target::Labels { labels, classes } => {
            Ok((one_hot_compact(labels, *classes)?.y, Some(*classes)))
        }
        Target::Absent => Err(invalid("training needs a target")),
    }
}

fn matrix_prediction(f: &Mat, classes: Option<usize>) -> Result<Prediction> {
    match classes {
        None => Ok(Prediction::Values(f.column(0).into_owned())),
        Some(c) => Ok(Prediction::Labels(decode_labels(f, c)?)),
    }
}

pub(crate) fn fit_model(
    model: &ModelKind,
    crit: &CriterionSpec,
    ctx: &FitContext<'_>,
) -> Result<Fit> {
    let method = method_label(model, crit);
    let yfree = !crit.requires_y();
    match model {
        ModelKind::Family(family) => fit_family(family, crit, ctx, method),
        ModelKind::Nn if yfree => fit_nn_yfree(crit, ctx, method),
        ModelKind::Nn => fit_nn_standard(ctx, method),
        ModelKind::Rf => fit_rf(yfree, ctx, method),
    }
}

fn fit_family(
    family: &Family,
    crit: &CriterionSpec,
    ctx: &FitContext<'_>,
    method: String,
) -> Result<Fit> {
    let n = ctx.x.nrows();
    let grid = family_grid(ctx.cfg, family, n)?;
    let sel = match crit.kind {
        CriterionKind::KfoldCv => {
            let data = Dataset::new(ctx.x.clone(), ctx.target.clone())?;
            let folds = crit.folds.unwrap_or(ctx.cfg.folds);
            kfold_cv_select(
                family,
                &grid,
                folds,
                &data,
                split_seed(ctx.seed, stream::FOLDS),
            )?
        }
        _ if crit.requires_y() => {
            let Target::Response(y) = ctx.target else {
                return Err(invalid(format!(
                    "{} needs a numeric response",
                    crit.label()
                )));
            };
            grid_select_y(family, &grid, crit, ctx.x, y, ctx.x_v)?
        }
        _ => grid_select(family, &grid, crit, ctx.x, ctx.x_v)?,
    };
    let set = smoother_at(family, &sel.chosen, ctx.x, ctx.x_test)?;
    Ok(Fit {
        method,
        yfree: !crit.requires_y(),
        chosen: sel.chosen.to_string(),
        value: Some(sel.value),
        prediction: apply_smoother(set.validation()?, ctx.target)?,
        smoother: Some(set.validation()?.clone()),
        grid_trace: sel.trace,
        epoch_trace: Vec::new(),
    })
}

fn network(ctx: &FitContext<'_>, d_out: usize) -> Result<(Network, LossKind)> {
    let classification = matches!(ctx.target, Target::Labels { .. });
    let loss = ctx.cfg.loss.unwrap_or(if classification {
        LossKind::CrossEntropy
    } else {
        LossKind::Squared
    });
    let arch = Architecture::Tanh {
        hidden: ctx.cfg.nn.width,
    };
    let net = Network::init(
        arch,
        ctx.x.ncols(),
        d_out,
        &mut rng(split_seed(ctx.seed, stream::INIT)),
    )?;
    Ok((net, loss))
}

/// The build target: `N(0, I)` or uniform labels, or all zeros.
pub(crate) fn build_matrix(target: &Target, build: BuildKind, seed: u64) -> Result<Mat> {
    let (y, classes) = target_matrix(target)?;
    match build {
        BuildKind::Zero => Ok(Mat::zeros(y.nrows(), y.ncols())),
        BuildKind::Random => {
            let kind = classes.map_or(ResponseKind::Gaussian, ResponseKind::Categorical);
            Ok(random_response(y.nrows(), kind, seed)?.as_matrix())
        }
    }
}

fn fit_nn_yfree(crit: &CriterionSpec, ctx: &FitContext<'_>, method: String) -> Result<Fit> {
    let (y, classes) = target_matrix(ctx.target)?;
    let (net, loss) = network(ctx, y.ncols())?;
    let y_build = build_matrix(
        ctx.target,
        ctx.cfg.build,
        split_seed(ctx.seed, stream::BUILD),
    )?;
    let n_v = ctx.x_v.nrows();
    let mut extra = Mat::zeros(n_v + ctx.x_test.nrows(), ctx.x.ncols());
    extra.rows_mut(0, n_v).copy_from(ctx.x_v);
    extra
        .rows_mut(n_v, ctx.x_test.nrows())
        .copy_from(ctx.x_test);
    let nn = &ctx.cfg.nn;
    let cfg = TrainConfig::new(loss, nn.eta, nn.gamma, nn.epochs)
        .with_monitor(*crit)
        .thinned(nn.monitor_every);
    let out = train_smoother(&net, ctx.x, &extra, n_v, &y_build, &cfg)?;
    let pred = out.predict(&y)?;
    let test = pred
        .rows(ctx.x.nrows() + n_v, ctx.x_test.nrows())
        .into_owned();
    Ok(Fit {
        method,
        yfree: true,
        chosen: format!("epochs={}", out.best_epoch),
        value: out.best_value,
        prediction: matrix_prediction(&test, classes)?,
        smoother: out.best.s_star.clone(),
        grid_trace: Vec::new(),
        epoch_trace: out.trace,
    })
}

/// Ordinary training on `y` with an 80/20 split choosing the stopping epoch.
fn fit_nn_standard(ctx: &FitContext<'_>, method: String) -> Result<Fit> {
    let (y, classes) = target_matrix(ctx.target)?;
    let (net, loss) = network(ctx, y.ncols())?;
    let n = ctx.x.nrows();
    if n < 2 {
        return Err(invalid("early stopping needs at least two training rows"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(split_seed(ctx.seed, stream::HOLDOUT)));
    let n_fit = ((0.8 * n as f64).round() as usize).clamp(1, n - 1);
    let (fit_rows, hold_rows) = order.split_at(n_fit);
    let nn = &ctx.cfg.nn;
    let cfg = TrainConfig::new(loss, nn.eta, nn.gamma, nn.epochs);
    let es = fit_early_stopping(
        &net,
        &ctx.x.select_rows(fit_rows),
        &y.select_rows(fit_rows),
        &ctx.x.select_rows(hold_rows),
        &y.select_rows(hold_rows),
        &cfg,
    )?;
    let f = outputs(&es.network, loss, ctx.x_test)?;
    Ok(Fit {
        method,
        yfree: false,
        chosen: format!("epochs={}", es.best_epoch),
        value: es.validation_loss.get(es.best_epoch).copied(),
        prediction: matrix_prediction(&f, classes)?,
        smoother: None,
        grid_trace: Vec::new(),
        epoch_trace: Vec::new(),
    })
}

fn fit_rf(yfree: bool, ctx: &FitContext<'_>, method: String) -> Result<Fit> {
    let n = ctx.x.nrows();
    let build_seed = split_seed(ctx.seed, stream::BUILD);
    let random_labels;
    let zero_response;
    let random_y;
    let build = match (ctx.target, yfree, ctx.cfg.build) {
        (Target::Response(y), false, _) => BuildTarget::Response(y),
        (Target::Labels { labels, classes }, false, _) => BuildTarget::Labels {
            labels,
            classes: *classes,
        },
        (Target::Response(_), true, BuildKind::Random) => {
            random_y = build_matrix(ctx.target, BuildKind::Random, build_seed)?
                .column(0)
                .into_owned();
            BuildTarget::Response(&random_y)
        }
        (Target::Response(_), true, BuildKind::Zero) => {
            zero_response = Vector::zeros(n);
            BuildTarget::Response(&zero_response)
        }
        (Target::Labels { classes, .. }, true, kind) => {
            random_labels = match kind {
                BuildKind::Random => {
                    match random_response(n, ResponseKind::Categorical(*classes), build_seed)? {
                        crate::data::RandomResponse::Categorical { labels, .. } => labels,
                        crate::data::RandomResponse::Gaussian(_) => {
                            unreachable!("categorical draw")
                        }
                    }
                }
                BuildKind::Zero => vec![*classes; n],
            };
            BuildTarget::Labels {
                labels: &random_labels,
                classes: *classes,
            }
        }
        (Target::Absent, ..) => return Err(invalid("forest needs a target")),
    };
    let forest = fit_forest(
        ctx.x,
        build,
        ctx.cfg.rf_trees,
        split_seed(ctx.seed, stream::FOREST),
        &TreeParams::default(),
    )?;
    let set = rf_smoother(&forest, ctx.x, ctx.x_test)?;
    let prediction = match ctx.target {
        Target::Labels { labels, classes } => {
            Prediction::Labels(rf_classify(&forest, ctx.x_test, labels, *classes)?)
        }
        other => apply_smoother(set.validation()?, other)?,
    };
    Ok(Fit {
        method,
        yfree,
        chosen: format!("trees={}", ctx.cfg.rf_trees),
        value: None,
        prediction,
        smoother: Some(set.validation()?.clone()),
        grid_trace: Vec::new(),
        epoch_trace: Vec::new(),
    })
}
