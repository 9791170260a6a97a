use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::{
    accuracy, center, r_squared, rng, sample_validation_covariates, split_seed, standardize,
    synth_linear, synth_sin, Dataset, Target,
};
use crate::error::{invalid, Result};
use crate::io::{read_dataset, write_table};
use crate::linalg::Mat;
use crate::ntk::TraceRow;
use crate::selection::TracePoint;

use super::fit::{fit_model, method_label, stream, FitContext, Prediction};
use super::{synth_blobs, DataSource, ExperimentConfig, ModelKind, RunDir};

/// One repetition's standardized split and validation covariates.
#[derive(Debug, Clone)]
pub struct RepData {
    pub x: Mat,
    pub x_test: Mat,
    pub x_v: Mat,
    /// Training target, centred for regression.
    pub target: Target,
    pub test: Target,
    /// Training mean added back to regression predictions.
    pub y_mean: f64,
}

/// Draws the rows of repetition `rep`: a train/test split of `pool` (or
/// fresh synthetic data), covariates standardized on the training rows,
/// the response centred, and `n_val` validation rows sampled from the
/// Gaussian fitted to the training covariates.
pub fn prepare_rep(cfg: &ExperimentConfig, pool: Option<&Dataset>, rep: usize) -> Result<RepData> {
    let seed = split_seed(cfg.seed, rep as u64);
    let total = cfg.n_train + cfg.n_test;
    let data_seed = split_seed(seed, stream::DATA);
    let data = match (&cfg.data, pool) {
        (DataSource::Csv(_), Some(pool)) => {
            if pool.n() < total {
                return Err(invalid(format!(
                    "{} rows cannot supply {} training and {} test rows",
                    pool.n(),
                    cfg.n_train,
                    cfg.n_test
                )));
            }
            let mut order: Vec<usize> = (0..pool.n()).collect();
            order.shuffle(&mut rng(split_seed(seed, stream::SPLIT)));
            pool.select_rows(&order[..total])
        }
        (DataSource::Csv(p), None) => {
            return Err(invalid(format!("{} was not loaded", p.display())))
        }
        (DataSource::SynthLinear, _) => {
            synth_linear(total, cfg.dim, cfg.snr, cfg.sigma2, data_seed)?.data
        }
        (DataSource::SynthSin, _) => synth_sin(total, cfg.noise_sd, data_seed)?.train,
        (DataSource::SynthBlobs, _) => synth_blobs(total, cfg.dim, cfg.classes, data_seed)?,
    };
    let train_rows: Vec<usize> = (0..cfg.n_train).collect();
    let test_rows: Vec<usize> = (cfg.n_train..total).collect();
    let train = data.select_rows(&train_rows);
    let test = data.select_rows(&test_rows);
    let (x, stats) = standardize(train.x(), train.x())?;
    let x_test = stats.apply(test.x())?;
    let x_v = if cfg.n_val > 0 {
        sample_validation_covariates(&x, cfg.n_val, split_seed(seed, stream::VALIDATION))?
    } else {
        Mat::zeros(0, x.ncols())
    };
    let (target, y_mean) = match train.target() {
        Target::Response(y) => {
            let (c, m) = center(y);
            (Target::Response(c), m)
        }
        other => (other.clone(), 0.0),
    };
    Ok(RepData {
        x,
        x_test,
        x_v,
        target,
        test: test.target().clone(),
        y_mean,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub rep: usize,
    pub model: String,
    pub method: String,
    pub yfree: bool,
    pub chosen: String,
    pub value: Option<f64>,
    /// Test R^2 for regression, accuracy for classification.
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub data: String,
    pub model: String,
    pub method: String,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub data_name: String,
    pub outcomes: Vec<RepOutcome>,
    pub table: Vec<TableRow>,
    /// Selection traces of the first repetition.
    pub grid_traces: Vec<(String, String, Vec<TracePoint>)>,
    pub epoch_traces: Vec<(String, String, Vec<TraceRow>)>,
}

/// First, second and third quartile with linear interpolation between
/// order statistics.
pub fn quartiles(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(invalid("quartiles of nothing"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Ok((q(0.25), q(0.5), q(0.75)))
}

fn score(pred: &Prediction, test: &Target, y_mean: f64) -> Result<f64> {
    match (pred, test) {
        (Prediction::Values(v), Target::Response(y)) => r_squared(y, &v.add_scalar(y_mean)),
        (Prediction::Labels(p), Target::Labels { labels, .. }) => accuracy(labels, p),
        _ => Err(invalid("prediction does not match the target type")),
    }
}

/// A y-free selection: the chosen hyperparameters and the test rows of the
/// smoother they define.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedSmoother {
    pub model: String,
    pub method: String,
    pub chosen: String,
    pub s_test: Mat,
}

/// Runs every y-free method of `cfg` on `rd` and returns the selected
/// smoothers, in model then criterion order.
pub fn yfree_smoothers(
    cfg: &ExperimentConfig,
    rd: &RepData,
    rep: usize,
) -> Result<Vec<SelectedSmoother>> {
    let ctx = FitContext {
        x: &rd.x,
        x_v: &rd.x_v,
        x_test: &rd.x_test,
        target: &rd.target,
        cfg,
        seed: split_seed(cfg.seed, rep as u64),
    };
    let mut out: Vec<SelectedSmoother> = Vec::new();
    for m in &cfg.models {
        for c in cfg.criteria()?.into_iter().filter(|c| !c.requires_y()) {
            let (model, method) = (m.to_string(), method_label(m, &c));
            if out.iter().any(|s| s.model == model && s.method == method) {
                continue;
            }
            let fit = fit_model(m, &c, &ctx)?;
            let s_test = fit
                .smoother
                .ok_or_else(|| invalid("y-free fit without a smoother"))?;
            out.push(SelectedSmoother {
                model,
                method,
                chosen: fit.chosen,
                s_test,
            });
        }
    }
    Ok(out)
}

type RepResult = (
    Vec<RepOutcome>,
    Vec<(String, String, Vec<TracePoint>)>,
    Vec<(String, String, Vec<TraceRow>)>,
);

fn run_rep(cfg: &ExperimentConfig, pool: Option<&Dataset>, rep: usize) -> Result<RepResult> {
    let rd = prepare_rep(cfg, pool, rep)?;
    let seed = split_seed(cfg.seed, rep as u64);
    let mut jobs: Vec<(ModelKind, crate::criteria::CriterionSpec)> = Vec::new();
    let mut seen: Vec<(String, String)> = Vec::new();
    for m in &cfg.models {
        for c in cfg.criteria()? {
            let key = (m.to_string(), method_label(m, &c));
            if !seen.contains(&key) {
                seen.push(key);
                jobs.push((*m, c));
            }
        }
    }
    let ctx = FitContext {
        x: &rd.x,
        x_v: &rd.x_v,
        x_test: &rd.x_test,
        target: &rd.target,
        cfg,
        seed,
    };
    let fits = jobs
        .par_iter()
        .map(|(m, c)| fit_model(m, c, &ctx).map(|f| (m.to_string(), f)))
        .collect::<Result<Vec<_>>>()?;
    let mut outcomes = Vec::new();
    let mut grid = Vec::new();
    let mut epochs = Vec::new();
    for (model, fit) in fits {
        outcomes.push(RepOutcome {
            rep,
            model: model.clone(),
            method: fit.method.clone(),
            yfree: fit.yfree,
            chosen: fit.chosen,
            value: fit.value,
            metric: score(&fit.prediction, &rd.test, rd.y_mean)?,
        });
        if !fit.grid_trace.is_empty() {
            grid.push((model.clone(), fit.method.clone(), fit.grid_trace));
        }
        if !fit.epoch_trace.is_empty() {
            epochs.push((model, fit.method, fit.epoch_trace));
        }
    }
    Ok((outcomes, grid, epochs))
}

fn data_name(source: &DataSource) -> String {
    match source {
        DataSource::Csv(p) => p
            .file_stem()
            .map_or("data".into(), |s| s.to_string_lossy().into_owned()),
        DataSource::SynthLinear => "synth_linear".into(),
        DataSource::SynthSin => "synth_sin".into(),
        DataSource::SynthBlobs => "synth_blobs".into(),
    }
}

/// The repetition loop: every model with every criterion on fresh splits,
/// summarized by quartiles of the test metric.
pub fn select_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if cfg.n_test == 0 {
        return Err(invalid("the benchmark needs test rows"));
    }
    let pool = match &cfg.data {
        DataSource::Csv(p) => Some(read_dataset(p, cfg.target.as_deref(), cfg.task)?.data),
        _ => None,
    };
    if let Some(p) = &pool {
        if matches!(p.target(), Target::Absent) {
            return Err(invalid("the benchmark needs a target column"));
        }
    }
    let reps = (0..cfg.reps)
        .into_par_iter()
        .map(|r| run_rep(cfg, pool.as_ref(), r))
        .collect::<Result<Vec<_>>>()?;
    let mut outcomes = Vec::new();
    let mut grid_traces = Vec::new();
    let mut epoch_traces = Vec::new();
    for (r, (o, g, e)) in reps.into_iter().enumerate() {
        outcomes.extend(o);
        if r == 0 {
            grid_traces = g;
            epoch_traces = e;
        }
    }
    let name = data_name(&cfg.data);
    let mut table = Vec::new();
    for first in outcomes.iter().filter(|o| o.rep == 0) {
        let metrics: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.model == first.model && o.method == first.method)
            .map(|o| o.metric)
            .collect();
        let (q1, q2, q3) = quartiles(&metrics)?;
        table.push(TableRow {
            data: name.clone(),
            model: first.model.clone(),
            method: first.method.clone(),
            q1,
            q2,
            q3,
        });
    }
    Ok(BenchmarkReport {
        data_name: name,
        outcomes,
        table,
        grid_traces,
        epoch_traces,
    })
}

impl BenchmarkReport {
    pub fn row(&self, model: &str, method: &str) -> Option<&TableRow> {
        self.table
            .iter()
            .find(|r| r.model == model && r.method == method)
    }

    /// `table.csv`, `reps.csv`, `grid_trace.csv` and `epoch_trace.csv`.
    pub fn write(&self, dir: &RunDir) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .table
            .iter()
            .map(|r| {
                vec![
                    r.data.clone(),
                    r.model.clone(),
                    r.method.clone(),
                    r.q1.to_string(),
                    r.q2.to_string(),
                    r.q3.to_string(),
                ]
            })
            .collect();
        write_table(
            dir.path("table.csv"),
            &["data", "model", "method", "q1", "q2", "q3"],
            &rows,
        )?;
        let rows: Vec<Vec<String>> = self
            .outcomes
            .iter()
            .map(|o| {
                vec![
                    o.rep.to_string(),
                    o.model.clone(),
                    o.method.clone(),
                    o.yfree.to_string(),
                    o.chosen.clone(),
                    o.value.map_or(String::new(), |v| v.to_string()),
                    o.metric.to_string(),
                ]
            })
            .collect();
        write_table(
            dir.path("reps.csv"),
            &[
                "rep",
                "model",
                "method",
                "y_free",
                "chosen",
                "criterion",
                "metric",
            ],
            &rows,
        )?;
        let mut rows = Vec::new();
        for (model, method, trace) in &self.grid_traces {
            for tp in trace {
                rows.push(vec![
                    model.clone(),
                    method.clone(),
                    tp.point.to_string(),
                    tp.value.map_or(String::new(), |v| v.to_string()),
                ]);
            }
        }
        write_table(
            dir.path("grid_trace.csv"),
            &["model", "method", "point", "value"],
            &rows,
        )?;
        let mut rows = Vec::new();
        for (model, method, trace) in &self.epoch_traces {
            for t in trace {
                rows.push(vec![
                    model.clone(),
                    method.clone(),
                    t.epoch.to_string(),
                    t.loss.to_string(),
                    t.monitor.map_or(String::new(), |v| v.to_string()),
                ]);
            }
        }
        write_table(
            dir.path("epoch_trace.csv"),
            &["model", "method", "epoch", "loss", "monitor"],
            &rows,
        )
    }
}
