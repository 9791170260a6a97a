use rayon::prelude::*;

use crate::criteria::CriterionSpec;
use crate::data::{center, r_squared, split_seed, synth_sin, SinData, Target};
use crate::error::{invalid, Result};
use crate::io::write_table;
use crate::linalg::Vector;
use crate::selection::Family;

use super::fit::{fit_model, stream, FitContext, Prediction};
use super::{ExperimentConfig, ModelKind, RunDir};

/// A fitted curve on the dense grid.
#[derive(Debug, Clone)]
pub struct Curve {
    pub model: String,
    /// `y_free` or `y_based`.
    pub kind: &'static str,
    pub method: String,
    pub chosen: String,
    pub values: Vector,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub rep: usize,
    pub model: String,
    pub kind: &'static str,
    pub method: String,
    pub chosen: String,
    pub r2: f64,
}

#[derive(Debug, Clone)]
pub struct SinDemoReport {
    /// Data of the first repetition.
    pub data: SinData,
    /// Curves of the first repetition.
    pub curves: Vec<Curve>,
    pub summary: Vec<SummaryRow>,
}

/// The first y-free and the first y-based criterion in the config.
pub(crate) fn method_pair(cfg: &ExperimentConfig) -> Result<(CriterionSpec, CriterionSpec)> {
    let specs = cfg.criteria()?;
    let yfree = specs.iter().find(|c| !c.requires_y()).copied();
    let ybased = specs.iter().find(|c| c.requires_y()).copied();
    match (yfree, ybased) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(invalid(
            "the demo needs one y-free and one y-based criterion",
        )),
    }
}

/// The spline lives on the known domain of the toy problem.
fn on_domain(model: ModelKind) -> ModelKind {
    match model {
        ModelKind::Family(Family::Spline { domain: None }) => ModelKind::Family(Family::Spline {
            domain: Some((-1.0, 1.0)),
        }),
        m => m,
    }
}

fn one_rep(cfg: &ExperimentConfig, rep: usize) -> Result<(SinData, Vec<Curve>)> {
    let seed = split_seed(cfg.seed, rep as u64);
    let data = synth_sin(cfg.n_train, cfg.noise_sd, split_seed(seed, stream::DATA))?;
    let (yfree, ybased) = method_pair(cfg)?;
    let y = data.train.response().expect("regression data");
    let (y_c, mean) = center(y);
    let target = Target::Response(y_c);
    let ctx = FitContext {
        x: data.train.x(),
        x_v: &data.grid,
        x_test: &data.grid,
        target: &target,
        cfg,
        seed,
    };
    let mut jobs = Vec::new();
    for &m in &cfg.models {
        jobs.push((on_domain(m), "y_free", yfree));
        jobs.push((on_domain(m), "y_based", ybased));
    }
    let curves = jobs
        .par_iter()
        .map(|(model, kind, crit)| {
            let fit = fit_model(model, crit, &ctx)?;
            let Prediction::Values(v) = fit.prediction else {
                unreachable!("regression target")
            };
            let values = v.add_scalar(mean);
            Ok(Curve {
                model: model.to_string(),
                kind,
                method: fit.method,
                chosen: fit.chosen,
                r2: r_squared(&data.truth, &values)?,
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((data, curves))
}

/// Five model families, each selected with and without `y` on the noisy
/// sine, evaluated against the noiseless curve on the dense grid.
pub fn sin_demo(cfg: &ExperimentConfig) -> Result<SinDemoReport> {
    cfg.validate()?;
    let reps = (0..cfg.reps)
        .into_par_iter()
        .map(|r| one_rep(cfg, r))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = Vec::new();
    for (rep, (_, curves)) in reps.iter().enumerate() {
        for c in curves {
            summary.push(SummaryRow {
                rep,
                model: c.model.clone(),
                kind: c.kind,
                method: c.method.clone(),
                chosen: c.chosen.clone(),
                r2: c.r2,
            });
        }
    }
    let (data, curves) = reps.into_iter().next().expect("reps >= 1");
    Ok(SinDemoReport {
        data,
        curves,
        summary,
    })
}

impl SinDemoReport {
    /// `train.csv`, one `curve_<model>_<kind>.csv` per curve, and
    /// `summary.csv`.
    pub fn write(&self, dir: &RunDir) -> Result<()> {
        let x = self.data.train.x();
        let y = self.data.train.response().expect("regression data");
        let rows: Vec<Vec<String>> = (0..x.nrows())
            .map(|i| vec![x[(i, 0)].to_string(), y[i].to_string()])
            .collect();
        write_table(dir.path("train.csv"), &["x", "y"], &rows)?;
        for c in &self.curves {
            let rows: Vec<Vec<String>> = (0..self.data.grid.nrows())
                .map(|i| {
                    vec![
                        self.data.grid[(i, 0)].to_string(),
                        c.values[i].to_string(),
                        self.data.truth[i].to_string(),
                    ]
                })
                .collect();
            write_table(
                dir.path(&format!("curve_{}_{}.csv", c.model, c.kind)),
                &["x", "f_hat", "truth"],
                &rows,
            )?;
        }
        let rows: Vec<Vec<String>> = self
            .summary
            .iter()
            .map(|s| {
                vec![
                    s.rep.to_string(),
                    s.model.clone(),
                    s.kind.to_string(),
                    s.method.clone(),
                    s.chosen.clone(),
                    s.r2.to_string(),
                ]
            })
            .collect();
        write_table(
            dir.path("summary.csv"),
            &["rep", "model", "kind", "method", "chosen", "r2"],
            &rows,
        )
    }
}
