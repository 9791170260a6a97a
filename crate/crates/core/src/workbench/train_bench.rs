use crate::data::{accuracy, one_hot_compact, r_squared, rng, split_seed, Target};
use crate::error::{invalid, Result};
use crate::io::write_table;
use crate::linalg::Mat;
use crate::ntk::{
    n_params, train_smoother, Architecture, LossKind, Network, TraceRow, TrainConfig,
};

use super::benchmark::prepare_rep;
use super::fit::{build_matrix, stream};
use super::{DataSource, ExperimentConfig, RunDir};

#[derive(Debug, Clone)]
pub struct NtkRun {
    pub criterion: String,
    pub best_epoch: usize,
    pub best_value: Option<f64>,
    /// Test metric with the true response attached at the chosen epoch.
    pub metric: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct NtkBenchReport {
    pub runs: Vec<NtkRun>,
    /// Rough multiply-add count of one run.
    pub cost_flops: f64,
}

/// Multiply-adds of one run: the kernel product dominates.
pub fn cost_estimate(n: usize, extra: usize, d_out: usize, params: usize, epochs: usize) -> f64 {
    let rows = ((n + extra) * d_out) as f64;
    let cols = (n * d_out) as f64;
    epochs as f64 * (rows * cols * params as f64 + rows * cols * cols)
}

/// Trains the network smoother on the build target once per y-free
/// monitor, stopping at the monitor's minimum; the true response is used
/// only to score the chosen epoch on the test rows.
pub fn bench_ntk(cfg: &ExperimentConfig) -> Result<NtkBenchReport> {
    cfg.validate()?;
    if cfg.n_test == 0 || cfg.n_val == 0 {
        return Err(invalid("bench-ntk needs validation and test rows"));
    }
    if cfg.n_train > 100 {
        log::warn!(
            "n_train = {} is large for network smoothers; cost grows like n^2",
            cfg.n_train
        );
    }
    let pool = match &cfg.data {
        DataSource::Csv(p) => {
            Some(crate::io::read_dataset(p, cfg.target.as_deref(), cfg.task)?.data)
        }
        _ => None,
    };
    let rd = prepare_rep(cfg, pool.as_ref(), 0)?;
    let seed = split_seed(cfg.seed, 0);
    let (y, classes) = match &rd.target {
        Target::Response(y) => (Mat::from_column_slice(y.len(), 1, y.as_slice()), None),
        Target::Labels { labels, classes } => {
            (one_hot_compact(labels, *classes)?.y, Some(*classes))
        }
        Target::Absent => return Err(invalid("bench-ntk needs a target")),
    };
    let loss = cfg.loss.unwrap_or(if classes.is_some() {
        LossKind::CrossEntropy
    } else {
        LossKind::Squared
    });
    let arch = Architecture::Tanh {
        hidden: cfg.nn.width,
    };
    let d = rd.x.ncols();
    let net = Network::init(arch, d, y.ncols(), &mut rng(split_seed(seed, stream::INIT)))?;
    let y_build = build_matrix(&rd.target, cfg.build, split_seed(seed, stream::BUILD))?;
    let n_v = rd.x_v.nrows();
    let mut extra = Mat::zeros(n_v + rd.x_test.nrows(), d);
    extra.rows_mut(0, n_v).copy_from(&rd.x_v);
    extra.rows_mut(n_v, rd.x_test.nrows()).copy_from(&rd.x_test);
    let monitors: Vec<_> = cfg
        .criteria()?
        .into_iter()
        .filter(|c| !c.requires_y())
        .collect();
    if monitors.is_empty() {
        return Err(invalid("bench-ntk needs at least one y-free criterion"));
    }
    let n = rd.x.nrows();
    let mut runs = Vec::new();
    for spec in monitors {
        let tc = TrainConfig::new(loss, cfg.nn.eta, cfg.nn.gamma, cfg.nn.epochs)
            .with_monitor(spec)
            .thinned(cfg.nn.monitor_every);
        let out = train_smoother(&net, &rd.x, &extra, n_v, &y_build, &tc)?;
        let pred = out.predict(&y)?;
        let test = pred.rows(n + n_v, rd.x_test.nrows()).into_owned();
        let metric = match (&rd.test, classes) {
            (Target::Labels { labels, .. }, Some(c)) => {
                accuracy(labels, &crate::data::decode_labels(&test, c)?)?
            }
            (Target::Response(y_test), None) => {
                r_squared(y_test, &test.column(0).add_scalar(rd.y_mean))?
            }
            _ => return Err(invalid("test target does not match the training target")),
        };
        runs.push(NtkRun {
            criterion: spec.label(),
            best_epoch: out.best_epoch,
            best_value: out.best_value,
            metric,
            trace: out.trace,
        });
    }
    Ok(NtkBenchReport {
        runs,
        cost_flops: cost_estimate(
            n,
            extra.nrows(),
            y.ncols(),
            n_params(arch, d, y.ncols()),
            cfg.nn.epochs,
        ),
    })
}

impl NtkBenchReport {
    /// `summary.csv` and one `trace_<criterion>.csv` per monitor.
    pub fn write(&self, dir: &RunDir, build: super::BuildKind) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .runs
            .iter()
            .map(|r| {
                vec![
                    r.criterion.clone(),
                    build.to_string(),
                    r.best_epoch.to_string(),
                    r.best_value.map_or(String::new(), |v| v.to_string()),
                    r.metric.to_string(),
                ]
            })
            .collect();
        write_table(
            dir.path("summary.csv"),
            &["criterion", "build", "best_epoch", "best_value", "metric"],
            &rows,
        )?;
        for r in &self.runs {
            let rows: Vec<Vec<String>> = r
                .trace
                .iter()
                .map(|t| {
                    vec![
                        t.epoch.to_string(),
                        t.loss.to_string(),
                        t.monitor.map_or(String::new(), |v| v.to_string()),
                        t.discrepancy.to_string(),
                    ]
                })
                .collect();
            let name = r
                .criterion
                .replace(['[', ']'], "_")
                .trim_end_matches('_')
                .to_string();
            write_table(
                dir.path(&format!("trace_{name}.csv")),
                &["epoch", "loss", "monitor", "discrepancy"],
                &rows,
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::Command;
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(Command::BenchNtk);
        cfg.apply_text("n_train=30\nn_val=30\nn_test=60\nnn_width=8\nnn_epochs=40")
            .unwrap();
        cfg
    }

    #[test]
    fn trace_has_one_row_per_epoch() {
        let rep = bench_ntk(&small()).unwrap();
        assert_eq!(rep.runs.len(), 2);
        for r in &rep.runs {
            assert_eq!(r.trace.len(), 41);
            assert!(r.trace.iter().enumerate().all(|(i, t)| t.epoch == i));
        }
    }

    #[test]
    fn gcv_monitor_stops_at_zero() {
        let rep = bench_ntk(&small()).unwrap();
        let gcv = rep
            .runs
            .iter()
            .find(|r| r.criterion.starts_with("gcv_yfree"))
            .unwrap();
        assert_eq!(gcv.best_epoch, 0);
    }
}
