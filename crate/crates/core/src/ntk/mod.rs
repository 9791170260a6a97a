//! One-hidden-layer networks as y-free linear smoothers.
//!
//! The network is trained by full-batch gradient descent with momentum on a
//! build target (random or zero), and the smoother `S*_k` is updated in
//! lockstep from the generalized NTK evaluated at `theta_k`. Rows of `S*` are
//! training rows first, then the extra rows, all in the vectorized
//! `sample * d_out + output` layout. Cost per step is
//! `O((n + m) n d_out^2 p)`, so keep `n` small.

mod loss;
mod network;

pub use loss::{
    ce_gradient, ce_loss, ce_weight_matrix, clamp_probabilities, compact_softmax, total_loss,
    LossKind,
};
pub use network::{devectorize, n_params, ntk_kernel, vectorize, Architecture, Network};

use loss::{apply_col_blocks, apply_row_blocks, link};

use crate::criteria::{evaluate_yfree, CriterionSpec};
use crate::error::{invalid, shape, Error, Result};
use crate::linalg::{all_finite, Mat, Vector};
use crate::smoothers::SmootherSet;

/// Synthetic-demo defaults: width 20, `eta = 0.01`, `gamma = 0.95`.
pub const DEMO_PROFILE: (usize, f64, f64) = (20, 0.01, 0.95);
/// Real-data defaults: width 200, `eta = 1e-4`, `gamma = 0.7`.
pub const REAL_DATA_PROFILE: (usize, f64, f64) = (200, 1e-4, 0.7);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub eta: f64,
    pub gamma: f64,
    pub epochs: usize,
    /// y-free criterion evaluated on `S*_k`; `None` keeps the last epoch.
    pub monitor: Option<CriterionSpec>,
    /// Evaluate the monitor every this many epochs (the last epoch always).
    pub monitor_every: usize,
}

impl TrainConfig {
    pub fn new(loss: LossKind, eta: f64, gamma: f64, epochs: usize) -> Self {
        Self {
            loss,
            eta,
            gamma,
            epochs,
            monitor: None,
            monitor_every: 1,
        }
    }

    pub fn with_monitor(mut self, spec: CriterionSpec) -> Self {
        self.monitor = Some(spec);
        self
    }

    pub fn thinned(mut self, every: usize) -> Self {
        self.monitor_every = every;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!(
                "learning rate must be positive, got {}",
                self.eta
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid(format!(
                "momentum must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if self.monitor_every == 0 {
            return Err(invalid("monitor interval must be positive"));
        }
        if let Some(spec) = &self.monitor {
            if spec.requires_y() {
                return Err(invalid(format!(
                    "monitor {} needs the response",
                    spec.label()
                )));
            }
            spec.validate()?;
        }
        Ok(())
    }
}

/// Parameters and smoothers at steps `k` and `k - 1`.
#[derive(Debug, Clone)]
pub struct TrainerState {
    pub theta: Vector,
    pub theta_prev: Vector,
    pub s_star: Mat,
    pub s_star_prev: Mat,
    /// Outputs at `theta_0` on every row, vectorized.
    pub f0_star: Vector,
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    /// Training loss on the build target.
    pub loss: f64,
    pub monitor: Option<f64>,
    /// `|f*(theta_k) - (S*_k (y_build - f_0) + f*_0)|_inf`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Blocks of the selected `S*`: training rows, then `n_v` validation
    /// rows, then the remaining extra rows as the test block.
    pub best: SmootherSet,
    pub best_epoch: usize,
    pub best_value: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub state: TrainerState,
    pub network: Network,
    best_full: Mat,
    n_train: usize,
    d_out: usize,
}

impl TrainOutcome {
    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// `S*(y - f_0) + f*_0` on every row (training rows first), with `y`
    /// given as an `n x d_out` matrix. This is the only place the true
    /// response meets the smoother.
    pub fn predict(&self, y: &Mat) -> Result<Mat> {
        if y.shape() != (self.n_train, self.d_out) {
            return Err(shape(format!(
                "response is {}x{}, expected {}x{}",
                y.nrows(),
                y.ncols(),
                self.n_train,
                self.d_out
            )));
        }
        let nv = self.n_train * self.d_out;
        let f0_train = self.state.f0_star.rows(0, nv);
        let pred = &self.best_full * (vectorize(y) - f0_train) + &self.state.f0_star;
        devectorize(&pred, self.d_out)
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.trace.iter().map(|r| r.discrepancy).fold(0.0, f64::max)
    }
}

fn monitor_set(s_star: &Mat, n_vec: usize, nv_vec: usize) -> Result<SmootherSet> {
    let rest = s_star.nrows() - n_vec - nv_vec;
    let s = s_star.rows(0, n_vec).into_owned();
    let s_v = (nv_vec > 0).then(|| s_star.rows(n_vec, nv_vec).into_owned());
    let s_t = (rest > 0).then(|| s_star.rows(n_vec + nv_vec, rest).into_owned());
    SmootherSet::new(s, s_v, s_t)
}

/// Trains `net` on `y_build` and runs the smoother recursion
/// `S*_{k+1} = S*_k + gamma (S*_k - S*_{k-1}) + eta K~*(theta_k) (I - S_k)`.
///
/// `x_extra` holds every row whose smoother row is wanted; its first `n_v`
/// rows form the validation block used by the monitor. Returns the `S*`
/// with the smallest monitor value, ties going to the earlier epoch.
pub fn train_smoother(
    net: &Network,
    x_train: &Mat,
    x_extra: &Mat,
    n_v: usize,
    y_build: &Mat,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let d_out = net.d_out();
    let n = x_train.nrows();
    if n == 0 {
        return Err(invalid("no training rows"));
    }
    if y_build.shape() != (n, d_out) {
        return Err(shape(format!(
            "build target is {}x{}, expected {n}x{d_out}",
            y_build.nrows(),
            y_build.ncols()
        )));
    }
    if x_extra.nrows() > 0 && x_extra.ncols() != x_train.ncols() {
        return Err(shape("extra rows have a different column count"));
    }
    if n_v > x_extra.nrows() {
        return Err(shape(format!(
            "n_v = {n_v} exceeds the {} extra rows",
            x_extra.nrows()
        )));
    }
    if cfg.monitor.is_some_and(|m| {
        m.kind != crate::criteria::CriterionKind::GcvYfree
            && m.kind != crate::criteria::CriterionKind::InSampleMsvYfree
    }) && n_v == 0
    {
        return Err(invalid("the monitor needs validation rows"));
    }
    if cfg.loss == LossKind::CrossEntropy && y_build.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(invalid(
            "cross-entropy needs a compact one-hot build target",
        ));
    }

    let x_all = if x_extra.nrows() > 0 {
        let mut m = Mat::zeros(n + x_extra.nrows(), x_train.ncols());
        m.rows_mut(0, n).copy_from(x_train);
        m.rows_mut(n, x_extra.nrows()).copy_from(x_extra);
        m
    } else {
        x_train.clone()
    };
    let n_vec = n * d_out;
    let nv_vec = n_v * d_out;
    let rows = x_all.nrows() * d_out;
    let y_vec = vectorize(y_build);

    let mut work = net.clone();
    let diverged = |step: usize| Error::Diverged { step };
    let outputs = |w: &Network, step: usize| -> Result<(Mat, Vec<Mat>)> {
        let g = w.forward(&x_all).map_err(|_| diverged(step))?;
        Ok(link(cfg.loss, &g))
    };

    let (f_init, _) = outputs(&work, 0)?;
    let f0_star = vectorize(&f_init);
    let f0_train = f0_star.rows(0, n_vec).into_owned();
    let centered_y = &y_vec - &f0_train;

    let mut state = TrainerState {
        theta: work.params().clone(),
        theta_prev: work.params().clone(),
        s_star: Mat::zeros(rows, n_vec),
        s_star_prev: Mat::zeros(rows, n_vec),
        f0_star,
        step: 0,
    };
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut best: Option<(usize, Option<f64>, Mat)> = None;

    for k in 0..=cfg.epochs {
        let (f_mat, blocks) = if k == 0 {
            link(cfg.loss, &work.forward(&x_all)?)
        } else {
            outputs(&work, k)?
        };
        let f_vec = vectorize(&f_mat);
        let f_train_mat = f_mat.rows(0, n).into_owned();
        let loss = total_loss(cfg.loss, &f_train_mat, y_build).map_err(|_| diverged(k))?;
        if !loss.is_finite() {
            return Err(diverged(k));
        }
        let linear_pred = &state.s_star * &centered_y + &state.f0_star;
        let discrepancy = (&f_vec - linear_pred).amax();

        let monitor_due = k % cfg.monitor_every == 0 || k == cfg.epochs;
        let monitor = match (&cfg.monitor, monitor_due) {
            (Some(spec), true) => {
                let set = monitor_set(&state.s_star, n_vec, nv_vec)?;
                match evaluate_yfree(spec, &set, None) {
                    Ok(v) => Some(v.value),
                    Err(Error::Undefined(what)) => {
                        log::debug!("monitor undefined at epoch {k}: {what}");
                        None
                    }
                    Err(e) => return Err(e),
                }
            }
            _ => None,
        };
        trace.push(TraceRow {
            epoch: k,
            loss,
            monitor,
            discrepancy,
        });
        let improves = match (&best, cfg.monitor.is_some()) {
            (None, false) => false,
            (None, true) => monitor.is_some(),
            (Some((_, Some(b), _)), true) => monitor.is_some_and(|m| m < *b),
            (Some(_), _) => false,
        };
        if improves {
            best = Some((k, monitor, state.s_star.clone()));
        }
        if k == cfg.epochs {
            break;
        }

        // gradient step and smoother step, both from theta_k
        let jg = work.jacobian(&x_all)?;
        let jf = match cfg.loss {
            LossKind::Squared => jg,
            LossKind::CrossEntropy => apply_row_blocks(&blocks, &jg),
        };
        let jf_train = jf.rows(0, n_vec);
        let residual = &y_vec - f_vec.rows(0, n_vec);
        let (weighted_residual, k_tilde) = match cfg.loss {
            LossKind::Squared => (residual, &jf * jf_train.transpose()),
            LossKind::CrossEntropy => {
                let mut weights = Vec::with_capacity(n);
                for i in 0..n {
                    let fi: Vec<f64> = f_train_mat.row(i).iter().copied().collect();
                    weights.push(ce_weight_matrix(&fi)?);
                }
                let r = apply_row_blocks(
                    &weights,
                    &Mat::from_column_slice(n_vec, 1, residual.as_slice()),
                );
                let kt = apply_col_blocks(&(&jf * jf_train.transpose()), &weights);
                (r.column(0).into_owned(), kt)
            }
        };
        let step = jf_train.transpose() * weighted_residual * cfg.eta;
        let theta_next = &state.theta + (&state.theta - &state.theta_prev) * cfg.gamma + step;
        if theta_next.iter().any(|v| !v.is_finite()) {
            return Err(diverged(k + 1));
        }
        let mut complement = -state.s_star.rows(0, n_vec).into_owned();
        for i in 0..n_vec {
            complement[(i, i)] += 1.0;
        }
        let s_next = &state.s_star
            + (&state.s_star - &state.s_star_prev) * cfg.gamma
            + k_tilde * complement * cfg.eta;
        if !all_finite(&s_next) {
            return Err(diverged(k + 1));
        }
        state.theta_prev = std::mem::replace(&mut state.theta, theta_next);
        state.s_star_prev = std::mem::replace(&mut state.s_star, s_next);
        state.step = k + 1;
        work.set_params(state.theta.clone());
    }

    let (best_epoch, best_value, best_full) = match best {
        Some(b) => b,
        None => {
            if cfg.monitor.is_some() {
                return Err(Error::Undefined("the monitor at every epoch"));
            }
            (cfg.epochs, None, state.s_star.clone())
        }
    };
    Ok(TrainOutcome {
        best: monitor_set(&best_full, n_vec, nv_vec)?,
        best_epoch,
        best_value,
        trace,
        state,
        network: work,
        best_full,
        n_train: n,
        d_out,
    })
}

/// Largest sup-norm gap between the network and its smoother over a run at
/// `eta` for `epochs` steps and a run at `eta / 2` for `2 epochs` steps.
#[allow(clippy::too_many_arguments)]
pub fn smoother_error(
    net: &Network,
    x_train: &Mat,
    x_extra: &Mat,
    y_build: &Mat,
    loss: LossKind,
    eta: f64,
    gamma: f64,
    epochs: usize,
) -> Result<(f64, f64)> {
    let run = |eta: f64, epochs: usize| -> Result<f64> {
        let cfg = TrainConfig::new(loss, eta, gamma, epochs);
        Ok(train_smoother(net, x_train, x_extra, 0, y_build, &cfg)?.max_discrepancy())
    };
    Ok((run(eta, epochs)?, run(eta / 2.0, 2 * epochs)?))
}

/// Network outputs under `loss`: raw for squared loss, compact softmax
/// probabilities for cross-entropy.
pub fn outputs(net: &Network, loss: LossKind, x: &Mat) -> Result<Mat> {
    Ok(link(loss, &net.forward(x)?).0)
}

/// Result of ordinary y-based training with a held-out stopping set.
#[derive(Debug, Clone)]
pub struct EarlyStopFit {
    pub network: Network,
    pub best_epoch: usize,
    /// Held-out loss per epoch, epoch 0 first.
    pub validation_loss: Vec<f64>,
}

/// Full-batch momentum training on the response itself, keeping the
/// parameters of the epoch with the smallest loss on the held-out rows.
pub fn fit_early_stopping(
    net: &Network,
    x_fit: &Mat,
    y_fit: &Mat,
    x_hold: &Mat,
    y_hold: &Mat,
    cfg: &TrainConfig,
) -> Result<EarlyStopFit> {
    cfg.validate()?;
    if y_fit.shape() != (x_fit.nrows(), net.d_out())
        || y_hold.shape() != (x_hold.nrows(), net.d_out())
    {
        return Err(shape("targets do not match the rows and output width"));
    }
    if x_hold.nrows() == 0 {
        return Err(invalid("no held-out rows"));
    }
    let y_vec = vectorize(y_fit);
    let mut work = net.clone();
    let mut theta_prev = work.params().clone();
    let mut best = (0usize, f64::INFINITY, work.clone());
    let mut validation_loss = Vec::with_capacity(cfg.epochs + 1);
    for k in 0..=cfg.epochs {
        let (f_hold, _) = link(
            cfg.loss,
            &work
                .forward(x_hold)
                .map_err(|_| Error::Diverged { step: k })?,
        );
        let v = total_loss(cfg.loss, &f_hold, y_hold)?;
        if !v.is_finite() {
            return Err(Error::Diverged { step: k });
        }
        validation_loss.push(v);
        if v < best.1 {
            best = (k, v, work.clone());
        }
        if k == cfg.epochs {
            break;
        }
        let (f_fit, blocks) = link(cfg.loss, &work.forward(x_fit)?);
        let jg = work.jacobian(x_fit)?;
        let residual = &y_vec - vectorize(&f_fit);
        let grad = match cfg.loss {
            LossKind::Squared => jg.transpose() * residual,
            LossKind::CrossEntropy => {
                let jf = apply_row_blocks(&blocks, &jg);
                let mut weights = Vec::with_capacity(f_fit.nrows());
                for i in 0..f_fit.nrows() {
                    let fi: Vec<f64> = f_fit.row(i).iter().copied().collect();
                    weights.push(ce_weight_matrix(&fi)?);
                }
                let n_vec = residual.len();
                let r = apply_row_blocks(
                    &weights,
                    &Mat::from_column_slice(n_vec, 1, residual.as_slice()),
                );
                jf.transpose() * r.column(0)
            }
        };
        let theta = work.params().clone();
        let next = &theta + (&theta - &theta_prev) * cfg.gamma + grad * cfg.eta;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: k + 1 });
        }
        theta_prev = theta;
        work.set_params(next);
    }
    Ok(EarlyStopFit {
        network: best.2,
        best_epoch: best.0,
        validation_loss,
    })
}
