//! Plain-text `key=value` experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::criteria::CriterionSpec;
use crate::error::{invalid, Error, Result};
use crate::io::TaskHint;
use crate::linalg::MatrixNorm;
use crate::ntk::LossKind;
use crate::selection::{default_k_grid, default_penalty_grid, demo_grid, log_grid, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DemoSin,
    ComplexityDemo,
    Select,
    Asymptotics,
    BenchNtk,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DemoSin => "demo-sin",
            Command::ComplexityDemo => "complexity-demo",
            Command::Select => "select",
            Command::Asymptotics => "asymptotics",
            Command::BenchNtk => "bench-ntk",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    /// `y = X beta + eps` with isotropic Gaussian covariates.
    SynthLinear,
    /// `sin(2 pi x)` plus noise on `[-1, 1]`.
    SynthSin,
    /// Gaussian blobs, one per class.
    SynthBlobs,
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Csv(p) => write!(f, "{}", p.display()),
            DataSource::SynthLinear => f.write_str("synth:linear"),
            DataSource::SynthSin => f.write_str("synth:sin"),
            DataSource::SynthBlobs => f.write_str("synth:blobs"),
        }
    }
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "" => Err(invalid("empty data source")),
            "synth:linear" => Ok(DataSource::SynthLinear),
            "synth:sin" => Ok(DataSource::SynthSin),
            "synth:blobs" => Ok(DataSource::SynthBlobs),
            other if other.starts_with("synth:") => {
                Err(invalid(format!("unknown synthetic source {other:?}")))
            }
            path => Ok(DataSource::Csv(PathBuf::from(path))),
        }
    }
}

/// A model in the benchmark: a grid family, a network or a forest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Family(Family),
    Nn,
    Rf,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Family(f) => f.name(),
            ModelKind::Nn => "nn",
            ModelKind::Rf => "rf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nn" | "nnr" | "nnc" => Ok(ModelKind::Nn),
            "rf" | "forest" => Ok(ModelKind::Rf),
            other => other.parse().map(ModelKind::Family),
        }
    }
}

/// Which build response the network smoother is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BuildKind {
    #[default]
    Random,
    Zero,
}

impl fmt::Display for BuildKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuildKind::Random => "random",
            BuildKind::Zero => "zero",
        })
    }
}

impl FromStr for BuildKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" | "y_r" => Ok(BuildKind::Random),
            "zero" | "0" => Ok(BuildKind::Zero),
            other => Err(invalid(format!("unknown build target {other:?}"))),
        }
    }
}

/// A candidate axis given either as `lo:hi:count` (log-spaced) or as a
/// comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec(pub Vec<f64>);

impl FromStr for AxisSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() == 3 {
            let lo = parse_num(parts[0])?;
            let hi = parse_num(parts[1])?;
            let count = parts[2]
                .parse()
                .map_err(|_| invalid(format!("bad count in {s:?}")))?;
            return Ok(AxisSpec(log_grid(lo, hi, count)?));
        }
        Ok(AxisSpec(parse_list(s)?))
    }
}

impl fmt::Display for AxisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.0))
    }
}

/// Inclusive linear range `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl FromStr for RangeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(invalid(format!("expected lo:hi:step, got {s:?}")));
        }
        Ok(RangeSpec {
            lo: parse_num(parts[0])?,
            hi: parse_num(parts[1])?,
            step: parse_num(parts[2])?,
        })
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnSettings {
    pub width: usize,
    pub eta: f64,
    pub gamma: f64,
    pub epochs: usize,
    pub monitor_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub data: DataSource,
    pub target: Option<String>,
    pub task: TaskHint,
    pub models: Vec<ModelKind>,
    /// Criterion names, resolved against `norm` by [`Self::criteria`].
    pub criteria: Vec<String>,
    pub norm: MatrixNorm,
    pub lambda: Option<AxisSpec>,
    pub sigma: Option<AxisSpec>,
    pub k: Option<AxisSpec>,
    pub t: Option<AxisSpec>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_val: usize,
    pub reps: usize,
    pub seed: u64,
    pub folds: usize,
    pub noise_sd: f64,
    pub snr: f64,
    pub dim: usize,
    pub classes: usize,
    pub sigma2: f64,
    pub nn: NnSettings,
    pub rf_trees: usize,
    pub build: BuildKind,
    pub loss: Option<LossKind>,
    pub sigmas: Vec<f64>,
    pub gamma_range: RangeSpec,
    pub snr_range: RangeSpec,
    pub curve_gamma: RangeSpec,
    pub curve_snrs: Vec<f64>,
    pub full_table: bool,
    pub out: PathBuf,
}

/// Every key accepted by [`ExperimentConfig::set`].
pub const KEYS: &[&str] = &[
    "data",
    "target",
    "task",
    "model",
    "criterion",
    "norm",
    "lambda",
    "sigma",
    "k",
    "t",
    "n_train",
    "n_test",
    "n_val",
    "reps",
    "seed",
    "folds",
    "noise_sd",
    "snr",
    "dim",
    "classes",
    "sigma2",
    "nn_width",
    "nn_eta",
    "nn_gamma",
    "nn_epochs",
    "monitor_every",
    "rf_trees",
    "build",
    "loss",
    "sigmas",
    "gamma_range",
    "snr_range",
    "curve_gamma",
    "curve_snrs",
    "full_table",
    "out",
];

impl ExperimentConfig {
    /// Defaults for `command`.
    pub fn defaults(command: Command) -> Self {
        let (h, eta, gamma) = crate::ntk::REAL_DATA_PROFILE;
        let mut cfg = Self {
            command,
            data: DataSource::SynthLinear,
            target: None,
            task: TaskHint::Auto,
            models: vec![ModelKind::Family(Family::Lrr {
                scaling: Default::default(),
            })],
            criteria: vec!["msv_norm".into(), "gcv_yfree".into(), "kfold".into()],
            norm: MatrixNorm::Frobenius,
            lambda: None,
            sigma: None,
            k: None,
            t: None,
            n_train: 500,
            n_test: 100,
            n_val: 500,
            reps: 10,
            seed: 0,
            folds: 10,
            noise_sd: 0.3,
            snr: 5.0,
            dim: 20,
            classes: 3,
            sigma2: 1.0,
            nn: NnSettings {
                width: h,
                eta,
                gamma,
                epochs: 500,
                monitor_every: 1,
            },
            rf_trees: crate::smoothers::DEFAULT_TREES,
            build: BuildKind::Random,
            loss: None,
            sigmas: vec![1.3, 0.16, 0.01],
            gamma_range: RangeSpec {
                lo: 0.5,
                hi: 2.0,
                step: 1e-3,
            },
            snr_range: RangeSpec {
                lo: 1.0,
                hi: 80.0,
                step: 1.0,
            },
            curve_gamma: RangeSpec {
                lo: 0.05,
                hi: 3.0,
                step: 5e-3,
            },
            curve_snrs: vec![1.0, 5.0, 20.0],
            full_table: false,
            out: PathBuf::from(format!("runs/{}", command.name())),
        };
        match command {
            Command::DemoSin | Command::ComplexityDemo => {
                let (h, eta, gamma) = crate::ntk::DEMO_PROFILE;
                cfg.data = DataSource::SynthSin;
                cfg.n_train = 10;
                cfg.n_test = 0;
                cfg.n_val = 0;
                cfg.reps = 1;
                cfg.models = ["spline", "krr", "knn", "nn", "rf"]
                    .iter()
                    .map(|m| m.parse().expect("static"))
                    .collect();
                cfg.criteria = vec!["msv_norm".into(), "loocv".into()];
                cfg.nn = NnSettings {
                    width: h,
                    eta,
                    gamma,
                    epochs: 1000,
                    monitor_every: 1,
                };
            }
            Command::BenchNtk => {
                cfg.data = DataSource::SynthBlobs;
                cfg.dim = 2;
                cfg.n_train = 60;
                cfg.n_test = 100;
                cfg.n_val = 100;
                cfg.reps = 1;
                cfg.models = vec![ModelKind::Nn];
                cfg.criteria = vec!["msv_norm".into(), "gcv_yfree".into()];
                cfg.nn = NnSettings {
                    width: 20,
                    eta: 0.01,
                    gamma: 0.9,
                    epochs: 300,
                    monitor_every: 1,
                };
            }
            Command::Select | Command::Asymptotics => {}
        }
        cfg
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let bad = |what: &str| invalid(format!("{key}: {what} {v:?}"));
        match key.as_str() {
            "data" => self.data = v.parse()?,
            "target" => self.target = (!v.is_empty()).then(|| v.to_string()),
            "task" => {
                self.task = match v.to_ascii_lowercase().as_str() {
                    "auto" => TaskHint::Auto,
                    "regression" => TaskHint::Regression,
                    "classification" => TaskHint::Classification,
                    _ => return Err(bad("unknown task")),
                }
            }
            "model" => self.models = split(v).map(str::parse).collect::<Result<_>>()?,
            "criterion" => self.criteria = split(v).map(str::to_string).collect(),
            "norm" => self.norm = v.parse()?,
            "lambda" => self.lambda = Some(v.parse()?),
            "sigma" => self.sigma = Some(v.parse()?),
            "k" => self.k = Some(v.parse()?),
            "t" => self.t = Some(v.parse()?),
            "n_train" => self.n_train = v.parse().map_err(|_| bad("not a count"))?,
            "n_test" => self.n_test = v.parse().map_err(|_| bad("not a count"))?,
            "n_val" => self.n_val = v.parse().map_err(|_| bad("not a count"))?,
            "reps" => self.reps = v.parse().map_err(|_| bad("not a count"))?,
            "seed" => self.seed = v.parse().map_err(|_| bad("not a seed"))?,
            "folds" => self.folds = v.parse().map_err(|_| bad("not a count"))?,
            "noise_sd" => self.noise_sd = parse_num(v)?,
            "snr" => self.snr = parse_num(v)?,
            "dim" => self.dim = v.parse().map_err(|_| bad("not a count"))?,
            "classes" => self.classes = v.parse().map_err(|_| bad("not a count"))?,
            "sigma2" => self.sigma2 = parse_num(v)?,
            "nn_width" => self.nn.width = v.parse().map_err(|_| bad("not a count"))?,
            "nn_eta" => self.nn.eta = parse_num(v)?,
            "nn_gamma" => self.nn.gamma = parse_num(v)?,
            "nn_epochs" => self.nn.epochs = v.parse().map_err(|_| bad("not a count"))?,
            "monitor_every" => self.nn.monitor_every = v.parse().map_err(|_| bad("not a count"))?,
            "rf_trees" => self.rf_trees = v.parse().map_err(|_| bad("not a count"))?,
            "build" => self.build = v.parse()?,
            "loss" => self.loss = Some(v.parse()?),
            "sigmas" => self.sigmas = parse_list(v)?,
            "gamma_range" => self.gamma_range = v.parse()?,
            "snr_range" => self.snr_range = v.parse()?,
            "curve_gamma" => self.curve_gamma = v.parse()?,
            "curve_snrs" => self.curve_snrs = parse_list(v)?,
            "full_table" => {
                self.full_table = v.parse().map_err(|_| bad("expected true or false"))?
            }
            "out" => self.out = PathBuf::from(v),
            _ => {
                return Err(invalid(format!(
                    "unknown key {key:?}; known keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key=value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| invalid(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(invalid("reps must be at least 1"));
        }
        if self.models.is_empty() {
            return Err(invalid("no model given"));
        }
        if self.criteria.is_empty() {
            return Err(invalid("no criterion given"));
        }
        self.criteria()?;
        if self.n_train == 0 {
            return Err(invalid("n_train must be positive"));
        }
        if !(self.nn.eta > 0.0 && (0.0..1.0).contains(&self.nn.gamma)) || self.nn.monitor_every == 0
        {
            return Err(invalid(
                "network needs eta > 0, gamma in [0, 1) and monitor_every >= 1",
            ));
        }
        if self.nn.width == 0 || self.rf_trees == 0 {
            return Err(invalid("nn_width and rf_trees must be positive"));
        }
        if !(self.noise_sd >= 0.0 && self.snr >= 0.0 && self.sigma2 > 0.0) {
            return Err(invalid(
                "noise_sd and snr must be nonnegative, sigma2 positive",
            ));
        }
        if matches!(self.data, DataSource::SynthBlobs) && self.classes < 2 {
            return Err(invalid("blobs need at least two classes"));
        }
        Ok(())
    }

    pub fn criteria(&self) -> Result<Vec<CriterionSpec>> {
        let mut out: Vec<CriterionSpec> = Vec::new();
        for c in &self.criteria {
            let spec = CriterionSpec::parse_with_norm(c, self.norm)?;
            let spec = match spec.kind {
                crate::criteria::CriterionKind::KfoldCv if !c.contains(':') => {
                    CriterionSpec::kfold(self.folds)
                }
                _ => spec,
            };
            if !out.contains(&spec) {
                out.push(spec);
            }
        }
        Ok(out)
    }

    /// The grid axis for `family`, defaulting to the standard grids (`n`
    /// sizes the `k` axis).
    pub fn axis_values(&self, axis: crate::selection::Axis, n: usize) -> Vec<f64> {
        use crate::selection::Axis;
        let small = matches!(self.command, Command::DemoSin | Command::ComplexityDemo);
        let pick = |o: &Option<AxisSpec>, dflt: Vec<f64>| o.as_ref().map_or(dflt, |a| a.0.clone());
        match axis {
            Axis::Lambda if small => pick(&self.lambda, demo_grid()),
            Axis::Lambda => pick(&self.lambda, default_penalty_grid()),
            Axis::Sigma if small => pick(&self.sigma, demo_grid()),
            Axis::Sigma => pick(&self.sigma, default_penalty_grid()),
            Axis::K if small => pick(&self.k, (1..=n).map(|k| k as f64).collect()),
            Axis::K => pick(&self.k, default_k_grid(n)),
            Axis::T => pick(&self.t, {
                let mut v = log_grid(1e-6, 1e4, 200).expect("static grid");
                v.insert(0, 0.0);
                v
            }),
            Axis::Epochs => (0..=self.nn.epochs).map(|e| e as f64).collect(),
        }
    }

    /// The effective settings as `key=value` pairs, in [`KEYS`] order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let opt =
            |o: &Option<AxisSpec>| o.as_ref().map_or("default".to_string(), |a| a.to_string());
        let models: Vec<String> = self.models.iter().map(|m| m.to_string()).collect();
        let task = match self.task {
            TaskHint::Auto => "auto",
            TaskHint::Regression => "regression",
            TaskHint::Classification => "classification",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("data", self.data.to_string()),
            ("target", self.target.clone().unwrap_or_default()),
            ("task", task.into()),
            ("model", models.join(",")),
            ("criterion", self.criteria.join(",")),
            ("norm", self.norm.to_string()),
            ("lambda", opt(&self.lambda)),
            ("sigma", opt(&self.sigma)),
            ("k", opt(&self.k)),
            ("t", opt(&self.t)),
            ("n_train", self.n_train.to_string()),
            ("n_test", self.n_test.to_string()),
            ("n_val", self.n_val.to_string()),
            ("reps", self.reps.to_string()),
            ("seed", self.seed.to_string()),
            ("folds", self.folds.to_string()),
            ("noise_sd", self.noise_sd.to_string()),
            ("snr", self.snr.to_string()),
            ("dim", self.dim.to_string()),
            ("classes", self.classes.to_string()),
            ("sigma2", self.sigma2.to_string()),
            ("nn_width", self.nn.width.to_string()),
            ("nn_eta", self.nn.eta.to_string()),
            ("nn_gamma", self.nn.gamma.to_string()),
            ("nn_epochs", self.nn.epochs.to_string()),
            ("monitor_every", self.nn.monitor_every.to_string()),
            ("rf_trees", self.rf_trees.to_string()),
            ("build", self.build.to_string()),
            (
                "loss",
                self.loss.map_or("auto".to_string(), |l| l.to_string()),
            ),
            ("sigmas", join(&self.sigmas)),
            ("gamma_range", self.gamma_range.to_string()),
            ("snr_range", self.snr_range.to_string()),
            ("curve_gamma", self.curve_gamma.to_string()),
            ("curve_snrs", join(&self.curve_snrs)),
            ("full_table", self.full_table.to_string()),
            ("out", self.out.display().to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn split(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_num(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| invalid(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(invalid(format!("not finite: {s:?}")));
    }
    Ok(v)
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = split(s).map(parse_num).collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(invalid("empty list"));
    }
    Ok(v)
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_override() {
        let mut cfg = ExperimentConfig::defaults(Command::Select);
        cfg.apply_text("# comment\nseed = 7\nmodel=lrr,krr\nlambda=1e-3:1:4\n\n")
            .unwrap();
        cfg.set("seed", "9").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.models.len(), 2);
        assert_eq!(cfg.lambda.as_ref().unwrap().0.len(), 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_key_and_zero_reps() {
        let mut cfg = ExperimentConfig::defaults(Command::Select);
        assert!(cfg.set("colour", "red").is_err());
        assert!(cfg.apply_text("seed").is_err());
        cfg.set("reps", "0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn echo_lists_every_key_once() {
        let cfg = ExperimentConfig::defaults(Command::DemoSin);
        let keys: Vec<String> = cfg.echo().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, KEYS);
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = ExperimentConfig::defaults(Command::Select);
        cfg.set("lambda", "0.5,2").unwrap();
        cfg.set("data", "synth:blobs").unwrap();
        let mut again = ExperimentConfig::defaults(Command::Select);
        for (k, v) in cfg.echo() {
            if v != "default" && v != "auto" && !v.is_empty() {
                again.set(&k, &v).unwrap();
            }
        }
        assert_eq!(again, cfg);
    }

    #[test]
    fn kfold_uses_configured_folds() {
        let mut cfg = ExperimentConfig::defaults(Command::Select);
        cfg.set("folds", "5").unwrap();
        cfg.set("criterion", "kfold,kfold:3,msv_norm").unwrap();
        let specs = cfg.criteria().unwrap();
        assert_eq!(specs[0].folds, Some(5));
        assert_eq!(specs[1].folds, Some(3));
    }
}
