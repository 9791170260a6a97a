//! Batch experiments behind the command-line tool. Each command returns a
//! report struct; [`RunDir`] writes it out.

mod benchmark;
mod complexity;
mod config;
mod fit;
mod risk;
mod sin;
mod train_bench;

pub use benchmark::{
    prepare_rep, quartiles, select_benchmark, yfree_smoothers, BenchmarkReport, RepData,
    RepOutcome, SelectedSmoother, TableRow,
};
pub use complexity::{complexity_demo, ComplexityReport, ComplexityRow};
pub use config::{
    AxisSpec, BuildKind, Command, DataSource, ExperimentConfig, ModelKind, NnSettings, RangeSpec,
    KEYS,
};
pub use fit::Prediction;
pub use risk::{risk_figure, RiskReport, SnrMax};
pub use sin::{sin_demo, Curve, SinDemoReport, SummaryRow};
pub use train_bench::{bench_ntk, cost_estimate, NtkBenchReport, NtkRun};

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{rng, Dataset, Target};
use crate::error::{invalid, Result};
use crate::io::write_key_values;
use crate::linalg::Mat;
use crate::selection::{Family, HyperGrid};

/// One output directory. All files of a run go through this handle.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `manifest.txt`: command, crate version, seed and the config echo.
    pub fn write_manifest(&self, cfg: &ExperimentConfig, extra: &[(String, String)]) -> Result<()> {
        let mut pairs = vec![
            ("command".to_string(), cfg.command.to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("seed".to_string(), cfg.seed.to_string()),
        ];
        pairs.extend(cfg.echo().into_iter().filter(|(k, _)| k != "seed"));
        pairs.extend(extra.iter().cloned());
        write_key_values(self.path("manifest.txt"), &pairs)
    }
}

/// The grid of `family` from the config axes; `n` sizes the `k` axis.
pub fn family_grid(cfg: &ExperimentConfig, family: &Family, n: usize) -> Result<HyperGrid> {
    let mut g = HyperGrid::new();
    for &axis in family.axes() {
        let mut values = cfg.axis_values(axis, n);
        if axis == crate::selection::Axis::K {
            values.retain(|&k| k >= 1.0 && k <= n as f64);
        }
        g = g.with(axis, values)?;
    }
    Ok(g)
}

/// Labels uniform over `1..=classes`, covariates `N(mu_label, I)` with the
/// class means spread on a circle of radius 2.5 in the first two
/// coordinates (on a line when `d = 1`).
pub fn synth_blobs(n: usize, d: usize, classes: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 || classes < 2 {
        return Err(invalid("blobs need n, d >= 1 and at least two classes"));
    }
    let mut r = rng(seed);
    let labels: Vec<usize> = (0..n).map(|_| r.random_range(1..=classes)).collect();
    let tau = 2.0 * std::f64::consts::PI;
    let mut x = Mat::zeros(n, d);
    for i in 0..n {
        let j = labels[i] as f64;
        for c in 0..d {
            let e: f64 = StandardNormal.sample(&mut r);
            x[(i, c)] = e;
        }
        if d == 1 {
            x[(i, 0)] += 2.5 * j;
        } else {
            let a = tau * j / classes as f64;
            x[(i, 0)] += 2.5 * a.cos();
            x[(i, 1)] += 2.5 * a.sin();
        }
    }
    Dataset::new(x, Target::Labels { labels, classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_seeded() {
        let a = synth_blobs(20, 3, 4, 1).unwrap();
        let b = synth_blobs(20, 3, 4, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.labels().unwrap().0.iter().all(|&l| (1..=4).contains(&l)));
    }

    #[test]
    fn family_grid_caps_k() {
        let mut cfg = ExperimentConfig::defaults(Command::Select);
        cfg.set("k", "1,5,50").unwrap();
        let g = family_grid(&cfg, &Family::Knn, 10).unwrap();
        assert_eq!(g.values(crate::selection::Axis::K).unwrap(), &[1.0, 5.0]);
    }
}
