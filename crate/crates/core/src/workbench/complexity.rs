use crate::criteria::{edof, msv_tr};
use crate::data::{split_seed, synth_sin, SinData};
use crate::error::Result;
use crate::io::write_table;
use crate::linalg::Vector;
use crate::smoothers::{krr_smoother, KernelSpec};

use super::fit::stream;
use super::{ExperimentConfig, RunDir};

#[derive(Debug, Clone)]
pub struct ComplexityRow {
    pub sigma: f64,
    pub edof: f64,
    /// `max_i |y_i - (S y)_i|`.
    pub residual: f64,
    /// y-free MSV-Tr on the dense grid.
    pub msv_tr: f64,
    pub curve: Vector,
}

#[derive(Debug, Clone)]
pub struct ComplexityReport {
    pub data: SinData,
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityReport {
    /// Largest pairwise gap between the `edof` values.
    pub fn edof_spread(&self) -> f64 {
        let max = self
            .rows
            .iter()
            .map(|r| r.edof)
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self
            .rows
            .iter()
            .map(|r| r.edof)
            .fold(f64::INFINITY, f64::min);
        max - min
    }

    /// `summary.csv` and `curves.csv` (one column per bandwidth).
    pub fn write(&self, dir: &RunDir) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.sigma.to_string(),
                    r.edof.to_string(),
                    r.residual.to_string(),
                    r.msv_tr.to_string(),
                ]
            })
            .collect();
        write_table(
            dir.path("summary.csv"),
            &["sigma", "edof", "residual", "msv_tr"],
            &rows,
        )?;
        let mut header = vec!["x".to_string(), "truth".to_string()];
        header.extend(self.rows.iter().map(|r| format!("sigma_{}", r.sigma)));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = (0..self.data.grid.nrows())
            .map(|i| {
                let mut row = vec![
                    self.data.grid[(i, 0)].to_string(),
                    self.data.truth[i].to_string(),
                ];
                row.extend(self.rows.iter().map(|r| r.curve[i].to_string()));
                row
            })
            .collect();
        write_table(dir.path("curves.csv"), &header, &rows)
    }
}

/// Unregularized KRR on the sine data at each configured bandwidth.
pub fn complexity_demo(cfg: &ExperimentConfig) -> Result<ComplexityReport> {
    cfg.validate()?;
    let seed = split_seed(cfg.seed, 0);
    let data = synth_sin(cfg.n_train, cfg.noise_sd, split_seed(seed, stream::DATA))?;
    let x = data.train.x();
    let y = data.train.response().expect("regression data");
    let rows = cfg
        .sigmas
        .iter()
        .map(|&sigma| {
            let set = krr_smoother(x, &data.grid, 0.0, KernelSpec::new(sigma)?)?;
            let fitted = &set.s * y;
            let residual = (y - &fitted).amax();
            Ok(ComplexityRow {
                sigma,
                edof: edof(&set.s)?,
                residual,
                msv_tr: msv_tr(set.validation()?)?.value,
                curve: set.validation()? * y,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexityReport { data, rows })
}
