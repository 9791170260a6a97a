use crate::asymptotics::{linear_grid, ratio_scan, RiskCurvePoint, ScanResult};
use crate::error::Result;
use crate::io::write_table;

use super::{ExperimentConfig, RunDir};

/// Largest ratio over gamma for one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrMax {
    pub snr: f64,
    pub gamma: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RiskReport {
    /// Risk curves over `curve_gamma` for each of `curve_snrs`.
    pub curves: Vec<RiskCurvePoint>,
    /// Ratio scan over `gamma_range x snr_range`.
    pub scan: ScanResult,
    pub per_snr: Vec<SnrMax>,
}

pub fn risk_figure(cfg: &ExperimentConfig) -> Result<RiskReport> {
    let g = &cfg.curve_gamma;
    let curves = ratio_scan(
        &linear_grid(g.lo, g.hi, g.step)?,
        &cfg.curve_snrs,
        cfg.sigma2,
    )?
    .table;
    let (gr, sr) = (&cfg.gamma_range, &cfg.snr_range);
    let snrs = linear_grid(sr.lo, sr.hi, sr.step)?;
    let scan = ratio_scan(&linear_grid(gr.lo, gr.hi, gr.step)?, &snrs, cfg.sigma2)?;
    let per_snr = snrs
        .iter()
        .map(|&snr| {
            let mut best = SnrMax {
                snr,
                gamma: f64::NAN,
                ratio: f64::NEG_INFINITY,
            };
            for p in scan
                .table
                .iter()
                .filter(|p| p.snr == snr && p.ratio.is_finite())
            {
                if p.ratio > best.ratio {
                    best = SnrMax {
                        snr,
                        gamma: p.gamma,
                        ratio: p.ratio,
                    };
                }
            }
            best
        })
        .collect();
    Ok(RiskReport {
        curves,
        scan,
        per_snr,
    })
}

const CURVE_HEADER: [&str; 9] = [
    "gamma",
    "snr",
    "r_T",
    "r_opt",
    "r_zero",
    "ratio",
    "lambda_t",
    "lambda_opt",
    "v_bar",
];

fn curve_row(p: &RiskCurvePoint) -> Vec<String> {
    [
        p.gamma,
        p.snr,
        p.r_t,
        p.r_opt,
        p.r_zero,
        p.ratio,
        p.lambda_t,
        p.lambda_opt,
        p.v_bar,
    ]
    .iter()
    .map(f64::to_string)
    .collect()
}

impl RiskReport {
    /// One line: the maximal ratio and where it occurs.
    pub fn summary_line(&self) -> String {
        let a = &self.scan.argmax;
        format!(
            "max_ratio={} gamma={} snr={} divergent_cells={}",
            self.scan.max_ratio,
            a.gamma,
            a.snr,
            self.scan.divergent.len()
        )
    }

    /// `risk_curves.csv`, `ratio_by_snr.csv`, `summary.txt` and, with
    /// `full`, the whole scan as `ratio_scan.csv`.
    pub fn write(&self, dir: &RunDir, full: bool) -> Result<()> {
        let rows: Vec<Vec<String>> = self.curves.iter().map(curve_row).collect();
        write_table(dir.path("risk_curves.csv"), &CURVE_HEADER, &rows)?;
        let rows: Vec<Vec<String>> = self
            .per_snr
            .iter()
            .map(|m| vec![m.snr.to_string(), m.gamma.to_string(), m.ratio.to_string()])
            .collect();
        write_table(
            dir.path("ratio_by_snr.csv"),
            &["snr", "gamma", "max_ratio"],
            &rows,
        )?;
        if full {
            let rows: Vec<Vec<String>> = self.scan.table.iter().map(curve_row).collect();
            write_table(dir.path("ratio_scan.csv"), &CURVE_HEADER, &rows)?;
        }
        std::fs::write(
            dir.path("summary.txt"),
            format!("{}\n", self.summary_line()),
        )?;
        Ok(())
    }
}
