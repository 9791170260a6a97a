//! Marchenko-Pastur asymptotics of linear ridge regression with isotropic
//! features, `d/n -> gamma`, penalty `n lambda` and `SNR = |beta|^2 / sigma^2`.
//!
//! Divergent points (`gamma = 1`, `lambda = 0`) are returned as
//! `f64::INFINITY`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSpec {
    pub gamma: f64,
    pub snr: f64,
    pub sigma2: f64,
}

impl AsymptoticSpec {
    pub fn new(gamma: f64, snr: f64, sigma2: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("snr", snr), ("sigma2", sigma2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { gamma, snr, sigma2 })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("gamma must be positive, got {gamma}")))
    }
}

fn discriminant(z: f64, gamma: f64) -> f64 {
    let b = 1.0 - gamma - z;
    b * b - 4.0 * gamma * z
}

/// Stieltjes transform `m_F(z)` of the Marchenko-Pastur law at `z < 0`.
///
/// The two algebraically equal forms of the root are chosen by the sign of
/// `1 - gamma - z` so that neither subtracts nearly equal numbers.
pub fn stieltjes_mp(z: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(z < 0.0) {
        return Err(invalid(format!(
            "Stieltjes transform is evaluated at z < 0, got {z}"
        )));
    }
    let b = 1.0 - gamma - z;
    let root = discriminant(z, gamma).sqrt();
    Ok(if b >= 0.0 {
        2.0 / (b + root)
    } else {
        (b - root) / (2.0 * gamma * z)
    })
}

/// `m_F'(z)`. Differentiating `gamma z m^2 - (1 - gamma - z) m + 1 = 0` gives
/// `m' = m (1 + gamma m) / sqrt(D)`, which equals the direct closed form
/// (see [`stieltjes_mp_prime_direct`]) without its cancellation.
pub fn stieltjes_mp_prime(z: f64, gamma: f64) -> Result<f64> {
    let m = stieltjes_mp(z, gamma)?;
    Ok(m * (1.0 + gamma * m) / discriminant(z, gamma).sqrt())
}

/// The derivative as displayed in closed form,
/// `[z(1 + gamma - z)/sqrt(D) - 1 + gamma + sqrt(D)] / (2 gamma z^2)`.
pub fn stieltjes_mp_prime_direct(z: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(z < 0.0) {
        return Err(invalid(format!("evaluated at z < 0, got {z}")));
    }
    let root = discriminant(z, gamma).sqrt();
    Ok((z * (1.0 + gamma - z) / root - 1.0 + gamma + root) / (2.0 * gamma * z * z))
}

/// The transform as displayed, `(1 - gamma - z - sqrt(D)) / (2 gamma z)`.
pub fn stieltjes_mp_direct(z: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let root = discriminant(z, gamma).sqrt();
    Ok((1.0 - gamma - z - root) / (2.0 * gamma * z))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && !lambda.is_nan() {
        Ok(())
    } else {
        Err(invalid(format!("lambda must be nonnegative, got {lambda}")))
    }
}

/// Asymptotic variance
/// `sigma2/2 ((1 + gamma + lambda) / sqrt((1 - gamma + lambda)^2 + 4 gamma lambda) - 1)`.
pub fn asym_variance(lambda: f64, gamma: f64, sigma2: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_gamma(gamma)?;
    let b = 1.0 - gamma + lambda;
    let root = (b * b + 4.0 * gamma * lambda).sqrt();
    if root == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 * sigma2 * ((1.0 + gamma + lambda) / root - 1.0))
}

/// Variance through the transform, `sigma2 gamma (m - lambda m')` at
/// `z = -lambda`. Requires `lambda > 0`.
pub fn asym_variance_stieltjes(lambda: f64, gamma: f64, sigma2: f64) -> Result<f64> {
    let m = stieltjes_mp(-lambda, gamma)?;
    let mp = stieltjes_mp_prime(-lambda, gamma)?;
    Ok(sigma2 * gamma * (m - lambda * mp))
}

/// Asymptotic risk, variance plus the bias `sigma2 snr lambda^2 m'(-lambda)`.
/// At `lambda = 0` the bias limit is `sigma2 snr (1 - 1/gamma)` for
/// `gamma > 1` and zero otherwise.
pub fn asym_risk(lambda: f64, gamma: f64, snr: f64, sigma2: f64) -> Result<f64> {
    let v = asym_variance(lambda, gamma, sigma2)?;
    if v.is_infinite() {
        return Ok(v);
    }
    Ok(v + asym_bias(lambda, gamma, snr, sigma2)?)
}

/// The bias part `R - V`.
pub fn asym_bias(lambda: f64, gamma: f64, snr: f64, sigma2: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_gamma(gamma)?;
    if lambda == 0.0 {
        return Ok(if gamma > 1.0 {
            sigma2 * snr * (1.0 - 1.0 / gamma)
        } else {
            0.0
        });
    }
    let mp = stieltjes_mp_prime(-lambda, gamma)?;
    Ok(sigma2 * snr * lambda * lambda * mp)
}

/// Risk through the transform,
/// `sigma2 gamma (m - lambda (1 - snr lambda / gamma) m')`. Requires `lambda > 0`.
pub fn asym_risk_stieltjes(lambda: f64, gamma: f64, snr: f64, sigma2: f64) -> Result<f64> {
    let m = stieltjes_mp(-lambda, gamma)?;
    let mp = stieltjes_mp_prime(-lambda, gamma)?;
    Ok(sigma2 * gamma * (m - lambda * (1.0 - snr * lambda / gamma) * mp))
}

/// Risk of the unregularized fit: `sigma2 gamma / (1 - gamma)` below one and
/// `sigma2 (snr (1 - 1/gamma) + 1/(gamma - 1))` above.
pub fn asym_risk_zero(gamma: f64, snr: f64, sigma2: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if gamma == 1.0 {
        return Err(Error::Undefined("the unregularized risk at gamma = 1"));
    }
    Ok(if gamma < 1.0 {
        sigma2 * gamma / (1.0 - gamma)
    } else {
        sigma2 * (snr * (1.0 - 1.0 / gamma) + 1.0 / (gamma - 1.0))
    })
}

/// Like [`asym_risk_zero`] but with the divergence at `gamma = 1` reported
/// as infinity.
pub fn asym_risk_zero_tagged(gamma: f64, snr: f64, sigma2: f64) -> Result<f64> {
    match asym_risk_zero(gamma, snr, sigma2) {
        Err(Error::Undefined(_)) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Risk at the optimal penalty `lambda* = gamma / snr`.
pub fn asym_risk_opt(gamma: f64, snr: f64, sigma2: f64) -> Result<f64> {
    AsymptoticSpec::new(gamma, snr, sigma2)?;
    let s = snr;
    let c = 1.0 - s + s / gamma;
    Ok(0.5 * sigma2 * (s - s / gamma - 1.0 + (4.0 * s + c * c).sqrt()))
}

/// Penalty selected asymptotically by trace-based MSV:
/// `3 sqrt(gamma/2) - gamma - 1` on `(1/2, 2)`, zero elsewhere.
pub fn lambda_t(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if gamma > 0.5 && gamma < 2.0 {
        Ok((3.0 * (gamma / 2.0).sqrt() - gamma - 1.0).max(0.0))
    } else {
        Ok(0.0)
    }
}

pub fn lambda_opt(gamma: f64, snr: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(invalid(format!("snr must be positive, got {snr}")));
    }
    Ok(gamma / snr)
}

/// Risk at `lambda_t`: `sigma2 (1 + snr (sqrt(2 gamma) - 1)^2 / gamma)` on
/// `(1/2, 2)` and the unregularized risk elsewhere.
pub fn asym_risk_t(gamma: f64, snr: f64, sigma2: f64) -> Result<f64> {
    AsymptoticSpec::new(gamma, snr, sigma2)?;
    if gamma > 0.5 && gamma < 2.0 {
        let r = (2.0 * gamma).sqrt() - 1.0;
        Ok(sigma2 * (1.0 + snr * r * r / gamma))
    } else {
        asym_risk_zero_tagged(gamma, snr, sigma2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskCurvePoint {
    pub gamma: f64,
    pub snr: f64,
    pub lambda_t: f64,
    pub lambda_opt: f64,
    pub v_bar: f64,
    pub r_t: f64,
    pub r_opt: f64,
    pub r_zero: f64,
    pub ratio: f64,
}

impl RiskCurvePoint {
    pub fn at(gamma: f64, snr: f64, sigma2: f64) -> Result<Self> {
        let lt = lambda_t(gamma)?;
        let r_t = asym_risk_t(gamma, snr, sigma2)?;
        let r_opt = asym_risk_opt(gamma, snr, sigma2)?;
        Ok(Self {
            gamma,
            snr,
            lambda_t: lt,
            lambda_opt: lambda_opt(gamma, snr)?,
            v_bar: asym_variance(lt, gamma, sigma2)?,
            r_t,
            r_opt,
            r_zero: asym_risk_zero_tagged(gamma, snr, sigma2)?,
            ratio: r_t / r_opt,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub max_ratio: f64,
    pub argmax: RiskCurvePoint,
    pub table: Vec<RiskCurvePoint>,
    /// Cells whose ratio was not finite.
    pub divergent: Vec<(f64, f64)>,
}

/// Evaluates every `(gamma, snr)` cell. Rows are ordered by gamma, then snr.
pub fn ratio_scan(gammas: &[f64], snrs: &[f64], sigma2: f64) -> Result<ScanResult> {
    if gammas.is_empty() || snrs.is_empty() {
        return Err(invalid("empty scan grid"));
    }
    let table: Vec<RiskCurvePoint> = gammas
        .par_iter()
        .map(|&g| {
            snrs.iter()
                .map(|&s| RiskCurvePoint::at(g, s, sigma2))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut divergent = Vec::new();
    let mut best: Option<RiskCurvePoint> = None;
    for p in &table {
        if !p.ratio.is_finite() {
            divergent.push((p.gamma, p.snr));
            continue;
        }
        if best.is_none_or(|b| p.ratio > b.ratio) {
            best = Some(*p);
        }
    }
    let argmax = best.ok_or_else(|| Error::Numerical("every scan cell diverged".into()))?;
    Ok(ScanResult {
        max_ratio: argmax.ratio,
        argmax,
        table,
        divergent,
    })
}

/// `n` points from `lo` to `hi` inclusive with step `step`, computed as
/// `lo + i * step` to avoid drift.
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || hi < lo {
        return Err(invalid("grid needs lo <= hi and a positive step"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}
