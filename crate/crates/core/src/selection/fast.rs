//! Criteria on a [`SpectralSmoother`] straight from its eigenvalues, without
//! forming `n x n` matrices. Each function agrees with the dense version in
//! `criteria` up to rounding.

use crate::criteria::{CriterionKind, CriterionSpec, InSampleMode};
use crate::error::{invalid, Error, Result};
use crate::linalg::{sym_eigen, Mat, MatrixNorm, Vector};
use crate::smoothers::{Filter, SpectralSmoother};

/// Decomposition plus the query Gram `Q^T Q` and optional response
/// projections.
pub(crate) struct SpectralCache<'a> {
    pub sm: &'a SpectralSmoother,
    gram_q: Mat,
    proj: Option<Projection>,
}

struct Projection {
    y: Vector,
    c: Vector,
    y_sq: f64,
    perp_sq: f64,
}

impl<'a> SpectralCache<'a> {
    pub fn new(sm: &'a SpectralSmoother, y: Option<&Vector>) -> Self {
        let q = sm.query_factor();
        let proj = y.map(|y| {
            let c = sm.u().transpose() * y;
            let perp = y - sm.u() * &c;
            Projection {
                y: y.clone(),
                c,
                y_sq: y.norm_squared(),
                perp_sq: perp.norm_squared(),
            }
        });
        Self {
            sm,
            gram_q: q.transpose() * q,
            proj,
        }
    }

    fn with_tail(&self, head: impl Iterator<Item = f64>, tail: f64) -> Vec<f64> {
        let rest = self.sm.n() - self.sm.rank();
        head.chain(std::iter::repeat_n(tail, rest)).collect()
    }

    /// `a I_r / n - diag(w) Q^T Q diag(w) / n_v`.
    fn msv_block(&self, w: &Vector, a: f64) -> Result<Mat> {
        let n_v = self.sm.n_query();
        if n_v == 0 {
            return Err(invalid("validation smoother has no rows"));
        }
        let r = w.len();
        let n = self.sm.n() as f64;
        let mut m = Mat::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                m[(i, j)] = -w[i] * w[j] * self.gram_q[(i, j)] / n_v as f64;
            }
            m[(i, i)] += a / n;
        }
        Ok(m)
    }

    pub fn evaluate(&self, spec: &CriterionSpec, filter: Filter) -> Result<f64> {
        let sm = self.sm;
        let n = sm.n() as f64;
        let w = sm.weights(filter)?;
        let e = w.component_mul(sm.gram_eigenvalues());
        let a = spec.a;
        let norm = || spec.norm.expect("validated");
        match spec.kind {
            CriterionKind::MsvTr => {
                let n_v = sm.n_query();
                if n_v == 0 {
                    return Err(invalid("validation smoother has no rows"));
                }
                let fro: f64 = (0..w.len())
                    .map(|j| w[j] * w[j] * self.gram_q[(j, j)])
                    .sum();
                Ok((a - fro / n_v as f64).abs())
            }
            CriterionKind::MsvNorm => {
                let m = self.msv_block(&w, a)?;
                let rest = (sm.n() - sm.rank()) as f64;
                match norm() {
                    MatrixNorm::Frobenius => Ok((m.norm_squared() + rest * (a / n).powi(2)).sqrt()),
                    MatrixNorm::Trace => Ok((m.trace() + rest * a / n).abs()),
                    other => {
                        let (eig, _) = sym_eigen(&m)?;
                        let all = self.with_tail(eig.iter().copied(), a / n);
                        Ok(other.of_eigenvalues(&all))
                    }
                }
            }
            CriterionKind::MsvExpected => {
                let tr: f64 = w
                    .iter()
                    .zip(sm.gram_eigenvalues().iter())
                    .map(|(w, m)| m * w * w)
                    .sum();
                Ok((a - tr).abs())
            }
            CriterionKind::GcvYfree => {
                let t = trace_complement(&e, n)?;
                let all = self.with_tail(e.iter().map(|v| (1.0 - v) * (1.0 - v)), 1.0);
                Ok(norm().of_eigenvalues(&all) / (t * t))
            }
            CriterionKind::InSampleMsvYfree => {
                let head: Vec<f64> = match spec.mode {
                    InSampleMode::StS => e.iter().map(|v| (1.0 - v * v) / n).collect(),
                    InSampleMode::S => e.iter().map(|v| (1.0 - v) / n).collect(),
                };
                let all = self.with_tail(head.into_iter(), 1.0 / n);
                Ok(norm().of_eigenvalues(&all))
            }
            CriterionKind::Msv => {
                let p = self.projection()?;
                let n_v = sm.n_query();
                if n_v == 0 {
                    return Err(invalid("validation smoother has no rows"));
                }
                let fitted = sm.query_factor() * w.component_mul(&p.c);
                Ok((a * p.y_sq / n - fitted.norm_squared() / n_v as f64).abs())
            }
            CriterionKind::Gcv => {
                let p = self.projection()?;
                let t = trace_complement(&e, n)?;
                let inside: f64 = e
                    .iter()
                    .zip(p.c.iter())
                    .map(|(e, c)| (1.0 - e).powi(2) * c * c)
                    .sum();
                Ok(n * (inside + p.perp_sq) / (t * t))
            }
            CriterionKind::Loocv => {
                let p = self.projection()?;
                let u = sm.u();
                let fitted = u * e.component_mul(&p.c);
                let y = &p.y;
                let mut total = 0.0;
                for i in 0..sm.n() {
                    let sii: f64 = (0..e.len()).map(|k| u[(i, k)] * u[(i, k)] * e[k]).sum();
                    if (1.0 - sii).abs() <= 1e-12 {
                        return Err(Error::Undefined("LOOCV with a unit diagonal entry"));
                    }
                    total += ((y[i] - fitted[i]) / (1.0 - sii)).powi(2);
                }
                Ok(total / n)
            }
            CriterionKind::KfoldCv => Err(invalid("k-fold CV refits the model")),
        }
    }

    fn projection(&self) -> Result<&Projection> {
        self.proj
            .as_ref()
            .ok_or_else(|| invalid("criterion needs the response"))
    }
}

fn trace_complement(e: &Vector, n: f64) -> Result<f64> {
    let t = n - e.sum();
    if t == 0.0 || t.abs() <= 1e-12 * n {
        return Err(Error::Undefined("GCV with Tr(S) = n"));
    }
    Ok(t)
}
