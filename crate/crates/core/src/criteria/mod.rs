//! Selection criteria on smoother matrices.
//!
//! The y-based criteria (`msv`, `gcv`, `loocv`) take the response; the
//! y-free family (`msv_tr`, `msv_norm`, `msv_expected`, `gcv_yfree`,
//! `in_sample_msv_yfree`) has no response parameter at all.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, shape, Error, Result};
use crate::linalg::{is_symmetric, Mat, MatrixNorm, Vector};
use crate::smoothers::SmootherSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    Msv,
    MsvTr,
    MsvNorm,
    MsvExpected,
    Gcv,
    GcvYfree,
    Loocv,
    KfoldCv,
    InSampleMsvYfree,
}

/// Which quadratic form the in-sample y-free MSV compares against `I/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InSampleMode {
    /// `|I/n - S^T S / n|`
    #[default]
    StS,
    /// `|I/n - S / n|`
    S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionSpec {
    pub kind: CriterionKind,
    pub norm: Option<MatrixNorm>,
    pub folds: Option<usize>,
    pub mode: InSampleMode,
    /// Multiplier on the `I/n` term of the MSV family; 1 by default.
    pub a: f64,
}

impl CriterionSpec {
    fn of(kind: CriterionKind) -> Self {
        Self {
            kind,
            norm: None,
            folds: None,
            mode: InSampleMode::StS,
            a: 1.0,
        }
    }

    pub fn msv() -> Self {
        Self::of(CriterionKind::Msv)
    }

    pub fn msv_tr() -> Self {
        Self::of(CriterionKind::MsvTr)
    }

    pub fn msv_norm(norm: MatrixNorm) -> Self {
        Self {
            norm: Some(norm),
            ..Self::of(CriterionKind::MsvNorm)
        }
    }

    pub fn msv_expected() -> Self {
        Self::of(CriterionKind::MsvExpected)
    }

    pub fn gcv() -> Self {
        Self::of(CriterionKind::Gcv)
    }

    pub fn gcv_yfree(norm: MatrixNorm) -> Self {
        Self {
            norm: Some(norm),
            ..Self::of(CriterionKind::GcvYfree)
        }
    }

    pub fn loocv() -> Self {
        Self::of(CriterionKind::Loocv)
    }

    pub fn kfold(folds: usize) -> Self {
        Self {
            folds: Some(folds),
            ..Self::of(CriterionKind::KfoldCv)
        }
    }

    pub fn in_sample(mode: InSampleMode, norm: MatrixNorm) -> Self {
        Self {
            norm: Some(norm),
            mode,
            ..Self::of(CriterionKind::InSampleMsvYfree)
        }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn needs_norm(&self) -> bool {
        matches!(
            self.kind,
            CriterionKind::MsvNorm | CriterionKind::GcvYfree | CriterionKind::InSampleMsvYfree
        )
    }

    pub fn requires_y(&self) -> bool {
        matches!(
            self.kind,
            CriterionKind::Msv | CriterionKind::Gcv | CriterionKind::Loocv | CriterionKind::KfoldCv
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.needs_norm() != self.norm.is_some() {
            return Err(invalid(format!(
                "criterion {} has a misplaced norm",
                self.label()
            )));
        }
        match (self.kind, self.folds) {
            (CriterionKind::KfoldCv, Some(f)) if f >= 2 => {}
            (CriterionKind::KfoldCv, _) => return Err(invalid("k-fold CV needs folds >= 2")),
            (_, Some(_)) => return Err(invalid("folds only apply to k-fold CV")),
            _ => {}
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid(format!(
                "robustness factor must be positive, got {}",
                self.a
            )));
        }
        Ok(())
    }

    /// Short stable name, e.g. `msv_norm[frobenius]` or `kfold_cv[10]`.
    pub fn label(&self) -> String {
        let base = match self.kind {
            CriterionKind::Msv => "msv",
            CriterionKind::MsvTr => "msv_tr",
            CriterionKind::MsvNorm => "msv_norm",
            CriterionKind::MsvExpected => "msv_expected",
            CriterionKind::Gcv => "gcv",
            CriterionKind::GcvYfree => "gcv_yfree",
            CriterionKind::Loocv => "loocv",
            CriterionKind::KfoldCv => "kfold_cv",
            CriterionKind::InSampleMsvYfree => match self.mode {
                InSampleMode::StS => "in_sample_msv_yfree_sts",
                InSampleMode::S => "in_sample_msv_yfree_s",
            },
        };
        match (self.norm, self.folds) {
            (Some(n), _) => format!("{base}[{n}]"),
            (_, Some(f)) => format!("{base}[{f}]"),
            _ => base.to_string(),
        }
    }

    /// Parses names such as `msv`, `msv-tr`, `msv-norm`, `gcv-yfree:nuclear`,
    /// `kfold:10` or `in-sample-s:spectral`. Norm-based kinds without an
    /// explicit norm get `default_norm`.
    pub fn parse_with_norm(s: &str, default_norm: MatrixNorm) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase().replace('-', "_");
        let (name, arg) = match lower.split_once(':') {
            Some((a, b)) => (a.to_string(), Some(b.to_string())),
            None => (lower.clone(), None),
        };
        let norm = || -> Result<MatrixNorm> {
            arg.as_deref()
                .map(str::parse)
                .transpose()
                .map(|n| n.unwrap_or(default_norm))
        };
        let spec = match name.as_str() {
            "msv" => Self::msv(),
            "msv_tr" => Self::msv_tr(),
            "msv_norm" | "msv_yfree" => Self::msv_norm(norm()?),
            "msv_expected" => Self::msv_expected(),
            "gcv" => Self::gcv(),
            "gcv_yfree" => Self::gcv_yfree(norm()?),
            "loocv" => Self::loocv(),
            "kfold" | "kfold_cv" | "cv" => {
                let folds = match arg.as_deref() {
                    Some(f) => f
                        .parse()
                        .map_err(|_| invalid(format!("bad fold count '{f}'")))?,
                    None => 10,
                };
                Self::kfold(folds)
            }
            "in_sample" | "in_sample_sts" => Self::in_sample(InSampleMode::StS, norm()?),
            "in_sample_s" => Self::in_sample(InSampleMode::S, norm()?),
            other => return Err(invalid(format!("unknown criterion '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for CriterionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for CriterionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_norm(s, MatrixNorm::Frobenius)
    }
}

/// Diagnostic pieces behind a criterion value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Components {
    pub trace_a: Option<f64>,
    pub norm_a: Option<f64>,
    pub trace_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionValue {
    pub value: f64,
    pub components: Components,
}

impl CriterionValue {
    fn new(value: f64, components: Components) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "criterion value {value} is not finite"
            )));
        }
        Ok(Self { value, components })
    }
}

fn check_square(s: &Mat) -> Result<usize> {
    if !s.is_square() {
        return Err(shape(format!(
            "smoother is {}x{}, expected square",
            s.nrows(),
            s.ncols()
        )));
    }
    Ok(s.nrows())
}

fn check_len(y: &Vector, n: usize) -> Result<()> {
    if y.len() != n {
        return Err(shape(format!(
            "y has {} entries, smoother has {n} columns",
            y.len()
        )));
    }
    Ok(())
}

fn warn_if_uncentered(y: &Vector) {
    if y.len() < 2 {
        return;
    }
    let mean = y.mean();
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    if mean.abs() > 1e-8 * sd {
        log::warn!("MSV expects a centered response; mean is {mean:.3e}");
    }
}

/// `a I/n - S_v^T S_v / n_v`.
pub fn msv_matrix(s_v: &Mat, a: f64) -> Mat {
    let n = s_v.ncols();
    let n_v = s_v.nrows().max(1) as f64;
    let mut m = -(s_v.transpose() * s_v) / n_v;
    for i in 0..n {
        m[(i, i)] += a / n as f64;
    }
    m
}

pub fn msv(y: &Vector, s_v: &Mat) -> Result<CriterionValue> {
    msv_scaled(y, s_v, 1.0)
}

/// `|y^T (a I/n - S_v^T S_v / n_v) y|`.
pub fn msv_scaled(y: &Vector, s_v: &Mat, a: f64) -> Result<CriterionValue> {
    let n = s_v.ncols();
    check_len(y, n)?;
    if s_v.nrows() == 0 {
        return Err(invalid("validation smoother has no rows"));
    }
    warn_if_uncentered(y);
    let n_v = s_v.nrows() as f64;
    let fitted = s_v * y;
    let q = a * y.norm_squared() / n as f64 - fitted.norm_squared() / n_v;
    CriterionValue::new(
        q.abs(),
        Components {
            trace_a: Some(a - s_v.norm_squared() / n_v),
            ..Default::default()
        },
    )
}

pub fn msv_tr(s_v: &Mat) -> Result<CriterionValue> {
    msv_tr_scaled(s_v, 1.0)
}

/// `|a - Tr(S_v^T S_v) / n_v|`, the trace of the MSV matrix.
pub fn msv_tr_scaled(s_v: &Mat, a: f64) -> Result<CriterionValue> {
    if s_v.nrows() == 0 {
        return Err(invalid("validation smoother has no rows"));
    }
    let t = a - s_v.norm_squared() / s_v.nrows() as f64;
    CriterionValue::new(
        t.abs(),
        Components {
            trace_a: Some(t),
            ..Default::default()
        },
    )
}

pub fn msv_expected(e_outer: &Mat) -> Result<CriterionValue> {
    msv_expected_scaled(e_outer, 1.0)
}

/// `|a - Tr(E[s* s*^T])|`.
pub fn msv_expected_scaled(e_outer: &Mat, a: f64) -> Result<CriterionValue> {
    check_square(e_outer)?;
    let n = e_outer.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (e_outer[(i, j)] - e_outer[(j, i)]).abs() > 1e-8 {
                return Err(invalid("expected outer product is not symmetric"));
            }
        }
    }
    let t = a - e_outer.trace();
    CriterionValue::new(
        t.abs(),
        Components {
            trace_a: Some(t),
            ..Default::default()
        },
    )
}

pub fn msv_norm(s_v: &Mat, norm: MatrixNorm) -> Result<CriterionValue> {
    msv_norm_scaled(s_v, norm, 1.0)
}

/// `|a I/n - S_v^T S_v / n_v|` in the chosen (semi)norm.
pub fn msv_norm_scaled(s_v: &Mat, norm: MatrixNorm, a: f64) -> Result<CriterionValue> {
    if s_v.nrows() == 0 {
        return Err(invalid("validation smoother has no rows"));
    }
    let m = msv_matrix(s_v, a);
    let v = norm.of(&m)?;
    CriterionValue::new(
        v,
        Components {
            trace_a: Some(m.trace()),
            norm_a: Some(v),
            ..Default::default()
        },
    )
}

fn trace_complement(s: &Mat) -> Result<f64> {
    let n = check_square(s)?;
    let t = n as f64 - s.trace();
    if t == 0.0 || t.abs() <= 1e-12 * n as f64 {
        return Err(Error::Undefined("GCV with Tr(S) = n"));
    }
    Ok(t)
}

/// `n |(I - S) y|^2 / Tr(I - S)^2`.
pub fn gcv(y: &Vector, s: &Mat) -> Result<CriterionValue> {
    let t = trace_complement(s)?;
    let n = s.nrows();
    check_len(y, n)?;
    let r = y - s * y;
    CriterionValue::new(
        n as f64 * r.norm_squared() / (t * t),
        Components {
            trace_s: Some(n as f64 - t),
            ..Default::default()
        },
    )
}

/// The residual form `(1/n) sum ((y_i - f_i) / (1 - Tr(S)/n))^2`.
pub fn gcv_residual_form(y: &Vector, s: &Mat) -> Result<f64> {
    let t = trace_complement(s)?;
    let n = s.nrows() as f64;
    check_len(y, s.nrows())?;
    let denom = t / n;
    let r = y - s * y;
    Ok(r.iter().map(|v| (v / denom).powi(2)).sum::<f64>() / n)
}

/// `|(I - S)^T (I - S)| / Tr(I - S)^2`.
pub fn gcv_yfree(s: &Mat, norm: MatrixNorm) -> Result<CriterionValue> {
    let t = trace_complement(s)?;
    let n = s.nrows();
    let r = Mat::identity(n, n) - s;
    let m = r.transpose() * &r;
    let nv = norm.of(&m)?;
    CriterionValue::new(
        nv / (t * t),
        Components {
            norm_a: Some(nv),
            trace_s: Some(n as f64 - t),
            ..Default::default()
        },
    )
}

/// `|I/n - S^T S / n|` or `|I/n - S/n|`.
pub fn in_sample_msv_yfree(
    s: &Mat,
    mode: InSampleMode,
    norm: MatrixNorm,
) -> Result<CriterionValue> {
    let n = check_square(s)?;
    let inner = match mode {
        InSampleMode::StS => s.transpose() * s,
        InSampleMode::S => s.clone(),
    };
    let m = (Mat::identity(n, n) - inner) / n as f64;
    let v = norm.of(&m)?;
    CriterionValue::new(
        v,
        Components {
            trace_a: Some(m.trace()),
            norm_a: Some(v),
            trace_s: Some(s.trace()),
        },
    )
}

/// `(1/n) sum ((y_i - f_i) / (1 - S_ii))^2`.
pub fn loocv(y: &Vector, s: &Mat) -> Result<CriterionValue> {
    let n = check_square(s)?;
    check_len(y, n)?;
    if (0..n).any(|i| (1.0 - s[(i, i)]).abs() <= 1e-12) {
        return Err(Error::Undefined("LOOCV with a unit diagonal entry"));
    }
    let f = s * y;
    let v = (0..n)
        .map(|i| ((y[i] - f[i]) / (1.0 - s[(i, i)])).powi(2))
        .sum::<f64>()
        / n as f64;
    CriterionValue::new(
        v,
        Components {
            trace_s: Some(s.trace()),
            ..Default::default()
        },
    )
}

/// Effective number of parameters `Tr(S)`.
pub fn edof(s: &Mat) -> Result<f64> {
    check_square(s)?;
    Ok(s.trace())
}

/// Evaluates a y-free criterion on a smoother set. `expected` is the
/// expected outer product, needed only by `msv_expected`.
pub fn evaluate_yfree(
    spec: &CriterionSpec,
    set: &SmootherSet,
    expected: Option<&Mat>,
) -> Result<CriterionValue> {
    spec.validate()?;
    let norm = || spec.norm.expect("validated");
    match spec.kind {
        CriterionKind::MsvTr => msv_tr_scaled(set.validation()?, spec.a),
        CriterionKind::MsvNorm => msv_norm_scaled(set.validation()?, norm(), spec.a),
        CriterionKind::MsvExpected => {
            let e =
                expected.ok_or_else(|| invalid("msv_expected needs an expected outer product"))?;
            msv_expected_scaled(e, spec.a)
        }
        CriterionKind::GcvYfree => gcv_yfree(&set.s, norm()),
        CriterionKind::InSampleMsvYfree => in_sample_msv_yfree(&set.s, spec.mode, norm()),
        _ => Err(invalid(format!("{} needs the response", spec.label()))),
    }
}

/// Evaluates a y-based closed-form criterion (`msv`, `gcv`, `loocv`).
pub fn evaluate_with_y(
    spec: &CriterionSpec,
    y: &Vector,
    set: &SmootherSet,
) -> Result<CriterionValue> {
    spec.validate()?;
    match spec.kind {
        CriterionKind::Msv => msv_scaled(y, set.validation()?, spec.a),
        CriterionKind::Gcv => gcv(y, &set.s),
        CriterionKind::Loocv => loocv(y, &set.s),
        CriterionKind::KfoldCv => Err(invalid(
            "k-fold CV refits the model; use the selection driver",
        )),
        _ => Err(invalid(format!("{} is y-free", spec.label()))),
    }
}

/// Symmetric-matrix check used by callers that build `E[s* s*^T]` by hand.
pub fn is_valid_outer(e: &Mat) -> bool {
    is_symmetric(e, 1e-8)
}
