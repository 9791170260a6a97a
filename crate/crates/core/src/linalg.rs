//! Dense linear-algebra helpers shared by the smoothers and criteria.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative cutoff for pseudo-inverses: values at or below `PINV_RTOL * max`
/// are treated as exact zeros.
pub const PINV_RTOL: f64 = 1e-12;

/// Matrix (semi)norms used by the norm-based criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixNorm {
    /// `|Tr(A)|`. Only a seminorm: it vanishes on some indefinite matrices.
    Trace,
    Nuclear,
    Frobenius,
    Spectral,
}

impl MatrixNorm {
    pub const ALL: [MatrixNorm; 4] = [
        MatrixNorm::Trace,
        MatrixNorm::Nuclear,
        MatrixNorm::Frobenius,
        MatrixNorm::Spectral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixNorm::Trace => "trace",
            MatrixNorm::Nuclear => "nuclear",
            MatrixNorm::Frobenius => "frobenius",
            MatrixNorm::Spectral => "spectral",
        }
    }

    /// Evaluates the norm of an arbitrary matrix.
    ///
    /// Symmetric inputs go through a symmetric eigendecomposition, everything
    /// else through a full SVD.
    pub fn of(self, a: &Mat) -> Result<f64> {
        match self {
            MatrixNorm::Trace => {
                if !a.is_square() {
                    return Err(invalid("trace seminorm needs a square matrix"));
                }
                Ok(a.trace().abs())
            }
            MatrixNorm::Frobenius => Ok(a.norm()),
            MatrixNorm::Nuclear => Ok(singular_values(a)?.iter().sum()),
            MatrixNorm::Spectral => Ok(singular_values(a)?.iter().copied().fold(0.0, f64::max)),
        }
    }

    /// Evaluates the norm of a symmetric matrix given its eigenvalues.
    pub fn of_eigenvalues(self, eig: &[f64]) -> f64 {
        match self {
            MatrixNorm::Trace => eig.iter().sum::<f64>().abs(),
            MatrixNorm::Nuclear => eig.iter().map(|e| e.abs()).sum(),
            MatrixNorm::Frobenius => eig.iter().map(|e| e * e).sum::<f64>().sqrt(),
            MatrixNorm::Spectral => eig.iter().map(|e| e.abs()).fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for MatrixNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trace" | "tr" => Ok(MatrixNorm::Trace),
            "nuclear" | "nuc" => Ok(MatrixNorm::Nuclear),
            "frobenius" | "fro" => Ok(MatrixNorm::Frobenius),
            "spectral" | "spec" | "2" => Ok(MatrixNorm::Spectral),
            other => Err(invalid(format!("unknown norm '{other}'"))),
        }
    }
}

pub fn is_symmetric(a: &Mat, rtol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > rtol * scale {
                return false;
            }
        }
    }
    true
}

/// Singular values, via the eigenvalues when `a` is symmetric.
pub fn singular_values(a: &Mat) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    if is_symmetric(a, 1e-12) {
        let (vals, _) = sym_eigen(a)?;
        return Ok(vals.iter().map(|v| v.abs()).collect());
    }
    let svd = a
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
/// The input is symmetrized before factorization.
pub fn sym_eigen(a: &Mat) -> Result<(Vector, Mat)> {
    if !a.is_square() {
        return Err(invalid("eigendecomposition needs a square matrix"));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigendecomposition did not converge".into()))?;
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((vals, vecs))
}

/// Moore-Penrose pseudo-inverse with the relative singular-value cutoff
/// [`PINV_RTOL`].
pub fn pinv(a: &Mat) -> Result<Mat> {
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = PINV_RTOL * smax;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut out = Mat::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            out += (v_t.row(i).transpose() / s) * u.column(i).transpose();
        }
    }
    Ok(out)
}

/// Pairwise squared Euclidean distances between the rows of `a` and `b`.
pub fn sq_distances(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.ncols() != b.ncols() {
        return Err(crate::error::shape(format!(
            "distance between {}-column and {}-column rows",
            a.ncols(),
            b.ncols()
        )));
    }
    let mut out = Mat::zeros(a.nrows(), b.nrows());
    for j in 0..b.nrows() {
        for i in 0..a.nrows() {
            let mut acc = 0.0;
            for c in 0..a.ncols() {
                let d = a[(i, c)] - b[(j, c)];
                acc += d * d;
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Gaussian kernel `exp(-|x - x'|^2 / (2 sigma^2))` between rows.
pub fn gaussian_kernel(a: &Mat, b: &Mat, sigma: f64) -> Result<Mat> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!(
            "kernel bandwidth must be positive, got {sigma}"
        )));
    }
    let scale = -0.5 / (sigma * sigma);
    Ok(sq_distances(a, b)?.map(|d| (d * scale).exp()))
}

pub fn all_finite(a: &Mat) -> bool {
    a.iter().all(|v| v.is_finite())
}

pub(crate) fn ensure_finite(a: &Mat, what: &str) -> Result<()> {
    if all_finite(a) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{what} has non-finite entries")))
    }
}

/// `U diag(w) U^T` for a column block `u`.
pub fn reconstruct(u: &Mat, w: &Vector) -> Mat {
    let mut scaled = u.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= w[j];
    }
    scaled * u.transpose()
}

/// Solves `a x = b` for symmetric positive definite `a`, falling back to LU.
pub fn solve_spd(a: &Mat, b: &Mat) -> Result<Mat> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular linear system".into()))
}
