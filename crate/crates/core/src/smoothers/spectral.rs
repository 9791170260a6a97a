//! Ridge-type and gradient-flow smoothers share one spectral form.
//!
//! With the Gram matrix `G = U diag(mu) U^T` and a query factor `Q`,
//! every smoother in this file is `S_q = Q diag(w) U^T` and
//! `S = U diag(mu * w) U^T`, where the filter `w` depends on the
//! hyperparameter only. Building `U`, `mu` and `Q` once per design lets
//! grid search sweep `lambda` or `t` cheaply.

use crate::error::{invalid, shape, Result};
use crate::linalg::{gaussian_kernel, reconstruct, sym_eigen, Mat, Vector, PINV_RTOL};
use crate::Error;

use super::SmootherSet;

/// Whether the linear-ridge penalty is `n * lambda` or `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RidgeScaling {
    /// `(X^T X + n lambda I)^{-1}`, the asymptotic-risk convention.
    NLambda,
    /// `(X^T X + lambda I)^{-1}`.
    #[default]
    Lambda,
}

impl RidgeScaling {
    pub fn effective(self, lambda: f64, n: usize) -> f64 {
        match self {
            RidgeScaling::NLambda => lambda * n as f64,
            RidgeScaling::Lambda => lambda,
        }
    }
}

/// Gaussian kernel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    sigma: f64,
}

impl KernelSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self { sigma })
        } else {
            Err(invalid(format!(
                "bandwidth must be positive and finite, got {sigma}"
            )))
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Filter {
    /// `w = 1 / (mu + lambda)`, pseudo-inverse cutoff at `lambda = 0`.
    Ridge(f64),
    /// `w = (1 - exp(-t mu)) / mu`; null directions get 0.
    GradientFlow(f64),
}

impl Filter {
    fn check(self) -> Result<Self> {
        let v = match self {
            Filter::Ridge(l) => l,
            Filter::GradientFlow(t) => t,
        };
        if v >= 0.0 && !v.is_nan() {
            Ok(self)
        } else {
            Err(invalid(format!(
                "hyperparameter must be nonnegative, got {v}"
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralSmoother {
    n: usize,
    u: Mat,
    mu: Vector,
    q: Mat,
    mu_max: f64,
}

impl SpectralSmoother {
    /// Linear features. Uses the thin SVD `X = U diag(s) V^T`, so primal and
    /// dual solves coincide and `mu = s^2`.
    pub fn linear(x: &Mat, x_q: &Mat) -> Result<Self> {
        if x.ncols() != x_q.ncols() && x_q.nrows() > 0 {
            return Err(shape(format!(
                "training has {} features, queries {}",
                x.ncols(),
                x_q.ncols()
            )));
        }
        crate::linalg::ensure_finite(x, "design matrix")?;
        let svd = x
            .clone()
            .try_svd(true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        let s = svd.singular_values;
        let u = svd.u.expect("u requested");
        let v = svd.v_t.expect("v_t requested").transpose();
        let mut q = if x_q.nrows() > 0 {
            x_q * v
        } else {
            Mat::zeros(0, s.len())
        };
        for (j, mut col) in q.column_iter_mut().enumerate() {
            col *= s[j];
        }
        let mu = s.map(|v| v * v);
        Ok(Self::assemble(x.nrows(), u, mu, q))
    }

    /// Gaussian-kernel features through the eigendecomposition of `K`.
    pub fn kernel(x: &Mat, x_q: &Mat, kernel: KernelSpec) -> Result<Self> {
        let k = gaussian_kernel(x, x, kernel.sigma)?;
        let (mu, u) = sym_eigen(&k)?;
        let mu = mu.map(|v| v.max(0.0));
        let q = if x_q.nrows() > 0 {
            gaussian_kernel(x_q, x, kernel.sigma)? * &u
        } else {
            Mat::zeros(0, mu.len())
        };
        Ok(Self::assemble(x.nrows(), u, mu, q))
    }

    fn assemble(n: usize, u: Mat, mu: Vector, q: Mat) -> Self {
        let mu_max = mu.iter().copied().fold(0.0, f64::max);
        Self {
            n,
            u,
            mu,
            q,
            mu_max,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_query(&self) -> usize {
        self.q.nrows()
    }

    /// Nonzero-capable Gram eigenvalues (length `min(n, p)` for linear
    /// features, `n` for kernels). The remaining `n - rank()` are zero.
    pub fn gram_eigenvalues(&self) -> &Vector {
        &self.mu
    }

    pub fn rank(&self) -> usize {
        self.mu.len()
    }

    pub fn u(&self) -> &Mat {
        &self.u
    }

    pub fn query_factor(&self) -> &Mat {
        &self.q
    }

    pub fn weights(&self, filter: Filter) -> Result<Vector> {
        let filter = filter.check()?;
        let mu_max = self.mu_max;
        Ok(self.mu.map(|m| match filter {
            Filter::Ridge(lambda) => {
                let denom = m + lambda;
                if denom <= PINV_RTOL * (mu_max + lambda) || denom == 0.0 {
                    0.0
                } else {
                    1.0 / denom
                }
            }
            Filter::GradientFlow(t) => {
                if m <= PINV_RTOL * mu_max || m == 0.0 {
                    0.0
                } else {
                    -(-t * m).exp_m1() / m
                }
            }
        }))
    }

    /// Eigenvalues of the in-sample smoother on the span of `U`.
    pub fn in_sample_eigenvalues(&self, filter: Filter) -> Result<Vector> {
        Ok(self.weights(filter)?.component_mul(&self.mu))
    }

    pub fn in_sample(&self, filter: Filter) -> Result<Mat> {
        Ok(reconstruct(&self.u, &self.in_sample_eigenvalues(filter)?))
    }

    pub fn query_block(&self, filter: Filter) -> Result<Mat> {
        let w = self.weights(filter)?;
        let mut qw = self.q.clone();
        for (j, mut col) in qw.column_iter_mut().enumerate() {
            col *= w[j];
        }
        Ok(qw * self.u.transpose())
    }

    pub fn smoother_set(&self, filter: Filter) -> Result<SmootherSet> {
        let s = self.in_sample(filter)?;
        let s_v = (self.n_query() > 0)
            .then(|| self.query_block(filter))
            .transpose()?;
        SmootherSet::new(s, s_v, None)
    }

    /// `E[s* s*^T]` for isotropic query features: `U diag(mu w^2) U^T`.
    pub fn expected_outer(&self, filter: Filter) -> Result<Mat> {
        let w = self.weights(filter)?;
        let d = Vector::from_iterator(
            w.len(),
            w.iter().zip(self.mu.iter()).map(|(w, m)| m * w * w),
        );
        Ok(reconstruct(&self.u, &d))
    }
}

/// Linear ridge smoother for training rows `x` and query rows `x_q`.
pub fn lrr_smoother(x: &Mat, x_q: &Mat, lambda: f64, scaling: RidgeScaling) -> Result<SmootherSet> {
    let eff = scaling.effective(lambda, x.nrows());
    SpectralSmoother::linear(x, x_q)?.smoother_set(Filter::Ridge(eff))
}

/// Gaussian kernel ridge smoother `K_q (K + lambda I)^{-1}`.
pub fn krr_smoother(x: &Mat, x_q: &Mat, lambda: f64, kernel: KernelSpec) -> Result<SmootherSet> {
    SpectralSmoother::kernel(x, x_q, kernel)?.smoother_set(Filter::Ridge(lambda))
}

/// Gradient flow on least squares stopped at time `t`.
pub fn gradient_flow_smoother(phi: &Mat, phi_q: &Mat, t: f64) -> Result<SmootherSet> {
    SpectralSmoother::linear(phi, phi_q)?.smoother_set(Filter::GradientFlow(t))
}

/// `(G + lambda I)^{-1} G (G + lambda I)^{-1}` with `G = Phi Phi^T`.
pub fn expected_outer_lrr(phi: &Mat, lambda: f64) -> Result<Mat> {
    let empty = Mat::zeros(0, phi.ncols());
    SpectralSmoother::linear(phi, &empty)?.expected_outer(Filter::Ridge(lambda))
}

/// `(I - exp(-t G))^2 G^{-1}` with `G = Phi Phi^T`; null directions give 0.
pub fn expected_outer_gf(phi: &Mat, t: f64) -> Result<Mat> {
    let empty = Mat::zeros(0, phi.ncols());
    SpectralSmoother::linear(phi, &empty)?.expected_outer(Filter::GradientFlow(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_design_interpolates() {
        let x = Mat::identity(4, 4);
        let set = lrr_smoother(&x, &x, 0.0, RidgeScaling::Lambda).unwrap();
        assert_relative_eq!(set.s, Mat::identity(4, 4), epsilon = 1e-12);
    }

    #[test]
    fn huge_lambda_shrinks_to_zero() {
        let x = Mat::from_row_slice(3, 2, &[1.0, 0.5, -1.0, 2.0, 0.3, 0.1]);
        let set = lrr_smoother(&x, &x, 1e12, RidgeScaling::Lambda).unwrap();
        assert!(set.s.amax() < 1e-10);
    }

    #[test]
    fn one_by_one_ridge() {
        let x = Mat::from_element(1, 1, 2.0);
        let set = lrr_smoother(&x, &x, 1.0, RidgeScaling::Lambda).unwrap();
        assert_relative_eq!(set.s_v.unwrap()[0], 0.8, epsilon = 1e-15);
        let scaled = lrr_smoother(&x, &x, 1.0, RidgeScaling::NLambda).unwrap();
        assert_relative_eq!(scaled.s[0], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn single_point_kernel() {
        let x = Mat::from_element(1, 1, 0.3);
        let k = KernelSpec::new(0.7).unwrap();
        assert_relative_eq!(
            krr_smoother(&x, &x, 0.0, k).unwrap().s_v.unwrap()[0],
            1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            krr_smoother(&x, &x, 1.0, k).unwrap().s_v.unwrap()[0],
            0.5,
            epsilon = 1e-15
        );
        assert!(KernelSpec::new(0.0).is_err());
    }

    #[test]
    fn gradient_flow_limits() {
        let phi = Mat::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.3, 1.0, 0.2, 0.0, -0.4, 1.5]);
        let s0 = gradient_flow_smoother(&phi, &phi, 0.0).unwrap();
        assert_eq!(s0.s.amax(), 0.0);
        let s_inf = gradient_flow_smoother(&phi, &phi, 1e6).unwrap();
        assert_relative_eq!(s_inf.s, Mat::identity(3, 3), epsilon = 1e-10);
        assert!(gradient_flow_smoother(&phi, &phi, -1.0).is_err());
    }

    #[test]
    fn expected_outer_scalar_forms() {
        // Phi = sqrt(c) I gives Phi Phi^T = c I
        let c: f64 = 2.5;
        let phi = Mat::identity(3, 3) * c.sqrt();
        let lambda = 0.7;
        let e = expected_outer_lrr(&phi, lambda).unwrap();
        assert_relative_eq!(
            e,
            Mat::identity(3, 3) * (c / (c + lambda).powi(2)),
            epsilon = 1e-14
        );
        let t = 0.4;
        let g = expected_outer_gf(&phi, t).unwrap();
        let want = (1.0 - (-t * c).exp()).powi(2) / c;
        assert_relative_eq!(g, Mat::identity(3, 3) * want, epsilon = 1e-14);
        assert_eq!(expected_outer_gf(&phi, 0.0).unwrap().amax(), 0.0);
        assert!(expected_outer_lrr(&phi, 1e15).unwrap().amax() < 1e-14);
    }

    #[test]
    fn singular_gram_at_zero_lambda_uses_cutoff() {
        // rank-one design, lambda = 0: S is the projection onto span(x)
        let x = Mat::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let set = lrr_smoother(&x, &x, 0.0, RidgeScaling::Lambda).unwrap();
        let v = Vector::from_vec(vec![1.0, 2.0]) / 5f64.sqrt();
        assert_relative_eq!(set.s, &v * v.transpose(), epsilon = 1e-12);
    }
}
