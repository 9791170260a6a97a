use rand::Rng;

use crate::data::sampling::normal_mat;
use crate::error::{invalid, shape, Result};
use crate::linalg::{all_finite, Mat, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// `g(x) = W2 tanh(W1 x + b1) + b2`.
    Tanh { hidden: usize },
    /// `g(x) = W x`, no hidden layer and no bias.
    Linear,
}

/// A one-hidden-layer network with a flat parameter vector.
///
/// Layout for [`Architecture::Tanh`]: `W1` (h x d, row-major), `b1`, `W2`
/// (d_out x h, row-major), `b2`. For [`Architecture::Linear`]: `W`
/// (d_out x d, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    d: usize,
    d_out: usize,
    theta: Vector,
}

pub fn n_params(arch: Architecture, d: usize, d_out: usize) -> usize {
    match arch {
        Architecture::Tanh { hidden } => hidden * d + hidden + d_out * hidden + d_out,
        Architecture::Linear => d_out * d,
    }
}

impl Network {
    pub fn with_params(arch: Architecture, d: usize, d_out: usize, theta: Vector) -> Result<Self> {
        if d == 0 || d_out == 0 {
            return Err(invalid("network needs d >= 1 and d_out >= 1"));
        }
        if let Architecture::Tanh { hidden: 0 } = arch {
            return Err(invalid("hidden width must be positive"));
        }
        let p = n_params(arch, d, d_out);
        if theta.len() != p {
            return Err(shape(format!(
                "expected {p} parameters, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        Ok(Self {
            arch,
            d,
            d_out,
            theta,
        })
    }

    /// Hidden weights `N(0, 1/d)`, output weights `N(0, 1/h)`, zero biases.
    /// The linear architecture draws `N(0, 1/d)`.
    pub fn init<R: Rng>(arch: Architecture, d: usize, d_out: usize, rng: &mut R) -> Result<Self> {
        let p = n_params(arch, d, d_out);
        let mut theta = Vector::zeros(p);
        match arch {
            Architecture::Tanh { hidden } => {
                let w1 = normal_mat(rng, hidden, d) / (d as f64).sqrt();
                let w2 = normal_mat(rng, d_out, hidden) / (hidden as f64).sqrt();
                let mut at = 0;
                for i in 0..hidden {
                    for j in 0..d {
                        theta[at] = w1[(i, j)];
                        at += 1;
                    }
                }
                at += hidden;
                for o in 0..d_out {
                    for i in 0..hidden {
                        theta[at] = w2[(o, i)];
                        at += 1;
                    }
                }
            }
            Architecture::Linear => {
                let w = normal_mat(rng, d_out, d) / (d as f64).sqrt();
                for o in 0..d_out {
                    for j in 0..d {
                        theta[o * d + j] = w[(o, j)];
                    }
                }
            }
        }
        Self::with_params(arch, d, d_out, theta)
    }

    pub fn zeros(arch: Architecture, d: usize, d_out: usize) -> Result<Self> {
        Self::with_params(arch, d, d_out, Vector::zeros(n_params(arch, d, d_out)))
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn params(&self) -> &Vector {
        &self.theta
    }

    pub(crate) fn set_params(&mut self, theta: Vector) {
        debug_assert_eq!(theta.len(), self.theta.len());
        self.theta = theta;
    }

    fn check_rows(&self, x: &Mat) -> Result<()> {
        if x.ncols() != self.d {
            return Err(shape(format!(
                "network expects {} columns, got {}",
                self.d,
                x.ncols()
            )));
        }
        Ok(())
    }

    fn hidden_activations(&self, hidden: usize, x: &Mat, i: usize) -> Vec<f64> {
        let d = self.d;
        let b1 = hidden * d;
        (0..hidden)
            .map(|u| {
                let mut z = self.theta[b1 + u];
                for j in 0..d {
                    z += self.theta[u * d + j] * x[(i, j)];
                }
                z.tanh()
            })
            .collect()
    }

    /// Raw outputs `g`, one row per input row.
    pub fn forward(&self, x: &Mat) -> Result<Mat> {
        self.check_rows(x)?;
        let (rows, d, d_out) = (x.nrows(), self.d, self.d_out);
        let mut out = Mat::zeros(rows, d_out);
        match self.arch {
            Architecture::Tanh { hidden } => {
                let w2 = hidden * d + hidden;
                let b2 = w2 + d_out * hidden;
                for i in 0..rows {
                    let a = self.hidden_activations(hidden, x, i);
                    for o in 0..d_out {
                        let mut g = self.theta[b2 + o];
                        for (u, au) in a.iter().enumerate() {
                            g += self.theta[w2 + o * hidden + u] * au;
                        }
                        out[(i, o)] = g;
                    }
                }
            }
            Architecture::Linear => {
                for i in 0..rows {
                    for o in 0..d_out {
                        out[(i, o)] = (0..d).map(|j| self.theta[o * d + j] * x[(i, j)]).sum();
                    }
                }
            }
        }
        if !all_finite(&out) {
            return Err(crate::Error::Numerical(
                "network output is not finite".into(),
            ));
        }
        Ok(out)
    }

    /// `d g / d theta` in the vectorized layout: row `i * d_out + o`.
    pub fn jacobian(&self, x: &Mat) -> Result<Mat> {
        self.check_rows(x)?;
        let (rows, d, d_out) = (x.nrows(), self.d, self.d_out);
        let mut jac = Mat::zeros(rows * d_out, self.theta.len());
        match self.arch {
            Architecture::Tanh { hidden } => {
                let b1 = hidden * d;
                let w2 = b1 + hidden;
                let b2 = w2 + d_out * hidden;
                for i in 0..rows {
                    let a = self.hidden_activations(hidden, x, i);
                    for o in 0..d_out {
                        let r = i * d_out + o;
                        for (u, au) in a.iter().enumerate() {
                            let back = self.theta[w2 + o * hidden + u] * (1.0 - au * au);
                            for j in 0..d {
                                jac[(r, u * d + j)] = back * x[(i, j)];
                            }
                            jac[(r, b1 + u)] = back;
                            jac[(r, w2 + o * hidden + u)] = *au;
                        }
                        jac[(r, b2 + o)] = 1.0;
                    }
                }
            }
            Architecture::Linear => {
                for i in 0..rows {
                    for o in 0..d_out {
                        for j in 0..d {
                            jac[(i * d_out + o, o * d + j)] = x[(i, j)];
                        }
                    }
                }
            }
        }
        Ok(jac)
    }
}

/// Empirical NTK `J_all J_train^T` of the raw outputs, in the vectorized
/// multi-output layout.
pub fn ntk_kernel(net: &Network, x_all: &Mat, x_train: &Mat) -> Result<Mat> {
    let ja = net.jacobian(x_all)?;
    let jt = net.jacobian(x_train)?;
    Ok(ja * jt.transpose())
}

/// Row-major flattening, `[y_1^T, y_2^T, ...]^T`.
pub fn vectorize(y: &Mat) -> Vector {
    let (n, c) = y.shape();
    Vector::from_iterator(n * c, (0..n).flat_map(|i| (0..c).map(move |o| y[(i, o)])))
}

pub fn devectorize(v: &Vector, d_out: usize) -> Result<Mat> {
    if d_out == 0 || !v.len().is_multiple_of(d_out) {
        return Err(shape(format!(
            "{} entries do not split into rows of {d_out}",
            v.len()
        )));
    }
    Ok(Mat::from_row_slice(v.len() / d_out, d_out, v.as_slice()))
}
