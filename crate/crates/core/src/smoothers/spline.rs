//! Cubic smoothing spline on a full B-spline basis.
//!
//! Interior knots sit at the distinct training abscissae and the boundary
//! knots (repeated four times) at the ends of the domain, which gives
//! `n + 4` basis functions for `n` distinct points.

use crate::error::{invalid, Result};
use crate::linalg::{pinv, solve_spd, Mat};

use super::SmootherSet;

const DEGREE: usize = 3;

/// Precomputed basis and penalty for one set of abscissae.
#[derive(Debug, Clone)]
pub struct SplineSystem {
    knots: Vec<f64>,
    b: Mat,
    b_q: Mat,
    omega: Mat,
    btb: Mat,
}

impl SplineSystem {
    /// `domain` defaults to the data range widened by 5% on each side.
    /// Queries outside the domain are evaluated at the nearest end.
    pub fn new(x: &[f64], x_q: &[f64], domain: Option<(f64, f64)>) -> Result<Self> {
        if x.iter().chain(x_q).any(|v| !v.is_finite()) {
            return Err(invalid("abscissae must be finite"));
        }
        let mut distinct: Vec<f64> = x.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 4 {
            return Err(invalid(format!(
                "smoothing spline needs at least 4 distinct abscissae, got {}",
                distinct.len()
            )));
        }
        let (min, max) = (distinct[0], distinct[distinct.len() - 1]);
        let (lo, hi) = match domain {
            Some((lo, hi)) => {
                if !(lo <= min && hi >= max && lo < hi) {
                    return Err(invalid(format!(
                        "domain [{lo}, {hi}] does not cover the data range [{min}, {max}]"
                    )));
                }
                (lo, hi)
            }
            None => {
                let pad = 0.05 * (max - min);
                (min - pad, max + pad)
            }
        };
        let mut knots = vec![lo; DEGREE + 1];
        knots.extend(distinct.iter().copied().filter(|&v| v > lo && v < hi));
        knots.extend(std::iter::repeat_n(hi, DEGREE + 1));

        let b = basis_matrix(&knots, x);
        let b_q = basis_matrix(&knots, x_q);
        let omega = penalty(&knots);
        let btb = b.transpose() * &b;
        Ok(Self {
            knots,
            b,
            b_q,
            omega,
            btb,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - DEGREE - 1
    }

    pub fn basis(&self) -> &Mat {
        &self.b
    }

    pub fn penalty(&self) -> &Mat {
        &self.omega
    }

    /// Smoother blocks at penalty `lambda`. `lambda = 0` is the minimum-norm
    /// interpolant through the pseudo-inverse of the basis.
    pub fn smoother(&self, lambda: f64) -> Result<SmootherSet> {
        if !(lambda >= 0.0) {
            return Err(invalid(format!("lambda must be nonnegative, got {lambda}")));
        }
        // hat = M^{-1} B^T, so that S = B hat
        let hat = if lambda == 0.0 {
            pinv(&self.b)?
        } else {
            let m = &self.btb + &self.omega * lambda;
            solve_spd(&m, &self.b.transpose())?
        };
        let s = &self.b * &hat;
        let s = (&s + s.transpose()) * 0.5;
        let s_v = (self.b_q.nrows() > 0).then(|| &self.b_q * &hat);
        SmootherSet::new(s, s_v, None)
    }
}

pub fn spline_smoother(x: &[f64], x_q: &[f64], lambda: f64) -> Result<SmootherSet> {
    spline_smoother_on(x, x_q, lambda, None)
}

pub fn spline_smoother_on(
    x: &[f64],
    x_q: &[f64],
    lambda: f64,
    domain: Option<(f64, f64)>,
) -> Result<SmootherSet> {
    SplineSystem::new(x, x_q, domain)?.smoother(lambda)
}

fn basis_matrix(knots: &[f64], xs: &[f64]) -> Mat {
    let nb = knots.len() - DEGREE - 1;
    let mut out = Mat::zeros(xs.len(), nb);
    for (i, &x) in xs.iter().enumerate() {
        let (vals, _) = evaluate(knots, x);
        for j in 0..nb {
            out[(i, j)] = vals[j];
        }
    }
    out
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Values and second derivatives of all cubic basis functions at `x`.
fn evaluate(knots: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let m = knots.len();
    let lo = knots[0];
    let hi = knots[m - 1];
    let x = x.clamp(lo, hi);
    // degree 0, half-open intervals; the right end belongs to the last
    // interval of positive length
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(DEGREE + 1);
    let mut n0 = vec![0.0; m - 1];
    let span = if x >= hi {
        (0..m - 1)
            .rev()
            .find(|&i| knots[i] < knots[i + 1])
            .unwrap_or(0)
    } else {
        (0..m - 1)
            .find(|&i| knots[i] <= x && x < knots[i + 1])
            .unwrap_or(0)
    };
    n0[span] = 1.0;
    table.push(n0);
    for p in 1..=DEGREE {
        let prev = &table[p - 1];
        let mut cur = vec![0.0; m - 1 - p];
        for (i, c) in cur.iter_mut().enumerate() {
            let left = ratio(x - knots[i], knots[i + p] - knots[i]) * prev[i];
            let right = ratio(knots[i + p + 1] - x, knots[i + p + 1] - knots[i + 1]) * prev[i + 1];
            *c = left + right;
        }
        table.push(cur);
    }
    let n1 = &table[1];
    let d2: Vec<f64> = (0..m - 3)
        .map(|i| {
            2.0 * (ratio(n1[i], knots[i + 2] - knots[i])
                - ratio(n1[i + 1], knots[i + 3] - knots[i + 1]))
        })
        .collect();
    let dd3: Vec<f64> = (0..m - 4)
        .map(|i| {
            3.0 * (ratio(d2[i], knots[i + 3] - knots[i])
                - ratio(d2[i + 1], knots[i + 4] - knots[i + 1]))
        })
        .collect();
    (table.pop().expect("degree 3 row"), dd3)
}

/// `Omega_jk = int B_j'' B_k''` by two-point Gauss-Legendre on every knot
/// interval. The integrand is piecewise quadratic, so this is exact.
fn penalty(knots: &[f64]) -> Mat {
    let nb = knots.len() - DEGREE - 1;
    let mut omega = Mat::zeros(nb, nb);
    let offset = 1.0 / 3f64.sqrt();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for node in [mid - half * offset, mid + half * offset] {
            let (_, dd) = evaluate(knots, node);
            for j in 0..nb {
                if dd[j] == 0.0 {
                    continue;
                }
                for k in 0..nb {
                    omega[(j, k)] += half * dd[j] * dd[k];
                }
            }
        }
    }
    omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn abscissae() -> Vec<f64> {
        vec![-0.9, -0.5, -0.1, 0.2, 0.45, 0.8, 0.95]
    }

    #[test]
    fn basis_dimension_and_partition_of_unity() {
        let x = abscissae();
        let grid: Vec<f64> = (0..50).map(|i| -1.0 + 2.0 * i as f64 / 49.0).collect();
        let sys = SplineSystem::new(&x, &grid, Some((-1.0, 1.0))).unwrap();
        assert_eq!(sys.n_basis(), x.len() + 4);
        for row in sys.b_q.row_iter() {
            assert_relative_eq!(row.sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn penalty_annihilates_lines() {
        // coefficients of a linear function are the Greville abscissae
        let x = abscissae();
        let sys = SplineSystem::new(&x, &[], None).unwrap();
        let nb = sys.n_basis();
        let greville = crate::Vector::from_iterator(
            nb,
            (0..nb).map(|j| (sys.knots[j + 1] + sys.knots[j + 2] + sys.knots[j + 3]) / 3.0),
        );
        let fitted = &sys.b * &greville;
        for (f, x) in fitted.iter().zip(&x) {
            assert_relative_eq!(*f, *x, epsilon = 1e-12);
        }
        assert!((&sys.omega * &greville).amax() < 1e-9);
    }

    #[test]
    fn near_interpolant_energy_is_bounded_by_the_cubic() {
        // x^3 interpolates its own samples with energy int (6x)^2 = 24, so the
        // minimum-energy interpolant cannot exceed that
        let x: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let sys = SplineSystem::new(&x, &[], Some((-1.0, 1.0))).unwrap();
        let y = Mat::from_iterator(x.len(), 1, x.iter().map(|v| v.powi(3)));
        // the interpolating spline with natural-type freedom is not unique,
        // so solve the penalized problem with a tiny lambda instead
        let m = &sys.btb + &sys.omega * 1e-10;
        let c = solve_spd(&m, &(sys.b.transpose() * &y)).unwrap();
        let energy = (c.transpose() * &sys.omega * &c)[0];
        assert!(energy <= 24.0 + 1e-6, "energy {energy}");
    }

    #[test]
    fn rejects_too_few_points() {
        assert!(SplineSystem::new(&[0.0, 1.0, 1.0, 2.0], &[], None).is_err());
        assert!(SplineSystem::new(&[0.0, 1.0, 2.0, 3.0], &[], Some((0.5, 3.0))).is_err());
    }
}
