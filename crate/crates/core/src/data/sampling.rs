use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::encode::{one_hot_compact, CompactOneHot};
use super::{Dataset, Target};
use crate::error::{invalid, Result};
use crate::linalg::{sym_eigen, Mat, Vector};

/// The crate's generator: ChaCha with 8 rounds from `rand_chacha` 0.9,
/// seeded through `seed_from_u64`. Its stream is fixed across platforms.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed (SplitMix64 finalizer).
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

pub(crate) fn normal_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    // filled row by row so the stream maps to rows predictably
    let mut m = Mat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Draws `n_v` rows from `N(mean, cov + eps I)` fitted to the rows of `x`,
/// with `eps = 1e-8 tr(cov) / d` and the unbiased sample covariance.
pub fn sample_validation_covariates(x: &Mat, n_v: usize, seed: u64) -> Result<Mat> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(invalid("sample covariance needs at least two rows"));
    }
    if n_v == 0 {
        return Err(invalid("n_v must be positive"));
    }
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eps = 1e-8 * cov.trace() / d as f64;
    for i in 0..d {
        cov[(i, i)] += eps;
    }
    let (vals, vecs) = sym_eigen(&cov)?;
    let mut factor = vecs;
    for (j, mut col) in factor.column_iter_mut().enumerate() {
        col *= vals[j].max(0.0).sqrt();
    }
    let mut r = rng(seed);
    let z = normal_mat(&mut r, n_v, d);
    let mut out = z * factor.transpose();
    for mut row in out.row_iter_mut() {
        row += &mean;
    }
    Ok(out)
}

/// The noisy-sine toy problem plus its dense evaluation grid.
#[derive(Debug, Clone)]
pub struct SinData {
    pub train: Dataset,
    /// 1000 equispaced points on [-1, 1], one per row.
    pub grid: Mat,
    /// `sin(2 pi x)` on the grid.
    pub truth: Vector,
}

pub const SIN_GRID_LEN: usize = 1000;

pub fn synth_sin(n: usize, noise_sd: f64, seed: u64) -> Result<SinData> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let mut r = rng(seed);
    let tau = 2.0 * std::f64::consts::PI;
    let xs: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let e: f64 = StandardNormal.sample(&mut r);
            (tau * x).sin() + noise_sd * e
        })
        .collect();
    let grid = Mat::from_fn(SIN_GRID_LEN, 1, |i, _| {
        -1.0 + 2.0 * i as f64 / (SIN_GRID_LEN - 1) as f64
    });
    let truth = grid.column(0).map(|x| (tau * x).sin());
    let train = Dataset::new(
        Mat::from_vec(n, 1, xs),
        Target::Response(Vector::from_vec(ys)),
    )?;
    Ok(SinData { train, grid, truth })
}

/// Isotropic Gaussian linear model `y = X beta + eps`.
#[derive(Debug, Clone)]
pub struct LinearData {
    pub data: Dataset,
    pub beta: Vector,
    pub sigma2: f64,
}

/// Draws `X ~ N(0, I)`, a random direction for `beta` with
/// `|beta|^2 = snr * sigma2`, and Gaussian noise of variance `sigma2`.
pub fn synth_linear(n: usize, d: usize, snr: f64, sigma2: f64, seed: u64) -> Result<LinearData> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be positive"));
    }
    if !(snr >= 0.0 && sigma2 > 0.0) {
        return Err(invalid("snr must be nonnegative and sigma2 positive"));
    }
    let mut r = rng(seed);
    let dir = normal_vec(&mut r, d);
    let beta = &dir * ((snr * sigma2).sqrt() / dir.norm());
    let x = normal_mat(&mut r, n, d);
    let noise = normal_vec(&mut r, n) * sigma2.sqrt();
    let y = &x * &beta + noise;
    Ok(LinearData {
        data: Dataset::new(x, Target::Response(y))?,
        beta,
        sigma2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Gaussian,
    Categorical(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RandomResponse {
    Gaussian(Vector),
    Categorical {
        labels: Vec<usize>,
        encoded: CompactOneHot,
    },
}

impl RandomResponse {
    /// The response as an `n x d_out` build target.
    pub fn as_matrix(&self) -> Mat {
        match self {
            RandomResponse::Gaussian(y) => Mat::from_column_slice(y.len(), 1, y.as_slice()),
            RandomResponse::Categorical { encoded, .. } => encoded.y.clone(),
        }
    }
}

/// Non-informative build response: `N(0, I)` or uniform labels over `1..=c`.
pub fn random_response(n: usize, kind: ResponseKind, seed: u64) -> Result<RandomResponse> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let mut r = rng(seed);
    match kind {
        ResponseKind::Gaussian => Ok(RandomResponse::Gaussian(normal_vec(&mut r, n))),
        ResponseKind::Categorical(c) => {
            if c < 2 {
                return Err(invalid("categorical response needs c >= 2"));
            }
            let labels: Vec<usize> = (0..n).map(|_| r.random_range(1..=c)).collect();
            let encoded = one_hot_compact(&labels, c)?;
            Ok(RandomResponse::Categorical { labels, encoded })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows_give_that_row() {
        let x = Mat::from_row_slice(3, 2, &[1.0, -2.0, 1.0, -2.0, 1.0, -2.0]);
        let v = sample_validation_covariates(&x, 50, 3).unwrap();
        for row in v.row_iter() {
            assert!((row[0] - 1.0).abs() < 1e-9 && (row[1] + 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_sampling_needs_two_rows() {
        assert!(sample_validation_covariates(&Mat::zeros(1, 2), 5, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let x = Mat::from_row_slice(3, 1, &[0.0, 1.0, 5.0]);
        let a = sample_validation_covariates(&x, 20, 11).unwrap();
        let b = sample_validation_covariates(&x, 20, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_validation_covariates(&x, 20, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let x = Mat::from_row_slice(4, 2, &[0.0, 1.0, 2.0, 3.0, -1.0, 0.5, 4.0, -2.0]);
        let n_v = 20_000;
        let v = sample_validation_covariates(&x, n_v, 5).unwrap();
        let mu = x.row_mean();
        let got = v.row_mean();
        let n = x.nrows() as f64;
        for j in 0..2 {
            let col = x.column(j);
            let var = col.iter().map(|a| (a - mu[j]).powi(2)).sum::<f64>() / (n - 1.0);
            let bound = 4.0 * var.sqrt() / (n_v as f64).sqrt();
            assert!((got[j] - mu[j]).abs() < bound, "coordinate {j}");
        }
    }

    #[test]
    fn sin_defaults() {
        let s = synth_sin(10, 0.3, 1).unwrap();
        assert_eq!(s.train.n(), 10);
        assert_eq!(s.grid.nrows(), 1000);
        assert_eq!(s.grid[0], -1.0);
        assert_eq!(s.grid[999], 1.0);
        assert!(s.train.x().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn noiseless_sin_is_exact() {
        let s = synth_sin(25, 0.0, 4).unwrap();
        let y = s.train.response().unwrap();
        for (x, y) in s.train.x().iter().zip(y.iter()) {
            assert_eq!(*y, (2.0 * std::f64::consts::PI * x).sin());
        }
    }

    #[test]
    fn gaussian_response_mean() {
        let n = 4000;
        let RandomResponse::Gaussian(y) = random_response(n, ResponseKind::Gaussian, 9).unwrap()
        else {
            panic!("expected gaussian")
        };
        assert!(y.mean().abs() < 4.0 / (n as f64).sqrt());
        assert_eq!(
            random_response(n, ResponseKind::Gaussian, 9).unwrap(),
            RandomResponse::Gaussian(y)
        );
    }

    #[test]
    fn categorical_frequencies() {
        let (n, c) = (6000, 3);
        let RandomResponse::Categorical { labels, encoded } =
            random_response(n, ResponseKind::Categorical(c), 2).unwrap()
        else {
            panic!("expected categorical")
        };
        assert_eq!(encoded.y.ncols(), c - 1);
        for class in 1..=c {
            let freq = labels.iter().filter(|&&l| l == class).count() as f64 / n as f64;
            let bound = 4.0 * (1.0 / (c as f64 * n as f64)).sqrt();
            assert!(
                (freq - 1.0 / c as f64).abs() < bound,
                "class {class}: {freq}"
            );
        }
    }

    #[test]
    fn linear_data_beta_norm() {
        let d = synth_linear(50, 8, 5.0, 2.0, 1).unwrap();
        assert!((d.beta.norm_squared() - 10.0).abs() < 1e-12);
        assert_eq!(d.data.n(), 50);
    }

    #[test]
    fn split_seed_separates_streams() {
        assert_ne!(split_seed(1, 0), split_seed(1, 1));
        assert_eq!(split_seed(7, 3), split_seed(7, 3));
    }
}
