//! Synthetic data: AR(1) Gaussian designs, sparse coefficients with
//! composite nulls, and Gaussian responses.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{normalize_columns, Matrix};

const DESIGN_STREAM: u64 = 1;
const COEF_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullDist {
    /// `β_j ~ U[-δ, δ]`
    UniformBoundary,
    /// `β_j = ±δ` with equal probability (worst case).
    RademacherBoundary,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in sweep cell `axis_index`. Independent of the
/// method, so every method in a cell sees the same data.
pub fn derive_seed(master: u64, axis_index: usize, trial: usize) -> u64 {
    let a = splitmix64(master ^ splitmix64(axis_index as u64 + 1));
    splitmix64(a ^ splitmix64(0xA5A5_0000 + trial as u64))
}

/// `n` iid rows from `N(0, S)` with `S_ij = ρ^|i-j|`, columns then scaled
/// to unit norm. Rows use the AR(1) recursion, which is the analytic
/// Cholesky factor of `S`.
pub fn generate_design(n: usize, p: usize, rho: f64, seed: u64) -> Result<Matrix> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid(format!("|rho| must be < 1, got {rho}")));
    }
    if n == 0 || p == 0 {
        return Err(Error::dims("design needs n >= 1 and p >= 1"));
    }
    let mut rng = stream_rng(seed, DESIGN_STREAM);
    let innov = (1.0 - rho * rho).sqrt();
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        data.push(prev);
        for _ in 1..p {
            let e: f64 = rng.sample(StandardNormal);
            prev = rho * prev + innov * e;
            data.push(prev);
        }
    }
    normalize_columns(&Matrix::new(n, p, data)?)
}

/// Coefficients with `k` alternatives at `±amplitude` (all `+amplitude`
/// when `same_sign`) and nulls drawn from `null_dist` on `[-δ, δ]`.
/// Returns `(beta, null_set)`, the null set being the non-alternatives.
pub fn generate_coefficients(
    p: usize,
    k: usize,
    boundary_delta: f64,
    null_dist: NullDist,
    amplitude: f64,
    same_sign: bool,
    seed: u64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if k > p {
        return Err(Error::invalid(format!("k = {k} exceeds p = {p}")));
    }
    let mut rng = stream_rng(seed, COEF_STREAM);
    let alternatives = sample(&mut rng, p, k);
    let mut is_alt = vec![false; p];
    for j in alternatives.iter() {
        is_alt[j] = true;
    }
    let mut beta = vec![0.0; p];
    let mut nulls = Vec::with_capacity(p - k);
    for j in 0..p {
        if is_alt[j] {
            let sign = if same_sign || rng.random::<bool>() { 1.0 } else { -1.0 };
            beta[j] = sign * amplitude;
        } else {
            beta[j] = match null_dist {
                NullDist::UniformBoundary => {
                    if boundary_delta == 0.0 {
                        0.0
                    } else {
                        boundary_delta * (2.0 * rng.random::<f64>() - 1.0)
                    }
                }
                NullDist::RademacherBoundary => {
                    if rng.random::<bool>() {
                        boundary_delta
                    } else {
                        -boundary_delta
                    }
                }
            };
            nulls.push(j);
        }
    }
    Ok((beta, nulls))
}

/// Gaussian noise vector with variance `sigma2`.
pub fn generate_noise(n: usize, sigma2: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, NOISE_STREAM);
    let sd = sigma2.sqrt();
    (0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `y = X β + w`.
pub fn generate_response(x: &Matrix, beta: &[f64], sigma2: f64, seed: u64) -> Result<Vec<f64>> {
    let mean = x.matvec(beta)?;
    let noise = generate_noise(x.rows(), sigma2, seed);
    Ok(mean.iter().zip(&noise).map(|(m, w)| m + w).collect())
}
