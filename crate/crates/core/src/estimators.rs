//! Coefficient estimators over the augmented design `A = [X X̃]`.
//!
//! Every estimator here touches the data only through the pair
//! `(G, Aᵀy)`, so swapping columns `i` and `i + p` of `A` swaps the
//! corresponding estimates. LASSO is solved in its Gram form
//!
//! ```text
//! minimize  (b + o)ᵀ G (b + o) - 2 zᵀ (b + o) + λ |b|₁
//! ```
//!
//! which equals `|y - A(b + o)|² + λ|b|₁` up to the constant `yᵀy` when
//! `z = Aᵀy`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knockoff::{check_ols_feasible, KnockoffModel};
use crate::linalg::{solve_spd_vec, SymmetricMatrix};

/// Coordinate descent stops once no coordinate moves more than this.
pub const LASSO_STEP_TOL: f64 = 1e-8;
/// Maximum subgradient violation accepted at the returned point.
pub const LASSO_KKT_TOL: f64 = 1e-6;
pub const LASSO_MAX_SWEEPS: usize = 10_000;
/// Sweeps between attempts at an exact active-set solve.
const POLISH_EVERY: usize = 200;

/// RNG stream reserved for FRPP noise.
const FRPP_STREAM: u64 = 0xF2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Estimator {
    Ols,
    Lasso { lambda: f64 },
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Ols => write!(f, "ols"),
            Estimator::Lasso { lambda } => write!(f, "lasso(lambda={lambda})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePair {
    /// Estimates for the original variables.
    pub theta: Vec<f64>,
    /// Estimates for the knockoff variables.
    pub theta_prime: Vec<f64>,
    pub method: String,
    /// Shift applied to `theta_prime` (zeros when unshifted).
    pub shift: Vec<f64>,
}

impl EstimatePair {
    fn from_stacked(b: Vec<f64>, method: String) -> Self {
        let p = b.len() / 2;
        let mut theta = b;
        let theta_prime = theta.split_off(p);
        Self {
            theta,
            theta_prime,
            method,
            shift: vec![0.0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }

    /// `(θ; θ′)` as one vector of length `2p`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = self.theta.clone();
        out.extend_from_slice(&self.theta_prime);
        out
    }

    /// Exchanges `theta_i` and `theta_prime_i` for every `i` in `swap`.
    pub fn swapped(&self, swap: &[usize]) -> Self {
        let mut out = self.clone();
        for &i in swap {
            std::mem::swap(&mut out.theta[i], &mut out.theta_prime[i]);
        }
        out
    }
}

pub fn ols_augmented(m: &KnockoffModel, y: &[f64]) -> Result<EstimatePair> {
    let products = m.products(y)?;
    ols_from_products(m, &products, "ols")
}

fn ols_from_products(m: &KnockoffModel, products: &[f64], label: &str) -> Result<EstimatePair> {
    if !check_ols_feasible(m) {
        let max_s = m.s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::NotPositiveSemiDefinite {
            pivot: 0,
            note: format!(
                " (augmented Gram is singular: OLS requires max s_i < 2 λ_min(Σ), \
                 got max s_i = {max_s}, 2 λ_min = {})",
                2.0 * m.lambda_min
            ),
        });
    }
    let b = solve_spd_vec(&m.g, products).map_err(|e| match e {
        Error::NotPositiveSemiDefinite { pivot, .. } => Error::NotPositiveSemiDefinite {
            pivot,
            note: " (augmented Gram numerically singular; OLS requires max s_i < 2 λ_min(Σ))"
                .into(),
        },
        other => other,
    })?;
    Ok(EstimatePair::from_stacked(b, label.to_string()))
}

/// Result of a coordinate-descent LASSO solve.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub sweeps: usize,
    pub kkt_residual: f64,
    /// Objective (without the constant `yᵀy`) after every sweep, starting
    /// with the value at `b = 0`.
    pub objective_trace: Vec<f64>,
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Gram-form objective `(b+o)ᵀG(b+o) - 2zᵀ(b+o) + λ|b|₁`.
pub fn lasso_gram_objective(
    g: &SymmetricMatrix,
    z: &[f64],
    lambda: f64,
    offset: &[f64],
    b: &[f64],
) -> f64 {
    let v: Vec<f64> = b.iter().zip(offset).map(|(bi, oi)| bi + oi).collect();
    let gv = g.matvec(&v).expect("dimensions checked by caller");
    let quad: f64 = v.iter().zip(&gv).map(|(a, c)| a * c).sum();
    let lin: f64 = z.iter().zip(&v).map(|(a, c)| a * c).sum();
    let l1: f64 = b.iter().map(|x| x.abs()).sum();
    quad - 2.0 * lin + lambda * l1
}

fn objective_from_fitted(fitted: &[f64], z: &[f64], lambda: f64, offset: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..b.len() {
        let v = b[j] + offset[j];
        acc += v * fitted[j] - 2.0 * z[j] * v + lambda * b[j].abs();
    }
    acc
}

/// Largest subgradient violation at `b`.
pub fn lasso_kkt_residual(
    g: &SymmetricMatrix,
    z: &[f64],
    lambda: f64,
    offset: &[f64],
    b: &[f64],
) -> f64 {
    let v: Vec<f64> = b.iter().zip(offset).map(|(bi, oi)| bi + oi).collect();
    let gv = g.matvec(&v).expect("dimensions checked by caller");
    kkt_from_fitted(&gv, z, lambda, b)
}

fn kkt_from_fitted(gv: &[f64], z: &[f64], lambda: f64, b: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..b.len() {
        // gradient of the smooth part
        let grad = 2.0 * (gv[j] - z[j]);
        let r = if b[j] == 0.0 {
            (grad.abs() - lambda).max(0.0)
        } else {
            (grad + lambda * b[j].signum()).abs()
        };
        worst = worst.max(r);
    }
    worst
}

/// Cyclic coordinate descent in fixed order `0..dim`.
pub fn lasso_coordinate_descent(
    g: &SymmetricMatrix,
    z: &[f64],
    lambda: f64,
    offset: &[f64],
) -> Result<LassoFit> {
    let dim = g.dim();
    if z.len() != dim || offset.len() != dim {
        return Err(Error::dims(format!(
            "lasso expects vectors of length {dim}, got z: {}, offset: {}",
            z.len(),
            offset.len()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut b = vec![0.0; dim];
    // fitted = G (b + o)
    let mut fitted = g.matvec(offset)?;
    let mut trace = vec![lasso_gram_objective(g, z, lambda, offset, &b)];
    let half_lambda = 0.5 * lambda;
    let gm = g.as_matrix();

    for sweep in 1..=LASSO_MAX_SWEEPS {
        let mut max_step: f64 = 0.0;
        for j in 0..dim {
            let gjj = gm[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            // r_j = z_j - Σ_{k≠j} G_jk (b_k + o_k) - G_jj o_j
            let r = z[j] - (fitted[j] - gjj * b[j]);
            let new = soft_threshold(r, half_lambda) / gjj;
            let step = new - b[j];
            if step != 0.0 {
                for (f, &gk) in fitted.iter_mut().zip(gm.row(j)) {
                    *f += gk * step;
                }
                b[j] = new;
                max_step = max_step.max(step.abs());
            }
        }
        trace.push(objective_from_fitted(&fitted, z, lambda, offset, &b));
        if max_step < LASSO_STEP_TOL || sweep % POLISH_EVERY == 0 {
            // refresh to shed accumulated drift before judging optimality
            let v: Vec<f64> = b.iter().zip(offset).map(|(bi, oi)| bi + oi).collect();
            fitted = g.matvec(&v)?;
            let mut kkt = kkt_from_fitted(&fitted, z, lambda, &b);
            if let Some((pb, pf, pk)) = polish(g, z, lambda, offset, &b, kkt) {
                b = pb;
                fitted = pf;
                kkt = pk;
                trace.push(objective_from_fitted(&fitted, z, lambda, offset, &b));
            }
            if kkt <= 0.1 * LASSO_KKT_TOL {
                return Ok(LassoFit {
                    coef: b,
                    sweeps: sweep,
                    kkt_residual: kkt,
                    objective_trace: trace,
                });
            }
        }
    }
    let v: Vec<f64> = b.iter().zip(offset).map(|(bi, oi)| bi + oi).collect();
    let fitted = g.matvec(&v)?;
    let kkt = kkt_from_fitted(&fitted, z, lambda, &b);
    if kkt <= LASSO_KKT_TOL {
        return Ok(LassoFit {
            coef: b,
            sweeps: LASSO_MAX_SWEEPS,
            kkt_residual: kkt,
            objective_trace: trace,
        });
    }
    Err(Error::ConvergenceFailure {
        what: "lasso coordinate descent (KKT residual)",
        residual: kkt,
    })
}

/// Exact solve of the stationarity equations on the current support and
/// sign pattern. Returns the polished point only when it keeps the signs
/// and lowers the KKT residual; ill-conditioned problems where plain
/// coordinate descent crawls finish here.
fn polish(
    g: &SymmetricMatrix,
    z: &[f64],
    lambda: f64,
    offset: &[f64],
    b: &[f64],
    kkt: f64,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let active: Vec<usize> = (0..b.len()).filter(|&j| b[j] != 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let gm = g.as_matrix();
    let go = g.matvec(offset).ok()?;
    let sub = SymmetricMatrix::from_upper_fn(active.len(), |a, c| gm[(active[a], active[c])]);
    let rhs: Vec<f64> = active
        .iter()
        .map(|&j| z[j] - 0.5 * lambda * b[j].signum() - go[j])
        .collect();
    let sol = solve_spd_vec(&sub, &rhs).ok()?;
    let mut out = vec![0.0; b.len()];
    for (&j, &v) in active.iter().zip(&sol) {
        if lambda > 0.0 && v.signum() != b[j].signum() {
            return None;
        }
        out[j] = v;
    }
    let v: Vec<f64> = out.iter().zip(offset).map(|(bi, oi)| bi + oi).collect();
    let fitted = g.matvec(&v).ok()?;
    let new_kkt = kkt_from_fitted(&fitted, z, lambda, &out);
    (new_kkt < kkt).then_some((out, fitted, new_kkt))
}

/// LASSO over `[X X̃]` with an optional fixed offset inside the loss.
pub fn lasso_augmented(
    m: &KnockoffModel,
    y: &[f64],
    lambda: f64,
    offset: &[f64],
) -> Result<EstimatePair> {
    let z = m.products(y)?;
    lasso_from_products(m, &z, lambda, offset, format!("lasso(lambda={lambda})"))
}

fn lasso_from_products(
    m: &KnockoffModel,
    z: &[f64],
    lambda: f64,
    offset: &[f64],
    label: String,
) -> Result<EstimatePair> {
    if offset.len() != 2 * m.p() {
        return Err(Error::dims(format!(
            "offset has length {}, expected {}",
            offset.len(),
            2 * m.p()
        )));
    }
    let fit = lasso_coordinate_descent(&m.g, z, lambda, offset)?;
    Ok(EstimatePair::from_stacked(fit.coef, label))
}

/// Adds `delta_prime` to the knockoff half of the estimates.
pub fn shift_estimates(e: &EstimatePair, delta_prime: &[f64]) -> Result<EstimatePair> {
    if delta_prime.len() != e.p() {
        return Err(Error::dims(format!(
            "shift has length {}, expected {}",
            delta_prime.len(),
            e.p()
        )));
    }
    let mut out = e.clone();
    for ((tp, sh), d) in out.theta_prime.iter_mut().zip(out.shift.iter_mut()).zip(delta_prime) {
        *tp += d;
        *sh += d;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrppNoise {
    pub delta: Vec<f64>,
    pub epsilon: f64,
    pub boundary_delta: f64,
    /// Laplace scale per coordinate; entries `j` and `j + p` are both
    /// `2 s_j δ / ε`.
    pub scales: Vec<f64>,
}

/// Laplace(0, scale) by inverse CDF from one uniform draw.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

/// Perturbs `[X X̃]ᵀy` with independent Laplace noise calibrated to the
/// composite boundary `δ`.
pub fn frpp_perturb(
    m: &KnockoffModel,
    y: &[f64],
    epsilon: f64,
    boundary_delta: f64,
    rng_seed: u64,
) -> Result<(Vec<f64>, FrppNoise)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if !(boundary_delta >= 0.0 && boundary_delta.is_finite()) {
        return Err(Error::invalid(format!(
            "boundary delta must be >= 0, got {boundary_delta}"
        )));
    }
    let products = m.products(y)?;
    let p = m.p();
    let scales: Vec<f64> = (0..2 * p)
        .map(|j| 2.0 * m.s[j % p] * boundary_delta / epsilon)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(FRPP_STREAM);
    let delta: Vec<f64> = scales
        .iter()
        .map(|&b| if b > 0.0 { sample_laplace(&mut rng, b) } else { 0.0 })
        .collect();
    let perturbed = products
        .iter()
        .zip(&delta)
        .map(|(&c, &d)| if d == 0.0 { c } else { c + d })
        .collect();
    Ok((
        perturbed,
        FrppNoise {
            delta,
            epsilon,
            boundary_delta,
            scales,
        },
    ))
}

/// Applies `estimator` to `(G, perturbed_products)`.
pub fn frpp_estimate(
    m: &KnockoffModel,
    perturbed_products: &[f64],
    estimator: Estimator,
) -> Result<EstimatePair> {
    if perturbed_products.len() != 2 * m.p() {
        return Err(Error::dims(format!(
            "products have length {}, expected {}",
            perturbed_products.len(),
            2 * m.p()
        )));
    }
    match estimator {
        Estimator::Ols => ols_from_products(m, perturbed_products, "frpp-ols"),
        Estimator::Lasso { lambda } => lasso_from_products(
            m,
            perturbed_products,
            lambda,
            &vec![0.0; 2 * m.p()],
            format!("frpp-lasso(lambda={lambda})"),
        ),
    }
}

/// Runs `estimator` on unperturbed data; `offset` only applies to LASSO.
pub fn estimate(
    m: &KnockoffModel,
    y: &[f64],
    estimator: Estimator,
    offset: Option<&[f64]>,
) -> Result<EstimatePair> {
    match estimator {
        Estimator::Ols => ols_augmented(m, y),
        Estimator::Lasso { lambda } => {
            let zeros;
            let offset = match offset {
                Some(o) => o,
                None => {
                    zeros = vec![0.0; 2 * m.p()];
                    &zeros
                }
            };
            lasso_augmented(m, y, lambda, offset)
        }
    }
}
