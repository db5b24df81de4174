//! Knockoff statistics, the knockoff+ threshold, the composite BH baseline
//! and the FDR bound for naive selection under composite nulls.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatePair;

/// Antisymmetric statistic `W` together with `Ψ`, the sorted distinct
/// nonzero magnitudes of `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatVector {
    pub w: Vec<f64>,
    pub psi: Vec<f64>,
}

impl StatVector {
    pub fn new(w: Vec<f64>) -> Self {
        let mut psi: Vec<f64> = w.iter().map(|v| v.abs()).filter(|&a| a > 0.0).collect();
        psi.sort_by(f64::total_cmp);
        psi.dedup();
        Self { w, psi }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatKind {
    /// `|θ| - |θ′|`
    Lcd,
    /// `sgn(|θ| - |θ′|) max(|θ|, |θ′|)`
    SignedMax,
    /// `θ - θ′`
    Diff,
}

impl StatKind {
    pub fn compute(self, e: &EstimatePair) -> StatVector {
        match self {
            StatKind::Lcd => stat_lcd(e),
            StatKind::SignedMax => stat_signed_max(e),
            StatKind::Diff => stat_diff(e),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StatKind::Lcd => "lcd",
            StatKind::SignedMax => "signed-max",
            StatKind::Diff => "diff",
        }
    }
}

fn pairwise(e: &EstimatePair, f: impl Fn(f64, f64) -> f64) -> StatVector {
    StatVector::new(
        e.theta
            .iter()
            .zip(&e.theta_prime)
            .map(|(&a, &b)| f(a, b))
            .collect(),
    )
}

pub fn stat_lcd(e: &EstimatePair) -> StatVector {
    pairwise(e, |a, b| a.abs() - b.abs())
}

pub fn stat_signed_max(e: &EstimatePair) -> StatVector {
    pairwise(e, |a, b| {
        let (ma, mb) = (a.abs(), b.abs());
        if ma > mb {
            ma
        } else if mb > ma {
            -mb
        } else {
            0.0
        }
    })
}

pub fn stat_diff(e: &EstimatePair) -> StatVector {
    pairwise(e, |a, b| a - b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// `+inf` when no `t` in `Ψ` meets the target.
    pub threshold: f64,
    /// 0-based indices, ascending.
    pub selected: Vec<usize>,
    pub fdp_estimate: f64,
    pub target_q: f64,
}

/// Knockoff+ threshold:
/// `T = min{t ∈ Ψ : (1 + #{W ≤ -t}) / max(#{W ≥ t}, 1) ≤ q}`.
pub fn knockoff_threshold(sv: &StatVector, q: f64) -> SelectionOutcome {
    let mut sorted = sv.w.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    for &t in &sv.psi {
        // #{W >= t}
        let positives = n - sorted.partition_point(|&w| w < t);
        // #{W <= -t}
        let negatives = sorted.partition_point(|&w| w <= -t);
        let fdp = (1.0 + negatives as f64) / positives.max(1) as f64;
        if fdp <= q {
            let selected = (0..sv.w.len()).filter(|&j| sv.w[j] >= t).collect();
            return SelectionOutcome {
                threshold: t,
                selected,
                fdp_estimate: fdp,
                target_q: q,
            };
        }
    }
    SelectionOutcome {
        threshold: f64::INFINITY,
        selected: Vec::new(),
        fdp_estimate: 0.0,
        target_q: q,
    }
}

/// Standard normal upper tail `1 - Φ(x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Boundary p-values `2 P(N(δ, 1) ≥ |β̂_j|)`, clipped to `[0, 1]`.
pub fn composite_pvalues(beta_hat: &[f64], boundary_delta: f64) -> Vec<f64> {
    beta_hat
        .iter()
        .map(|b| (2.0 * normal_sf(b.abs() - boundary_delta)).clamp(0.0, 1.0))
        .collect()
}

/// Benjamini-Hochberg step-up. Returns the rejected indices, ascending.
pub fn bh_step_up(pvalues: &[f64], q: f64) -> Vec<usize> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let mut k_star = 0;
    for (rank, &idx) in order.iter().enumerate() {
        let k = rank + 1;
        if pvalues[idx] <= k as f64 * q / m as f64 {
            k_star = k;
        }
    }
    let mut out: Vec<usize> = order[..k_star].to_vec();
    out.sort_unstable();
    out
}

/// Composite BH with the boundary p-values taken verbatim (unit variance
/// assumed for `beta_hat`).
pub fn composite_bh(beta_hat: &[f64], boundary_delta: f64, q: f64) -> Vec<usize> {
    bh_step_up(&composite_pvalues(beta_hat, boundary_delta), q)
}

/// Composite BH after dividing `β̂_j` and `δ` by the standard error `se_j`.
pub fn composite_bh_standardized(
    beta_hat: &[f64],
    std_err: &[f64],
    boundary_delta: f64,
    q: f64,
) -> Vec<usize> {
    let pvalues: Vec<f64> = beta_hat
        .iter()
        .zip(std_err)
        .map(|(b, se)| (2.0 * normal_sf((b.abs() - boundary_delta) / se)).clamp(0.0, 1.0))
        .collect();
    bh_step_up(&pvalues, q)
}

/// Inputs of the naive-selection FDR bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInput {
    pub boundary_delta: f64,
    pub sigma2: f64,
    /// `s_j` for each null in `beta_null`.
    pub s: Vec<f64>,
    pub beta_null: Vec<f64>,
    pub q: f64,
}

impl BoundInput {
    /// Worst case: every null coefficient sits on the boundary.
    pub fn worst_case(boundary_delta: f64, sigma2: f64, s: Vec<f64>, q: f64) -> Self {
        let beta_null = vec![boundary_delta; s.len()];
        Self {
            boundary_delta,
            sigma2,
            s,
            beta_null,
            q,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.boundary_delta >= 0.0 && self.boundary_delta.is_finite()) {
            return Err(Error::invalid("boundary delta must be finite and >= 0"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2 must be finite and > 0"));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::invalid(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if self.s.len() != self.beta_null.len() {
            return Err(Error::dims("s and beta_null must have equal length"));
        }
        if self.s.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("s entries must be finite and >= 0"));
        }
        if self
            .beta_null
            .iter()
            .any(|b| !(b.abs() <= self.boundary_delta * (1.0 + 1e-12)))
        {
            return Err(Error::invalid("null coefficients must satisfy |beta| <= delta"));
        }
        Ok(())
    }

    /// `P(δ/σ² max_j |γ_j - γ′_j| > ε)` with `γ_j - γ′_j` independent
    /// `N(s_j β_j, 2σ² s_j)`.
    pub fn tail_probability(&self, eps: f64) -> f64 {
        if self.boundary_delta == 0.0 {
            return 0.0;
        }
        let cutoff = eps * self.sigma2 / self.boundary_delta;
        let mut log_inside = 0.0;
        for (&s, &b) in self.s.iter().zip(&self.beta_null) {
            let mean = s * b;
            let sd = (2.0 * self.sigma2 * s).sqrt();
            let inside = if sd == 0.0 {
                if mean.abs() <= cutoff {
                    1.0
                } else {
                    0.0
                }
            } else {
                // P(-c <= D <= c) = Φ((c - μ)/sd) - Φ((-c - μ)/sd)
                let upper = normal_sf((cutoff - mean) / sd);
                let lower = normal_cdf((-cutoff - mean) / sd);
                (1.0 - upper - lower).max(0.0)
            };
            if inside == 0.0 {
                return 1.0;
            }
            log_inside += inside.ln();
        }
        -log_inside.exp_m1()
    }

    pub fn objective(&self, eps: f64) -> f64 {
        self.q * eps.exp() + self.tail_probability(eps)
    }
}

/// One point of the bound curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub eps: f64,
    pub value: f64,
}

fn validate_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if let Some(bad) = eps_grid.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::InvalidGrid(format!(
            "grid values must be finite and >= 0, got {bad}"
        )));
    }
    Ok(())
}

pub fn naive_fdr_bound_curve(b: &BoundInput, eps_grid: &[f64]) -> Result<Vec<BoundPoint>> {
    validate_grid(eps_grid)?;
    b.validate()?;
    Ok(eps_grid
        .iter()
        .map(|&eps| BoundPoint {
            eps,
            value: b.objective(eps),
        })
        .collect())
}

/// `min over the grid of q e^ε + P(δ/σ² max|γ - γ′| > ε)`; returns
/// `(bound, argmin ε)`. Ties go to the smallest ε.
pub fn naive_fdr_bound(b: &BoundInput, eps_grid: &[f64]) -> Result<(f64, f64)> {
    let curve = naive_fdr_bound_curve(b, eps_grid)?;
    let best = curve
        .iter()
        .copied()
        .reduce(|best, pt| {
            if pt.value < best.value || (pt.value == best.value && pt.eps < best.eps) {
                pt
            } else {
                best
            }
        })
        .expect("grid is non-empty");
    Ok((best.value, best.eps))
}

/// `0` followed by `points` log-spaced values in `[lo, hi]`.
pub fn log_grid_with_zero(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    if points == 1 {
        grid.push(lo);
    } else if points > 1 {
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (points - 1) as f64;
        grid.extend((0..points).map(|i| (a + step * i as f64).exp()));
    }
    grid
}

/// Default bound grid: `0` plus 200 log-spaced points in `[1e-4, 10]`.
pub fn default_eps_grid() -> Vec<f64> {
    log_grid_with_zero(1e-4, 10.0, 200)
}

/// Realised false discovery proportion and power of a selection.
pub fn fdp_and_power(selected: &[usize], is_null: &[bool], k: usize) -> (f64, f64) {
    let sel: BTreeSet<usize> = selected.iter().copied().collect();
    let false_disc = sel.iter().filter(|&&j| is_null[j]).count();
    let true_disc = sel.len() - false_disc;
    let fdp = false_disc as f64 / sel.len().max(1) as f64;
    let power = if k == 0 {
        0.0
    } else {
        true_disc as f64 / k as f64
    };
    (fdp, power)
}
