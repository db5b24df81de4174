//! Synthetic experiments: data generation, single trials, parameter
//! sweeps and Monte-Carlo checks of the distributional lemmas.

mod data;
mod sweep;
mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::fdp_and_power;
use crate::knockoff::{build_knockoffs, KnockoffModel, SVariant};
use crate::linalg::Matrix;
use crate::pipeline::{
    run_knockoff_method, run_method, MethodOutcome, MethodSpec, SelectionContext, Sidedness,
};

pub use data::{
    derive_seed, generate_coefficients, generate_design, generate_noise, generate_response,
    NullDist,
};
pub use sweep::{mean_se, run_sweep, run_sweep_cells, Axis, SweepCell, SweepResult};
pub use verify::{
    verify_lemma_frp_mean, verify_ratio_bound, verify_sign_property, Check, VerificationReport,
};

/// One simulation setting for a single method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    /// Number of alternatives.
    pub k: usize,
    pub rho: f64,
    pub sigma2: f64,
    pub boundary_delta: f64,
    pub null_dist: NullDist,
    pub amplitude: f64,
    /// All alternatives at `+amplitude` instead of random signs.
    pub same_sign: bool,
    pub q: f64,
    pub trials: usize,
    pub method: MethodSpec,
    pub seed: u64,
}

impl SimConfig {
    /// Desk-scale defaults: n = 300, p = 60, k = 12, ρ = 0, σ² = 1,
    /// δ = 0.5 with uniform nulls, amplitude 8, q = 0.2, 500 trials.
    pub fn desk(method: MethodSpec) -> Self {
        SimConfig {
            n: 300,
            p: 60,
            k: 12,
            rho: 0.0,
            sigma2: 1.0,
            boundary_delta: 0.5,
            null_dist: NullDist::UniformBoundary,
            amplitude: 8.0,
            same_sign: true,
            q: 0.2,
            trials: 500,
            method,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_data()?;
        self.method.validate()
    }

    /// Checks everything except the method.
    pub fn validate_data(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::invalid("n and p must be positive"));
        }
        if self.k > self.p {
            return Err(Error::invalid(format!("k = {} exceeds p = {}", self.k, self.p)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::invalid(format!("|rho| must be < 1, got {}", self.rho)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid(format!("sigma2 must be > 0, got {}", self.sigma2)));
        }
        if !(self.boundary_delta >= 0.0 && self.boundary_delta.is_finite()) {
            return Err(Error::invalid(format!(
                "boundary_delta must be >= 0, got {}",
                self.boundary_delta
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("amplitude must be finite"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::invalid(format!("q must lie in (0, 1), got {}", self.q)));
        }
        Ok(())
    }

    pub(crate) fn context(&self, trial_seed: u64) -> SelectionContext {
        SelectionContext {
            boundary_delta: self.boundary_delta,
            q: self.q,
            sigma2: self.sigma2,
            noise_seed: trial_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub fdp: f64,
    pub power: f64,
    pub num_selected: usize,
    /// `+inf` when nothing was selected by a knockoff method.
    pub threshold: f64,
    pub seed: u64,
    pub method: String,
    /// 0-based selected indices.
    pub selected: Vec<usize>,
    /// For shifted methods: whether `min_{S0}(θ_j + θ′_j) < 0` (or, for a
    /// negative shift, `max_{S0}(θ_j + θ′_j) > 0`) in this trial.
    pub bound_event: Option<bool>,
}

/// Simulated data of one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub x: Matrix,
    pub beta: Vec<f64>,
    pub y: Vec<f64>,
    /// Nulls by construction (non-alternatives).
    pub null_set: Vec<usize>,
}

impl TrialData {
    pub fn generate(cfg: &SimConfig, trial_seed: u64) -> Result<Self> {
        let x = generate_design(cfg.n, cfg.p, cfg.rho, trial_seed)?;
        let (beta, null_set) = generate_coefficients(
            cfg.p,
            cfg.k,
            cfg.boundary_delta,
            cfg.null_dist,
            cfg.amplitude,
            cfg.same_sign,
            trial_seed,
        )?;
        let y = generate_response(&x, &beta, cfg.sigma2, trial_seed)?;
        Ok(TrialData {
            x,
            beta,
            y,
            null_set,
        })
    }

    /// Truth mask for the hypothesis tested by a method of the given
    /// sidedness: `β_j ≤ δ` or `|β_j| ≤ δ`.
    pub fn is_null(&self, sided: Sidedness, boundary_delta: f64) -> Vec<bool> {
        self.beta
            .iter()
            .map(|&b| match sided {
                Sidedness::OneSided => b <= boundary_delta,
                Sidedness::TwoSided => b.abs() <= boundary_delta,
            })
            .collect()
    }
}

/// Runs one method on one simulated data set.
pub fn run_trial(cfg: &SimConfig, trial_seed: u64) -> Result<TrialMetrics> {
    cfg.validate()?;
    let data = TrialData::generate(cfg, trial_seed)?;
    run_methods_on(cfg, &data, std::slice::from_ref(&cfg.method), trial_seed)
        .remove(0)
}

/// Runs several methods on the same data, sharing knockoff constructions
/// between methods with equal s-factor.
pub(crate) fn run_methods_on(
    cfg: &SimConfig,
    data: &TrialData,
    methods: &[MethodSpec],
    trial_seed: u64,
) -> Vec<Result<TrialMetrics>> {
    let ctx = cfg.context(trial_seed);
    let mut models: BTreeMap<u64, Result<KnockoffModel>> = BTreeMap::new();
    methods
        .iter()
        .map(|method| {
            let outcome = match method.s_factor() {
                Some(f) => {
                    let model = models.entry(f.to_bits()).or_insert_with(|| {
                        build_knockoffs(&data.x, &SVariant::Equicorrelated(f))
                    });
                    match model {
                        Ok(m) => run_knockoff_method(m, &data.y, method, &ctx)?,
                        Err(e) => return Err(e.clone()),
                    }
                }
                None => run_method(&data.x, &data.y, method, &ctx)?,
            };
            Ok(metrics(cfg, data, method, outcome, trial_seed))
        })
        .collect()
}

fn metrics(
    cfg: &SimConfig,
    data: &TrialData,
    method: &MethodSpec,
    outcome: MethodOutcome,
    trial_seed: u64,
) -> TrialMetrics {
    let is_null = data.is_null(method.sidedness(), cfg.boundary_delta);
    let (fdp, power) = fdp_and_power(&outcome.selection.selected, &is_null, cfg.k);
    let true_null: Vec<usize> = (0..is_null.len()).filter(|&j| is_null[j]).collect();
    let bound_event = match (method.shift(), &outcome.estimates) {
        (Some(shift), Some(e)) if !true_null.is_empty() => {
            let sums = true_null.iter().map(|&j| e.theta[j] + e.theta_prime[j]);
            Some(if shift.resolve(cfg.boundary_delta) >= 0.0 {
                sums.fold(f64::INFINITY, f64::min) < 0.0
            } else {
                sums.fold(f64::NEG_INFINITY, f64::max) > 0.0
            })
        }
        _ => None,
    };
    TrialMetrics {
        fdp,
        power,
        num_selected: outcome.selection.selected.len(),
        threshold: outcome.selection.threshold,
        seed: trial_seed,
        method: method.label(),
        selected: outcome.selection.selected,
        bound_event,
    }
}
