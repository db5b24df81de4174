//! Monte-Carlo verifiers. Each returns a report whose checks compare an
//! empirical statistic with its theoretical bound plus a 3·SE allowance.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, generate_noise, SimConfig, TrialData};
use crate::error::{Error, Result};
use crate::knockoff::KnockoffModel;
use crate::pipeline::{run_method, MethodSpec};

/// Two-sided binomial test size 0.01.
const Z_CRIT_01: f64 = 2.575_829_303_548_901;
const VARIANCE_REL_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub trials: usize,
    pub checks: Vec<Check>,
    /// Reference values printed under the table.
    pub notes: Vec<String>,
}

impl VerificationReport {
    fn new(name: &str, trials: usize) -> Self {
        VerificationReport {
            name: name.to_string(),
            trials,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, value: f64, bound: f64, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            bound,
            passed,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `Err(AssertionFailure)` unless every check passed.
    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::AssertionFailure(Box::new(self)))
        }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({} trials)", self.name, self.trials)?;
        writeln!(f, "  {:<28} {:>14} {:>14}  result", "check", "value", "bound")?;
        for c in &self.checks {
            writeln!(
                f,
                "  {:<28} {:>14.6} {:>14.6}  {}",
                c.name,
                c.value,
                c.bound,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
            if !c.detail.is_empty() {
                writeln!(f, "      {}", c.detail)?;
            }
        }
        for n in &self.notes {
            writeln!(f, "  {n}")?;
        }
        Ok(())
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn index_list(idx: &[usize]) -> String {
    let shown: Vec<String> = idx.iter().take(20).map(|j| (j + 1).to_string()).collect();
    let more = if idx.len() > 20 { ", ..." } else { "" };
    format!("violating variables (1-based): {}{more}", shown.join(", "))
}

/// Checks `|E(γ_j - γ′_j)| ≤ s_j δ`, the identity `E(γ_j - γ′_j) = s_j β_j`
/// and `Var(γ_j - γ′_j) = 2σ² s_j` for every null `j`, where `γ = [X X̃]ᵀy`
/// and `y = Xβ + N(0, σ²I)` is redrawn each trial with `X` fixed. The `s`
/// used for the bounds is `m.s`.
pub fn verify_lemma_frp_mean(
    m: &KnockoffModel,
    beta: &[f64],
    null_set: &[usize],
    sigma2: f64,
    boundary_delta: f64,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let (n, p) = (m.n(), m.p());
    if beta.len() != p {
        return Err(Error::dims(format!("beta has length {}, expected {p}", beta.len())));
    }
    if trials < 2 {
        return Err(Error::invalid("frp-mean needs at least 2 trials"));
    }
    if let Some(&j) = null_set.iter().find(|&&j| j >= p || beta[j].abs() > boundary_delta) {
        return Err(Error::invalid(format!(
            "null variable {} is out of range or has |beta| > delta",
            j + 1
        )));
    }
    let mean_y = m.x.matvec(beta)?;
    let diff: Vec<Vec<f64>> = null_set
        .iter()
        .map(|&j| (0..n).map(|i| m.x[(i, j)] - m.x_tilde[(i, j)]).collect())
        .collect();

    let samples: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = generate_noise(n, sigma2, derive_seed(seed, 0, t));
            let y: Vec<f64> = mean_y.iter().zip(&w).map(|(a, b)| a + b).collect();
            diff.iter()
                .map(|d| d.iter().zip(&y).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();

    let mut report = VerificationReport::new("frp-mean", trials);
    let mut worst_bound = f64::NEG_INFINITY;
    let mut worst_ident = 0.0f64;
    let mut bound_bad = Vec::new();
    let mut ident_bad = Vec::new();
    let mut var_ratio = 0.0;
    for (c, &j) in null_set.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|row| row[c]).collect();
        let (mean, var) = mean_var(&xs);
        let se = (var / trials as f64).sqrt();
        let s = m.s[j];
        // excess over the bound, in units of SE
        let excess = (mean.abs() - s * boundary_delta) / se;
        worst_bound = worst_bound.max(excess);
        if excess > 3.0 {
            bound_bad.push(j);
        }
        let z = (mean - s * beta[j]).abs() / se;
        worst_ident = worst_ident.max(z);
        if z > 3.0 {
            ident_bad.push(j);
        }
        var_ratio += var / (2.0 * sigma2 * s);
    }
    if null_set.is_empty() {
        report.notes.push("null set is empty; nothing to check".into());
        return Ok(report);
    }
    var_ratio /= null_set.len() as f64;

    report.check(
        "|mean| <= s*delta (SE units)",
        worst_bound,
        3.0,
        bound_bad.is_empty(),
        if bound_bad.is_empty() { String::new() } else { index_list(&bound_bad) },
    );
    report.check(
        "|mean - s*beta| (SE units)",
        worst_ident,
        3.0,
        ident_bad.is_empty(),
        if ident_bad.is_empty() { String::new() } else { index_list(&ident_bad) },
    );
    report.check(
        "var / (2 sigma2 s), pooled",
        var_ratio,
        1.0 + VARIANCE_REL_TOL,
        (var_ratio - 1.0).abs() <= VARIANCE_REL_TOL,
        format!("accepted range [{:.2}, {:.2}]", 1.0 - VARIANCE_REL_TOL, 1.0 + VARIANCE_REL_TOL),
    );
    report
        .notes
        .push(format!("{} null variables, delta = {boundary_delta}", null_set.len()));
    Ok(report)
}

/// Null statistics of one trial, in index order, zeros dropped.
fn null_statistics(cfg: &SimConfig, trial_seed: u64) -> Result<Vec<f64>> {
    let data = TrialData::generate(cfg, trial_seed)?;
    let out = run_method(&data.x, &data.y, &cfg.method, &cfg.context(trial_seed))?;
    let stats = out
        .stats
        .ok_or_else(|| Error::invalid("sign checks need a knockoff method"))?;
    Ok(data
        .null_set
        .iter()
        .map(|&j| stats.w[j])
        .filter(|&w| w != 0.0)
        .collect())
}

fn collect_null_statistics(cfg: &SimConfig, trials: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| null_statistics(cfg, derive_seed(seed, 0, t)))
        .collect()
}

/// Simple nulls (`δ = 0`): pooled null signs pass a two-sided binomial
/// test for `P(+) = 1/2` at size 0.01, the lag-1 autocorrelation of signs
/// (index order, within trials) is below `3/√N`, and `P(+) ≤ 1/2 + 3·SE`.
pub fn verify_sign_property(cfg: &SimConfig, trials: usize, seed: u64) -> Result<VerificationReport> {
    if cfg.boundary_delta != 0.0 {
        return Err(Error::invalid(format!(
            "sign property needs boundary_delta = 0, got {}",
            cfg.boundary_delta
        )));
    }
    let per_trial = collect_null_statistics(cfg, trials, seed)?;
    let signs: Vec<Vec<f64>> = per_trial
        .iter()
        .map(|w| w.iter().map(|v| v.signum()).collect())
        .collect();
    let total: usize = signs.iter().map(Vec::len).sum();
    let mut report = VerificationReport::new("sign-property", trials);
    report.notes.push(format!("method {}", cfg.method.label()));
    if total < 2 {
        report.check("nonzero null statistics", total as f64, 2.0, false, String::new());
        return Ok(report);
    }
    let n = total as f64;
    let positives = signs.iter().flatten().filter(|&&s| s > 0.0).count() as f64;
    let z = (2.0 * positives - n).abs() / n.sqrt();
    let freq = positives / n;
    let se = (freq * (1.0 - freq) / n).sqrt();

    let mean = signs.iter().flatten().sum::<f64>() / n;
    let denom: f64 = signs.iter().flatten().map(|s| (s - mean).powi(2)).sum();
    let numer: f64 = signs
        .iter()
        .flat_map(|row| row.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)))
        .sum();
    let lag1 = if denom > 0.0 { numer / denom } else { 1.0 };
    let lag_bound = 3.0 / n.sqrt();

    report.check(
        "binomial |z|, P(+) = 1/2",
        z,
        Z_CRIT_01,
        z <= Z_CRIT_01,
        format!("P(+) = {freq:.4} from {total} signs"),
    );
    report.check("|lag-1 autocorrelation|", lag1.abs(), lag_bound, lag1.abs() < lag_bound, String::new());
    report.check(
        "P(W > 0) <= 1/2 + 3 SE",
        freq,
        0.5 + 3.0 * se,
        freq <= 0.5 + 3.0 * se,
        String::new(),
    );
    Ok(report)
}

/// Pooled frequency ratio `P̂(W_j > 0) / P̂(W_j < 0)` over null variables
/// against `e^ε + 3·SE` (`1 + 3·SE` when `δ = 0`). This is the marginal
/// consequence of the conditional ratio bound, which cannot be estimated
/// directly. FRPP methods run with `epsilon`; other methods run as given.
pub fn verify_ratio_bound(
    cfg: &SimConfig,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let mut cfg = cfg.clone();
    if let MethodSpec::Frpp { epsilon: e, .. } = &mut cfg.method {
        *e = epsilon;
    }
    let per_trial = collect_null_statistics(&cfg, trials, seed)?;
    let pos = per_trial.iter().flatten().filter(|&&w| w > 0.0).count() as f64;
    let neg = per_trial.iter().flatten().filter(|&&w| w < 0.0).count() as f64;
    let ratio = if neg > 0.0 { pos / neg } else if pos > 0.0 { f64::INFINITY } else { 1.0 };
    // delta method on log(pos/neg)
    let se = if pos > 0.0 && neg > 0.0 {
        ratio * (1.0 / pos + 1.0 / neg).sqrt()
    } else {
        0.0
    };
    let reference = if cfg.boundary_delta == 0.0 { 1.0 } else { epsilon.exp() };
    let mut report = VerificationReport::new("ratio-bound", trials);
    report.check(
        "P(W>0) / P(W<0)",
        ratio,
        reference + 3.0 * se,
        ratio <= reference + 3.0 * se,
        format!("{pos} positive, {neg} negative null statistics"),
    );
    report.notes.push(format!("e^epsilon reference: {:.6} (epsilon = {epsilon})", epsilon.exp()));
    report.notes.push(format!(
        "method {}, delta = {}; marginal surrogate of the conditional ratio bound",
        cfg.method.label(),
        cfg.boundary_delta
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Estimator;
    use crate::inference::StatKind;
    use crate::knockoff::{build_knockoffs, SVariant};
    use crate::simbench::{generate_design, NullDist};

    fn model() -> KnockoffModel {
        let x = generate_design(120, 10, 0.3, 3).unwrap();
        build_knockoffs(&x, &SVariant::Equicorrelated(1.0)).unwrap()
    }

    #[test]
    fn frp_mean_zero_nulls() {
        let m = model();
        let beta = vec![0.0; 10];
        let nulls: Vec<usize> = (0..10).collect();
        let r = verify_lemma_frp_mean(&m, &beta, &nulls, 1.0, 0.5, 3000, 1).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn frp_mean_at_boundary_and_misscaled() {
        let mut m = model();
        let beta: Vec<f64> = (0..10).map(|j| if j % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let nulls: Vec<usize> = (0..10).collect();
        let r = verify_lemma_frp_mean(&m, &beta, &nulls, 1.0, 0.5, 3000, 2).unwrap();
        assert!(r.passed(), "{r}");
        m.s.iter_mut().for_each(|s| *s *= 0.5);
        let r = verify_lemma_frp_mean(&m, &beta, &nulls, 1.0, 0.5, 3000, 2).unwrap();
        assert!(!r.passed());
        assert!(matches!(r.into_result(), Err(Error::AssertionFailure(_))));
    }

    fn small(method: MethodSpec, delta: f64) -> SimConfig {
        SimConfig {
            n: 100,
            p: 20,
            k: 4,
            boundary_delta: delta,
            null_dist: NullDist::RademacherBoundary,
            ..SimConfig::desk(method)
        }
    }

    #[test]
    fn sign_property_simple_nulls() {
        let cfg = small(
            MethodSpec::Naive {
                estimator: Estimator::Ols,
                statistic: StatKind::SignedMax,
                s_factor: 1.0,
            },
            0.0,
        );
        let r = verify_sign_property(&cfg, 200, 5).unwrap();
        assert!(r.passed(), "{r}");
        assert!(verify_sign_property(&small(cfg.method.clone(), 0.5), 10, 5).is_err());
    }

    #[test]
    fn ratio_bound_report_has_reference() {
        let cfg = small(MethodSpec::frpp(1.0), 0.5);
        let r = verify_ratio_bound(&cfg, 0.5, 100, 7).unwrap();
        assert!(r.to_string().contains("e^epsilon reference: 1.648721"));
        assert!(verify_ratio_bound(&cfg, 0.0, 10, 7).is_err());
    }
}
