//! Method dispatch: one selection procedure from a normalized design and a
//! response, shared by the simulator and the `select` subcommand.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    estimate, frpp_estimate, frpp_perturb, lasso_augmented, shift_estimates, EstimatePair,
    Estimator,
};
use crate::inference::{
    bh_step_up, composite_pvalues, knockoff_threshold, normal_sf, SelectionOutcome, StatKind,
    StatVector,
};
use crate::knockoff::{build_knockoffs, KnockoffModel, SVariant};
use crate::linalg::{gram, solve_spd, solve_spd_vec, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// `H0: β_j ≤ δ`
    OneSided,
    /// `H0: |β_j| ≤ δ`
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftName {
    /// `δ′_j = δ`
    Boundary,
    /// `δ′_j = -δ`
    NegBoundary,
}

/// Knockoff-half shift `δ′`, either tied to the composite boundary or an
/// explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftSpec {
    Named(ShiftName),
    Value(f64),
}

impl ShiftSpec {
    pub fn resolve(self, boundary_delta: f64) -> f64 {
        match self {
            ShiftSpec::Named(ShiftName::Boundary) => boundary_delta,
            ShiftSpec::Named(ShiftName::NegBoundary) => -boundary_delta,
            ShiftSpec::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodSpec {
    /// The original knockoff filter applied as if the nulls were simple.
    Naive {
        estimator: Estimator,
        statistic: StatKind,
        s_factor: f64,
    },
    /// Shifted OLS.
    SOls {
        sided: Sidedness,
        shift: ShiftSpec,
        statistic: StatKind,
        s_factor: f64,
    },
    /// Feature-response product perturbation, run at level `q / e^ε`.
    Frpp {
        epsilon: f64,
        estimator: Estimator,
        statistic: StatKind,
        s_factor: f64,
    },
    /// LASSO estimates with the knockoff half shifted afterwards.
    SLas1 {
        lambda: f64,
        shift: ShiftSpec,
        statistic: StatKind,
        s_factor: f64,
    },
    /// LASSO with the shift inside the loss.
    SLas2 {
        lambda: f64,
        shift: ShiftSpec,
        statistic: StatKind,
        s_factor: f64,
    },
    /// BH on boundary p-values from OLS on the original design.
    CompositeBh { standardize: bool },
}

impl MethodSpec {
    /// Reference-protocol defaults: S-OLS at 1.8, FRPP at 1.0 and the LASSO
    /// heuristics at 2.0 times `λ_min(Σ)`, signed-max statistics, `λ = 1`.
    pub fn s_ols_one_sided() -> Self {
        MethodSpec::SOls {
            sided: Sidedness::OneSided,
            shift: ShiftSpec::Named(ShiftName::Boundary),
            statistic: StatKind::Diff,
            s_factor: 1.8,
        }
    }

    pub fn s_ols_two_sided() -> Self {
        MethodSpec::SOls {
            sided: Sidedness::TwoSided,
            shift: ShiftSpec::Named(ShiftName::Boundary),
            statistic: StatKind::SignedMax,
            s_factor: 1.8,
        }
    }

    pub fn frpp(epsilon: f64) -> Self {
        MethodSpec::Frpp {
            epsilon,
            estimator: Estimator::Lasso { lambda: 1.0 },
            statistic: StatKind::SignedMax,
            s_factor: 1.0,
        }
    }

    pub fn s_las1() -> Self {
        MethodSpec::SLas1 {
            lambda: 1.0,
            shift: ShiftSpec::Named(ShiftName::Boundary),
            statistic: StatKind::SignedMax,
            s_factor: 2.0,
        }
    }

    pub fn s_las2() -> Self {
        MethodSpec::SLas2 {
            lambda: 1.0,
            shift: ShiftSpec::Named(ShiftName::Boundary),
            statistic: StatKind::SignedMax,
            s_factor: 2.0,
        }
    }

    pub fn naive_lasso() -> Self {
        MethodSpec::Naive {
            estimator: Estimator::Lasso { lambda: 1.0 },
            statistic: StatKind::SignedMax,
            s_factor: 2.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            MethodSpec::Naive { .. } => "naive".into(),
            MethodSpec::SOls {
                sided: Sidedness::OneSided,
                ..
            } => "s-ols-one-sided".into(),
            MethodSpec::SOls {
                sided: Sidedness::TwoSided,
                ..
            } => "s-ols-two-sided".into(),
            MethodSpec::Frpp { .. } => "frpp".into(),
            MethodSpec::SLas1 { .. } => "s-las1".into(),
            MethodSpec::SLas2 { .. } => "s-las2".into(),
            MethodSpec::CompositeBh { standardize: false } => "composite-bh".into(),
            MethodSpec::CompositeBh { standardize: true } => "composite-bh-std".into(),
        }
    }

    pub fn s_factor(&self) -> Option<f64> {
        match self {
            MethodSpec::Naive { s_factor, .. }
            | MethodSpec::SOls { s_factor, .. }
            | MethodSpec::Frpp { s_factor, .. }
            | MethodSpec::SLas1 { s_factor, .. }
            | MethodSpec::SLas2 { s_factor, .. } => Some(*s_factor),
            MethodSpec::CompositeBh { .. } => None,
        }
    }

    pub fn shift(&self) -> Option<ShiftSpec> {
        match self {
            MethodSpec::SOls { shift, .. }
            | MethodSpec::SLas1 { shift, .. }
            | MethodSpec::SLas2 { shift, .. } => Some(*shift),
            _ => None,
        }
    }

    pub fn uses_knockoffs(&self) -> bool {
        self.s_factor().is_some()
    }

    pub fn sidedness(&self) -> Sidedness {
        match self {
            MethodSpec::SOls { sided, .. } => *sided,
            _ => Sidedness::TwoSided,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.s_factor() {
            if !(f > 0.0 && f <= 2.0) {
                return Err(Error::invalid(format!(
                    "{}: s_factor must lie in (0, 2], got {f}",
                    self.label()
                )));
            }
        }
        let check_lambda = |lambda: f64| {
            if lambda >= 0.0 && lambda.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{}: lambda must be >= 0, got {lambda}",
                    self.label()
                )))
            }
        };
        match self {
            MethodSpec::Naive { estimator, .. } => {
                if let Estimator::Lasso { lambda } = estimator {
                    check_lambda(*lambda)?;
                }
            }
            MethodSpec::SOls {
                sided, statistic, ..
            } => match (sided, statistic) {
                (Sidedness::OneSided, StatKind::Diff) => {}
                (Sidedness::OneSided, _) => {
                    return Err(Error::invalid(
                        "one-sided S-OLS uses the difference statistic (statistic = \"diff\")",
                    ))
                }
                (Sidedness::TwoSided, StatKind::Diff) => {
                    return Err(Error::invalid(
                        "two-sided S-OLS needs sgn(W) = sgn(|b| - |b'|): use \"signed-max\" or \"lcd\"",
                    ))
                }
                _ => {}
            },
            MethodSpec::Frpp {
                epsilon, estimator, ..
            } => {
                if !(*epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidEpsilon(*epsilon));
                }
                if let Estimator::Lasso { lambda } = estimator {
                    check_lambda(*lambda)?;
                }
            }
            MethodSpec::SLas1 { lambda, .. } | MethodSpec::SLas2 { lambda, .. } => {
                check_lambda(*lambda)?
            }
            MethodSpec::CompositeBh { .. } => {}
        }
        Ok(())
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Problem-level settings shared by every method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionContext {
    pub boundary_delta: f64,
    pub q: f64,
    pub sigma2: f64,
    /// Seed for the FRPP noise; ignored by deterministic methods.
    pub noise_seed: u64,
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub selection: SelectionOutcome,
    /// Knockoff statistics (absent for composite BH).
    pub stats: Option<StatVector>,
    pub estimates: Option<EstimatePair>,
    /// Level actually handed to the knockoff+ threshold.
    pub effective_q: f64,
}

/// Runs `method` on a column-normalized design.
pub fn run_method(
    x: &Matrix,
    y: &[f64],
    method: &MethodSpec,
    ctx: &SelectionContext,
) -> Result<MethodOutcome> {
    method.validate()?;
    if y.len() != x.rows() {
        return Err(Error::dims(format!(
            "response has length {}, design has {} rows",
            y.len(),
            x.rows()
        )));
    }
    if let MethodSpec::CompositeBh { standardize } = method {
        return composite_bh_method(x, y, *standardize, ctx);
    }
    let s_factor = method.s_factor().expect("knockoff method");
    let model = build_knockoffs(x, &SVariant::Equicorrelated(s_factor))?;
    run_knockoff_method(&model, y, method, ctx)
}

/// Knockoff methods on an already constructed model.
pub fn run_knockoff_method(
    model: &KnockoffModel,
    y: &[f64],
    method: &MethodSpec,
    ctx: &SelectionContext,
) -> Result<MethodOutcome> {
    let p = model.p();
    let delta = ctx.boundary_delta;
    let mut q = ctx.q;
    let (estimates, statistic) = match method {
        MethodSpec::Naive {
            estimator,
            statistic,
            ..
        } => (estimate(model, y, *estimator, None)?, *statistic),
        MethodSpec::SOls {
            shift, statistic, ..
        } => {
            let base = estimate(model, y, Estimator::Ols, None)?;
            let e = shift_estimates(&base, &vec![shift.resolve(delta); p])?;
            (e, *statistic)
        }
        MethodSpec::Frpp {
            epsilon,
            estimator,
            statistic,
            ..
        } => {
            let (products, _noise) = frpp_perturb(model, y, *epsilon, delta, ctx.noise_seed)?;
            // with δ = 0 there is no noise and the level needs no correction
            if delta > 0.0 {
                q /= epsilon.exp();
            }
            (frpp_estimate(model, &products, *estimator)?, *statistic)
        }
        MethodSpec::SLas1 {
            lambda,
            shift,
            statistic,
            ..
        } => {
            let base = estimate(model, y, Estimator::Lasso { lambda: *lambda }, None)?;
            let e = shift_estimates(&base, &vec![shift.resolve(delta); p])?;
            (e, *statistic)
        }
        MethodSpec::SLas2 {
            lambda,
            shift,
            statistic,
            ..
        } => {
            let d = shift.resolve(delta);
            let mut offset = vec![0.0; 2 * p];
            offset[p..].iter_mut().for_each(|o| *o = d);
            // the minimizer b itself is the estimate; at λ = 0 it equals
            // OLS with the knockoff half moved by -δ′
            let e = lasso_augmented(model, y, *lambda, &offset)?;
            (e, *statistic)
        }
        MethodSpec::CompositeBh { .. } => {
            return Err(Error::invalid("composite BH does not use knockoffs"))
        }
    };
    let stats = statistic.compute(&estimates);
    let mut selection = knockoff_threshold(&stats, q);
    selection.target_q = ctx.q;
    Ok(MethodOutcome {
        selection,
        stats: Some(stats),
        estimates: Some(estimates),
        effective_q: q,
    })
}

fn composite_bh_method(
    x: &Matrix,
    y: &[f64],
    standardize: bool,
    ctx: &SelectionContext,
) -> Result<MethodOutcome> {
    let sigma = gram(x);
    let beta_hat = solve_spd_vec(&sigma, &x.tr_matvec(y)?)?;
    let pvalues = if standardize {
        let inv = solve_spd(&sigma, &Matrix::identity(x.cols()))?;
        beta_hat
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let se = (ctx.sigma2 * inv[(j, j)]).sqrt();
                (2.0 * normal_sf((b.abs() - ctx.boundary_delta) / se)).clamp(0.0, 1.0)
            })
            .collect()
    } else {
        composite_pvalues(&beta_hat, ctx.boundary_delta)
    };
    let selected = bh_step_up(&pvalues, ctx.q);
    let m = pvalues.len() as f64;
    let k = selected.len();
    let cutoff = k as f64 * ctx.q / m;
    let selection = SelectionOutcome {
        threshold: cutoff,
        fdp_estimate: if k == 0 { 0.0 } else { m * cutoff / k as f64 },
        selected,
        target_q: ctx.q,
    };
    Ok(MethodOutcome {
        selection,
        stats: None,
        estimates: None,
        effective_q: ctx.q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_json_round_trip() {
        let methods = vec![
            MethodSpec::s_ols_one_sided(),
            MethodSpec::s_ols_two_sided(),
            MethodSpec::frpp(1.0),
            MethodSpec::s_las1(),
            MethodSpec::s_las2(),
            MethodSpec::naive_lasso(),
            MethodSpec::CompositeBh { standardize: true },
        ];
        let json = serde_json::to_string(&methods).unwrap();
        let back: Vec<MethodSpec> = serde_json::from_str(&json).unwrap();
        assert_eq!(methods, back);
        assert!(json.contains("\"shift\":\"boundary\""));
    }

    #[test]
    fn explicit_shift_parses() {
        let m: MethodSpec = serde_json::from_str(
            r#"{"kind":"s-ols","sided":"two-sided","shift":-0.5,"statistic":"lcd","s_factor":1.8}"#,
        )
        .unwrap();
        match m {
            MethodSpec::SOls { shift, .. } => assert_eq!(shift.resolve(1.0), -0.5),
            _ => panic!(),
        }
    }

    #[test]
    fn validation_rules() {
        let bad = MethodSpec::SOls {
            sided: Sidedness::OneSided,
            shift: ShiftSpec::Named(ShiftName::Boundary),
            statistic: StatKind::SignedMax,
            s_factor: 1.8,
        };
        assert!(bad.validate().is_err());
        assert!(MethodSpec::frpp(0.0).validate().is_err());
        let bad_s = MethodSpec::Naive {
            estimator: Estimator::Ols,
            statistic: StatKind::Lcd,
            s_factor: 2.5,
        };
        assert!(bad_s.validate().is_err());
        assert!(MethodSpec::s_las2().validate().is_ok());
    }
}
