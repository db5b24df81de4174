use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, run_methods_on, SimConfig, TrialData, TrialMetrics};
use crate::error::{Error, Result};
use crate::pipeline::MethodSpec;

/// The swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Amplitude(Vec<f64>),
    Rho(Vec<f64>),
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Amplitude(_) => "amplitude",
            Axis::Rho(_) => "rho",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Axis::Amplitude(v) | Axis::Rho(v) => v,
        }
    }

    /// `base` with the axis parameter set to `value`.
    pub fn apply(&self, base: &SimConfig, value: f64) -> SimConfig {
        let mut cfg = base.clone();
        match self {
            Axis::Amplitude(_) => cfg.amplitude = value,
            Axis::Rho(_) => cfg.rho = value,
        }
        cfg
    }
}

/// Aggregate of one (axis value, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis_value: f64,
    pub method: String,
    pub mean_fdr: f64,
    pub se_fdr: f64,
    pub mean_power: f64,
    pub se_power: f64,
    pub trials: usize,
    /// Frequency of [`TrialMetrics::bound_event`] for shifted methods.
    pub bound_event_rate: Option<f64>,
    pub se_bound_event: Option<f64>,
    #[serde(skip)]
    pub metrics: Vec<TrialMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis_values: Vec<f64>,
    pub methods: Vec<String>,
    /// Axis-major, then method order.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, axis_value: f64, method: &str) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.axis_value == axis_value && c.method == method)
    }
}

/// Sample mean and standard error (sample std over `√n`).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn aggregate(axis_value: f64, method: String, metrics: Vec<TrialMetrics>) -> SweepCell {
    let fdp: Vec<f64> = metrics.iter().map(|m| m.fdp).collect();
    let power: Vec<f64> = metrics.iter().map(|m| m.power).collect();
    let (mean_fdr, se_fdr) = mean_se(&fdp);
    let (mean_power, se_power) = mean_se(&power);
    let events: Option<Vec<f64>> = metrics
        .iter()
        .map(|m| m.bound_event.map(|b| if b { 1.0 } else { 0.0 }))
        .collect();
    let (bound_event_rate, se_bound_event) = match events {
        Some(ev) if !ev.is_empty() => {
            let (m, se) = mean_se(&ev);
            (Some(m), Some(se))
        }
        _ => (None, None),
    };
    SweepCell {
        axis_value,
        method,
        mean_fdr,
        se_fdr,
        mean_power,
        se_power,
        trials: metrics.len(),
        bound_event_rate,
        se_bound_event,
        metrics,
    }
}

fn validate_sweep(base: &SimConfig, axis: &Axis, methods: &[MethodSpec]) -> Result<()> {
    if axis.values().is_empty() {
        return Err(Error::invalid("sweep axis has no values"));
    }
    if methods.is_empty() {
        return Err(Error::invalid("sweep has no methods"));
    }
    for &v in axis.values() {
        axis.apply(base, v).validate_data()?;
    }
    methods.iter().try_for_each(MethodSpec::validate)
}

/// Runs every (axis value, method) cell; each cell either aggregates all
/// its trials or reports the first failing trial. All methods of a cell
/// row see the same data, and trial seeds depend only on
/// `(base.seed, axis index, trial index)`.
pub fn run_sweep_cells(
    base: &SimConfig,
    axis: &Axis,
    methods: &[MethodSpec],
) -> Result<Vec<Result<SweepCell>>> {
    validate_sweep(base, axis, methods)?;
    let mut cells = Vec::with_capacity(axis.values().len() * methods.len());
    for (ai, &value) in axis.values().iter().enumerate() {
        let cfg = axis.apply(base, value);
        let per_trial: Vec<Vec<Result<TrialMetrics>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(cfg.seed, ai, t);
                match TrialData::generate(&cfg, seed) {
                    Ok(data) => run_methods_on(&cfg, &data, methods, seed),
                    Err(e) => vec![Err(e); methods.len()],
                }
            })
            .collect();
        for (mi, method) in methods.iter().enumerate() {
            let mut metrics = Vec::with_capacity(cfg.trials);
            let mut failure = None;
            for (t, row) in per_trial.iter().enumerate() {
                match &row[mi] {
                    Ok(m) => metrics.push(m.clone()),
                    Err(e) => {
                        failure = Some(Error::Trial {
                            axis: axis.name().to_string(),
                            axis_value: value,
                            method: method.label(),
                            trial: t,
                            source: Box::new(e.clone()),
                        });
                        break;
                    }
                }
            }
            cells.push(match failure {
                Some(e) => Err(e),
                None => Ok(aggregate(value, method.label(), metrics)),
            });
        }
    }
    Ok(cells)
}

/// Like [`run_sweep_cells`] but fails on the first failing cell.
pub fn run_sweep(base: &SimConfig, axis: &Axis, methods: &[MethodSpec]) -> Result<SweepResult> {
    let cells = run_sweep_cells(base, axis, methods)?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis_name: axis.name().to_string(),
        axis_values: axis.values().to_vec(),
        methods: methods.iter().map(MethodSpec::label).collect(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simbench::run_trial;

    fn base() -> SimConfig {
        SimConfig {
            n: 80,
            p: 16,
            k: 4,
            trials: 6,
            ..SimConfig::desk(MethodSpec::s_ols_two_sided())
        }
    }

    #[test]
    fn single_cell_is_mean_of_trials() {
        let cfg = base();
        let axis = Axis::Amplitude(vec![3.0]);
        let res = run_sweep(&cfg, &axis, &[cfg.method.clone()]).unwrap();
        assert_eq!(res.cells.len(), 1);
        let cell = &res.cells[0];
        let trial_cfg = axis.apply(&cfg, 3.0);
        let fdps: Vec<f64> = (0..cfg.trials)
            .map(|t| run_trial(&trial_cfg, derive_seed(cfg.seed, 0, t)).unwrap().fdp)
            .collect();
        let mean = fdps.iter().sum::<f64>() / fdps.len() as f64;
        assert!((cell.mean_fdr - mean).abs() < 1e-15);
        assert_eq!(cell.trials, cfg.trials);
    }

    #[test]
    fn sweep_is_reproducible() {
        let cfg = base();
        let axis = Axis::Rho(vec![0.0, 0.5]);
        let methods = [MethodSpec::s_ols_two_sided(), MethodSpec::CompositeBh { standardize: false }];
        let a = run_sweep(&cfg, &axis, &methods).unwrap();
        let b = run_sweep(&cfg, &axis, &methods).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 4);
        assert_eq!(a.cells[1].method, "composite-bh");
    }

    #[test]
    fn failing_cells_carry_context() {
        // n < 2p: every knockoff trial fails, BH still runs
        let cfg = SimConfig { n: 20, ..base() };
        let axis = Axis::Amplitude(vec![2.0]);
        let methods = [MethodSpec::s_ols_two_sided(), MethodSpec::CompositeBh { standardize: false }];
        let cells = run_sweep_cells(&cfg, &axis, &methods).unwrap();
        match &cells[0] {
            Err(Error::Trial { method, trial, .. }) => {
                assert_eq!(method, "s-ols-two-sided");
                assert_eq!(*trial, 0);
            }
            other => panic!("expected trial error, got {other:?}"),
        }
        assert!(cells[1].is_ok());
        assert!(run_sweep(&cfg, &axis, &methods).is_err());
    }

    #[test]
    fn standard_error_formula() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((se - sd / 2.0).abs() < 1e-15);
        assert_eq!(mean_se(&[0.3]), (0.3, 0.0));
    }
}
