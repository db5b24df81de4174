//! Fixed-X knockoff construction.
//!
//! Given a column-normalized design `X` (n x p, n >= 2p) and a vector `s`,
//! the knockoff design is
//!
//! ```text
//! X̃ = X (I - Σ⁻¹ diag(s)) + Ũ C,    CᵀC = 2 diag(s) - diag(s) Σ⁻¹ diag(s)
//! ```
//!
//! with `Ũ` an orthonormal n x p basis orthogonal to the columns of `X`.
//! The augmented Gram matrix of `[X X̃]` then has the block form
//! `[[Σ, Σ - D], [Σ - D, Σ]]` with `D = diag(s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    gram, min_eigenvalue, orthonormal_complement, pivoted_cholesky, solve_spd, Matrix,
    SymmetricMatrix,
};

/// Tolerance on `λ_min(2Σ - diag(s))` below which `s` is rejected.
pub const S_FEASIBILITY_TOL: f64 = 1e-10;
const UNIT_NORM_TOL: f64 = 1e-8;

/// How the knockoff vector `s` is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SVariant {
    /// `s_i = min(factor * λ_min(Σ), 1)` for every `i`; `factor` in `(0, 2]`.
    Equicorrelated(f64),
    /// User supplied `s` (e.g. from an SDP solver run elsewhere).
    Explicit(Vec<f64>),
}

impl SVariant {
    pub fn resolve(&self, p: usize, lambda_min: f64) -> Result<Vec<f64>> {
        match self {
            SVariant::Equicorrelated(factor) => {
                if !(*factor > 0.0 && *factor <= 2.0) {
                    return Err(Error::invalid(format!(
                        "equicorrelated factor must lie in (0, 2], got {factor}"
                    )));
                }
                Ok(vec![(factor * lambda_min).min(1.0).max(0.0); p])
            }
            SVariant::Explicit(s) => {
                if s.len() != p {
                    return Err(Error::dims(format!(
                        "explicit s has length {}, expected {p}",
                        s.len()
                    )));
                }
                if let Some(bad) = s.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::invalid(format!("s entries must be >= 0, got {bad}")));
                }
                Ok(s.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnockoffModel {
    pub x: Matrix,
    pub x_tilde: Matrix,
    pub s: Vec<f64>,
    pub sigma: SymmetricMatrix,
    /// Gram matrix of the augmented design `[X X̃]`.
    pub g: SymmetricMatrix,
    pub lambda_min: f64,
}

impl KnockoffModel {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// `[X X̃]`.
    pub fn augmented(&self) -> Matrix {
        self.x
            .hstack(&self.x_tilde)
            .expect("x and x_tilde share the row count")
    }

    /// Feature-response products `[X X̃]ᵀ y`, length `2p`.
    pub fn products(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n() {
            return Err(Error::dims(format!(
                "response has length {}, design has {} rows",
                y.len(),
                self.n()
            )));
        }
        let mut out = self.x.tr_matvec(y)?;
        out.extend(self.x_tilde.tr_matvec(y)?);
        Ok(out)
    }

    pub fn check_ols_feasible(&self) -> bool {
        check_ols_feasible(self)
    }
}

/// Sufficient condition for an invertible augmented Gram matrix:
/// `max_i s_i < 2 λ_min(Σ)` (strict).
pub fn check_ols_feasible(m: &KnockoffModel) -> bool {
    let max_s = m.s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max_s < 2.0 * m.lambda_min
}

pub fn build_knockoffs(x: &Matrix, sv: &SVariant) -> Result<KnockoffModel> {
    let (n, p) = (x.rows(), x.cols());
    if n < 2 * p {
        return Err(Error::dims(format!(
            "knockoffs need n >= 2p, got n = {n}, p = {p}"
        )));
    }
    let sigma = gram(x);
    if let Some(j) = sigma
        .diag()
        .iter()
        .position(|d| (d - 1.0).abs() > UNIT_NORM_TOL)
    {
        return Err(Error::invalid(format!(
            "design column {j} is not unit norm (squared norm {})",
            sigma[(j, j)]
        )));
    }
    let lambda_min = min_eigenvalue(&sigma)?;
    if lambda_min <= 0.0 {
        return Err(Error::NotPositiveSemiDefinite {
            pivot: 0,
            note: format!(" (Σ = XᵀX is singular, λ_min = {lambda_min:e})"),
        });
    }
    let s = sv.resolve(p, lambda_min)?;

    let slack = SymmetricMatrix::from_upper_fn(p, |i, j| {
        let d = if i == j { s[i] } else { 0.0 };
        2.0 * sigma[(i, j)] - d
    });
    let slack_min = min_eigenvalue(&slack)?;
    if slack_min < -S_FEASIBILITY_TOL {
        return Err(Error::InfeasibleS {
            min_eigenvalue: slack_min,
        });
    }

    // M = Σ⁻¹ diag(s)
    let sigma_inv_d = solve_spd(&sigma, &Matrix::from_diag(&s))?;
    // Schur complement 2D - D Σ⁻¹ D, read from the upper triangle
    let schur = SymmetricMatrix::from_upper_fn(p, |i, j| {
        let two_d = if i == j { 2.0 * s[i] } else { 0.0 };
        two_d - s[i] * sigma_inv_d[(i, j)]
    });
    // pivoting keeps the singular boundary case s = 2 λ_min factorable
    let l = pivoted_cholesky(&schur).map_err(|e| match e {
        Error::NotPositiveSemiDefinite { pivot, .. } => Error::NotPositiveSemiDefinite {
            pivot,
            note: " (knockoff Schur complement)".into(),
        },
        other => other,
    })?;
    let c = l.transpose();
    let u = orthonormal_complement(x, p)?;

    let i_minus_m = Matrix::from_fn(p, p, |i, j| {
        (if i == j { 1.0 } else { 0.0 }) - sigma_inv_d[(i, j)]
    });
    let head = x.matmul(&i_minus_m)?;
    let tail = u.matmul(&c)?;
    let x_tilde = Matrix::from_fn(n, p, |i, j| head[(i, j)] + tail[(i, j)]);
    let g = gram(&x.hstack(&x_tilde)?);

    Ok(KnockoffModel {
        x: x.clone(),
        x_tilde,
        s,
        sigma,
        g,
        lambda_min,
    })
}
