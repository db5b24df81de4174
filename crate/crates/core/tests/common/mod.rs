//! Reference implementations used only by tests. They are deliberately
//! naive and share no code with the library algorithms they check.
#![allow(dead_code)]

use composite_knockoffs::linalg::{Matrix, SymmetricMatrix};
use composite_knockoffs::simbench::{generate_design, generate_noise};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        let d = aug[col][col];
        assert!(d.abs() > 1e-300, "singular system");
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in col..=n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    aug.iter().map(|r| r[n]).collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(s: &SymmetricMatrix) -> Vec<f64> {
    let n = s.dim();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| s[(i, j)]).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn sym_matvec(g: &SymmetricMatrix, v: &[f64]) -> Vec<f64> {
    (0..g.dim())
        .map(|i| (0..g.dim()).map(|j| g[(i, j)] * v[j]).sum())
        .collect()
}

pub fn gram_objective(g: &SymmetricMatrix, z: &[f64], lambda: f64, offset: &[f64], b: &[f64]) -> f64 {
    let v: Vec<f64> = b.iter().zip(offset).map(|(x, o)| x + o).collect();
    let gv = sym_matvec(g, &v);
    let quad: f64 = v.iter().zip(&gv).map(|(a, c)| a * c).sum();
    let lin: f64 = v.iter().zip(z).map(|(a, c)| a * c).sum();
    quad - 2.0 * lin + lambda * b.iter().map(|x| x.abs()).sum::<f64>()
}

/// FISTA on `(b+o)ᵀG(b+o) - 2zᵀ(b+o) + λ|b|₁`.
pub fn prox_grad_lasso(g: &SymmetricMatrix, z: &[f64], lambda: f64, offset: &[f64]) -> Vec<f64> {
    let n = g.dim();
    // Lipschitz constant of the gradient 2G(b+o) - 2z via power iteration
    let mut v = vec![1.0; n];
    let mut lmax = 0.0;
    for _ in 0..500 {
        let w = sym_matvec(g, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        lmax = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (2.0 * lmax * 1.01);
    let mut b = vec![0.0; n];
    let mut yk = b.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let u: Vec<f64> = yk.iter().zip(offset).map(|(x, o)| x + o).collect();
        let gu = sym_matvec(g, &u);
        let next: Vec<f64> = (0..n)
            .map(|j| soft(yk[j] - step * 2.0 * (gu[j] - z[j]), step * lambda))
            .collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let change = next
            .iter()
            .zip(&b)
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max);
        yk = (0..n)
            .map(|j| next[j] + (t - 1.0) / t_next * (next[j] - b[j]))
            .collect();
        b = next;
        t = t_next;
        if change < 1e-15 {
            break;
        }
    }
    b
}

/// Knockoff+ threshold by scanning every candidate and counting directly.
pub fn brute_force_threshold(w: &[f64], q: f64) -> f64 {
    let mut cands: Vec<f64> = w.iter().map(|v| v.abs()).filter(|&a| a > 0.0).collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let mut best = f64::INFINITY;
    for &t in &cands {
        let neg = w.iter().filter(|&&v| v <= -t).count() as f64;
        let pos = w.iter().filter(|&&v| v >= t).count() as f64;
        if (1.0 + neg) / pos.max(1.0) <= q && t < best {
            best = t;
        }
    }
    best
}

/// Monte-Carlo estimate of `P(δ/σ² max_j |γ_j - γ′_j| > eps)` from
/// simulated responses `y = Xβ + w` on the real knockoff design.
/// Returns `(estimate, standard error)`.
pub fn mc_tail_probability(
    x: &Matrix,
    x_tilde: &Matrix,
    beta: &[f64],
    nulls: &[usize],
    sigma2: f64,
    delta: f64,
    eps: f64,
    reps: usize,
    seed: u64,
) -> (f64, f64) {
    let n = x.rows();
    let mean: Vec<f64> = (0..n)
        .map(|i| (0..x.cols()).map(|j| x[(i, j)] * beta[j]).sum())
        .collect();
    let mut hits = 0usize;
    for r in 0..reps {
        let w = generate_noise(n, sigma2, seed.wrapping_add(r as u64));
        let worst = nulls
            .iter()
            .map(|&j| {
                (0..n)
                    .map(|i| (x[(i, j)] - x_tilde[(i, j)]) * (mean[i] + w[i]))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        if delta / sigma2 * worst > eps {
            hits += 1;
        }
    }
    let p = hits as f64 / reps as f64;
    (p, (p * (1.0 - p) / reps as f64).sqrt())
}

/// Random column-normalized design with AR(1) correlation.
pub fn design(n: usize, p: usize, rho: f64, seed: u64) -> Matrix {
    generate_design(n, p, rho, seed).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random subset of `0..p`.
pub fn random_subset(rng: &mut ChaCha8Rng, p: usize) -> Vec<usize> {
    (0..p).filter(|_| rng.random::<bool>()).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Smallest eigenvalue by inverse iteration with shift `shift`
/// (below the spectrum), each solve done by Gauss-Jordan.
pub fn inverse_iteration_min(s: &SymmetricMatrix, shift: f64) -> f64 {
    let n = s.dim();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| s[(i, j)] - if i == j { shift } else { 0.0 }).collect())
        .collect();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut mu = 0.0;
    for _ in 0..300 {
        let w = gauss_jordan_solve(&a, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        // Rayleigh quotient on the original matrix
        let sv = sym_matvec(s, &next);
        mu = next.iter().zip(&sv).map(|(a, b)| a * b).sum();
        v = next;
    }
    mu
}

/// `Φ(x)` by composite Simpson integration of the density on `[-12, x]`.
pub fn normal_cdf_quadrature(x: f64) -> f64 {
    if x < -12.0 {
        return 0.0;
    }
    let steps = 20_000;
    let h = (x + 12.0) / steps as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = f(-12.0) + f(x);
    for i in 1..steps {
        let t = -12.0 + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    acc * h / 3.0
}
