//! Library routines checked against independent reference computations.

mod common;

use common::*;
use composite_knockoffs::estimators::{
    frpp_perturb, lasso_coordinate_descent, ols_augmented, sample_laplace, shift_estimates,
    EstimatePair,
};
use composite_knockoffs::inference::{
    composite_pvalues, knockoff_threshold, naive_fdr_bound, normal_sf, BoundInput, StatVector,
};
use composite_knockoffs::knockoff::{build_knockoffs, KnockoffModel, SVariant};
use composite_knockoffs::linalg::{
    gram, min_eigenvalue, orthonormal_complement, solve_spd, Matrix, SymmetricMatrix,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn min_eigenvalue_matches_inverse_iteration_and_determinant_scan() {
    for seed in 0..5 {
        let x = design(50, 10, 0.6, seed);
        let s = gram(&x);
        let lam = min_eigenvalue(&s).unwrap();
        let oracle = inverse_iteration_min(&s, 0.0);
        assert!((lam - oracle).abs() < 1e-8, "{lam} vs {oracle}");
        let jac = jacobi_eigenvalues(&s)[0];
        assert!((lam - jac).abs() < 1e-8, "{lam} vs jacobi {jac}");

        // det(S - t I) is positive below the spectrum and changes sign at λ_min
        let shifted = |t: f64| -> Vec<Vec<f64>> {
            (0..10)
                .map(|i| (0..10).map(|j| s[(i, j)] - if i == j { t } else { 0.0 }).collect())
                .collect()
        };
        let grid: Vec<f64> = (0..200).map(|i| lam * i as f64 / 200.0).collect();
        assert!(grid.iter().all(|&t| determinant(&shifted(t)) > 0.0));
        let below = determinant(&shifted(lam - 1e-7));
        let above = determinant(&shifted(lam + 1e-7));
        assert!(below > 0.0 && above < 0.0, "no sign change at λ_min");
    }
}

#[test]
fn spd_solve_matches_gauss_jordan_inverse() {
    let mut r = rng(11);
    for _ in 0..5 {
        let a = Matrix::from_fn(30, 20, |_, _| r.random::<f64>() - 0.5);
        let s = gram(&a);
        let inv = solve_spd(&s, &Matrix::identity(20)).unwrap();
        let rows: Vec<Vec<f64>> = (0..20).map(|i| (0..20).map(|j| s[(i, j)]).collect()).collect();
        for j in 0..20 {
            let e: Vec<f64> = (0..20).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            let col = gauss_jordan_solve(&rows, &e);
            assert!(max_abs_diff(&col, &inv.column(j)) < 1e-8);
        }
    }
}

#[test]
fn orthonormal_complement_identities() {
    let mut r = rng(3);
    let m = Matrix::from_fn(40, 10, |_, _| r.random::<f64>() - 0.5);
    let u = orthonormal_complement(&m, 10).unwrap();
    let utu = u.transpose().matmul(&u).unwrap();
    assert!(utu.sub(&Matrix::identity(10)).unwrap().max_abs() < 1e-10);
    assert!(u.transpose().matmul(&m).unwrap().max_abs() < 1e-10);
}

fn model(n: usize, p: usize, rho: f64, factor: f64, seed: u64) -> KnockoffModel {
    build_knockoffs(&design(n, p, rho, seed), &SVariant::Equicorrelated(factor)).unwrap()
}

#[test]
fn knockoff_gram_blocks() {
    for (seed, rho) in [(1, 0.0), (2, 0.5), (3, 0.9)] {
        let m = model(120, 20, rho, 1.8, seed);
        let xtx = m.x.transpose().matmul(&m.x_tilde).unwrap();
        let tt = m.x_tilde.transpose().matmul(&m.x_tilde).unwrap();
        let target = Matrix::from_fn(20, 20, |i, j| m.sigma[(i, j)] - if i == j { m.s[i] } else { 0.0 });
        assert!(xtx.sub(&target).unwrap().max_abs() < 1e-8);
        assert!(tt.sub(m.sigma.as_matrix()).unwrap().max_abs() < 1e-8);
    }
}

#[test]
fn equicorrelated_cap_example() {
    // λ_min >= 5/9 and a factor of 1.8 caps s at one, strictly below 2 λ_min
    let x = Matrix::from_fn(10, 3, |i, j| if i == j { 1.0 } else { 0.0 });
    let m = build_knockoffs(&x, &SVariant::Equicorrelated(1.8)).unwrap();
    assert_eq!(m.s, vec![1.0; 3]);
    assert!(m.check_ols_feasible());
}

#[test]
fn ols_matches_gauss_jordan_normal_equations() {
    let mut r = rng(5);
    for seed in 0..10 {
        let m = model(60, 10, 0.3, 1.0, seed);
        let y: Vec<f64> = (0..60).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
        let e = ols_augmented(&m, &y).unwrap();
        let g = to_rows(m.g.as_matrix());
        let z = m.products(&y).unwrap();
        let oracle = gauss_jordan_solve(&g, &z);
        assert!(max_abs_diff(&e.stacked(), &oracle) < 1e-8);
    }
}

#[test]
fn lasso_matches_proximal_gradient() {
    let mut r = rng(6);
    for seed in 0..5 {
        let m = model(60, 10, 0.5, 1.0, 100 + seed);
        let y: Vec<f64> = (0..60).map(|_| r.random::<f64>() * 4.0 - 2.0).collect();
        let z = m.products(&y).unwrap();
        let zero = vec![0.0; 20];
        let fit = lasso_coordinate_descent(&m.g, &z, 1.0, &zero).unwrap();
        let oracle = prox_grad_lasso(&m.g, &z, 1.0, &zero);
        let a = gram_objective(&m.g, &z, 1.0, &zero, &fit.coef);
        let b = gram_objective(&m.g, &z, 1.0, &zero, &oracle);
        assert!((a - b).abs() < 1e-7, "objective {a} vs oracle {b}");
        assert!(fit.kkt_residual <= 1e-6);
    }
}

#[test]
fn negative_shift_is_applied_to_knockoff_half() {
    let e = EstimatePair {
        theta: vec![1.0, 2.0],
        theta_prime: vec![0.5, -0.5],
        method: "x".into(),
        shift: vec![0.0; 2],
    };
    let s = shift_estimates(&e, &[-0.3, -0.3]).unwrap();
    assert_eq!(s.theta, e.theta);
    assert_eq!(s.theta_prime, vec![0.2, -0.8]);
}

#[test]
fn ols_path_equivariant_under_pair_swap() {
    let m = model(80, 8, 0.4, 1.5, 9);
    let mut r = rng(9);
    let y: Vec<f64> = (0..80).map(|_| r.random::<f64>() - 0.5).collect();
    let swap = vec![0, 3, 5];
    let base = ols_augmented(&m, &y).unwrap();
    // oracle: solve with explicitly permuted G and products
    let gs = m.g.swap_pairs(&swap);
    let mut z = m.products(&y).unwrap();
    for &i in &swap {
        z.swap(i, i + 8);
    }
    let oracle = gauss_jordan_solve(&to_rows(gs.as_matrix()), &z);
    assert!(max_abs_diff(&base.swapped(&swap).stacked(), &oracle) < 1e-10);
}

#[test]
fn laplace_noise_moments() {
    let mut r = rng(21);
    let scale = 1.0;
    let draws: Vec<f64> = (0..1_000_000).map(|_| sample_laplace(&mut r, scale)).collect();
    let mean_abs = draws.iter().map(|d| d.abs()).sum::<f64>() / draws.len() as f64;
    assert!((mean_abs - scale).abs() < 0.01 * scale, "mean |Δ| = {mean_abs}");
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!(mean.abs() < 0.01);
}

#[test]
fn frpp_scale_example() {
    // s = 0.5, δ = 1, ε = 1 gives Laplace scale 1
    let x = Matrix::from_fn(6, 2, |i, j| if i == j { 1.0 } else { 0.0 });
    let m = build_knockoffs(&x, &SVariant::Explicit(vec![0.5, 0.5])).unwrap();
    let (_, noise) = frpp_perturb(&m, &[1.0; 6], 1.0, 1.0, 3).unwrap();
    assert_eq!(noise.scales, vec![1.0; 4]);
    let (out, noise) = frpp_perturb(&m, &[1.0; 6], 1.0, 0.0, 3).unwrap();
    assert_eq!(out, m.products(&[1.0; 6]).unwrap());
    assert!(noise.delta.iter().all(|&d| d == 0.0));
}

#[test]
fn threshold_matches_exhaustive_scan() {
    let mut r = rng(12);
    for _ in 0..500 {
        let len = r.random_range(1..30);
        let w: Vec<f64> = (0..len)
            .map(|_| {
                let v = (r.random_range(-6..=6)) as f64;
                if r.random::<f64>() < 0.5 { v } else { v * r.random::<f64>() }
            })
            .collect();
        let q = [0.1, 0.2, 0.5, 1.0][r.random_range(0..4)];
        let out = knockoff_threshold(&StatVector::new(w.clone()), q);
        assert_eq!(out.threshold, brute_force_threshold(&w, q));
    }
}

#[test]
fn threshold_worked_example() {
    let out = knockoff_threshold(&StatVector::new(vec![5.0, 4.0, 3.0, -1.0]), 0.5);
    assert_eq!(out.threshold, 3.0);
    assert_eq!(out.selected, vec![0, 1, 2]);
    assert_eq!(out.fdp_estimate, 1.0 / 3.0);
    assert_eq!(brute_force_threshold(&[5.0, 4.0, 3.0, -1.0], 0.5), 3.0);
}

#[test]
fn boundary_pvalues_match_quadrature() {
    for &(b, d) in &[(0.0, 0.0), (1.3, 0.5), (-2.7, 1.0), (4.0, 0.25), (0.2, 1.0)] {
        let p = composite_pvalues(&[b], d)[0];
        let oracle = (2.0 * (1.0 - normal_cdf_quadrature(f64::abs(b) - d))).clamp(0.0, 1.0);
        assert!((p - oracle).abs() < 1e-9, "b={b}, d={d}: {p} vs {oracle}");
    }
    assert!((normal_sf(1.0) - (1.0 - normal_cdf_quadrature(1.0))).abs() < 1e-10);
}

#[test]
fn bound_tail_matches_direct_normal_monte_carlo() {
    // single null, s = 0.5, σ² = 1, δ = 0.1, β = δ
    let (s, sigma2, delta, q) = (0.5, 1.0, 0.1, 0.2);
    let input = BoundInput::worst_case(delta, sigma2, vec![s], q);
    let grid = composite_knockoffs::inference::default_eps_grid();
    let (bound, eps) = naive_fdr_bound(&input, &grid).unwrap();
    let dist = Normal::new(s * delta, (2.0 * sigma2 * s).sqrt()).unwrap();
    let mut r = rng(77);
    let reps = 1_000_000;
    let hits = (0..reps)
        .filter(|_| delta / sigma2 * dist.sample(&mut r).abs() > eps)
        .count();
    let tail = hits as f64 / reps as f64;
    let se = (tail * (1.0 - tail) / reps as f64).sqrt();
    let mc = q * eps.exp() + tail;
    assert!((bound - mc).abs() <= 3.0 * se, "bound {bound}, mc {mc}, se {se}");
}

#[test]
fn bound_tail_matches_simulated_knockoff_data() {
    // γ - γ′ taken from actual responses on a knockoff design
    let x = normalize(Matrix::from_fn(12, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0));
    let m = build_knockoffs(&x, &SVariant::Explicit(vec![0.3, 0.2])).unwrap();
    let (delta, sigma2, q) = (0.5, 1.0, 0.2);
    let beta = vec![delta, -delta];
    let input = BoundInput {
        boundary_delta: delta,
        sigma2,
        s: m.s.clone(),
        beta_null: beta.clone(),
        q,
    };
    let eps = 0.05;
    let (mc, se) = mc_tail_probability(&m.x, &m.x_tilde, &beta, &[0, 1], sigma2, delta, eps, 200_000, 5);
    let exact = input.tail_probability(eps);
    assert!((exact - mc).abs() <= 3.0 * se + 1e-12, "{exact} vs {mc} ± {se}");
}

fn normalize(m: Matrix) -> Matrix {
    composite_knockoffs::linalg::normalize_columns(&m).unwrap()
}

#[test]
fn symmetric_swap_is_an_involution() {
    let m = model(40, 5, 0.2, 1.0, 4);
    let swap = [1, 4];
    let twice: SymmetricMatrix = m.g.swap_pairs(&swap).swap_pairs(&swap);
    assert_eq!(twice, m.g);
}
