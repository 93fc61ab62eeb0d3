//! Solver pieces checked against independently computed values.

mod common;

use common::{penalty_ref, prox_scalar_by_search, random_unit, rng};
use mvie_core::hull::HPolytope;
use mvie_core::mvie::{
    check_john, objective, objective_and_grad, prox_logdet, solve_mvie, solve_mvie_high_accuracy,
    Ellipsoid, FpgmConfig,
};
use mvie_core::numerics::{eig_sym, DenseMatrix};
use mvie_core::recovery::find_contacts;
use rand::Rng;

fn random_symmetric(d: usize, r: &mut impl Rng, scale: f64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = r.random_range(-scale..scale);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

#[test]
fn prox_matches_scalar_search() {
    let mut r = rng(7);
    for case in 0..200 {
        let d = 1 + case % 4;
        let v = random_symmetric(d, &mut r, 3.0);
        let t = r.random_range(0.01..2.0);
        let rho = 10f64.powf(r.random_range(0.0..3.0));
        let cfg = FpgmConfig {
            rho,
            eps: 1e-8,
            ..FpgmConfig::default()
        };
        let out = prox_logdet(&v, t, &cfg).unwrap();
        let lambdas = eig_sym(&v).unwrap().eigenvalues;
        let mut got = eig_sym(&out.w).unwrap().eigenvalues;
        got.sort_by(|a, b| b.total_cmp(a));
        for (l, g) in lambdas.iter().zip(&got) {
            let want = prox_scalar_by_search(*l, t / rho, cfg.eps);
            assert!((g - want).abs() <= 1e-6, "case {case}: lambda {l} got {g} want {want}");
        }
    }
}

#[test]
fn prox_worked_examples() {
    // t/ρ = 2
    let cfg = FpgmConfig {
        rho: 1.0,
        eps: 1e-8,
        ..FpgmConfig::default()
    };
    let out = prox_logdet(&DenseMatrix::from_diag(&[3.0, -1.0]), 2.0, &cfg).unwrap();
    assert!((out.w[(0, 0)] - (3.0 + 17f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!((out.w[(1, 1)] - 1.0).abs() < 1e-12);
    assert!(out.w[(0, 1)].abs() < 1e-12);
    let out = prox_logdet(&DenseMatrix::zeros(3, 3), 1.0, &cfg).unwrap();
    assert!(out.w.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-12);
}

#[test]
fn penalty_matches_direct_sum_and_gradient_matches_differences() {
    let mut r = rng(99);
    let cfg = FpgmConfig::default();
    let delta = 1e-6;
    for case in 0..100 {
        let d = 2 + case % 3;
        let facets: Vec<(Vec<f64>, f64)> = (0..(3 * d + 2))
            .map(|_| (random_unit(d, &mut r), r.random_range(0.2..1.5)))
            .collect();
        let poly = HPolytope::from_halfspaces(d, &facets).unwrap();
        let w = random_symmetric(d, &mut r, 1.0);
        let y: Vec<f64> = (0..d).map(|_| r.random_range(-0.5..0.5)).collect();

        let eval = objective_and_grad(&w, &y, &poly, &cfg).unwrap();
        let direct = penalty_ref(&rows_of(&w), &y, &facets, cfg.eps);
        assert!((eval.value - direct).abs() <= 1e-12 * direct.max(1.0));
        assert_eq!(objective(&w, &y, &poly, &cfg), eval.value);

        let dw = random_symmetric(d, &mut r, 1.0);
        let dy: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let shifted = |s: f64| {
            let ws = w.add(&dw.scale(s)).unwrap();
            let ys: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + s * b).collect();
            penalty_ref(&rows_of(&ws), &ys, &facets, cfg.eps)
        };
        let fd = (shifted(delta) - shifted(-delta)) / (2.0 * delta);
        let analytic: f64 = eval
            .grad_w
            .as_slice()
            .iter()
            .zip(dw.as_slice())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + eval.grad_y.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>();
        let rel = (fd - analytic).abs() / analytic.abs().max(1e-8);
        assert!(rel <= 1e-4, "case {case}: fd {fd} analytic {analytic}");
        assert!(eval.grad_w.asymmetry() == 0.0);
    }
}

/// Rows of a semi-unitary `C` (N×(N−1)) with `Cᵀ1 = 0`: the reduced unit simplex.
fn reduced_unit_simplex_n3() -> Vec<Vec<f64>> {
    let (a, b) = (2f64.sqrt(), 6f64.sqrt());
    vec![
        vec![1.0 / a, 1.0 / b],
        vec![-1.0 / a, 1.0 / b],
        vec![0.0, -2.0 / b],
    ]
}

#[test]
fn reduced_unit_simplex_gives_inscribed_ball() {
    let pts = reduced_unit_simplex_n3();
    let poly = mvie_core::hull::enumerate_facets(&pts).unwrap();
    assert_eq!(poly.num_facets(), 3);
    let (ell, _) = solve_mvie_high_accuracy(&poly, &FpgmConfig::default(), None).unwrap();
    let beta = 1.0 / 6f64.sqrt();
    assert!(ell.f.sub(&DenseMatrix::identity(2).scale(beta)).unwrap().max_abs() < 1e-4);
    assert!(ell.c.iter().all(|c| c.abs() < 1e-4));

    // contacts are the reduced facet midpoints q′ᵢ = −Cᵀeᵢ/(N−1)
    let found = find_contacts(&ell, &poly, 1e-5).unwrap();
    assert_eq!(found.points.len(), 3);
    for p in &pts {
        let q: Vec<f64> = p.iter().map(|v| -v / 2.0).collect();
        let hit = found
            .points
            .iter()
            .any(|c| c.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-4));
        assert!(hit, "no contact near {q:?}");
    }
}

#[test]
fn john_weights_of_reduced_simplex() {
    let qs: Vec<Vec<f64>> = reduced_unit_simplex_n3()
        .iter()
        .map(|p| p.iter().map(|v| -v / 2.0).collect())
        .collect();
    // unnormalized coordinates uᵢ = q′ᵢ with λᵢ = (N−1)²
    let identity = Ellipsoid {
        f: DenseMatrix::identity(2),
        c: vec![0.0, 0.0],
    };
    let cert = check_john(&identity, &qs, Some(&[4.0; 3])).unwrap();
    assert!(cert.residual <= 1e-10, "{cert:?}");
    // ball coordinates uᵢ = q′ᵢ/β carry weights (N−1)/N
    let ball = Ellipsoid {
        f: DenseMatrix::identity(2).scale(1.0 / 6f64.sqrt()),
        c: vec![0.0, 0.0],
    };
    let cert = check_john(&ball, &qs, Some(&[2.0 / 3.0; 3])).unwrap();
    assert!(cert.residual <= 1e-10, "{cert:?}");
    let fitted = check_john(&ball, &qs, None).unwrap();
    assert!(fitted.residual <= 1e-10);
    for w in &fitted.weights {
        assert!((w - 2.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn solver_trace_is_monotone_and_output_symmetric() {
    let mut r = rng(5);
    for case in 0..10 {
        let d = 2 + case % 3;
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let poly = mvie_core::hull::enumerate_facets(&pts).unwrap();
        let (ell, diag) = solve_mvie(&poly, &FpgmConfig::default(), None).unwrap();
        assert!(diag.objective_trace.iter().all(|v| v.is_finite()));
        assert!(diag.objective_trace.windows(2).all(|w| w[1] <= w[0]), "case {case}");
        assert!(ell.f.asymmetry() <= 1e-12 * ell.f.frobenius_norm());
        let lmin = *eig_sym(&ell.f).unwrap().eigenvalues.last().unwrap();
        assert!(lmin >= FpgmConfig::default().eps);
    }
}

#[test]
fn high_accuracy_solution_is_nearly_feasible() {
    let mut r = rng(6);
    for case in 0..5 {
        let d = 2 + case % 2;
        let pts: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let poly = mvie_core::hull::enumerate_facets(&pts).unwrap();
        let (ell, _) = solve_mvie_high_accuracy(&poly, &FpgmConfig::default(), None).unwrap();
        let diam = 2.0 * (d as f64).sqrt();
        assert!(ell.max_violation(&poly) <= 1e-4 * diam, "case {case}: {}", ell.max_violation(&poly));
    }
}
