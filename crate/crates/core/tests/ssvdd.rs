mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use occkit::dataset::{generate_synthetic, BlobSpec, Cluster};
use occkit::ssvdd::{
    compute_lambda, lagrangian, lagrangian_gradient, psi, psi_gradient, train_ssvdd, update_q,
    KernelMode, SsvddParams, Variant,
};
use occkit::Decision;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct GradientCase {
    x: DMatrix<f64>,
    q: DMatrix<f64>,
    alpha: DVector<f64>,
    lambda: DVector<f64>,
}

fn gradient_case(seed: u64) -> GradientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..20);
    let dim = rng.random_range(2..8);
    let d = rng.random_range(1..=dim);
    let x = DMatrix::from_fn(n, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = DMatrix::from_fn(d, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let c = 0.3f64.max(1.0 / n as f64);
    // a feasible point of the box, some entries at each bound
    let raw = DVector::from_fn(n, |_, _| rng.random_range(-0.5..1.0f64).max(0.0));
    let alpha = project_simplex_box(&raw, c);
    let variant = [Variant::Plain, Variant::R1, Variant::R2][rng.random_range(0..3)];
    let lambda = compute_lambda(variant, &alpha, c);
    GradientCase {
        x,
        q,
        alpha,
        lambda,
    }
}

fn frobenius_relative(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-12)
}

#[test]
fn lagrangian_gradient_matches_finite_differences() {
    for seed in 0..100 {
        let case = gradient_case(seed);
        let numeric =
            finite_difference(|q| lagrangian_loops(&case.x, q, &case.alpha), &case.q, 1e-5);
        let analytic = lagrangian_gradient(&case.x, &case.q, &case.alpha);
        let rel = frobenius_relative(&analytic, &numeric);
        assert!(rel < 1e-4, "seed {seed}: relative error {rel:e}");
    }
}

#[test]
fn psi_gradient_matches_finite_differences() {
    for seed in 0..100 {
        let case = gradient_case(seed);
        let analytic = psi_gradient(&case.x, &case.q, &case.lambda);
        if case.lambda.iter().all(|&l| l == 0.0) {
            assert!(analytic.iter().all(|&g| g == 0.0));
            continue;
        }
        let numeric = finite_difference(|q| psi_trace(&case.x, q, &case.lambda), &case.q, 1e-5);
        let rel = frobenius_relative(&analytic, &numeric);
        assert!(rel < 1e-4, "seed {seed}: relative error {rel:e}");
    }
}

#[test]
fn objective_values_match_loop_and_trace_forms() {
    for seed in 0..20 {
        let case = gradient_case(seed);
        let l = lagrangian(&case.x, &case.q, &case.alpha);
        let l_ref = lagrangian_loops(&case.x, &case.q, &case.alpha);
        assert!((l - l_ref).abs() <= 1e-10 * l_ref.abs().max(1.0));
        let p = psi(&case.x, &case.q, &case.lambda);
        let p_ref = psi_trace(&case.x, &case.q, &case.lambda);
        assert!((p - p_ref).abs() <= 1e-10 * p_ref.abs().max(1.0));
    }
}

#[test]
fn plain_variant_has_no_regularizer() {
    for seed in 0..20 {
        let case = gradient_case(seed);
        let lambda = compute_lambda(Variant::Plain, &case.alpha, 0.3);
        assert!(psi_gradient(&case.x, &case.q, &lambda)
            .iter()
            .all(|&g| g == 0.0));
        let with_beta = update_q(&case.x, &case.q, &case.alpha, &lambda, 0.01, 100.0);
        let without = update_q(&case.x, &case.q, &case.alpha, &lambda, 0.01, 0.0);
        assert_eq!(with_beta, without);
    }
}

proptest! {
    #[test]
    fn zero_step_leaves_q_unchanged(seed in 0u64..1000) {
        let case = gradient_case(seed);
        let next = update_q(&case.x, &case.q, &case.alpha, &case.lambda, 0.0, 1.0);
        prop_assert_eq!(next, case.q);
    }

    #[test]
    fn lagrangian_is_nonnegative(seed in 0u64..1000) {
        // a weighted variance of the projected points
        let case = gradient_case(seed);
        prop_assert!(lagrangian(&case.x, &case.q, &case.alpha) >= -1e-10);
    }
}

fn fixture(seed: u64) -> DMatrix<f64> {
    let features = generate_synthetic(&BlobSpec {
        clusters: vec![Cluster::diagonal(
            vec![0.0; 6],
            &[0.25, 0.25, 2.0, 2.0, 2.0, 2.0],
            80,
            "t",
        )],
        seed,
    })
    .unwrap();
    features.data().clone()
}

#[test]
fn training_is_deterministic() {
    let x = fixture(3);
    for variant in [Variant::Plain, Variant::R1, Variant::R2] {
        let params = SsvddParams::new(0.1, 2, 0.01, 1.0, variant);
        let a = serde_json::to_string(&train_ssvdd(&x, &params).unwrap()).unwrap();
        let b = serde_json::to_string(&train_ssvdd(&x, &params).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn converged_model_respects_outlier_bound() {
    let x = fixture(4);
    for (variant, c) in [
        (Variant::Plain, 0.1),
        (Variant::R2, 0.2),
        (Variant::R1, 0.05),
    ] {
        let mut params = SsvddParams::new(c, 2, 0.001, 0.1, variant);
        params.max_iters = 200;
        let model = train_ssvdd(&x, &params).unwrap();
        let outside = (0..x.nrows())
            .filter(|&i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                model.classify(&row).unwrap().decision == Decision::Outlier
            })
            .count();
        assert!(
            outside as f64 <= (1.0 / c).ceil(),
            "{variant:?}: {outside} outside"
        );
    }
}

#[test]
fn nonlinear_mode_trains_and_is_deterministic() {
    let x = fixture(5);
    let mut params = SsvddParams::new(0.1, 3, 0.01, 1.0, Variant::R2);
    params.kernel_mode = KernelMode::NonlinearRbf { sigma: 2.0 };
    let a = train_ssvdd(&x, &params).unwrap();
    let b = train_ssvdd(&x, &params).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.d(), 3);
    let row: Vec<f64> = x.row(0).iter().copied().collect();
    assert!(a.classify(&row).unwrap().score.is_finite());
}
