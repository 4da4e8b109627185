mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use visolve::operators::{check_forward_step_factor, random_certified_affine, PointSampler, VERIFY_TOL};
use visolve::{
    certify_affine, check_cocoercive, check_expansive, check_lipschitz, expansivity_constant, forward_step, inner,
    nonexpansive_factor, CertifiedOperator, SpaceParams, Vector,
};

const K_SQUARED: f64 = 0.5;

fn lambdas_inside(op: &CertifiedOperator, count: usize) -> Vec<f64> {
    let window = op.step_window(K_SQUARED);
    (1..=count).map(|i| window * i as f64 / (count + 1) as f64).collect()
}

#[test]
fn certified_operators_pass_every_verifier() {
    for seed in 100..110 {
        let op = random_certified_affine(1 + (seed as usize % 5), seed);
        for (name, report) in [
            ("cocoercive", check_cocoercive(&op, 10_000, seed)),
            ("lipschitz", check_lipschitz(&op, 10_000, seed)),
            ("expansive", check_expansive(&op, 10_000, seed)),
        ] {
            assert!(report.passed, "seed {seed} {name}: {report:?}");
            assert!(report.witness.is_none());
        }
    }
}

#[test]
fn forward_step_factor_bound_holds_inside_window() {
    for seed in 200..205 {
        let op = random_certified_affine(1 + (seed as usize % 5), seed);
        for lambda in lambdas_inside(&op, 5) {
            let factor = nonexpansive_factor(&op, lambda, K_SQUARED);
            assert!(factor < 1.0, "seed {seed}, lambda {lambda}: factor {factor}");
            let report = check_forward_step_factor(&op, lambda, K_SQUARED, 10_000, seed);
            assert!(report.passed, "seed {seed}, lambda {lambda}: {report:?}");
        }
    }
}

#[test]
fn expansivity_constant_is_conservative() {
    for seed in 300..305 {
        let op = random_certified_affine(1 + (seed as usize % 5), seed);
        let mut sampler = PointSampler::new(op.dim(), seed, None);
        let min_ratio = (0..5_000)
            .map(|_| {
                let (x, y) = sampler.pair().unwrap();
                op.apply(&x).distance(&op.apply(&y)) / x.distance(&y)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(expansivity_constant(&op) <= min_ratio + VERIFY_TOL, "seed {seed}");
    }
}

#[test]
fn cauchy_schwarz_chain_holds_samplewise() {
    for seed in 400..405 {
        let op = random_certified_affine(1 + (seed as usize % 5), seed);
        let alpha = expansivity_constant(&op);
        assert!(alpha > 0.0);
        let mut sampler = PointSampler::new(op.dim(), seed, None);
        for _ in 0..5_000 {
            let (x, y) = sampler.pair().unwrap();
            let diff = &x - &y;
            let pairing = inner(&(&op.apply(&x) - &op.apply(&y)), &diff).unwrap();
            let lower = alpha * diff.norm_squared();
            assert!(pairing >= lower - VERIFY_TOL * (1.0 + diff.norm_squared()), "{pairing} < {lower}");
            assert!(lower >= 0.0);
        }
    }
}

#[test]
fn forged_lipschitz_is_caught_along_the_steep_axis() {
    let op = certify_affine(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]), Vector::zeros(2), 0.05).unwrap();
    let forged = op.with_declared_constants(None, Some(2.5)).unwrap();
    let report = check_lipschitz(&forged, 10_000, 7);
    assert!(!report.passed);
    let (x, y) = report.witness.expect("failing check keeps a witness");
    let diff = &x - &y;
    // Ratio above 2.5 needs most of the displacement on the second axis.
    assert!(diff[1].abs() > diff[0].abs(), "witness direction {diff}");
    assert!(forged.apply(&x).distance(&forged.apply(&y)) > 2.5 * x.distance(&y));
}

#[test]
fn forged_cocoercivity_is_caught_with_a_witness() {
    let op = certify_affine(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]), Vector::zeros(2), 0.05).unwrap();
    let forged = op.with_declared_constants(Some(5.0), None).unwrap();
    let report = check_cocoercive(&forged, 10_000, 7);
    assert!(!report.passed);
    let (x, y) = report.witness.expect("failing check keeps a witness");
    let diff = &x - &y;
    let image = &forged.apply(&x) - &forged.apply(&y);
    let margin = inner(&image, &diff).unwrap() + 0.05 * image.norm_squared() - 5.0 * diff.norm_squared();
    assert!(margin < 0.0);
}

#[test]
fn hilbert_space_fixes_smoothness_constant() {
    assert_eq!(SpaceParams::hilbert(4).k_squared(), K_SQUARED);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop_random_certified_operators_verify(seed in 0u64..10_000, dim in 1usize..=5) {
        let op = random_certified_affine(dim, seed);
        prop_assert!(op.d() > op.c() * op.lipschitz().powi(2));
        prop_assert!(check_cocoercive(&op, 1_000, seed).passed);
        prop_assert!(check_lipschitz(&op, 1_000, seed).passed);
        prop_assert!(check_expansive(&op, 1_000, seed).passed);
    }

    #[test]
    fn prop_forward_step_factor_bound(seed in 0u64..10_000, dim in 1usize..=5, theta in 0.01f64..0.99) {
        let op = random_certified_affine(dim, seed);
        let lambda = theta * op.step_window(K_SQUARED);
        let factor = nonexpansive_factor(&op, lambda, K_SQUARED);
        prop_assert!(factor < 1.0);
        let mut sampler = PointSampler::new(dim, seed, None);
        for _ in 0..200 {
            let (x, y) = sampler.pair().unwrap();
            let lhs = forward_step(&op, lambda, &x).distance(&forward_step(&op, lambda, &y));
            prop_assert!(lhs <= factor * x.distance(&y) + VERIFY_TOL);
        }
    }
}
