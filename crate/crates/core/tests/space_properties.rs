mod common;

use proptest::prelude::*;
use visolve::operators::PointSampler;
use visolve::space::SpaceError;
use visolve::{duality_map, inner, ConvexSet, SpaceParams, Vector};

use common::v;

const ABS: f64 = 1e-12;
const VARIATIONAL_SLACK: f64 = 1e-10;

fn sample_sets() -> Vec<(&'static str, ConvexSet)> {
    let unit_box = ConvexSet::new_box(v(&[-1.0, -2.0, 0.0]), v(&[1.0, 2.0, 3.0])).unwrap();
    let ball = ConvexSet::ball(v(&[0.5, -0.5, 1.0]), 2.0).unwrap();
    let half = ConvexSet::halfspace(v(&[1.0, -2.0, 0.5]), 0.3).unwrap();
    let lens = ConvexSet::intersection(vec![
        ConvexSet::ball(v(&[0.0, 0.0, 0.0]), 2.0).unwrap(),
        ConvexSet::ball(v(&[1.5, 0.0, 0.0]), 2.0).unwrap(),
    ])
    .unwrap();
    let corner = ConvexSet::intersection(vec![
        ConvexSet::new_box(v(&[-1.0, -1.0, -1.0]), v(&[1.0, 1.0, 1.0])).unwrap(),
        ConvexSet::halfspace(v(&[1.0, 1.0, 1.0]), 1.5).unwrap(),
    ])
    .unwrap();
    vec![("box", unit_box), ("ball", ball), ("halfspace", half), ("lens", lens), ("box_cap", corner)]
}

/// Intersections are projected iteratively to 1e-12 per sweep, so their
/// re-projection error is a small multiple of that.
fn idempotence_tol(set: &ConvexSet) -> f64 {
    match set {
        ConvexSet::Intersection { .. } => 1e-10,
        _ => ABS,
    }
}

#[test]
fn projection_is_idempotent() {
    for (name, set) in sample_sets() {
        let mut sampler = PointSampler::new(set.dim(), 1, None);
        let tol = idempotence_tol(&set);
        for _ in 0..10_000 {
            let x = sampler.point().unwrap();
            let once = set.project(&x).unwrap();
            let twice = set.project(&once).unwrap();
            assert!(once.distance(&twice) <= tol, "{name}: {x} moved {}", once.distance(&twice));
        }
    }
}

#[test]
fn projection_is_nonexpansive() {
    for (name, set) in sample_sets() {
        let mut sampler = PointSampler::new(set.dim(), 2, None);
        let tol = idempotence_tol(&set);
        for _ in 0..10_000 {
            let (x, y) = sampler.pair().unwrap();
            let gap = set.project(&x).unwrap().distance(&set.project(&y).unwrap());
            assert!(gap <= x.distance(&y) + tol, "{name}: {x}, {y}");
        }
    }
}

#[test]
fn projection_satisfies_variational_characterization() {
    for (name, set) in sample_sets() {
        let mut outside = PointSampler::new(set.dim(), 3, None);
        let mut members = PointSampler::new(set.dim(), 4, Some(&set));
        for _ in 0..1_000 {
            let x = outside.point().unwrap();
            let c = members.point().unwrap();
            let px = set.project(&x).unwrap();
            let value = inner(&(&x - &px), &(&c - &px)).unwrap();
            assert!(value <= VARIATIONAL_SLACK, "{name}: <x - Px, c - Px> = {value}");
        }
    }
}

#[test]
fn projection_lands_in_the_set() {
    for (name, set) in sample_sets() {
        let mut sampler = PointSampler::new(set.dim(), 5, None);
        for _ in 0..1_000 {
            let px = set.project(&sampler.point().unwrap()).unwrap();
            assert!(set.contains(&px, 1e-10).unwrap(), "{name}: {px}");
        }
    }
}

#[test]
fn disjoint_intersection_is_infeasible() {
    let set = ConvexSet::intersection(vec![
        ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap(),
        ConvexSet::ball(v(&[3.0, 0.0]), 1.0).unwrap(),
    ])
    .unwrap();
    assert!(matches!(set.project(&v(&[1.5, 2.0])), Err(SpaceError::Infeasible { .. })));
}

#[test]
fn smoothness_constant_matches_forward_step_identity() {
    // |(x - l u) - (y - l w)|^2 = |x - y|^2 - 2 l <u - w, x - y> + l^2 |u - w|^2,
    // which is the two-uniformly-smooth bound with 2 K^2 = 1.
    let params = SpaceParams::hilbert(3);
    assert_eq!(params.k_squared(), 0.5);
    assert!((params.k() * params.k() - 0.5).abs() <= f64::EPSILON);
    let mut sampler = PointSampler::new(3, 6, None);
    for _ in 0..1_000 {
        let (x, y) = sampler.pair().unwrap();
        let (u, w) = sampler.pair().unwrap();
        let lambda = 0.37;
        let lhs = (&x.add_scaled(-lambda, &u) - &y.add_scaled(-lambda, &w)).norm_squared();
        let du = &u - &w;
        let dx = &x - &y;
        let rhs = dx.norm_squared() - 2.0 * lambda * inner(&du, &dx).unwrap()
            + 2.0 * params.k_squared() * lambda * lambda * du.norm_squared();
        assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }
}

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

fn any_set(dim: usize) -> impl Strategy<Value = ConvexSet> {
    let boxed = (coords(dim), prop::collection::vec(0.0f64..5.0, dim)).prop_map(|(lo, width)| {
        let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
        ConvexSet::new_box(Vector::new(lo).unwrap(), Vector::new(hi).unwrap()).unwrap()
    });
    let ball = (coords(dim), 0.1f64..5.0)
        .prop_map(|(c, r)| ConvexSet::ball(Vector::new(c).unwrap(), r).unwrap());
    let half = (coords(dim), -5.0f64..5.0)
        .prop_filter("nonzero normal", |(n, _)| n.iter().map(|e| e * e).sum::<f64>() > 1e-3)
        .prop_map(|(n, b)| ConvexSet::halfspace(Vector::new(n).unwrap(), b).unwrap());
    // A ball around a point of a box always meets the box.
    let capped = (coords(dim), 0.5f64..4.0, 0.5f64..3.0).prop_map(move |(c, half_width, r)| {
        let center = Vector::new(c).unwrap();
        let lo = center.map(|e| e - half_width);
        let hi = center.map(|e| e + half_width);
        let shifted = center.add_scaled(half_width, &Vector::basis(center.dim(), 0));
        ConvexSet::intersection(vec![ConvexSet::new_box(lo, hi).unwrap(), ConvexSet::ball(shifted, r).unwrap()])
            .unwrap()
    });
    prop_oneof![boxed, ball, half, capped]
}

fn set_and_points() -> impl Strategy<Value = (ConvexSet, Vec<f64>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|dim| (any_set(dim), coords(dim), coords(dim)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prop_projection_idempotent_and_nonexpansive((set, x, y) in set_and_points()) {
        let x = Vector::new(x).unwrap();
        let y = Vector::new(y).unwrap();
        let tol = idempotence_tol(&set);
        let px = set.project(&x).unwrap();
        let py = set.project(&y).unwrap();
        prop_assert!(set.project(&px).unwrap().distance(&px) <= tol);
        prop_assert!(px.distance(&py) <= x.distance(&y) + tol);
        prop_assert!(set.contains(&px, 1e-10).unwrap());
    }

    #[test]
    fn prop_variational_characterization((set, x, c) in set_and_points()) {
        let x = Vector::new(x).unwrap();
        let c = set.project(&Vector::new(c).unwrap()).unwrap();
        let px = set.project(&x).unwrap();
        prop_assert!(inner(&(&x - &px), &(&c - &px)).unwrap() <= VARIATIONAL_SLACK);
    }

    #[test]
    fn prop_duality_map_identities(x in (1usize..=6).prop_flat_map(coords)) {
        let x = Vector::new(x).unwrap();
        let jx = duality_map(&x);
        prop_assert_eq!(&jx, &x);
        prop_assert_eq!(inner(&x, &jx).unwrap(), x.norm_squared());
        prop_assert_eq!(jx.norm(), x.norm());
    }

    #[test]
    fn prop_inner_symmetric_bilinear(
        (x, y, z) in (1usize..=5).prop_flat_map(|d| (coords(d), coords(d), coords(d))),
        s in -3.0f64..3.0,
    ) {
        let (x, y, z) = (Vector::new(x).unwrap(), Vector::new(y).unwrap(), Vector::new(z).unwrap());
        prop_assert_eq!(inner(&x, &y).unwrap(), inner(&y, &x).unwrap());
        let lhs = inner(&x.add_scaled(s, &z), &y).unwrap();
        let rhs = inner(&x, &y).unwrap() + s * inner(&z, &y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }
}
