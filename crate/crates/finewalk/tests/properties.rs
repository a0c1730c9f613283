//! Randomized checks of contracts that must hold for every input, not just
//! the hand-picked cases in the unit tests.

use finewalk::domain::Domain;
use finewalk::fineboundary::wiener_series;
use finewalk::geom::norm;
use finewalk::jensen::{default_family, verify_jensen, SlackTolerance};
use finewalk::measure::{
    compare_order, sphere_sample, EmpiricalMeasure, OrderRelation, Provenance,
};
use finewalk::scene::{canonical, BallScene, PointClass, TAU_GEO};
use finewalk::wos::{estimate_measure, WalkConfig};
use proptest::prelude::*;

fn scene(index: usize) -> BallScene<f64> {
    match index {
        0 => canonical::unit_ball(3),
        1 => canonical::shell(0.5),
        2 => canonical::swiss_cheese(),
        3 => canonical::road_runner_thin(),
        _ => canonical::road_runner_fat(),
    }
}

fn point3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.6f64..1.6, 3)
}

proptest! {
    // Pure geometry; wide case counts are cheap here.
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn dilation_membership_matches_distance(
        idx in 0usize..5,
        x in point3(),
        eps in 0.01f64..0.3,
    ) {
        let sc = scene(idx);
        let d = sc.dist_to_k(&x);
        // Knife-edge points are genuinely ambiguous in floating point.
        prop_assume!((d - eps).abs() > 1e-9);
        let dom = Domain::neighborhood(&sc, eps).unwrap();
        prop_assert_eq!(dom.contains(&x), d < eps);
    }

    #[test]
    fn dilations_nest_with_margin(
        idx in 0usize..5,
        dir in point3(),
        u in 0f64..1.0,
        lo in 0.01f64..0.15,
        hi in 0.16f64..0.3,
    ) {
        let sc = scene(idx);
        // Uniform draw from a ball just inside the lo-dilation of the outer
        // sphere; only hole interiors get rejected, so the assume is cheap.
        let n = norm(&dir);
        prop_assume!(n > 0.2);
        let r = (1.0 + 0.99 * lo) * u.cbrt();
        let x: Vec<f64> = dir.iter().map(|v| v / n * r).collect();
        prop_assume!(sc.dist_to_k(&x) < lo);
        let inner = Domain::neighborhood(&sc, lo).unwrap();
        prop_assert!(inner.contains(&x));
        let outer = Domain::neighborhood(&sc, hi).unwrap();
        prop_assert!(outer.contains(&x));
        // Membership in the tighter dilation keeps the boundary of the
        // looser one at least the dilation difference away.
        prop_assert!(outer.dist_to_boundary(&x) >= (hi - lo) - 1e-9);
    }

    #[test]
    fn one_of_the_two_distances_vanishes(idx in 0usize..5, x in point3()) {
        let sc = scene(idx);
        let dk = sc.dist_to_k(&x);
        let dc = sc.dist_to_complement(&x);
        prop_assert!(dk >= 0.0 && dc >= 0.0);
        prop_assert_eq!(dk.min(dc), 0.0);
        let expected = if dk > TAU_GEO {
            PointClass::Exterior
        } else if dc > TAU_GEO {
            PointClass::Interior
        } else {
            PointClass::Boundary
        };
        prop_assert_eq!(sc.classify(&x), expected);
    }

    #[test]
    fn thinness_bracket_stays_ordered_at_accumulation_points(
        thin in proptest::bool::ANY,
        depth in 4u32..24,
    ) {
        let sc = if thin {
            canonical::road_runner_thin::<f64>()
        } else {
            canonical::road_runner_fat::<f64>()
        };
        let series = wiener_series(&sc, &[0.0, 0.0, 0.0], depth).unwrap();
        prop_assert_eq!(series.terms.len(), depth as usize);
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for t in &series.terms {
            prop_assert!(t.lower >= 0.0);
            prop_assert!(t.lower <= t.upper + 1e-15);
            lo += t.lower;
            hi += t.upper;
            prop_assert!(lo <= hi + 1e-12);
        }
        prop_assert!((lo - series.lower_sum).abs() <= 1e-12 * (1.0 + lo.abs()));
        prop_assert!((hi - series.upper_sum).abs() <= 1e-12 * (1.0 + hi.abs()));
    }

    #[test]
    fn thinness_bracket_stays_ordered_on_spheres(
        dir in point3(),
        depth in 4u32..16,
    ) {
        let n = norm(&dir);
        prop_assume!(n > 0.2);
        let x: Vec<f64> = dir.iter().map(|v| v / n).collect();
        let sc: BallScene<f64> = canonical::unit_ball(3);
        let series = wiener_series(&sc, &x, depth).unwrap();
        for t in &series.terms {
            prop_assert!(t.lower >= 0.0 && t.lower <= t.upper + 1e-15);
        }
        prop_assert!(series.lower_sum <= series.upper_sum + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_comparison_is_antisymmetric(
        ca in prop::collection::vec(-0.3f64..0.3, 3),
        cb in prop::collection::vec(-0.3f64..0.3, 3),
        ra in 0.05f64..0.6,
        rb in 0.05f64..0.6,
        na in 20usize..120,
        nb in 20usize..120,
        sa in 0u64..1000,
        sb in 0u64..1000,
    ) {
        let sc: BallScene<f64> = canonical::unit_ball(3);
        let family = default_family(&sc, 2);
        let mu = sphere_sample(&ca, ra, na, sa);
        let nu = sphere_sample(&cb, rb, nb, sb);
        let ab = compare_order(&mu, &nu, &family, None).unwrap();
        let ba = compare_order(&nu, &mu, &family, None).unwrap();
        let expected = match ab.relation {
            OrderRelation::DominatesUpTo(t) => OrderRelation::DominatedByUpTo(t),
            OrderRelation::DominatedByUpTo(t) => OrderRelation::DominatesUpTo(t),
            other => other,
        };
        prop_assert_eq!(ba.relation, expected);
    }

    #[test]
    fn weight_validation_brackets_the_tolerance(
        raw in prop::collection::vec(0.01f64..2.0, 1..200),
        bump in 1e-9f64..1e-6,
        shrink in proptest::bool::ANY,
        neg_idx in any::<prop::sample::Index>(),
    ) {
        let support: Vec<Vec<f64>> =
            (0..raw.len()).map(|i| vec![i as f64, 0.0, 0.0]).collect();
        let bc = vec![0.0; 3];
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let tag = Provenance::tagged("property");
        prop_assert!(EmpiricalMeasure::new(
            support.clone(), weights.clone(), bc.clone(), tag.clone()
        ).is_ok());

        // Off by more than the normalization tolerance: rejected.
        let factor = if shrink { 1.0 - bump } else { 1.0 + bump };
        let off: Vec<f64> = weights.iter().map(|w| w * factor).collect();
        prop_assert!(EmpiricalMeasure::new(
            support.clone(), off, bc.clone(), tag.clone()
        ).is_err());

        // Any negative weight: rejected.
        let mut bad = weights;
        let i = neg_idx.index(bad.len());
        bad[i] = -bad[i];
        prop_assert!(EmpiricalMeasure::new(support, bad, bc, tag).is_err());
    }

    #[test]
    fn dirac_at_the_barycenter_has_zero_slack(
        idx in 0usize..3,
        x in prop::collection::vec(-0.9f64..0.9, 3),
        degree in 1u32..3,
    ) {
        let sc = scene(idx);
        prop_assume!(sc.dist_to_complement(&x) > 0.05);
        let family = default_family(&sc, degree);
        let mu = EmpiricalMeasure::dirac(x.clone());
        let report = verify_jensen(&mu, &x, &family, &SlackTolerance::default()).unwrap();
        prop_assert!(report.pass);
        for m in &report.members {
            prop_assert_eq!(m.slack, 0.0);
        }
    }
}

proptest! {
    // Each case runs a few hundred walks; keep the count modest.
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn exit_measure_is_seed_deterministic_and_linear(
        seed in 0u64..10_000,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        zx in -0.5f64..0.5,
        zy in -0.5f64..0.5,
    ) {
        let sc: BallScene<f64> = canonical::unit_ball(3);
        let dom = Domain::neighborhood(&sc, 0.05).unwrap();
        let z = vec![zx, zy, 0.1];
        let cfg = WalkConfig::new(seed).with_samples(256);
        let m1 = estimate_measure(&dom, &z, &cfg).unwrap();
        let m2 = estimate_measure(&dom, &z, &cfg).unwrap();
        prop_assert_eq!(m1.support(), m2.support());
        prop_assert_eq!(m1.weights(), m2.weights());

        // Identical exits make the boundary integral exactly linear, up to
        // the rounding of the final weighted sums.
        let f = |x: &[f64]| x[0];
        let g = |x: &[f64]| x[0] * x[0] + x[2];
        let combo = m1.integrate("combo", |x| a * f(x) + b * g(x)).unwrap();
        let split =
            a * m1.integrate("f", f).unwrap() + b * m1.integrate("g", g).unwrap();
        prop_assert!((combo - split).abs() <= 1e-12 * (1.0 + combo.abs().max(split.abs())));
    }
}
