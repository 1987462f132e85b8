use std::collections::BTreeSet;

use gibbslab::catalog;
use gibbslab::funcmodel::{bspline, FunctionHandle, PiecewisePoly};
use gibbslab::gibbs::{
    bracket_second_deriv, cluster_set, gibbs_at_point, identity_lhs, identity_lhs_shifted, identity_rhs, kappa,
    nonneg_sufficient, orbit_point, overshoot, parse_point, ClusterSet, GibbsOptions, Point, Verdict,
};
use gibbslab::quasiproj::QuasiProjectionPair;
use num_rational::Ratio;
use proptest::prelude::*;

const FLEET: [&str; 8] = [
    "haar",
    "bspline:2",
    "bspline:3",
    "dual:bspline:2",
    "dual:bspline:3",
    "dual:bspline:4",
    "daubechies:2",
    "daubechies:3",
];

fn pair(name: &str) -> QuasiProjectionPair {
    catalog::pair(name, 12).unwrap()
}

fn frac(x: Ratio<i64>) -> Ratio<i64> {
    x - x.floor()
}

#[test]
fn identity_holds_across_fleet() {
    for name in FLEET {
        let p = pair(name);
        let lhs = identity_lhs(&p, 12).unwrap();
        let rhs = identity_rhs(&p).unwrap();
        assert!((lhs - rhs.re).abs() < 1e-6 && rhs.im.abs() < 1e-9, "{name}: {lhs} vs {rhs}");
    }
}

#[test]
fn bracket_matches_identity_when_dual_reproduces_lines() {
    let mut checked = 0;
    for name in FLEET {
        let p = pair(name);
        let b = bracket_second_deriv(&p).unwrap();
        if b.hypotheses_met {
            let lhs = identity_lhs(&p, 12).unwrap();
            assert!((lhs + b.value.re).abs() < 1e-6, "{name}: {lhs} vs {:?}", b.value);
            checked += 1;
        }
    }
    assert!(checked >= 3);
    let haar = bracket_second_deriv(&pair("haar")).unwrap();
    assert!(!haar.hypotheses_met);
    assert!((haar.value.re + 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn vanishing_bracket_forces_gibbs_at_origin() {
    let mut checked = 0;
    for name in FLEET {
        let p = pair(name);
        let b = bracket_second_deriv(&p).unwrap();
        if !b.hypotheses_met || b.value.norm() >= 1e-8 || !p.phi().is_continuous() {
            continue;
        }
        let rep = gibbs_at_point(&p, Point::Rational(Ratio::from_integer(0)), &GibbsOptions::default()).unwrap();
        if rep.sgn_cond_confirmed {
            assert_eq!(rep.verdict, Verdict::Gibbs, "{name}");
            checked += 1;
        }
    }
    assert!(checked >= 1);
}

#[test]
fn bspline_values() {
    let p = pair("bspline:2");
    assert!((identity_rhs(&p).unwrap().re - 1.0 / 3.0).abs() < 1e-12);
    assert!((identity_lhs(&p, 12).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    assert!((bracket_second_deriv(&p).unwrap().value.re + 1.0 / 3.0).abs() < 1e-12);
    let d3 = pair("daubechies:3");
    assert!(identity_lhs(&d3, 12).unwrap().abs() < 1e-5);
    assert!(bracket_second_deriv(&d3).unwrap().value.norm() < 1e-8);
}

#[test]
fn kappa_examples() {
    let b1: FunctionHandle = bspline(1).unwrap().into();
    let b2: FunctionHandle = bspline(2).unwrap().into();
    assert!(kappa(&b1, 1)[0].abs() < 1e-15);
    assert!((kappa(&b2, 2)[0] - 0.5).abs() < 1e-14);
    let half: FunctionHandle = PiecewisePoly::piecewise_constant(vec![0.0, 1.0, 2.0], &[0.5, 0.5]).unwrap().into();
    assert!((kappa(&half, 1)[0] + 0.5).abs() < 1e-14);
}

#[test]
fn shifted_dual_keeps_identity() {
    let b2 = bspline(2).unwrap();
    let p = QuasiProjectionPair::new(b2.clone().into(), b2.translate(1.0).into()).unwrap();
    let rhs = identity_rhs(&p).unwrap();
    let lhs = identity_lhs(&p, 12).unwrap();
    assert!((lhs - rhs.re).abs() < 1e-6, "{lhs} vs {rhs}");
    assert!((rhs.re - identity_rhs(&pair("bspline:2")).unwrap().re).abs() > 1e-3);
}

#[test]
fn daubechies_cluster_values() {
    let d3 = pair("daubechies:3");
    let opts = GibbsOptions { level: 11, ..GibbsOptions::default() };
    let rep = gibbs_at_point(&d3, parse_point("1/3").unwrap(), &opts).unwrap();
    let r13 = overshoot(&d3, 1.0 / 3.0, 11).unwrap().r;
    let r23 = overshoot(&d3, 2.0 / 3.0, 11).unwrap().r;
    assert_eq!(rep.verdict, Verdict::Gibbs);
    assert!((rep.r_x0 - r13.max(r23)).abs() < 1e-12);
    let origin = gibbs_at_point(&d3, Point::Rational(Ratio::from_integer(0)), &opts).unwrap();
    assert!(origin.r_x0 > 1.01);
    let irr = gibbs_at_point(&d3, Point::Irrational, &GibbsOptions { level: 9, density: 32, ..opts }).unwrap();
    assert_eq!(irr.verdict, Verdict::Gibbs);
}

#[test]
fn irrational_points_never_certify_absence() {
    let b2 = pair("bspline:2");
    let opts = GibbsOptions { level: 9, density: 16, ..GibbsOptions::default() };
    assert_eq!(gibbs_at_point(&b2, Point::Irrational, &opts).unwrap().verdict, Verdict::Inconclusive);
}

#[test]
fn discontinuous_generator_is_rejected_off_dyadics() {
    let haar = pair("haar");
    let err = gibbs_at_point(&haar, parse_point("1/3").unwrap(), &GibbsOptions::default()).unwrap_err();
    assert!(err.is_precondition());
    let ok = gibbs_at_point(&haar, parse_point("3/8").unwrap(), &GibbsOptions::default()).unwrap();
    assert_eq!(ok.verdict, Verdict::NoGibbs);
}

#[test]
fn nonnegativity_examples() {
    let b2 = nonneg_sufficient(&pair("bspline:2"), 10);
    assert!(b2.item_i && b2.item_ii);
    assert!(nonneg_sufficient(&pair("dual:bspline:2"), 10).item_i);
    let d3 = nonneg_sufficient(&pair("daubechies:3"), 10);
    assert!(!d3.item_i && !d3.item_ii);
}

#[test]
fn cluster_set_examples() {
    let r = |p, q| Ratio::new(p, q);
    assert_eq!(cluster_set(Point::Rational(r(3, 8))).unwrap(), ClusterSet::Finite(vec![r(0, 1)]));
    let third = cluster_set(Point::Rational(r(1, 3))).unwrap();
    let ClusterSet::Finite(v) = third else { panic!() };
    assert_eq!(v.into_iter().collect::<BTreeSet<_>>(), [r(1, 3), r(2, 3)].into_iter().collect());
    let fifth = cluster_set(Point::Rational(r(1, 5))).unwrap();
    assert_eq!(fifth, ClusterSet::Finite(vec![r(1, 5), r(2, 5), r(4, 5), r(3, 5)]));
    assert_eq!(cluster_set(Point::Irrational).unwrap(), ClusterSet::FullInterval);
}

#[test]
fn malformed_points() {
    for s in ["", "1/0", "a/3", "1/-3", "1.5"] {
        assert!(parse_point(s).is_err(), "{s:?}");
    }
    assert_eq!(parse_point("-2/4").unwrap(), Point::Rational(Ratio::new(-1, 2)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cluster_set_is_eventual_orbit(p in -200i64..200, k in 0u32..6, q in (0i64..40).prop_map(|j| 2 * j + 1)) {
        let x = Ratio::new(p, (1i64 << k) * q);
        let ClusterSet::Finite(set) = cluster_set(Point::Rational(x)).unwrap() else {
            return Err(TestCaseError::fail("finite expected"));
        };
        // oracle: iterate doubling exactly well past the preperiod
        let mut y = frac(x);
        for _ in 0..(k + 8) {
            y = frac(y * 2);
        }
        let mut orbit = BTreeSet::new();
        for _ in 0..(2 * q) {
            orbit.insert(y);
            y = frac(y * 2);
        }
        let got: BTreeSet<_> = set.iter().copied().collect();
        prop_assert_eq!(got.len(), set.len());
        prop_assert_eq!(got, orbit);
        for &s in &set {
            prop_assert!(s >= Ratio::from_integer(0) && s < Ratio::from_integer(1));
        }
    }

    #[test]
    fn orbit_point_matches_repeated_doubling(p in -500i64..500, q in 1i64..200, n in 0u64..80) {
        let x = Ratio::new(p, q);
        let mut y = frac(x);
        for _ in 0..n {
            y = frac(y * 2);
        }
        prop_assert_eq!(orbit_point(x, n), y);
    }

    #[test]
    fn overshoot_bounds(which in 0usize..6, t in 0.0f64..1.0) {
        let p = pair(FLEET[which]);
        let o = overshoot(&p, t, 9).unwrap();
        prop_assert!(o.r >= 1.0 - 1e-9 && o.l <= -1.0 + 1e-9, "{o:?}");
    }

    #[test]
    fn report_verdict_matches_thresholds(which in 1usize..8, p in 0i64..12, q in 1i64..8, tau in 1e-4f64..1e-2) {
        let pr = pair(FLEET[which]);
        let opts = GibbsOptions { tau, level: 9, density: 8 };
        let rep = gibbs_at_point(&pr, Point::Rational(Ratio::new(p, q)), &opts).unwrap();
        prop_assert!(rep.r_x0 >= 1.0 - 1e-9 && rep.l_x0 <= -1.0 + 1e-9);
        let gibbs = rep.r_x0 > 1.0 + tau || rep.l_x0 < -1.0 - tau;
        prop_assert_eq!(rep.verdict == Verdict::Gibbs, gibbs);
        prop_assert!((rep.overshoot_right - (rep.r_x0 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn shifted_pair_matches_shifted_operator(which in 0usize..8, c in -1.0f64..1.0) {
        let p = pair(FLEET[which]);
        let level = 10;
        let a = identity_lhs(&p.shifted(c).unwrap(), level).unwrap();
        let b = identity_lhs_shifted(&p, c, level).unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}
