mod common;

use proptest::prelude::*;
use suspflow::smoothing::{BumpShape, BumpSpec, SmoothedEquivalence};
use suspflow::suspension::SuspensionPoint;
use suspflow::torus::TorusPoint;

use common::*;

fn point() -> impl Strategy<Value = SuspensionPoint> {
    (any::<u64>(), any::<u64>(), 0.0..1.0f64).prop_map(|(a, b, u)| {
        let sys = trig_system();
        let x = TorusPoint::from_raw([a, b]);
        sys.normalize(x, u * sys.roof(&x))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn flow_matches_fiber_walk(p in point(), t in -20.0..20.0f64) {
        let sys = trig_system();
        let fast = sys.flow(&p, t);
        let slow = naive_flow(&sys, &p, t);
        prop_assert!(sys.section_distance(&fast, &slow) < 1e-9);
    }

    #[test]
    fn flow_stays_canonical_and_inverts(p in point(), t in -20.0..20.0f64) {
        let sys = trig_system();
        let q = sys.flow(&p, t);
        prop_assert!(q.height >= 0.0 && q.height < sys.roof(&q.base));
        prop_assert!(sys.section_distance(&sys.flow(&q, -t), &p) < 1e-9);
        prop_assert_eq!(sys.flow(&p, 0.0), p);
    }

    #[test]
    fn step_counts_add(p in point(), r in -20.0..20.0f64, t in -20.0..20.0f64) {
        let sys = trig_system();
        let mid = sys.flow(&p, r);
        let whole = sys.step_count(&p.base, p.height, r + t);
        let parts = sys.step_count(&p.base, p.height, r) + sys.step_count(&mid.base, mid.height, t);
        // a landing within rounding of a roof can be counted on either side
        let end = sys.flow(&p, r + t);
        let near_seam = end.height < 1e-9 || sys.roof(&end.base) - end.height < 1e-9;
        prop_assert!(whole == parts || near_seam);
    }

    #[test]
    fn section_distance_is_symmetric(p in point(), q in point()) {
        let sys = trig_system();
        prop_assert_eq!(sys.section_distance(&p, &q), sys.section_distance(&q, &p));
        prop_assert_eq!(sys.section_distance(&p, &p), 0.0);
    }

    #[test]
    fn birkhoff_cocycle(a in any::<u64>(), b in any::<u64>(), m in -15i64..15, n in -15i64..15) {
        let sys = trig_system();
        let c = sys.ceiling();
        let f = sys.map();
        let x = TorusPoint::from_raw([a, b]);
        let lhs = c.signed_birkhoff_sum(f, &x, m + n);
        let rhs = c.signed_birkhoff_sum(f, &x, m) + c.signed_birkhoff_sum(f, &f.iterate(&x, m), n);
        prop_assert!((lhs - rhs).abs() < 1e-11);
    }

    #[test]
    fn time_change_is_a_cocycle(p in point(), r in -10.0..10.0f64, t in -10.0..10.0f64) {
        let pair = demo_pair();
        let whole = pair.tau(&p, r + t).tau;
        let parts = pair.tau(&p, r).tau + pair.tau(&pair.source().flow(&p, r), t).tau;
        prop_assert!((whole - parts).abs() < 1e-9);
    }

    #[test]
    fn equivalence_inverts(p in point()) {
        let pair = demo_pair();
        let back = pair.h_hat_inverse(&pair.h_hat(&p)).unwrap();
        prop_assert!(pair.source().section_distance(&back, &p) < 1e-12);
    }

    #[test]
    fn smoothed_time_change(p in point(), t in -20.0..20.0f64) {
        let se = SmoothedEquivalence::new(demo_pair(), BumpShape::default());
        prop_assert!(se.verify_time_change(&p, t).unwrap() < 1e-9);
    }

    #[test]
    fn reparam_monotone(a in any::<u64>(), b in any::<u64>(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let se = SmoothedEquivalence::new(demo_pair(), BumpShape::default());
        let x = TorusPoint::from_raw([a, b]);
        let c_f = se.pair().source().roof(&x);
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        prop_assume!(hi - lo > 1e-9);
        let fiber = se.fiber(&x).unwrap();
        prop_assert!(fiber.value(lo * c_f).unwrap() < fiber.value(hi * c_f).unwrap());
    }

    #[test]
    fn bump_integral_matches(a in -5.0..5.0f64, len in 0.05..4.0f64, c in -3.0..3.0f64, delta in 0.01..1.0f64) {
        for shape in [BumpShape::Exponential, BumpShape::Plateau { delta }] {
            let spec = BumpSpec::new(a, a + len, c, shape).unwrap();
            prop_assert!((spec.integral().unwrap() - c).abs() <= 1e-10 * c.abs().max(1e-300));
            prop_assert!(spec.min_value() <= 0.0 && spec.max_value() >= 0.0);
        }
    }

    #[test]
    fn coordinates_round_trip(v in 0.0005..1.0f64, w in 0.0005..1.0f64) {
        prop_assert_eq!(TorusPoint::new(v, w).coords(), [v, w]);
    }
}
