use proptest::prelude::*;

use entropylab::curves::{
    evolve, evolve_step, intersections, length_in_region, ClosedCurve, EvolveOptions, TubularRegion,
};
use entropylab::dynamics::{SurfaceMap, TorusPoint};

fn circle() -> impl Strategy<Value = ClosedCurve> {
    (0.0f64..1.0, 0.0f64..1.0, 0.02f64..0.15, 8usize..96)
        .prop_map(|(x, y, r, n)| ClosedCurve::round_circle([x, y], r, n).unwrap())
}

fn stadium() -> impl Strategy<Value = ClosedCurve> {
    (
        0.0f64..1.0,
        0.0f64..1.0,
        0.0f64..6.3,
        0.01f64..0.2,
        0.01f64..0.1,
    )
        .prop_map(|(x, y, a, h, r)| ClosedCurve::stadium([x, y], a, h, r, 0.02, 8).unwrap())
}

fn contractible() -> impl Strategy<Value = ClosedCurve> {
    prop_oneof![circle(), stadium()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_step_length_bound(c in contractible(), sag in 1e-5f64..1e-3) {
        let map = SurfaceMap::cat();
        let sigma = map.max_stretch().unwrap();
        let opts = EvolveOptions::with_sag(sag);
        let l1 = evolve_step(&c, &map, &opts).unwrap();
        prop_assert!(l1.length() <= sigma * c.length() + 4.0 * sag * l1.len() as f64);
    }

    #[test]
    fn enclosed_area_is_preserved(c in contractible(), k in 1usize..=10) {
        let map = SurfaceMap::cat();
        let lk = evolve(&c, &map, k, &EvolveOptions::default()).unwrap().pop().unwrap();
        let (a0, ak) = (c.enclosed_area(), lk.enclosed_area());
        prop_assert_eq!(lk.homology_class(), [0, 0]);
        prop_assert!((ak - a0).abs() <= 1e-6 * a0.abs(), "{} vs {}", ak, a0);
    }

    #[test]
    fn refinement_converges(c in contractible(), k in 1usize..=6) {
        let map = SurfaceMap::sine_shears(0.15, 0.1);
        let sag = 1e-4;
        let coarse = evolve(&c, &map, k, &EvolveOptions::with_sag(sag)).unwrap().pop().unwrap();
        let fine = evolve(&c, &map, k, &EvolveOptions::with_sag(sag / 2.0)).unwrap().pop().unwrap();
        prop_assert!((coarse.length() - fine.length()).abs() < 10.0 * sag * coarse.len() as f64);
    }

    #[test]
    fn intersections_are_antisymmetric(a in contractible(), b in contractible()) {
        let ab = intersections(&a, &b);
        let ba = intersections(&b, &a);
        if let (Ok(ab), Ok(ba)) = (ab, ba) {
            prop_assert_eq!(ab.len(), ba.len());
            prop_assert_eq!(ab.len() % 2, 0);
            for x in &ab {
                let twin = ba.iter().find(|y| y.position.distance(x.position) < 1e-9);
                prop_assert!(twin.is_some_and(|y| y.sign == -x.sign));
            }
        }
    }

    #[test]
    fn signs_alternate_for_round_pairs(a in circle(), b in circle()) {
        if let Ok(xs) = intersections(&a, &b) {
            for w in xs.windows(2) {
                prop_assert_eq!(w[0].sign, -w[1].sign);
            }
        }
    }

    #[test]
    fn region_length_is_monotone(c in contractible(), core in contractible(), r1 in 0.005f64..0.24, r2 in 0.005f64..0.24) {
        let lk = evolve(&c, &SurfaceMap::cat(), 3, &EvolveOptions::default()).unwrap().pop().unwrap();
        let (small, big) = (r1.min(r2), r1.max(r2));
        let u_small = TubularRegion::new(core.clone(), small).unwrap();
        let u_big = TubularRegion::new(core, big).unwrap();
        let (a, b) = (length_in_region(&lk, &u_small), length_in_region(&lk, &u_big));
        prop_assert!(a <= b + 1e-12);
        prop_assert!(b <= lk.length() + 1e-9);
    }

    #[test]
    fn membership_ignores_integer_translates(core in contractible(), r in 0.01f64..0.2, x in 0.0f64..1.0, y in 0.0f64..1.0, dx in -3i32..3, dy in -3i32..3) {
        let u = TubularRegion::new(core, r).unwrap();
        let p = TorusPoint::new(x, y);
        let q = TorusPoint::new(x + dx as f64, y + dy as f64);
        prop_assert_eq!(u.contains(p), u.contains(q));
    }

    #[test]
    fn curves_are_closed(c in contractible()) {
        prop_assert_eq!(c.homology_class(), [0, 0]);
        for i in 0..c.len() {
            let e = c.edge_vector(i);
            prop_assert!(e[0].hypot(e[1]) > 0.0);
        }
    }
}
