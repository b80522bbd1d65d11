use num_bigint::BigUint;
use proptest::prelude::*;

use qnylab::arcs::ArcUnion;
use qnylab::dimension::{block_measure, energy, frostman_exponent, BlockMeasure};
use qnylab::discrepancy::{block_discrepancy, circle_discrepancy, discrepancy, min_gap};
use qnylab::limsup::{chung_erdos_balls, hit_count, measure_profile, radii};
use qnylab::sequences::{generate, orbit_fixed, orbit_from_spec, SequenceSpec};
use qnylab::{DyadicNumber, Fixed, IndexedPoints};

const ONE: u128 = 1 << 96;

fn unit() -> impl Strategy<Value = Fixed> {
    (0..ONE).prop_map(Fixed::from_raw)
}

/// Points on a coarse grid half the time, so ties and shared endpoints show up.
fn points(max: usize) -> impl Strategy<Value = Vec<Fixed>> {
    prop_oneof![
        prop::collection::vec(unit(), 1..max),
        prop::collection::vec((0u128..64).prop_map(|k| Fixed::from_raw(k << 90)), 1..max),
    ]
}

fn radius() -> impl Strategy<Value = Fixed> {
    (1u128..ONE / 3).prop_map(Fixed::from_raw)
}

fn dyadic_y() -> impl Strategy<Value = DyadicNumber> {
    prop::collection::vec(any::<u8>(), 40).prop_map(|bytes| {
        let m = BigUint::from_bytes_le(&bytes);
        DyadicNumber::new(m, 320).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn discrepancy_lies_between_one_and_n(pts in points(200)) {
        let n = pts.len();
        let d = discrepancy(&pts, n).unwrap();
        prop_assert!(d.raw >= ONE as i128);
        prop_assert!(d.raw <= n as i128 * ONE as i128);
    }

    #[test]
    fn circle_discrepancy_is_rotation_invariant(pts in points(60), shift in unit()) {
        let n = pts.len();
        let rotated: Vec<Fixed> = pts.iter().map(|p| p.add_mod1(shift)).collect();
        prop_assert_eq!(circle_discrepancy(&pts, n).unwrap(), circle_discrepancy(&rotated, n).unwrap());
    }

    #[test]
    fn min_gap_rotation_invariant_and_pigeonhole(pts in points(200), shift in unit()) {
        prop_assume!(pts.len() >= 2);
        let n = pts.len();
        let rotated: Vec<Fixed> = pts.iter().map(|p| p.add_mod1(shift)).collect();
        let g = min_gap(&pts, n).unwrap();
        prop_assert_eq!(g, min_gap(&rotated, n).unwrap());
        prop_assert!(g.raw() * n as u128 <= ONE);
    }

    #[test]
    fn block_lemma(pts in points(200)) {
        let n = pts.len() / 2;
        prop_assume!(n >= 1);
        let b = block_discrepancy(&pts, n).unwrap().raw;
        prop_assert!(b <= discrepancy(&pts, n).unwrap().raw + discrepancy(&pts, 2 * n).unwrap().raw);
    }

    #[test]
    fn union_is_subadditive_and_monotone(centers in prop::collection::vec(unit(), 1..40), r in prop::collection::vec(radius(), 40)) {
        let radii = &r[..centers.len()];
        let mut prev = Fixed::ZERO;
        for k in 1..=centers.len() {
            let u = ArcUnion::from_balls(&centers[..k], &radii[..k]).unwrap();
            let sum: u128 = radii[..k].iter().map(|r| 2 * r.raw()).sum();
            prop_assert!(u.measure().raw() <= sum.min(ONE));
            prop_assert!(u.measure() >= prev);
            prev = u.measure();
        }
    }

    #[test]
    fn intersection_and_union_measures_add_up(a in prop::collection::vec((unit(), radius()), 1..6), b in prop::collection::vec((unit(), radius()), 1..6)) {
        let ua = ArcUnion::from_balls(&a.iter().map(|x| x.0).collect::<Vec<_>>(), &a.iter().map(|x| x.1).collect::<Vec<_>>()).unwrap();
        let ub = ArcUnion::from_balls(&b.iter().map(|x| x.0).collect::<Vec<_>>(), &b.iter().map(|x| x.1).collect::<Vec<_>>()).unwrap();
        let inter = ua.intersect_measure(&ub);
        prop_assert_eq!(inter, ua.intersection(&ub).measure());
        prop_assert_eq!(ua.union(&ub).measure().raw() + inter.raw(), ua.measure().raw() + ub.measure().raw());
    }

    #[test]
    fn chung_erdos_brackets_the_union(balls in prop::collection::vec((unit(), radius()), 1..30)) {
        let (c, r): (Vec<Fixed>, Vec<Fixed>) = balls.into_iter().unzip();
        let rep = chung_erdos_balls(&c, &r).unwrap();
        prop_assert!(rep.holds);
        prop_assert!(rep.bound <= rep.exact_union * (1.0 + 1e-12));
        prop_assert!(rep.exact_union <= rep.s.min(1.0) * (1.0 + 1e-12));
        prop_assert!(rep.c >= rep.diagonal_sq * (1.0 - 1e-12));
    }

    #[test]
    fn profile_is_monotone_and_hits_grow(y in dyadic_y(), alpha in 0.3f64..2.5, gamma in unit()) {
        let seq = generate(&SequenceSpec::squares(), 300).unwrap();
        let pts = orbit_fixed(&seq, &y, 1, 300).unwrap();
        let checkpoints = [10, 50, 120, 300];
        let profile = measure_profile(&pts, alpha, 1, &checkpoints).unwrap();
        prop_assert!(profile.windows(2).all(|w| w[0] <= w[1]));
        let hits: Vec<usize> = checkpoints.iter().map(|&n| hit_count(&pts, alpha, gamma, 1, n).unwrap()).collect();
        prop_assert!(hits.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = radii(alpha, 1, 300).iter().map(|r| 2.0 * r.to_f64()).sum();
        prop_assert!(profile[3].to_f64() <= sum.min(1.0) + 1e-15);
    }

    #[test]
    fn streamed_orbit_equals_materialized(y in dyadic_y(), m in 1usize..50, len in 0usize..150) {
        let spec = SequenceSpec::powers_of_two();
        let n = m + len;
        let seq = generate(&spec, n).unwrap();
        prop_assert_eq!(orbit_from_spec(&spec, &y, m, n).unwrap(), orbit_fixed(&seq, &y, m, n).unwrap());
    }

    #[test]
    fn mul_frac_is_exact_fractional_part(y in dyadic_y(), q in any::<u64>()) {
        let qb = BigUint::from(q);
        let got = y.mul_frac(&qb);
        let full = y.mantissa() * &qb;
        let expected = full % (BigUint::from(1u8) << 320u32);
        prop_assert_eq!(got.mantissa(), &expected);
    }

    #[test]
    fn decimal_round_trip(x in unit()) {
        prop_assert_eq!(Fixed::parse_decimal(&x.to_decimal_string()).unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn block_measure_has_unit_mass_and_bounded_density(y in dyadic_y(), n in 1usize..40, alpha in 1.0f64..3.0) {
        let seq = generate(&SequenceSpec::powers_of_two(), 2 * n).unwrap();
        let pts = orbit_fixed(&seq, &y, 1, 2 * n).unwrap();
        let bm = block_measure(&pts, alpha, n).unwrap();
        prop_assert!((bm.total_mass() - 1.0).abs() < 1e-12);
        let cap = n as f64 / bm.normalizer as f64 * ONE as f64;
        prop_assert!(bm.max_density() <= cap * (1.0 + 1e-12));
    }

    #[test]
    fn energy_nondecreasing_in_t(y in dyadic_y(), n in 1usize..16, alpha in 1.0f64..3.0, t1 in 0.05f64..0.9, dt in 0.0f64..0.09) {
        let seq = generate(&SequenceSpec::powers_of_two(), 2 * n).unwrap();
        let pts = orbit_fixed(&seq, &y, 1, 2 * n).unwrap();
        let bm = block_measure(&pts, alpha, n).unwrap();
        let (a, b) = (energy(&bm, t1).unwrap(), energy(&bm, t1 + dt).unwrap());
        prop_assert!(b >= a * (1.0 - 1e-12), "{a} > {b}");
    }

    #[test]
    fn frostman_scan_dominates_random_intervals(centers in prop::collection::vec(unit(), 1..12), r in 1u128..(1u128 << 92), s in 0.2f64..1.0, ivs in prop::collection::vec((unit(), unit()), 50)) {
        let bm = BlockMeasure::from_balls(&centers, Fixed::from_raw(r)).unwrap();
        let sup = frostman_exponent(&bm, s).unwrap().sup_ratio;
        for (a, b) in ivs {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            if a == b {
                continue;
            }
            let ratio = bm.interval_mass(a, b) / (b.to_f64() - a.to_f64()).powf(s);
            prop_assert!(ratio <= sup * (1.0 + 1e-9), "{ratio} > {sup}");
        }
    }

    #[test]
    fn indexed_points_follow_sequence_indices(y in dyadic_y(), m in 1usize..20) {
        let seq = generate(&SequenceSpec::squares(), m + 10).unwrap();
        let pts: IndexedPoints = orbit_fixed(&seq, &y, m, m + 10).unwrap();
        prop_assert_eq!(pts.start, m);
        prop_assert_eq!(pts.end(), m + 10);
    }
}
