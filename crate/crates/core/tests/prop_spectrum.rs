use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use symcap::spectrum::*;

const TOL: f64 = 1e-9;

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-7 * x.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gcd_divides_both_inputs(p in 1u64..40, q in 1u64..40, unit in 0.01..10.0f64) {
        let (a, b) = (p as f64 * unit, q as f64 * unit);
        let g = real_gcd(a, b, DEFAULT_GCD_DEPTH, DEFAULT_GCD_TOL).unwrap();
        prop_assert!(g > 0.0);
        prop_assert!(near_integer(a / g) && near_integer(b / g), "{a} {b} {g}");
        prop_assert!(g >= unit * (1.0 - 1e-9));
    }

    #[test]
    fn gcd_is_homogeneous(p in 1u64..40, q in 1u64..40, unit in 0.01..10.0f64, lambda in 0.01..100.0f64) {
        let (a, b) = (p as f64 * unit, q as f64 * unit);
        let g = real_gcd(a, b, DEFAULT_GCD_DEPTH, TOL).unwrap();
        let h = real_gcd(lambda * a, lambda * b, DEFAULT_GCD_DEPTH, TOL).unwrap();
        prop_assert!((h - lambda * g).abs() < 1e-9 * lambda * g);
    }

    #[test]
    fn product_is_commutative_and_associative(
        k in prop::collection::vec(1u64..12, 3),
        unit in 0.05..5.0f64,
    ) {
        let s: Vec<ActionSpectrum> = k.iter().map(|&m| ActionSpectrum::cyclic(m as f64 * unit, Provenance::Product).unwrap()).collect();
        let ab = product_spectrum(&s[0], &s[1]);
        let ba = product_spectrum(&s[1], &s[0]);
        prop_assert!((ab.generator - ba.generator).abs() < 1e-9 * unit);
        let left = product_spectrum(&ab, &s[2]);
        let right = product_spectrum(&s[0], &product_spectrum(&s[1], &s[2]));
        prop_assert!((left.generator - right.generator).abs() < 1e-9 * unit);
        prop_assert!(!left.is_dense());
    }

    #[test]
    fn split_argmax_is_stable_under_refinement(c in 0.05..0.99f64) {
        let coarse = optimal_split(c, 1000).unwrap();
        let fine = optimal_split(c, 4000).unwrap();
        prop_assert!((coarse.r2 - fine.r2).abs() <= c / coarse.grid_points as f64);
        prop_assert!((coarse.value - PI * c / 3.0).abs() < 1e-9);
    }

    #[test]
    fn product_points_stay_in_the_unit_ball(
        n in 4usize..7,
        dd in 0usize..3,
        r in 0.1..0.999f64,
        phi in -PI..PI,
        raw in prop::collection::vec(-1.0..1.0f64, 16),
    ) {
        let d = (n + 1 + dd).min(2 * n - 3);
        let spec = CoisoProductSpec::balanced(n, d, r).unwrap();
        prop_assert!(((2.0 / 3.0) * r * r + (1.0 / 3.0) * r * r - spec.squared_norm()).abs() < 1e-12);
        prop_assert!(spec.inside_unit_ball());
        let q = &raw[..spec.m];
        let qn = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        let k = spec.sphere_dim.div_ceil(2);
        let w: Vec<Complex64> = (0..k).map(|j| Complex64::new(raw[8 + j % 8], raw[(8 + j + 3) % 16])).collect();
        let wn = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(qn > 1e-3 && wn > 1e-3);
        let q: Vec<f64> = q.iter().map(|c| c / qn).collect();
        let w: Vec<Complex64> = w.iter().map(|c| c / wn).collect();
        let x = spec.point(phi, &q, &w).unwrap();
        prop_assert_eq!(x.n(), spec.ambient_half_dimension());
        prop_assert!(x.norm() < 1.0);
        prop_assert!((x.norm() - r).abs() < 1e-12);
    }
}
