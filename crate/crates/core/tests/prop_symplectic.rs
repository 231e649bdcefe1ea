use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use symcap::symplectic::{liouville_integral, loop_area, omega0, Loop, PhasePoint};

/// Trigonometric loop `z_j(t) = Σ_k c_{jk} e^{2πikt}` in `C^n` and its exact area
/// `π Σ k |c_{jk}|²`.
fn trig_loop(coeffs: &[Vec<(i32, f64, f64)>], m: usize) -> (Loop, f64) {
    let n = coeffs.len();
    let area = PI * coeffs.iter().flatten().map(|&(k, re, im)| k as f64 * (re * re + im * im)).sum::<f64>();
    let c = coeffs.to_vec();
    let l = Loop::from_fn(n, m, move |t| {
        let z: Vec<Complex64> = c
            .iter()
            .map(|terms| terms.iter().map(|&(k, re, im)| Complex64::new(re, im) * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * t)).sum())
            .collect();
        PhasePoint::from_complex(&z)
    })
    .unwrap();
    (l, area)
}

/// One coefficient per frequency `−kmax..=kmax` in each complex coordinate.
fn coeffs(n: usize, kmax: i32) -> impl Strategy<Value = Vec<Vec<(i32, f64, f64)>>> {
    let width = (2 * kmax + 1) as usize;
    prop::collection::vec(prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), width), n).prop_map(move |rows| {
        rows.into_iter()
            .map(|row| row.into_iter().enumerate().map(|(i, (re, im))| (i as i32 - kmax, 0.5 * re, 0.5 * im)).collect())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega0_is_antisymmetric_and_bilinear(
        u in prop::collection::vec(-2.0..2.0f64, 6),
        v in prop::collection::vec(-2.0..2.0f64, 6),
        w in prop::collection::vec(-2.0..2.0f64, 6),
        a in -3.0..3.0f64,
    ) {
        let uv = omega0(&u, &v).unwrap();
        prop_assert!((uv + omega0(&v, &u).unwrap()).abs() < 1e-12);
        let au_w: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + y).collect();
        let lhs = omega0(&au_w, &v).unwrap();
        let rhs = a * uv + omega0(&w, &v).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn scaling_multiplies_area_by_square(c in coeffs(2, 3), s in 0.1..5.0f64) {
        let (l, _) = trig_loop(&c, 1024);
        let scaled = l.map_points(move |x| x.scaled(s)).unwrap();
        let (a0, a1) = (loop_area(&l).unwrap(), loop_area(&scaled).unwrap());
        prop_assert!((a1 - s * s * a0).abs() < 1e-8 * (1.0 + s * s * a0.abs()));
    }

    #[test]
    fn area_is_reparametrization_invariant(c in coeffs(2, 2), eps in -0.5..0.5f64) {
        let (l, exact) = trig_loop(&c, 4096);
        let sigma = move |t: f64| t + eps * (2.0 * PI * t).sin() / (2.0 * PI);
        let r = l.reparametrized(sigma).unwrap();
        let (a0, a1) = (loop_area(&l).unwrap(), loop_area(&r).unwrap());
        prop_assert!((a0 - exact).abs() < 1e-8);
        prop_assert!((a1 - a0).abs() < 1e-8, "{a0} vs {a1}");
    }

    #[test]
    fn quadrature_error_drops_fourfold_per_doubling(c in coeffs(2, 3)) {
        let (coarse, exact) = trig_loop(&c, 32);
        let fine = coarse.resampled(64).unwrap();
        let e0 = (liouville_integral(&coarse, 4).unwrap() - exact).abs();
        let e1 = (liouville_integral(&fine, 4).unwrap() - exact).abs();
        prop_assume!(e0 > 1e-10);
        prop_assert!(e0 / e1.max(1e-300) >= 4.0, "{e0:e} -> {e1:e}");
    }
}
