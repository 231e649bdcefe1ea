use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symcap::analysis::*;
use symcap::cone::SampledSet;
use symcap::linalg::CMatrix;
use symcap::symplectic::{BallSpec, PhasePoint, Region};

/// Flat torus `(cos u, sin u, cos v, sin v)·s` in `R^4`, on a `k × k` grid.
fn torus(k: usize, s: f64) -> SampledSet {
    let pts = (0..k * k)
        .map(|i| {
            let (u, v) = (2.0 * PI * (i % k) as f64 / k as f64, 2.0 * PI * (i / k) as f64 / k as f64);
            PhasePoint::new(2, vec![s * u.cos(), s * v.cos(), s * u.sin(), s * v.sin()]).unwrap()
        })
        .collect();
    SampledSet::from_points(2, pts).unwrap().with_fill_distance(s * PI * 2f64.sqrt() / k as f64)
}

fn cloud(seed: u64, count: usize, spread: f64) -> SampledSet {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..count).map(|_| PhasePoint::new(2, (0..4).map(|_| rng.random_range(-spread..spread)).collect()).unwrap()).collect();
    SampledSet::from_points(2, pts).unwrap()
}

/// A closed curve in `R^4` with `k` samples.
fn curve(k: usize) -> SampledSet {
    let pts = (0..k)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / k as f64;
            PhasePoint::new(2, vec![0.7 * t.cos(), 0.5 * (2.0 * t).cos(), 0.7 * t.sin(), 0.5 * (3.0 * t).sin()]).unwrap()
        })
        .collect();
    SampledSet::from_points(2, pts).unwrap()
}

fn moved(set: &SampledSet, seed: u64, shift: &[f64]) -> SampledSet {
    let u = CMatrix::haar_random(2, &mut ChaCha8Rng::seed_from_u64(seed));
    set.mapped(|x| PhasePoint::new(2, u.apply_point(x).coords().iter().zip(shift).map(|(a, b)| a + b).collect()), 1.0)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn box_dimension_is_invariant_under_rigid_motions(seed in 0u64..1000, shift in prop::collection::vec(-3.0..3.0f64, 4)) {
        let set = curve(200_000);
        let a = box_dimension(&set, 12).unwrap().slope;
        let b = box_dimension(&moved(&set, seed, &shift), 12).unwrap().slope;
        prop_assert!((a - b).abs() <= 0.05, "{a} vs {b}");
    }

    // On a surface only three octaves fit between the fill distance and the
    // extent; averaging over shifted grids removes the alignment sensitivity.
    #[test]
    fn averaged_box_dimension_of_a_torus_is_invariant(seed in 0u64..1000, shift in prop::collection::vec(-3.0..3.0f64, 4)) {
        let set = torus(300, 0.7);
        let opts = BoxCountOptions { offsets: 16, reduction: CountReduction::GeometricMean, ..Default::default() };
        let a = box_dimension_with(&set, 10, &opts).unwrap().slope;
        let b = box_dimension_with(&moved(&set, seed, &shift), 10, &opts).unwrap().slope;
        prop_assert!((a - b).abs() <= 0.05, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn containment_is_monotone_in_the_region(seed in 0u64..1000, cap in 0.5..20.0f64, grow in 1.0..3.0f64, slack in 0.0..0.1f64) {
        let set = cloud(seed, 200, 1.0);
        let small = Region::Ball(BallSpec::new(cap).unwrap());
        let large = Region::Ball(BallSpec::new(cap * grow).unwrap());
        let a = containment(&set, &small, slack).unwrap();
        let b = containment(&set, &large, slack).unwrap();
        prop_assert!(b.max_violation <= a.max_violation + 1e-12);
        prop_assert!(!a.pass || b.pass);
    }

    #[test]
    fn neighbourhood_area_is_monotone_and_subadditive(
        a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..20),
        b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..20),
        eps in 0.1..0.3f64,
        shrink in 0.5..1.0f64,
    ) {
        let pa: Vec<[f64; 2]> = a.iter().map(|&(x, y)| [x, y]).collect();
        let pb: Vec<[f64; 2]> = b.iter().map(|&(x, y)| [x, y]).collect();
        let both: Vec<[f64; 2]> = pa.iter().chain(&pb).copied().collect();
        let grid = 512;
        let area = |p: &[[f64; 2]], e: f64| planar_neighbourhood_area(p, e, grid).unwrap();
        // one grid cell along the boundary of each disc
        let h = 2.0 * (2.0 + 2.0 * eps) / grid as f64;
        let tol = |p: &[[f64; 2]], e: f64| p.len() as f64 * 2.0 * PI * e * h;
        prop_assert!(area(&both, eps * shrink) <= area(&both, eps) + tol(&both, eps));
        prop_assert!(area(&both, eps) <= area(&pa, eps) + area(&pb, eps) + tol(&both, eps));
    }

    #[test]
    fn avoiding_rotation_meets_its_margin(seed in 0u64..1000, count in 10usize..200) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..count)
            .map(|_| {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                PhasePoint::new(2, v.into_iter().map(|c| c / n).collect()).unwrap()
            })
            .collect();
        let set = SampledSet::from_points(2, pts).unwrap();
        let margin = 0.1;
        let rot = find_avoiding_rotation(&set, margin, &RotationSearch::default()).unwrap();
        prop_assert!(rot.rotation.unitarity_defect() <= 1e-10);
        let worst = set
            .points()
            .iter()
            .map(|x| {
                let y = rot.rotation.apply_point(x);
                let mut e1 = vec![0.0; 4];
                e1[0] = 1.0;
                y.coords().iter().zip(&e1).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!(worst >= margin, "{worst}");
        prop_assert!((worst - rot.distance).abs() < 1e-12);
    }
}
