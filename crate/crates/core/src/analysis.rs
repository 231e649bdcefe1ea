//! Measurements on sampled sets: nearest-neighbour queries, box counting,
//! containment, planar shadows and the pole-avoiding rotation search.

use std::f64::consts::PI;

use kdtree::distance::squared_euclidean;
use kdtree::KdTree;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::SampledSet;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::symplectic::{PhasePoint, Region};

/// Nearest-neighbour index over a point cloud.
pub struct PointIndex {
    tree: KdTree<f64, usize, Vec<f64>>,
    len: usize,
}

impl PointIndex {
    pub fn new(points: &[PhasePoint]) -> Self {
        let dim = points.first().map_or(1, |p| p.coords().len());
        let mut tree = KdTree::with_capacity(dim, 64);
        for (i, p) in points.iter().enumerate() {
            // coordinates are finite by construction of PhasePoint samples
            tree.add(p.coords().to_vec(), i).expect("finite coordinates");
        }
        PointIndex { tree, len: points.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Distance to and index of the nearest indexed point.
    pub fn nearest(&self, x: &[f64]) -> Option<(f64, usize)> {
        self.tree.nearest(x, 1, &squared_euclidean).ok()?.first().map(|(d2, i)| (d2.sqrt(), **i))
    }

    /// `max_{y ∈ probes} dist(y, cloud)`.
    pub fn max_nearest_distance(&self, probes: &[PhasePoint]) -> f64 {
        probes
            .par_iter()
            .map(|p| self.nearest(p.coords()).map_or(f64::INFINITY, |(d, _)| d))
            .reduce(|| 0.0, f64::max)
    }

    /// Largest distance from a point to its nearest other point, over every
    /// `stride`-th indexed point; a spacing proxy when no parametrization exists.
    pub fn max_spacing(&self, points: &[PhasePoint], stride: usize) -> f64 {
        points
            .par_iter()
            .step_by(stride.max(1))
            .map(|p| {
                self.tree
                    .nearest(p.coords(), 2, &squared_euclidean)
                    .ok()
                    .and_then(|v| v.get(1).map(|(d2, _)| d2.sqrt()))
                    .unwrap_or(0.0)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Fill distance of `set`, estimated from its own spacing when the set
/// does not carry one.
pub fn fill_distance_or_spacing(set: &SampledSet) -> f64 {
    set.fill_distance().unwrap_or_else(|| {
        let stride = (set.len() / 4000).max(1);
        PointIndex::new(set.points()).max_spacing(set.points(), stride)
    })
}

/// Box counts and their log–log regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountReport {
    pub scales: Vec<f64>,
    pub counts: Vec<f64>,
    pub slope: f64,
    /// `(ε_min, ε_max)` of the fitted scales.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub fill_distance: f64,
    /// Set when fewer than two distinct points were given.
    pub degenerate: bool,
}

/// Fitting window and grid-offset averaging for [`box_dimension_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCountOptions {
    /// Smallest fitted box size as a multiple of the fill distance.
    pub fill_factor: f64,
    /// Largest fitted box size as a fraction of the extent.
    pub max_fraction: f64,
    /// Number of shifted grids tried per scale (the first is unshifted).
    pub offsets: usize,
    pub seed: u64,
    /// Side of the level-0 box; defaults to the largest coordinate extent.
    pub base: Option<f64>,
    /// How counts from shifted grids are combined.
    pub reduction: CountReduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountReduction {
    Min,
    GeometricMean,
}

impl Default for BoxCountOptions {
    fn default() -> Self {
        BoxCountOptions { fill_factor: 2.0, max_fraction: 0.25, offsets: 1, seed: 0, base: None, reduction: CountReduction::Min }
    }
}

/// Least-squares slope, intercept and `r²` of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Number of occupied boxes of side `eps` anchored at `origin`.
pub fn count_boxes(points: &[PhasePoint], origin: &[f64], eps: f64) -> usize {
    let dim = origin.len();
    let cell = |p: &PhasePoint, k: usize| ((p.coords()[k] - origin[k]) / eps).floor() as i64;
    // pack the cell index into one u128 when every coordinate fits
    let max_index = points
        .iter()
        .map(|p| (0..dim).map(|k| cell(p, k)).max().unwrap_or(0))
        .max()
        .unwrap_or(0)
        .max(1);
    let bits = 64 - (max_index as u64).leading_zeros() as usize;
    if bits * dim <= 128 {
        let mut keys: Vec<u128> = points
            .par_iter()
            .map(|p| (0..dim).fold(0u128, |acc, k| (acc << bits) | cell(p, k).max(0) as u128))
            .collect();
        keys.par_sort_unstable();
        keys.dedup();
        return keys.len();
    }
    let mut keys: Vec<Vec<i64>> = points.par_iter().map(|p| (0..dim).map(|k| cell(p, k)).collect()).collect();
    keys.par_sort_unstable();
    keys.dedup();
    keys.len()
}

/// [`box_dimension_with`] under default options.
pub fn box_dimension(set: &SampledSet, levels: usize) -> Result<BoxCountReport> {
    box_dimension_with(set, levels, &BoxCountOptions::default())
}

/// Box-counting dimension estimate with boxes of side `extent/2^j`,
/// `j = 0..=levels`, fitted over sizes in `[fill_factor·fill, max_fraction·extent]`.
/// With several grid offsets the per-scale counts are combined by `opts.reduction`.
pub fn box_dimension_with(set: &SampledSet, levels: usize, opts: &BoxCountOptions) -> Result<BoxCountReport> {
    if levels < 4 {
        return Err(Error::InvalidArgument(format!("box counting needs at least 4 levels, got {levels}")));
    }
    if opts.offsets == 0 || !(opts.max_fraction > 0.0 && opts.max_fraction <= 1.0) || !(opts.fill_factor > 0.0) {
        return Err(Error::InvalidArgument(format!("box counting options {opts:?}")));
    }
    let pts = set.points();
    let dim = 2 * set.n();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in pts {
        for (k, x) in p.coords().iter().enumerate() {
            lo[k] = lo[k].min(*x);
            hi[k] = hi[k].max(*x);
        }
    }
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    if pts.len() < 2 || !(extent > 0.0) {
        return Ok(BoxCountReport {
            scales: vec![],
            counts: vec![],
            slope: 0.0,
            window: (0.0, 0.0),
            r_squared: 1.0,
            fill_distance: 0.0,
            degenerate: true,
        });
    }
    let fill = fill_distance_or_spacing(set);
    // a hair above the extent so the top level is one box and the far face
    // of the bounding box never opens an extra layer of boxes
    let base = opts.base.unwrap_or(extent) * (1.0 + 1e-9);
    let scales: Vec<f64> = (0..=levels).map(|j| base / 2f64.powi(j as i32)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shifts: Vec<Vec<f64>> = (0..opts.offsets)
        .map(|i| (0..dim).map(|_| if i == 0 { 0.0 } else { rng.random_range(0.0..1.0) }).collect())
        .collect();
    let counts: Vec<f64> = scales
        .iter()
        .map(|&e| {
            shifts
                .iter()
                .map(|s| {
                    let origin: Vec<f64> = lo.iter().zip(s).map(|(l, u)| l - u * e).collect();
                    count_boxes(pts, &origin, e) as f64
                })
                .collect::<Vec<f64>>()
        })
        .map(|c: Vec<f64>| match opts.reduction {
            CountReduction::Min => c.into_iter().fold(f64::INFINITY, f64::min),
            CountReduction::GeometricMean => (c.iter().map(|x| x.ln()).sum::<f64>() / c.len() as f64).exp(),
        })
        .collect();
    let top = opts.max_fraction * base * (1.0 + 1e-12);
    let bottom = opts.fill_factor * fill;
    let window: Vec<usize> = (0..scales.len()).filter(|&j| scales[j] <= top && scales[j] >= bottom).collect();
    if window.len() < 2 {
        return Err(Error::BelowResolution { epsilon: top, resolution: bottom });
    }
    let x: Vec<f64> = window.iter().map(|&j| (1.0 / scales[j]).ln()).collect();
    let y: Vec<f64> = window.iter().map(|&j| counts[j].ln()).collect();
    let (slope, _, r_squared) = linear_fit(&x, &y);
    Ok(BoxCountReport {
        window: (scales[*window.last().unwrap()], scales[window[0]]),
        scales,
        counts,
        slope,
        r_squared,
        fill_distance: fill,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub region: Region,
    /// Largest signed excess over the region boundary (≤ 0 when strictly inside).
    pub max_violation: f64,
    pub worst_index: usize,
    pub slack: f64,
    pub samples: usize,
    pub pass: bool,
}

pub fn containment(set: &SampledSet, region: &Region, slack: f64) -> Result<ContainmentReport> {
    let (max_violation, worst_index) = set
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, x)| region.violation(x).map(|v| (v, i)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    Ok(ContainmentReport {
        region: region.clone(),
        max_violation,
        worst_index,
        slack,
        samples: set.len(),
        pass: max_violation <= slack,
    })
}

/// Planar projection onto the first coordinate plane `(q₁, p₁)`.
pub fn shadow(set: &SampledSet) -> Vec<[f64; 2]> {
    set.points().iter().map(|x| [x.q()[0], x.p()[0]]).collect()
}

/// Grid-measured area of the `ε`-neighbourhood of planar points, with
/// `grid` cells across the longer side of the padded bounding box.
pub fn planar_neighbourhood_area(pts: &[[f64; 2]], epsilon: f64, grid: usize) -> Result<f64> {
    if pts.is_empty() {
        return Ok(0.0);
    }
    if !(epsilon > 0.0) || grid < 8 {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon}, grid {grid}")));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for k in 0..2 {
        lo[k] -= epsilon;
        hi[k] += epsilon;
    }
    let h = (hi[0] - lo[0]).max(hi[1] - lo[1]) / grid as f64;
    if epsilon < 2.0 * h {
        return Err(Error::BelowResolution { epsilon, resolution: 2.0 * h });
    }
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize + 1;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize + 1;
    let reach = (epsilon / h).ceil() as i64 + 1;
    let e2 = epsilon * epsilon;
    // rows are independent: each thread owns a band of the bitmap
    let marked: usize = (0..ny)
        .into_par_iter()
        .map(|iy| {
            let cy = lo[1] + (iy as f64 + 0.5) * h;
            let mut row = vec![false; nx];
            for p in pts {
                let dy = p[1] - cy;
                if dy.abs() > epsilon {
                    continue;
                }
                let half = (e2 - dy * dy).sqrt();
                let cx = ((p[0] - lo[0]) / h - 0.5).round() as i64;
                for ix in (cx - reach).max(0)..=(cx + reach).min(nx as i64 - 1) {
                    let x = lo[0] + (ix as f64 + 0.5) * h;
                    if (x - p[0]).abs() <= half {
                        row[ix as usize] = true;
                    }
                }
            }
            row.iter().filter(|b| **b).count()
        })
        .sum();
    Ok(marked as f64 * h * h)
}

/// Area of the `ε`-neighbourhood of the shadow of `set` on the first coordinate plane.
pub fn shadow_area(set: &SampledSet, epsilon: f64, grid: usize) -> Result<f64> {
    if let Some(fill) = set.fill_distance() {
        if epsilon <= fill {
            return Err(Error::BelowResolution { epsilon, resolution: fill });
        }
    }
    planar_neighbourhood_area(&shadow(set), epsilon, grid)
}

/// Analytic area of `{(q, p) ∈ D(radius) : q < c}`.
pub fn disc_slice_area(radius: f64, c: f64) -> f64 {
    if c <= -radius {
        return 0.0;
    }
    if c >= radius {
        return PI * radius * radius;
    }
    let x = c / radius;
    radius * radius * (PI - x.acos() + x * (1.0 - x * x).sqrt())
}

/// A unitary rotation keeping a sample away from the pole `e₁ = (1, 0, …, 0)`.
#[derive(Debug, Clone)]
pub struct AvoidingRotation {
    pub rotation: CMatrix,
    /// `min_x ‖Rx − e₁‖` over the samples.
    pub distance: f64,
    /// Sample maximum of the rotated `q₁` plus the fill distance.
    pub c: f64,
    pub candidates_tried: usize,
}

/// Random-search budget for [`find_avoiding_rotation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationSearch {
    pub random_candidates: usize,
    pub refinement_rounds: usize,
    pub refinement_width: usize,
    pub seed: u64,
}

impl Default for RotationSearch {
    fn default() -> Self {
        RotationSearch { random_candidates: 1024, refinement_rounds: 64, refinement_width: 16, seed: 0 }
    }
}

fn first_row_distance(points: &[PhasePoint], row: &[Complex64]) -> (f64, f64) {
    points
        .par_iter()
        .map(|x| {
            let z = x.to_complex();
            let w: Complex64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
            let n2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
            ((n2 - 2.0 * w.re + 1.0).max(0.0).sqrt(), w.re)
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)))
}

/// Searches unitary maps `R` with `min ‖Rx − e₁‖ ≥ margin` over the sample:
/// the identity first, then Haar-random candidates, then local refinement
/// of the best one by small skew-Hermitian perturbations.
pub fn find_avoiding_rotation(set: &SampledSet, margin: f64, search: &RotationSearch) -> Result<AvoidingRotation> {
    if set.is_empty() {
        return Err(Error::DegenerateSet("no samples".into()));
    }
    let n = set.n();
    let fill = set.fill_distance().unwrap_or(0.0);
    let pts = set.points();
    let finish = |rotation: CMatrix, tried: usize| {
        let (distance, qmax) = first_row_distance(pts, &rotation_row(&rotation));
        AvoidingRotation { rotation, distance, c: qmax + fill, candidates_tried: tried }
    };
    let id = CMatrix::identity(n);
    let (d0, _) = first_row_distance(pts, &rotation_row(&id));
    if d0 >= margin {
        return Ok(finish(id, 1));
    }
    let scored: Vec<(f64, usize, CMatrix)> = (0..search.random_candidates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
            rng.set_stream(i as u64 + 1);
            let u = CMatrix::haar_random(n, &mut rng);
            (first_row_distance(pts, &rotation_row(&u)).0, i, u)
        })
        .collect();
    let mut tried = 1 + scored.len();
    let (mut best_d, _, mut best) = scored
        .into_iter()
        .fold((d0, usize::MAX, CMatrix::identity(n)), |a, b| if b.0 > a.0 { b } else { a });
    let mut step = 0.2;
    for round in 0..search.refinement_rounds {
        if best_d >= margin {
            break;
        }
        let base = best.clone();
        let cand: Vec<(f64, usize, CMatrix)> = (0..search.refinement_width)
            .into_par_iter()
            .map(|j| {
                let mut rng = ChaCha8Rng::seed_from_u64(search.seed ^ 0xa5a5);
                rng.set_stream(((round * search.refinement_width + j) as u64) + 1);
                let u = base.perturbed(step, &mut rng);
                (first_row_distance(pts, &rotation_row(&u)).0, j, u)
            })
            .collect();
        tried += cand.len();
        let top = cand.into_iter().fold((f64::NEG_INFINITY, 0, base.clone()), |a, b| if b.0 > a.0 { b } else { a });
        if top.0 > best_d {
            best_d = top.0;
            best = top.2;
        } else {
            step *= 0.7;
        }
    }
    if best_d >= margin {
        Ok(finish(best, tried))
    } else {
        Err(Error::RotationSearchFailed { best: best_d, margin })
    }
}

fn rotation_row(u: &CMatrix) -> Vec<Complex64> {
    (0..u.n()).map(|j| u.get(0, j)).collect()
}

/// An `m × m` grid on a unit square in a coordinate plane of `R^4`; dimension 2.
pub fn calibration_square(m: usize) -> SampledSet {
    let pts = (0..m * m)
        .map(|k| PhasePoint::new(2, vec![(k / m) as f64 / m as f64, (k % m) as f64 / m as f64, 0.3, -0.1]).expect("finite"))
        .collect();
    SampledSet::from_points(2, pts).expect("non-empty grid").with_fill_distance(0.75 / m as f64)
}

/// `m` equispaced points on the unit circle of the `(q₁, p₁)` plane; dimension 1.
pub fn calibration_circle(m: usize) -> SampledSet {
    let pts = (0..m)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / m as f64;
            PhasePoint::new(2, vec![a.cos(), 0.0, a.sin(), 0.0]).expect("finite")
        })
        .collect();
    SampledSet::from_points(2, pts).expect("non-empty circle").with_fill_distance(PI / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{BallSpec, CylinderSpec};

    fn cloud(n: usize, pts: Vec<Vec<f64>>) -> SampledSet {
        SampledSet::from_points(n, pts.into_iter().map(|c| PhasePoint::new(n, c).unwrap()).collect()).unwrap()
    }

    #[test]
    fn fit_of_exact_line() {
        let (s, b, r2) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn calibration_dimensions() {
        let sq = box_dimension(&calibration_square(1024), 10).unwrap();
        assert!((sq.slope - 2.0).abs() < 0.05, "{sq:?}");
        let c = box_dimension(&calibration_circle(100_000), 14).unwrap();
        assert!((c.slope - 1.0).abs() < 0.1, "{c:?}");
        for w in sq.counts.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn single_point_is_degenerate() {
        let r = box_dimension(&cloud(2, vec![vec![1.0, 0.0, 0.0, 0.0]]), 6).unwrap();
        assert!(r.degenerate && r.slope == 0.0);
        assert!(box_dimension(&calibration_square(8), 3).is_err());
    }

    #[test]
    fn containment_examples() {
        let c = calibration_circle(1000);
        let r = containment(&c, &Region::Ball(BallSpec::new(PI).unwrap()), 1e-12).unwrap();
        assert!(r.pass && r.max_violation.abs() < 1e-12);
        let r = containment(&c, &Region::Ball(BallSpec::new(PI / 4.0).unwrap()), 1e-12).unwrap();
        assert!(!r.pass && (r.max_violation - 0.5).abs() < 1e-12);
        let r = containment(&c, &Region::Cylinder(CylinderSpec::new(PI).unwrap()), 0.0).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn segment_tube_area() {
        let m = 20_000;
        let pts: Vec<[f64; 2]> = (0..=m).map(|i| [i as f64 / m as f64, 0.0]).collect();
        let eps = 0.01;
        let a = planar_neighbourhood_area(&pts, eps, 4096).unwrap();
        let exact = 2.0 * eps + PI * eps * eps;
        assert!((a - exact).abs() < 0.02 * exact, "{a} vs {exact}");
        assert!(planar_neighbourhood_area(&pts, 1e-4, 256).is_err());
    }

    #[test]
    fn slice_area() {
        assert!((disc_slice_area(1.0, 0.0) - PI / 2.0).abs() < 1e-15);
        assert!((disc_slice_area(1.0, 1.0) - PI).abs() < 1e-15);
        assert_eq!(disc_slice_area(1.0, -1.0), 0.0);
        // oracle: midpoint rule over q
        let (c, m) = (0.4, 200_000);
        let num: f64 =
            (0..m).map(|i| -1.0 + (i as f64 + 0.5) * (c + 1.0) / m as f64).map(|q| 2.0 * (1.0 - q * q).sqrt()).sum::<f64>()
                * (c + 1.0)
                / m as f64;
        assert!((disc_slice_area(1.0, c) - num).abs() < 1e-8);
    }

    #[test]
    fn rotation_identity_and_failure() {
        let far = cloud(2, (0..100).map(|i| vec![-0.5, 0.0, 0.01 * i as f64, 0.0]).collect());
        let r = find_avoiding_rotation(&far, 0.3, &RotationSearch::default()).unwrap();
        assert_eq!(r.candidates_tried, 1);
        assert_eq!(r.rotation, CMatrix::identity(2));
        let set = cloud(2, crate::cone::sphere_net(4, 20_000, 1));
        let small = RotationSearch { random_candidates: 64, refinement_rounds: 8, ..Default::default() };
        assert!(matches!(find_avoiding_rotation(&set, 0.3, &small), Err(Error::RotationSearchFailed { .. })));
    }
}
