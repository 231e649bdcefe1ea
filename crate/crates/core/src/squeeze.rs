//! Symplectic embeddings of sampled sets into the cylinder `Z^{2n}(a)`.
//!
//! Both routes build a planar area-preserving map `φ` on a neighbourhood of
//! the `(q₁, p₁)` shadow and extend it by the identity:
//!
//! * **shadow**: the shadow fits in a thin rotated rectangle of area `< a`;
//!   `φ` is the rotation followed by [`volume_embed_map`] of the rectangle.
//! * **slice**: the set lies in the closed unit ball and a unitary map keeps
//!   it away from `(1, 0, …, 0)`. The rotated shadow then sits in the disc
//!   slice `{q < c}` of area `< π`, which is straightened onto a rectangle
//!   `(q, p) ↦ (A(q), p / h(q))` with `A' = h` before the disc embedding.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    disc_slice_area, fill_distance_or_spacing, find_avoiding_rotation, shadow, shadow_area, RotationSearch,
};
use crate::cone::SampledSet;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::moser::{
    compose, volume_embed_map, Affine, EmbedOptions, GridMap2D, JacobianCertificate, PlanarDomain, PlanarMap,
    SharedMap, M2, P2,
};
use crate::symplectic::{symplecticity_defect, PhasePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqueezeRoute {
    /// Shadow first, then the slice construction.
    Auto,
    Shadow,
    Slice,
}

#[derive(Debug, Clone, Serialize)]
pub struct SqueezeOptions {
    pub route: SqueezeRoute,
    /// Poisson grid and flow settings of the planar embedding.
    pub embed: EmbedOptions,
    /// Grid used to certify the planar Jacobian.
    pub verify_grid: usize,
    pub probes: usize,
    pub fd_step: f64,
    pub defect_tolerance: f64,
    /// Neighbourhood radius of the shadow; derived from the sampling when absent.
    pub epsilon: Option<f64>,
    pub shadow_grid: usize,
    /// Required distance between the rotated set and `(1, 0, …, 0)`.
    pub pole_margin: f64,
    pub search: RotationSearch,
    pub seed: u64,
}

impl Default for SqueezeOptions {
    fn default() -> Self {
        SqueezeOptions {
            route: SqueezeRoute::Auto,
            embed: EmbedOptions { grid: 2048, ..EmbedOptions::default() },
            verify_grid: 128,
            probes: 1000,
            fd_step: 1e-5,
            defect_tolerance: 1e-5,
            epsilon: None,
            shadow_grid: 1024,
            pole_margin: 0.1,
            search: RotationSearch::default(),
            seed: 0,
        }
    }
}

/// Construction data of the route that was taken.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "route", rename_all = "lowercase")]
pub enum RouteTaken {
    Shadow {
        epsilon: f64,
        shadow_area: f64,
        rectangle_area: f64,
        angle: f64,
    },
    Slice {
        c: f64,
        radius: f64,
        slice_area: f64,
        pole_distance: f64,
        rotation_candidates: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SqueezeCertificate {
    pub capacity: f64,
    pub route: RouteTaken,
    /// Area of the planar neighbourhood that is embedded.
    pub neighbourhood_area: f64,
    pub symplecticity_defect: f64,
    pub defect_tolerance: f64,
    pub probes: usize,
    /// `max |z₁| − √(a/π)` over the images of all samples (negative inside).
    pub image_violation: f64,
    /// Smallest distance between images of distinct probes.
    pub min_probe_separation: f64,
    pub planar_jacobian: JacobianCertificate,
    pub pass: bool,
}

/// `x ↦ (φ × id)(Rx)` for a unitary `R` and a planar map `φ` on `(q₁, p₁)`.
#[derive(Clone)]
pub struct SqueezeMap {
    n: usize,
    rotation: Option<CMatrix>,
    planar: SharedMap,
}

impl SqueezeMap {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &PhasePoint) -> Result<PhasePoint> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: 2 * x.n() });
        }
        let mut z = x.to_complex();
        if let Some(r) = &self.rotation {
            z = r.apply(&z);
        }
        let w = self.planar.apply([z[0].re, z[0].im]);
        z[0] = num_complex::Complex64::new(w[0], w[1]);
        Ok(PhasePoint::from_complex(&z))
    }
}

pub struct SqueezeEmbedding {
    pub map: SqueezeMap,
    pub certificate: SqueezeCertificate,
}

/// Builds and certifies an embedding of `set` into `Z^{2n}(a)`.
pub fn squeeze_pipeline(set: &SampledSet, a: f64, opts: &SqueezeOptions) -> Result<SqueezeEmbedding> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("cylinder capacity {a}")));
    }
    if set.is_empty() {
        return Err(Error::DegenerateSet("no samples".into()));
    }
    let (rotation, planar, domain, route) = match opts.route {
        SqueezeRoute::Shadow => shadow_route(set, a, opts)?,
        SqueezeRoute::Slice => slice_route(set, a, opts)?,
        SqueezeRoute::Auto => match shadow_route(set, a, opts) {
            Ok(r) => r,
            Err(shadow_err) => slice_route(set, a, opts).map_err(|slice_err| {
                Error::NotSqueezable(format!("shadow route: {shadow_err}; slice route: {slice_err}"))
            })?,
        },
    };
    let neighbourhood_area = match &route {
        RouteTaken::Shadow { rectangle_area, .. } => *rectangle_area,
        RouteTaken::Slice { slice_area, .. } => *slice_area,
    };
    let map = SqueezeMap { n: set.n(), rotation, planar: planar.clone() };
    let certificate = certify(set, a, &map, &domain, route, neighbourhood_area, opts)?;
    Ok(SqueezeEmbedding { map, certificate })
}

type RouteParts = (Option<CMatrix>, SharedMap, (PlanarDomain, SharedMap), RouteTaken);

fn shadow_route(set: &SampledSet, a: f64, opts: &SqueezeOptions) -> Result<RouteParts> {
    let pts = shadow(set);
    let (lo, hi) = bounds(&pts);
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let epsilon = match opts.epsilon {
        Some(e) => e,
        None => {
            let fill = set.fill_distance().unwrap_or_else(|| fill_distance_or_spacing(set));
            (2.0 * fill).max(6.0 * extent.max(1e-3) / opts.shadow_grid as f64)
        }
    };
    let shadow_area = shadow_area(set, epsilon, opts.shadow_grid)?;
    if shadow_area >= a {
        return Err(Error::NotSqueezable(format!("ε-shadow area {shadow_area:.4} ≥ {a} (ε = {epsilon:.2e})")));
    }
    let (angle, rmin, rmax) = min_area_rectangle(&pts);
    let (rmin, rmax) = ([rmin[0] - epsilon, rmin[1] - epsilon], [rmax[0] + epsilon, rmax[1] + epsilon]);
    let rectangle_area = (rmax[0] - rmin[0]) * (rmax[1] - rmin[1]);
    if rectangle_area >= a {
        return Err(Error::NotSqueezable(format!(
            "bounding rectangle of the ε-shadow has area {rectangle_area:.4} ≥ {a}"
        )));
    }
    let rect = PlanarDomain::rectangle(rmin, rmax)?;
    let (embed, _) = volume_embed_map(&rect, a, &opts.embed)?;
    let planar = compose(Arc::new(Affine::rotation(-angle)), embed.clone());
    Ok((None, planar, (rect, embed), RouteTaken::Shadow { epsilon, shadow_area, rectangle_area, angle }))
}

/// `(q, p) ↦ (A(q), p / h(q))` with `h(q) = √(ρ² − q²)` and `A(q) = ∫_{−ρ}^q h`.
#[derive(Debug, Clone, Copy)]
pub struct SliceStraightening {
    pub radius: f64,
}

impl SliceStraightening {
    fn height(&self, q: f64) -> f64 {
        (self.radius * self.radius - q * q).max(0.0).sqrt()
    }

    pub fn primitive(&self, q: f64) -> f64 {
        let r = self.radius;
        let q = q.clamp(-r, r);
        0.5 * (q * self.height(q) + r * r * (q / r).asin()) + 0.25 * PI * r * r
    }
}

impl PlanarMap for SliceStraightening {
    fn apply(&self, x: P2) -> P2 {
        [self.primitive(x[0]), x[1] / self.height(x[0])]
    }

    fn jacobian(&self, x: P2) -> M2 {
        let h = self.height(x[0]);
        [[h, 0.0], [x[1] * x[0] / (h * h * h), 1.0 / h]]
    }

    fn jacobian_det_gradient(&self, _x: P2) -> P2 {
        [0.0, 0.0]
    }
}

fn slice_route(set: &SampledSet, a: f64, opts: &SqueezeOptions) -> Result<RouteParts> {
    if a < PI {
        return Err(Error::NotSqueezable(format!("slice construction needs a ≥ π, got {a}")));
    }
    let worst = set.points().iter().map(|x| x.norm()).fold(0.0, f64::max);
    if worst > 1.0 + 1e-9 {
        return Err(Error::NotSqueezable(format!("set leaves the closed unit ball (|x| up to {worst:.4})")));
    }
    let rot = find_avoiding_rotation(set, opts.pole_margin, &opts.search)
        .map_err(|e| Error::NotSqueezable(e.to_string()))?;
    // cut strictly beyond the samples so they stay off the rectangle's edge
    let c = rot.c + 0.25 * (1.0 - rot.c).max(0.0);
    let base = disc_slice_area(1.0, c);
    if !(base < PI) {
        return Err(Error::NotSqueezable(format!("slice {{q < {c:.4}}} of the unit disc has area π")));
    }
    // enlarge the disc until the slice area sits halfway to π
    let target = 0.5 * (base + PI);
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if disc_slice_area(mid, c) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let radius = lo;
    let slice_area = disc_slice_area(radius, c);
    let straight = SliceStraightening { radius };
    let rect = PlanarDomain::rectangle([0.0, -1.0], [straight.primitive(c), 1.0])?;
    let (embed, _) = volume_embed_map(&rect, a, &opts.embed)?;
    let planar = compose(Arc::new(straight), embed.clone());
    Ok((
        Some(rot.rotation),
        planar,
        (rect, embed),
        RouteTaken::Slice {
            c,
            radius,
            slice_area,
            pole_distance: rot.distance,
            rotation_candidates: rot.candidates_tried,
        },
    ))
}

fn certify(
    set: &SampledSet,
    a: f64,
    map: &SqueezeMap,
    planar_domain: &(PlanarDomain, SharedMap),
    route: RouteTaken,
    neighbourhood_area: f64,
    opts: &SqueezeOptions,
) -> Result<SqueezeCertificate> {
    let pts = set.points();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let count = opts.probes.min(pts.len());
    let probes: Vec<PhasePoint> = sample(&mut rng, pts.len(), count).into_iter().map(|i| pts[i].clone()).collect();
    let defect = symplecticity_defect(|x| map.apply(x), &probes, opts.fd_step)?;
    let radius = (a / PI).sqrt();
    let images: Vec<PhasePoint> = pts.par_iter().map(|x| map.apply(x)).collect::<Result<_>>()?;
    let image_violation = images.iter().map(|y| y.z(0).norm() - radius).fold(f64::NEG_INFINITY, f64::max);
    let probe_images: Vec<PhasePoint> = probes.iter().map(|x| map.apply(x)).collect::<Result<_>>()?;
    let min_probe_separation = (0..probe_images.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..probe_images.len())
                .filter(|&j| probes[i].distance(&probes[j]) > 0.0)
                .map(|j| probe_images[i].distance(&probe_images[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let grid = GridMap2D::sample(planar_domain.0.clone(), planar_domain.1.clone(), opts.verify_grid)?;
    let planar_jacobian = grid.jacobian_certificate(opts.embed.tolerance);
    let pass = defect <= opts.defect_tolerance
        && image_violation < 0.0
        && min_probe_separation > 0.0
        && planar_jacobian.pass
        && neighbourhood_area < a;
    Ok(SqueezeCertificate {
        capacity: a,
        route,
        neighbourhood_area,
        symplecticity_defect: defect,
        defect_tolerance: opts.defect_tolerance,
        probes: count,
        image_violation,
        min_probe_separation,
        planar_jacobian,
        pass,
    })
}

fn bounds(pts: &[P2]) -> (P2, P2) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Convex hull by the monotone chain, counter-clockwise.
pub fn convex_hull(pts: &[P2]) -> Vec<P2> {
    let mut v: Vec<P2> = pts.to_vec();
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    v.dedup();
    if v.len() < 3 {
        return v;
    }
    let cross = |o: P2, a: P2, b: P2| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<P2> = Vec::with_capacity(2 * v.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &P2>> = if pass == 0 { Box::new(v.iter()) } else { Box::new(v.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area enclosing rectangle: returns the angle `α` of one side and
/// the bounds of the points after rotating by `−α`.
pub fn min_area_rectangle(pts: &[P2]) -> (f64, P2, P2) {
    let hull = convex_hull(pts);
    let mut best = (f64::INFINITY, 0.0, [0.0; 2], [0.0; 2]);
    let mut angles: Vec<f64> = vec![0.0];
    for i in 0..hull.len() {
        let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
        angles.push((q[1] - p[1]).atan2(q[0] - p[0]));
    }
    for alpha in angles {
        let r = Affine::rotation(-alpha);
        let rotated: Vec<P2> = hull.iter().map(|p| r.apply(*p)).collect();
        let (lo, hi) = bounds(&rotated);
        let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        if area < best.0 {
            best = (area, alpha, lo, hi);
        }
    }
    (best.1, best.2, best.3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straightening_is_area_preserving_onto_rectangle() {
        let s = SliceStraightening { radius: 1.1 };
        assert!(s.primitive(-1.1).abs() < 1e-15);
        assert!((s.primitive(1.1) - 0.5 * PI * 1.21).abs() < 1e-12);
        for x in [[0.3, 0.2], [-0.9, 0.1], [0.5, -0.8]] {
            let fd = s.jacobian_det([x[0], x[1]]);
            let m = s.jacobian(x);
            let h = 1e-6;
            let num = (s.apply([x[0] + h, x[1]])[1] - s.apply([x[0] - h, x[1]])[1]) / (2.0 * h);
            assert!((fd - 1.0).abs() < 1e-12 && (num - m[1][0]).abs() < 1e-6);
        }
        // the circle of radius ρ lands on the horizontal edges
        assert!((s.apply([0.4, (1.21f64 - 0.16).sqrt()])[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rectangle_of_rotated_segment_is_thin() {
        let pts: Vec<P2> = (0..50).map(|i| {
            let t = i as f64 / 49.0;
            [t * 0.6f64.cos(), t * 0.6f64.sin() + 0.01 * (i % 2) as f64]
        }).collect();
        let (angle, lo, hi) = min_area_rectangle(&pts);
        assert!((angle - 0.6).abs() < 0.02 || (angle - 0.6 + PI).abs() < 0.02);
        assert!((hi[0] - lo[0]) * (hi[1] - lo[1]) < 0.01);
        let hull = convex_hull(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        assert_eq!(hull.len(), 4);
    }
}
