//! Area-preserving planar embeddings into discs.
//!
//! A domain is first pushed radially into the target disc, shrunk so that
//! its image has the right area, and then corrected by Moser's method: the
//! Neumann problem `Δθ = det Dψ − 1` is solved on a cell-centred grid with a
//! cosine transform, and the time-1 flow of `v_t = −∇θ / μ_t` with
//! `μ_t = (1−t) + t·det Dψ` is integrated by RK4.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use kdtree::distance::squared_euclidean;
use kdtree::KdTree;
use rayon::prelude::*;
use rustdct::DctPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::smooth::gauss_legendre;

pub type P2 = [f64; 2];

pub type M2 = [[f64; 2]; 2];

fn det(m: &M2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn matmul(a: &M2, b: &M2) -> M2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

const FD_STEP: f64 = 1e-6;

/// A smooth planar map. Derivatives default to central differences.
pub trait PlanarMap: Send + Sync {
    fn apply(&self, x: P2) -> P2;

    /// `Dφ(x)` with rows indexing output components.
    fn jacobian(&self, x: P2) -> M2 {
        let h = FD_STEP;
        let (xp, xm) = (self.apply([x[0] + h, x[1]]), self.apply([x[0] - h, x[1]]));
        let (yp, ym) = (self.apply([x[0], x[1] + h]), self.apply([x[0], x[1] - h]));
        [
            [(xp[0] - xm[0]) / (2.0 * h), (yp[0] - ym[0]) / (2.0 * h)],
            [(xp[1] - xm[1]) / (2.0 * h), (yp[1] - ym[1]) / (2.0 * h)],
        ]
    }

    fn apply_with_jacobian(&self, x: P2) -> (P2, M2) {
        (self.apply(x), self.jacobian(x))
    }

    fn jacobian_det(&self, x: P2) -> f64 {
        det(&self.jacobian(x))
    }

    /// `∇ det Dφ(x)`.
    fn jacobian_det_gradient(&self, x: P2) -> P2 {
        let h = 1e-5;
        [
            (self.jacobian_det([x[0] + h, x[1]]) - self.jacobian_det([x[0] - h, x[1]])) / (2.0 * h),
            (self.jacobian_det([x[0], x[1] + h]) - self.jacobian_det([x[0], x[1] - h])) / (2.0 * h),
        ]
    }
}

pub type SharedMap = Arc<dyn PlanarMap>;

/// `x ↦ m·x + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub m: [[f64; 2]; 2],
    pub b: P2,
}

impl Affine {
    pub fn identity() -> Self {
        Affine { m: [[1.0, 0.0], [0.0, 1.0]], b: [0.0, 0.0] }
    }

    pub fn translation(b: P2) -> Self {
        Affine { b, ..Affine::identity() }
    }

    /// Homothety by `k` about `center`, followed by moving `center` to the origin.
    pub fn homothety_to_origin(k: f64, center: P2) -> Self {
        Affine { m: [[k, 0.0], [0.0, k]], b: [-k * center[0], -k * center[1]] }
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Affine { m: [[c, -s], [s, c]], b: [0.0, 0.0] }
    }

    /// `self ∘ other`.
    pub fn after(&self, other: &Affine) -> Affine {
        let m = &self.m;
        let o = &other.m;
        Affine {
            m: [
                [m[0][0] * o[0][0] + m[0][1] * o[1][0], m[0][0] * o[0][1] + m[0][1] * o[1][1]],
                [m[1][0] * o[0][0] + m[1][1] * o[1][0], m[1][0] * o[0][1] + m[1][1] * o[1][1]],
            ],
            b: self.apply(other.b),
        }
    }
}

impl PlanarMap for Affine {
    fn apply(&self, x: P2) -> P2 {
        [
            self.m[0][0] * x[0] + self.m[0][1] * x[1] + self.b[0],
            self.m[1][0] * x[0] + self.m[1][1] * x[1] + self.b[1],
        ]
    }

    fn jacobian(&self, _x: P2) -> M2 {
        self.m
    }

    fn jacobian_det_gradient(&self, _x: P2) -> P2 {
        [0.0, 0.0]
    }
}

/// Radial rescaling about `center`: `x ↦ k·σ(ρ)·(x−c)/ρ` with
/// `σ(ρ) = r·Φ(ρ/ℓ)`, `Φ(s) = s/(1+s^p)^{1/p}` and `k` a final homothety.
/// For even `p` the map is smooth at the centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSqueeze {
    pub center: P2,
    pub radius: f64,
    pub length: f64,
    pub power: i32,
    pub shrink: f64,
}

impl RadialSqueeze {
    fn profile(&self, rho: f64) -> f64 {
        let s = rho / self.length;
        self.radius * s / (1.0 + s.powi(self.power)).powf(1.0 / self.power as f64)
    }

    /// Inverse of `Φ` on `[0, 1)`.
    fn profile_inverse(y: f64, p: i32) -> f64 {
        y / (1.0 - y.powi(p)).powf(1.0 / p as f64)
    }
}

impl RadialSqueeze {
    /// `(d, s², u = s^p)` for the offset of `x` from the centre.
    fn parts(&self, x: P2) -> (P2, f64, f64) {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let s2 = (d[0] * d[0] + d[1] * d[1]) / (self.length * self.length);
        (d, s2, s2.powi(self.power / 2))
    }

    fn gain(&self) -> f64 {
        self.shrink * self.radius / self.length
    }
}

impl PlanarMap for RadialSqueeze {
    fn apply(&self, x: P2) -> P2 {
        // σ(ρ)/ρ as a function of s² keeps the centre regular
        let (d, _, u) = self.parts(x);
        let f = self.gain() * (1.0 + u).powf(-1.0 / self.power as f64);
        [f * d[0], f * d[1]]
    }

    fn jacobian(&self, x: P2) -> M2 {
        // D(f·d) = f·I + d ⊗ ∇f with f = k(1+u)^{-1/p}
        let (d, s2, u) = self.parts(x);
        let p = self.power as f64;
        let f = self.gain() * (1.0 + u).powf(-1.0 / p);
        let dfds2 = if s2 > 0.0 { -f / (1.0 + u) * 0.5 * u / s2 } else { 0.0 };
        let l2 = self.length * self.length;
        let g = [dfds2 * 2.0 * d[0] / l2, dfds2 * 2.0 * d[1] / l2];
        [[f + d[0] * g[0], d[0] * g[1]], [d[1] * g[0], f + d[1] * g[1]]]
    }

    fn jacobian_det(&self, x: P2) -> f64 {
        let (_, _, u) = self.parts(x);
        let k = self.gain();
        k * k * (1.0 + u).powf(-1.0 - 2.0 / self.power as f64)
    }

    fn jacobian_det_gradient(&self, x: P2) -> P2 {
        let (d, s2, u) = self.parts(x);
        if s2 == 0.0 {
            return [0.0, 0.0];
        }
        let p = self.power as f64;
        let k = self.gain();
        let dj_du = -k * k * (1.0 + 2.0 / p) * (1.0 + u).powf(-2.0 - 2.0 / p);
        let du_ds2 = 0.5 * p * u / s2;
        let c = dj_du * du_ds2 * 2.0 / (self.length * self.length);
        [c * d[0], c * d[1]]
    }
}

/// `then ∘ first`.
#[derive(Clone)]
pub struct Composed {
    pub first: SharedMap,
    pub then: SharedMap,
}

impl PlanarMap for Composed {
    fn apply(&self, x: P2) -> P2 {
        self.then.apply(self.first.apply(x))
    }

    fn jacobian(&self, x: P2) -> M2 {
        self.apply_with_jacobian(x).1
    }

    fn apply_with_jacobian(&self, x: P2) -> (P2, M2) {
        let (y, a) = self.first.apply_with_jacobian(x);
        let (z, b) = self.then.apply_with_jacobian(y);
        (z, matmul(&b, &a))
    }
}

pub fn compose(first: SharedMap, then: SharedMap) -> SharedMap {
    Arc::new(Composed { first, then })
}

pub type RadiusFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Open planar domain, star-shaped about its centre.
#[derive(Clone)]
pub enum PlanarDomain {
    Disc { center: P2, radius: f64 },
    Rectangle { min: P2, max: P2 },
    /// Boundary at distance `radius(θ)` from `center` along the ray of angle `θ`.
    Star { center: P2, radius: RadiusFn },
}

impl fmt::Debug for PlanarDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanarDomain::Disc { center, radius } => write!(f, "Disc({center:?}, {radius})"),
            PlanarDomain::Rectangle { min, max } => write!(f, "Rectangle({min:?}, {max:?})"),
            PlanarDomain::Star { center, .. } => write!(f, "Star({center:?})"),
        }
    }
}

const STAR_QUADRATURE_PANELS: usize = 256;

impl PlanarDomain {
    pub fn disc(center: P2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("disc radius {radius}")));
        }
        Ok(PlanarDomain::Disc { center, radius })
    }

    pub fn rectangle(min: P2, max: P2) -> Result<Self> {
        if !(max[0] > min[0] && max[1] > min[1]) {
            return Err(Error::InvalidArgument(format!("empty rectangle {min:?}..{max:?}")));
        }
        Ok(PlanarDomain::Rectangle { min, max })
    }

    pub fn star(center: P2, radius: RadiusFn) -> Result<Self> {
        for k in 0..720 {
            let r = radius(2.0 * PI * k as f64 / 720.0);
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidArgument(format!("boundary radius {r} not positive")));
            }
        }
        Ok(PlanarDomain::Star { center, radius })
    }

    pub fn center(&self) -> P2 {
        match self {
            PlanarDomain::Disc { center, .. } | PlanarDomain::Star { center, .. } => *center,
            PlanarDomain::Rectangle { min, max } => [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])],
        }
    }

    /// Distance from the centre to the boundary along angle `theta`.
    pub fn boundary_radius(&self, theta: f64) -> f64 {
        match self {
            PlanarDomain::Disc { radius, .. } => *radius,
            PlanarDomain::Rectangle { min, max } => {
                let (hw, hh) = (0.5 * (max[0] - min[0]), 0.5 * (max[1] - min[1]));
                let (s, c) = theta.sin_cos();
                let tx = if c.abs() > 0.0 { hw / c.abs() } else { f64::INFINITY };
                let ty = if s.abs() > 0.0 { hh / s.abs() } else { f64::INFINITY };
                tx.min(ty)
            }
            PlanarDomain::Star { radius, .. } => radius(theta),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            PlanarDomain::Disc { radius, .. } => PI * radius * radius,
            PlanarDomain::Rectangle { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
            PlanarDomain::Star { .. } => star_area(|t| self.boundary_radius(t), &[]),
        }
    }

    pub fn contains(&self, x: P2) -> bool {
        match self {
            PlanarDomain::Rectangle { min, max } => x[0] > min[0] && x[0] < max[0] && x[1] > min[1] && x[1] < max[1],
            _ => {
                let c = self.center();
                let d = [x[0] - c[0], x[1] - c[1]];
                let rho = d[0].hypot(d[1]);
                rho == 0.0 || rho < self.boundary_radius(d[1].atan2(d[0]))
            }
        }
    }

    pub fn bounding_box(&self) -> (P2, P2) {
        match self {
            PlanarDomain::Disc { center, radius } => {
                ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
            }
            PlanarDomain::Rectangle { min, max } => (*min, *max),
            PlanarDomain::Star { center, .. } => {
                let (mut lo, mut hi) = (*center, *center);
                for p in self.boundary_samples(4096) {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Boundary points at `m` equally spaced angles about the centre.
    pub fn boundary_samples(&self, m: usize) -> Vec<P2> {
        let c = self.center();
        (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                let r = self.boundary_radius(t);
                [c[0] + r * t.cos(), c[1] + r * t.sin()]
            })
            .collect()
    }

    pub fn min_boundary_radius(&self) -> f64 {
        match self {
            PlanarDomain::Disc { radius, .. } => *radius,
            PlanarDomain::Rectangle { min, max } => 0.5 * (max[0] - min[0]).min(max[1] - min[1]),
            PlanarDomain::Star { .. } => {
                (0..8192).map(|k| self.boundary_radius(2.0 * PI * k as f64 / 8192.0)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Angles where the boundary radius has kinks (rectangle corners).
    fn kinks(&self) -> Vec<f64> {
        match self {
            PlanarDomain::Rectangle { min, max } => {
                let a = (max[1] - min[1]).atan2(max[0] - min[0]);
                vec![a, PI - a, PI + a, 2.0 * PI - a]
            }
            _ => Vec::new(),
        }
    }
}

/// `∫ ½ g(θ)² dθ` over the circle, panel-wise Gauss–Legendre split at `kinks`.
fn star_area<G: Fn(f64) -> f64>(g: G, kinks: &[f64]) -> f64 {
    let (x, w) = gauss_legendre(16);
    let mut cuts = vec![0.0];
    cuts.extend(kinks.iter().copied().filter(|t| *t > 0.0 && *t < 2.0 * PI));
    cuts.push(2.0 * PI);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let panels = STAR_QUADRATURE_PANELS / (cuts.len() - 1) + 1;
        let width = (seg[1] - seg[0]) / panels as f64;
        for k in 0..panels {
            let mid = seg[0] + (k as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                let r = g(mid + 0.5 * width * xi);
                total += 0.5 * width * wi * 0.5 * r * r;
            }
        }
    }
    total
}

/// Resolution and tolerances of the planar constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbedOptions {
    /// Cells per side of the Poisson grid and of the verification grid.
    pub grid: usize,
    pub flow_steps: usize,
    /// Allowed `|det − 1|` on the verification grid.
    pub tolerance: f64,
    /// Exponent `p` of the radial profile; must be even.
    pub power: i32,
    /// Largest admissible Jacobian of the radial map at the centre.
    pub jacobian_budget: f64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions { grid: 512, flow_steps: 64, tolerance: 1e-4, power: 4, jacobian_budget: 1e4 }
    }
}

impl EmbedOptions {
    fn validate(&self) -> Result<()> {
        if self.grid < 8 || self.flow_steps == 0 || self.power < 2 || self.power % 2 != 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("embedding options {self:?}")));
        }
        Ok(())
    }
}

/// A planar map sampled on the cell centres of a grid over its domain.
pub struct GridMap2D {
    domain: PlanarDomain,
    map: SharedMap,
    nx: usize,
    ny: usize,
    origin: P2,
    spacing: P2,
    inside: Vec<bool>,
    values: Vec<P2>,
    jacobian: Vec<f64>,
    lookup: OnceLock<KdTree<f64, usize, [f64; 2]>>,
}

impl fmt::Debug for GridMap2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridMap2D")
            .field("domain", &self.domain)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish_non_exhaustive()
    }
}

/// Summary of the Jacobian field of a [`GridMap2D`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianCertificate {
    pub min: f64,
    pub max: f64,
    pub max_deviation: f64,
    pub nodes: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl GridMap2D {
    /// Samples `map` and its Jacobian determinant on a `grid × grid`
    /// cell-centred lattice of the bounding box of `domain`, keeping the
    /// nodes inside the domain.
    pub fn sample(domain: PlanarDomain, map: SharedMap, grid: usize) -> Result<Self> {
        if grid < 4 {
            return Err(Error::InvalidArgument(format!("grid {grid}")));
        }
        let (lo, hi) = domain.bounding_box();
        let (nx, ny) = (grid, grid);
        let spacing = [(hi[0] - lo[0]) / nx as f64, (hi[1] - lo[1]) / ny as f64];
        let node = |i: usize, j: usize| [lo[0] + (i as f64 + 0.5) * spacing[0], lo[1] + (j as f64 + 0.5) * spacing[1]];
        let inside: Vec<bool> = (0..nx * ny).map(|k| domain.contains(node(k % nx, k / nx))).collect();
        let sampled: Vec<(P2, f64)> = (0..nx * ny)
            .into_par_iter()
            .map(|k| {
                if inside[k] {
                    let (v, m) = map.apply_with_jacobian(node(k % nx, k / nx));
                    (v, det(&m))
                } else {
                    ([f64::NAN; 2], f64::NAN)
                }
            })
            .collect();
        let (values, jacobian): (Vec<P2>, Vec<f64>) = sampled.into_iter().unzip();
        if (0..nx * ny).any(|k| inside[k] && !(values[k][0].is_finite() && values[k][1].is_finite() && jacobian[k].is_finite())) {
            return Err(Error::NonFinite("sampled planar map"));
        }
        Ok(GridMap2D { domain, map, nx, ny, origin: lo, spacing, inside, values, jacobian, lookup: OnceLock::new() })
    }

    pub fn domain(&self) -> &PlanarDomain {
        &self.domain
    }

    pub fn map(&self) -> &SharedMap {
        &self.map
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> P2 {
        self.spacing
    }

    pub fn eval(&self, x: P2) -> P2 {
        self.map.apply(x)
    }

    /// `(node, image)` pairs for nodes inside the domain.
    pub fn samples(&self) -> impl Iterator<Item = (P2, P2)> + '_ {
        (0..self.nx * self.ny).filter(|&k| self.inside[k]).map(move |k| {
            let (i, j) = (k % self.nx, k / self.nx);
            (
                [self.origin[0] + (i as f64 + 0.5) * self.spacing[0], self.origin[1] + (j as f64 + 0.5) * self.spacing[1]],
                self.values[k],
            )
        })
    }

    /// Jacobian field in row order, `NaN` where it is not defined.
    pub fn jacobian_field(&self) -> &[f64] {
        &self.jacobian
    }

    pub fn jacobian_certificate(&self, tolerance: f64) -> JacobianCertificate {
        let (mut min, mut max, mut nodes) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        for j in self.jacobian.iter().filter(|j| !j.is_nan()) {
            min = min.min(*j);
            max = max.max(*j);
            nodes += 1;
        }
        let max_deviation = (1.0 - min).max(max - 1.0);
        JacobianCertificate { min, max, max_deviation, nodes, tolerance, pass: nodes > 0 && max_deviation <= tolerance }
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jacobian.iter().filter(|j| !j.is_nan()).fold(f64::INFINITY, |a, b| a.min(*b))
    }

    /// Largest `|φ(x)|` over the grid nodes and `boundary` samples of the domain.
    pub fn image_radius(&self, boundary: usize) -> f64 {
        let nodes = self.values.iter().filter(|v| !v[0].is_nan()).map(|v| v[0].hypot(v[1]));
        let edge: Vec<f64> = self
            .domain
            .boundary_samples(boundary)
            .into_par_iter()
            .map(|b| {
                let v = self.map.apply(b);
                v[0].hypot(v[1])
            })
            .collect();
        nodes.chain(edge).fold(0.0, f64::max)
    }

    /// Smallest distance from the origin to the image of the domain boundary.
    pub fn image_inradius(&self, boundary: usize) -> f64 {
        self.domain
            .boundary_samples(boundary)
            .into_par_iter()
            .map(|b| {
                let v = self.map.apply(b);
                v[0].hypot(v[1])
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Preimage of `y` by Newton iteration started at the nearest grid image.
    pub fn inverse(&self, y: P2) -> Option<P2> {
        let tree = self.lookup.get_or_init(|| {
            let mut t = KdTree::new(2);
            for (k, v) in self.values.iter().enumerate() {
                if self.inside[k] {
                    t.add(*v, k).expect("finite grid image");
                }
            }
            t
        });
        let nearest = tree.nearest(&y, 1, &squared_euclidean).ok()?;
        let k = *nearest.first()?.1;
        let mut x = [
            self.origin[0] + ((k % self.nx) as f64 + 0.5) * self.spacing[0],
            self.origin[1] + ((k / self.nx) as f64 + 0.5) * self.spacing[1],
        ];
        let h = 1e-7 * self.spacing[0].max(self.spacing[1]).max(1e-3);
        for _ in 0..50 {
            let f = self.map.apply(x);
            let r = [f[0] - y[0], f[1] - y[1]];
            if r[0].hypot(r[1]) < 1e-13 {
                return Some(x);
            }
            let fx = self.map.apply([x[0] + h, x[1]]);
            let fy = self.map.apply([x[0], x[1] + h]);
            let a = [(fx[0] - f[0]) / h, (fx[1] - f[1]) / h];
            let b = [(fy[0] - f[0]) / h, (fy[1] - f[1]) / h];
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-300 {
                return None;
            }
            x[0] -= (b[1] * r[0] - b[0] * r[1]) / det;
            x[1] -= (-a[1] * r[0] + a[0] * r[1]) / det;
        }
        let f = self.map.apply(x);
        ((f[0] - y[0]).hypot(f[1] - y[1]) < 1e-9).then_some(x)
    }
}

/// True when `domain ⊂ B_r` and `B_{r0} ⊂ domain`, judged on boundary samples.
fn already_embedded(domain: &PlanarDomain, r: f64, r0: f64) -> bool {
    if !domain.contains([0.0, 0.0]) {
        return false;
    }
    let (lo, hi) = domain.bounding_box();
    let corners = [lo, hi, [lo[0], hi[1]], [hi[0], lo[1]]];
    let far = match domain {
        PlanarDomain::Rectangle { .. } => corners.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max),
        _ => domain.boundary_samples(4096).iter().map(|b| b[0].hypot(b[1])).fold(0.0, f64::max),
    };
    let near = match domain {
        PlanarDomain::Disc { center, radius } => radius - center[0].hypot(center[1]),
        PlanarDomain::Rectangle { min, max } => [-min[0], -min[1], max[0], max[1]].into_iter().fold(f64::INFINITY, f64::min),
        PlanarDomain::Star { .. } => {
            domain.boundary_samples(4096).iter().map(|b| b[0].hypot(b[1])).fold(f64::INFINITY, f64::min)
        }
    };
    far < r && near >= r0
}

/// Which radial construction applies to a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialChoice {
    Identity,
    Homothety(Affine),
    Squeeze(RadialSqueeze),
}

impl RadialChoice {
    pub fn shared(self) -> SharedMap {
        match self {
            RadialChoice::Identity => Arc::new(Affine::identity()),
            RadialChoice::Homothety(a) => Arc::new(a),
            RadialChoice::Squeeze(s) => Arc::new(s),
        }
    }
}

/// Picks the radial construction for `domain`, centred so the image is about the origin.
pub fn radial_choice(domain: &PlanarDomain, r: f64, r0: f64, opts: &EmbedOptions) -> Result<RadialChoice> {
    opts.validate()?;
    if !(r > r0 && r0 > 0.0) {
        return Err(Error::InvalidArgument(format!("need r > r0 > 0, got r = {r}, r0 = {r0}")));
    }
    if already_embedded(domain, r, r0) {
        return Ok(RadialChoice::Identity);
    }
    match domain {
        PlanarDomain::Disc { center, radius } => {
            let k = 0.5 * (r + r0) / radius;
            Ok(RadialChoice::Homothety(Affine::homothety_to_origin(k, *center)))
        }
        _ => {
            let length = domain.min_boundary_radius() / RadialSqueeze::profile_inverse(r0 / r, opts.power);
            let centre_jacobian = (r / length).powi(2);
            if centre_jacobian > opts.jacobian_budget {
                return Err(Error::Construction(format!(
                    "r0 = {r0} too close to r = {r}: central Jacobian {centre_jacobian:.3e} exceeds budget {:.1e}",
                    opts.jacobian_budget
                )));
            }
            Ok(RadialChoice::Squeeze(RadialSqueeze {
                center: domain.center(),
                radius: r,
                length,
                power: opts.power,
                shrink: 1.0,
            }))
        }
    }
}

/// Embeds `domain` into the open disc of radius `r` about the origin with
/// image containing the disc of radius `r0`, by rescaling along rays.
pub fn radial_embed(domain: &PlanarDomain, r: f64, r0: f64) -> Result<GridMap2D> {
    radial_embed_with(domain, r, r0, &EmbedOptions::default())
}

pub fn radial_embed_with(domain: &PlanarDomain, r: f64, r0: f64, opts: &EmbedOptions) -> Result<GridMap2D> {
    let map = radial_choice(domain, r, r0, opts)?.shared();
    let g = GridMap2D::sample(domain.clone(), map, opts.grid)?;
    if !(g.min_jacobian() > 0.0) {
        return Err(Error::Construction(format!("radial map not orientation preserving (min det {})", g.min_jacobian())));
    }
    Ok(g)
}

/// Solves the discrete Neumann problem `Lθ = f` (five-point Laplacian on an
/// `nx × ny` cell-centred grid, reflecting ghost cells). The right-hand side
/// is projected onto mean zero first; the solution has mean zero.
pub fn neumann_poisson(rhs: &[f64], nx: usize, ny: usize, hx: f64, hy: f64) -> Result<Vec<f64>> {
    if rhs.len() != nx * ny || nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("rhs of length {} for a {nx}×{ny} grid", rhs.len())));
    }
    let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
    let f: Vec<f64> = rhs.iter().map(|v| v - mean).collect();
    let mut planner = DctPlanner::new();
    let (dx2, dx3) = (planner.plan_dct2(nx), planner.plan_dct3(nx));
    let (dy2, dy3) = (planner.plan_dct2(ny), planner.plan_dct3(ny));
    let mut a = f.clone();
    a.par_chunks_mut(nx).for_each(|row| dx2.process_dct2(row));
    let mut t = transpose(&a, nx, ny);
    t.par_chunks_mut(ny).for_each(|col| dy2.process_dct2(col));
    // t[i*ny + j] holds mode (kx = i, ky = j)
    let lx: Vec<f64> = (0..nx).map(|k| -4.0 / (hx * hx) * (PI * k as f64 / (2.0 * nx as f64)).sin().powi(2)).collect();
    let ly: Vec<f64> = (0..ny).map(|k| -4.0 / (hy * hy) * (PI * k as f64 / (2.0 * ny as f64)).sin().powi(2)).collect();
    t.par_chunks_mut(ny).enumerate().for_each(|(i, col)| {
        for (j, v) in col.iter_mut().enumerate() {
            let lam = lx[i] + ly[j];
            *v = if i == 0 && j == 0 { 0.0 } else { *v / lam };
        }
    });
    t.par_chunks_mut(ny).for_each(|col| dy3.process_dct3(col));
    let mut theta = transpose(&t, ny, nx);
    theta.par_chunks_mut(nx).for_each(|row| dx3.process_dct3(row));
    let scale = 4.0 / (nx * ny) as f64;
    theta.iter_mut().for_each(|v| *v *= scale);
    let residual = neumann_residual(&theta, &f, nx, ny, hx, hy);
    let size = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if !(residual <= 1e-8 * size) {
        return Err(Error::PoissonSolve { residual });
    }
    Ok(theta)
}

fn transpose(a: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut t = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            t[i * ny + j] = a[j * nx + i];
        }
    }
    t
}

/// `max |Lθ − f|` for the reflecting five-point Laplacian.
pub fn neumann_residual(theta: &[f64], f: &[f64], nx: usize, ny: usize, hx: f64, hy: f64) -> f64 {
    (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let c = theta[k];
            let w = if i > 0 { theta[k - 1] } else { c };
            let e = if i + 1 < nx { theta[k + 1] } else { c };
            let s = if j > 0 { theta[k - nx] } else { c };
            let n = if j + 1 < ny { theta[k + nx] } else { c };
            ((w - 2.0 * c + e) / (hx * hx) + (s - 2.0 * c + n) / (hy * hy) - f[k]).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// How a sampled axis continues past the domain edge.
#[derive(Debug, Clone, Copy)]
enum Axis {
    /// Samples on faces `0..=n`; ghosts by cubic extrapolation through the
    /// edge value and three interior samples.
    Face(usize),
    /// Samples on cell centres `0..n`; ghosts by even reflection.
    Centre(usize),
}

const GHOSTS: usize = 2;

impl Axis {
    fn len(self) -> usize {
        match self {
            Axis::Face(n) => n + 1,
            Axis::Centre(n) => n,
        }
    }

    fn offset(self) -> f64 {
        match self {
            Axis::Face(_) => 0.0,
            Axis::Centre(_) => 0.5,
        }
    }

    /// Extends a line of samples by `GHOSTS` values on each side.
    fn pad(self, line: &[f64]) -> Vec<f64> {
        let m = line.len();
        let mut out = vec![0.0; m + 2 * GHOSTS];
        out[GHOSTS..GHOSTS + m].copy_from_slice(line);
        match self {
            Axis::Face(_) => {
                let ext = |g: [f64; 4]| {
                    [
                        4.0 * g[0] - 6.0 * g[1] + 4.0 * g[2] - g[3],
                        10.0 * g[0] - 20.0 * g[1] + 15.0 * g[2] - 4.0 * g[3],
                    ]
                };
                let lo = ext([line[0], line[1], line[2], line[3]]);
                let hi = ext([line[m - 1], line[m - 2], line[m - 3], line[m - 4]]);
                for g in 0..GHOSTS {
                    out[GHOSTS - 1 - g] = lo[g];
                    out[GHOSTS + m + g] = hi[g];
                }
            }
            Axis::Centre(_) => {
                for g in 0..GHOSTS {
                    out[GHOSTS - 1 - g] = line[g];
                    out[GHOSTS + m + g] = line[m - 1 - g];
                }
            }
        }
        out
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let (t2, t3) = (t * t, t * t * t);
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

fn catmull_rom_slope(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ]
}

/// A scalar field on a staggered grid with Catmull-Rom interpolation.
#[derive(Debug, Clone)]
struct Staggered {
    ax: Axis,
    ay: Axis,
    /// Row-major samples including `GHOSTS` layers on every side.
    padded: Vec<f64>,
    stride: usize,
    rows: usize,
}

impl Staggered {
    fn new(ax: Axis, ay: Axis, data: &[f64]) -> Self {
        let (mx, my) = (ax.len(), ay.len());
        let stride = mx + 2 * GHOSTS;
        let rows = my + 2 * GHOSTS;
        let wide: Vec<Vec<f64>> = data.chunks(mx).map(|r| ax.pad(r)).collect();
        let mut padded = vec![0.0; stride * rows];
        for i in 0..stride {
            let col: Vec<f64> = wide.iter().map(|r| r[i]).collect();
            for (j, v) in ay.pad(&col).into_iter().enumerate() {
                padded[j * stride + i] = v;
            }
        }
        Staggered { ax, ay, padded, stride, rows }
    }

    /// Value and index-space gradient at `(u, v)`, measured in grid spacings
    /// from the lower-left corner.
    fn sample(&self, u: f64, v: f64) -> (f64, P2) {
        let (u, v) = (u - self.ax.offset(), v - self.ay.offset());
        let iu = (u.floor() as i64).clamp(-1, self.stride as i64 - 2 * GHOSTS as i64 - 1);
        let iv = (v.floor() as i64).clamp(-1, self.rows as i64 - 2 * GHOSTS as i64 - 1);
        let (tu, tv) = (u - iu as f64, v - iv as f64);
        let (wu, du) = (catmull_rom(tu), catmull_rom_slope(tu));
        let (wv, dv) = (catmull_rom(tv), catmull_rom_slope(tv));
        let (ox, oy) = ((iu - 1 + GHOSTS as i64) as usize, (iv - 1 + GHOSTS as i64) as usize);
        let (mut val, mut gu, mut gv) = (0.0, 0.0, 0.0);
        for b in 0..4 {
            let row = &self.padded[(oy + b) * self.stride + ox..(oy + b) * self.stride + ox + 4];
            let (mut r, mut rd) = (0.0, 0.0);
            for a in 0..4 {
                r += wu[a] * row[a];
                rd += du[a] * row[a];
            }
            val += wv[b] * r;
            gu += wv[b] * rd;
            gv += dv[b] * r;
        }
        (val, [gu, gv])
    }
}

/// Time-1 map of the Moser vector field on a rectangle.
pub struct MoserFlow {
    min: P2,
    max: P2,
    spacing: P2,
    grad_x: Staggered,
    grad_y: Staggered,
    density: SharedMap,
    steps: usize,
    trivial: bool,
}

impl MoserFlow {
    /// Solves for the potential of `density` (whose Jacobian is the target
    /// density) on the rectangle `[min, max]` with `n × n` cells.
    pub fn new(min: P2, max: P2, density: SharedMap, n: usize, steps: usize) -> Result<Self> {
        let h = [(max[0] - min[0]) / n as f64, (max[1] - min[1]) / n as f64];
        let rhs: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let x = [min[0] + ((k % n) as f64 + 0.5) * h[0], min[1] + ((k / n) as f64 + 0.5) * h[1]];
                density.jacobian_det(x) - 1.0
            })
            .collect();
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density"));
        }
        let trivial = rhs.iter().all(|v| *v == 0.0);
        let theta = if trivial { vec![0.0; n * n] } else { neumann_poisson(&rhs, n, n, h[0], h[1])? };
        let mut gx = vec![0.0; (n + 1) * n];
        let mut gy = vec![0.0; n * (n + 1)];
        for j in 0..n {
            for i in 1..n {
                gx[j * (n + 1) + i] = (theta[j * n + i] - theta[j * n + i - 1]) / h[0];
            }
        }
        for j in 1..n {
            for i in 0..n {
                gy[j * n + i] = (theta[j * n + i] - theta[(j - 1) * n + i]) / h[1];
            }
        }
        Ok(MoserFlow {
            min,
            max,
            spacing: h,
            grad_x: Staggered::new(Axis::Face(n), Axis::Centre(n), &gx),
            grad_y: Staggered::new(Axis::Centre(n), Axis::Face(n), &gy),
            density,
            steps,
            trivial,
        })
    }

    /// `v_t(x)` and its derivative `Dv_t(x)`.
    fn velocity(&self, t: f64, x: P2) -> (P2, M2) {
        let c = [x[0].clamp(self.min[0], self.max[0]), x[1].clamp(self.min[1], self.max[1])];
        let (u, v) = ((c[0] - self.min[0]) / self.spacing[0], (c[1] - self.min[1]) / self.spacing[1]);
        let (gx, dgx) = self.grad_x.sample(u, v);
        let (gy, dgy) = self.grad_y.sample(u, v);
        let mu = (1.0 - t) + t * self.density.jacobian_det(c);
        let dj = self.density.jacobian_det_gradient(c);
        let dmu = [t * dj[0], t * dj[1]];
        let (hx, hy) = (self.spacing[0], self.spacing[1]);
        let dg = [[dgx[0] / hx, dgx[1] / hy], [dgy[0] / hx, dgy[1] / hy]];
        let g = [gx, gy];
        let mut dv = [[0.0; 2]; 2];
        for r in 0..2 {
            for k in 0..2 {
                dv[r][k] = -dg[r][k] / mu + g[r] * dmu[k] / (mu * mu);
            }
        }
        ([-gx / mu, -gy / mu], dv)
    }

    /// RK4 on the position together with the variational equation `Ṁ = Dv·M`.
    /// The clock `t = 1 − (1−τ)²` is uniform in `τ`; it slows down near
    /// `t = 1`, where `μ_t` approaches the smallest densities.
    fn integrate(&self, x: P2) -> (P2, M2) {
        if self.trivial {
            return (x, [[1.0, 0.0], [0.0, 1.0]]);
        }
        type State = (P2, M2);
        let rhs = |tau: f64, s: &State| -> State {
            let rate = 2.0 * (1.0 - tau);
            let (v, dv) = self.velocity(1.0 - (1.0 - tau) * (1.0 - tau), s.0);
            let m = matmul(&dv, &s.1);
            (
                [rate * v[0], rate * v[1]],
                [[rate * m[0][0], rate * m[0][1]], [rate * m[1][0], rate * m[1][1]]],
            )
        };
        let axpy = |s: &State, k: &State, a: f64| -> State {
            let mut out = *s;
            for i in 0..2 {
                out.0[i] += a * k.0[i];
                for j in 0..2 {
                    out.1[i][j] += a * k.1[i][j];
                }
            }
            out
        };
        let dt = 1.0 / self.steps as f64;
        let mut y: State = (x, [[1.0, 0.0], [0.0, 1.0]]);
        for step in 0..self.steps {
            let t = step as f64 * dt;
            let k1 = rhs(t, &y);
            let k2 = rhs(t + 0.5 * dt, &axpy(&y, &k1, 0.5 * dt));
            let k3 = rhs(t + 0.5 * dt, &axpy(&y, &k2, 0.5 * dt));
            let k4 = rhs(t + dt, &axpy(&y, &k3, dt));
            for (k, w) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
                y = axpy(&y, k, w * dt / 6.0);
            }
        }
        y
    }
}

impl PlanarMap for MoserFlow {
    fn apply(&self, x: P2) -> P2 {
        self.integrate(x).0
    }

    fn jacobian(&self, x: P2) -> M2 {
        self.integrate(x).1
    }

    fn apply_with_jacobian(&self, x: P2) -> (P2, M2) {
        self.integrate(x)
    }
}

/// `ψ∘χ` for the Moser flow `χ` of `domain` that corrects the density of `map`.
/// Rectangles are solved on the grid; other domains are only accepted when
/// `map` is already area preserving there (judged on `jacobian`).
pub fn moser_map(map: &SharedMap, domain: &PlanarDomain, jacobian: &[f64], opts: &EmbedOptions) -> Result<SharedMap> {
    opts.validate()?;
    let chi: SharedMap = match domain {
        PlanarDomain::Rectangle { min, max } => {
            let area = domain.area();
            let image = mean_density(domain, map, opts.grid) * area;
            if (image - area).abs() > 1e-6 * area {
                return Err(Error::Construction(format!("image area {image} differs from domain area {area}")));
            }
            Arc::new(MoserFlow::new(*min, *max, map.clone(), opts.grid, opts.flow_steps)?)
        }
        _ => {
            let worst = jacobian.iter().filter(|j| !j.is_nan()).fold(0.0f64, |m, j| m.max((j - 1.0).abs()));
            if worst > opts.tolerance {
                return Err(Error::UnsupportedDomain(format!(
                    "density correction on {domain:?} needs a rectangular grid (|det − 1| up to {worst:.2e})"
                )));
            }
            Arc::new(Affine::identity())
        }
    };
    Ok(compose(chi, map.clone()))
}

/// Precomposes `psi` with a Moser flow of its domain so that the result has
/// unit Jacobian on the grid, within `opts.tolerance`.
pub fn moser_correct(psi: &GridMap2D, opts: &EmbedOptions) -> Result<GridMap2D> {
    let map = moser_map(psi.map(), psi.domain(), psi.jacobian_field(), opts)?;
    let corrected = GridMap2D::sample(psi.domain().clone(), map, opts.grid)?;
    let cert = corrected.jacobian_certificate(opts.tolerance);
    if !cert.pass {
        return Err(Error::JacobianResidual { residual: cert.max_deviation, tolerance: opts.tolerance });
    }
    Ok(corrected)
}

/// Average of `det Dφ` over a rectangle by tensor Gauss–Legendre panels.
fn mean_density(domain: &PlanarDomain, map: &SharedMap, grid: usize) -> f64 {
    let (lo, hi) = domain.bounding_box();
    let (x, w) = gauss_legendre(8);
    let panels = (grid / 8).max(8);
    let h = [(hi[0] - lo[0]) / panels as f64, (hi[1] - lo[1]) / panels as f64];
    // collected before summing so the result does not depend on thread scheduling
    let cells: Vec<f64> = (0..panels * panels)
        .into_par_iter()
        .map(|k| {
            let c = [lo[0] + ((k % panels) as f64 + 0.5) * h[0], lo[1] + ((k / panels) as f64 + 0.5) * h[1]];
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                for (yj, wj) in x.iter().zip(&w) {
                    s += wi * wj * map.jacobian_det([c[0] + 0.5 * h[0] * xi, c[1] + 0.5 * h[1] * yj]);
                }
            }
            s * 0.25
        })
        .collect();
    cells.iter().sum::<f64>() / (panels * panels) as f64
}

/// Result of [`volume_embed`]: the corrected map plus the pieces it is built from.
#[derive(Debug)]
pub struct VolumeEmbedding {
    pub map: GridMap2D,
    pub target_area: f64,
    pub target_radius: f64,
    /// Factor of the shrinking homothety (1 on the disc branch).
    pub shrink: f64,
    pub certificate: JacobianCertificate,
    pub image_radius: f64,
}

impl VolumeEmbedding {
    pub fn inside_target(&self) -> bool {
        self.image_radius < self.target_radius
    }
}

/// Area-preserving embedding of `domain` into the open disc of area `c`
/// centred at the origin.
pub fn volume_embed(domain: &PlanarDomain, c: f64) -> Result<VolumeEmbedding> {
    volume_embed_with(domain, c, &EmbedOptions::default())
}

/// The map behind [`volume_embed`] without grid sampling, with the factor
/// of the shrinking homothety (1 when no radial step was needed).
pub fn volume_embed_map(domain: &PlanarDomain, c: f64, opts: &EmbedOptions) -> Result<(SharedMap, f64)> {
    opts.validate()?;
    let area = domain.area();
    if !(c > area) {
        return Err(Error::InvalidArgument(format!("target area {c} must exceed the domain area {area}")));
    }
    let target_radius = (c / PI).sqrt();
    match domain {
        PlanarDomain::Disc { center, .. } => Ok((Arc::new(Affine::translation([-center[0], -center[1]])), 1.0)),
        PlanarDomain::Rectangle { min, max } => {
            let (w, h) = (max[0] - min[0], max[1] - min[1]);
            let side = (w * h).sqrt();
            let centre = domain.center();
            let normalize = Affine {
                m: [[side / w, 0.0], [0.0, side / h]],
                b: [-side / w * centre[0], -side / h * centre[1]],
            };
            let square = PlanarDomain::rectangle([-0.5 * side, -0.5 * side], [0.5 * side, 0.5 * side])?;
            let r0 = (area / PI).sqrt();
            let mut shrink = 1.0;
            let psi: SharedMap = match radial_choice(&square, target_radius, r0, opts)? {
                RadialChoice::Squeeze(mut rs) => {
                    let image = star_area(|t| rs.profile(square.boundary_radius(t)), &square.kinks());
                    shrink = (area / image).sqrt();
                    rs.shrink = shrink;
                    Arc::new(rs)
                }
                other => other.shared(),
            };
            let corrected = moser_map(&psi, &square, &[], opts)?;
            Ok((compose(Arc::new(normalize), corrected), shrink))
        }
        PlanarDomain::Star { .. } => Err(Error::UnsupportedDomain("volume_embed handles discs and rectangles".into())),
    }
}

pub fn volume_embed_with(domain: &PlanarDomain, c: f64, opts: &EmbedOptions) -> Result<VolumeEmbedding> {
    let (map, shrink) = volume_embed_map(domain, c, opts)?;
    let map = GridMap2D::sample(domain.clone(), map, opts.grid)?;
    let certificate = map.jacobian_certificate(opts.tolerance);
    let image_radius = map.image_radius(16 * opts.grid);
    Ok(VolumeEmbedding { map, target_area: c, target_radius: (c / PI).sqrt(), shrink, certificate, image_radius })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> PlanarDomain {
        PlanarDomain::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn poisson_matches_discrete_cosine_mode() {
        // a single cosine mode is an exact eigenvector of the reflecting Laplacian
        let (nx, ny, hx, hy) = (32, 24, 0.1, 0.05);
        let (kx, ky) = (3.0, 2.0);
        let mode = |i: usize, j: usize| {
            (PI * kx * (i as f64 + 0.5) / nx as f64).cos() * (PI * ky * (j as f64 + 0.5) / ny as f64).cos()
        };
        let lam = -4.0 / (hx * hx) * (PI * kx / (2.0 * nx as f64)).sin().powi(2)
            - 4.0 / (hy * hy) * (PI * ky / (2.0 * ny as f64)).sin().powi(2);
        let rhs: Vec<f64> = (0..nx * ny).map(|k| lam * mode(k % nx, k / nx)).collect();
        let theta = neumann_poisson(&rhs, nx, ny, hx, hy).unwrap();
        for k in 0..nx * ny {
            assert!((theta[k] - mode(k % nx, k / nx)).abs() < 1e-12);
        }
    }

    #[test]
    fn catmull_rom_reproduces_quadratics_and_reflections() {
        let n = 8;
        let data: Vec<f64> = (0..n * n).map(|k| ((k % n) as f64 + 0.5).powi(2) + (k / n) as f64 + 0.5).collect();
        let f = Staggered::new(Axis::Centre(n), Axis::Centre(n), &data);
        let (val, grad) = f.sample(3.3, 4.7);
        assert!((val - (3.3f64.powi(2) + 4.7)).abs() < 1e-12);
        assert!((grad[0] - 6.6).abs() < 1e-12 && (grad[1] - 1.0).abs() < 1e-12);
        // odd face field vanishes on the edge
        let data: Vec<f64> = (0..(n + 1) * n).map(|k| ((k % (n + 1)) * (n - k % (n + 1))) as f64).collect();
        let g = Staggered::new(Axis::Face(n), Axis::Centre(n), &data);
        assert_eq!(g.sample(0.0, 3.0).0, 0.0);
        // quadratic data is reproduced through the extrapolated ghosts
        assert!((g.sample(-0.3, 2.0).0 - (-0.3 * (n as f64 + 0.3))).abs() < 1e-12);
    }

    #[test]
    fn radial_embed_of_square() {
        let sq = PlanarDomain::rectangle([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let g = radial_embed_with(&sq, 1.0, 0.4, &EmbedOptions { grid: 128, ..Default::default() }).unwrap();
        assert!(g.image_radius(4096) < 1.0);
        assert!(g.image_inradius(4096) >= 0.4);
        assert!(g.min_jacobian() > 0.0);
    }

    #[test]
    fn radial_embed_trivial_branches() {
        let opts = EmbedOptions { grid: 64, ..Default::default() };
        let disc = PlanarDomain::disc([0.3, 0.0], 2.0).unwrap();
        let g = radial_embed_with(&disc, 1.0, 0.5, &opts).unwrap();
        assert!(g.image_radius(1024) < 1.0 && g.image_inradius(1024) > 0.5);
        let small = PlanarDomain::disc([0.0, 0.0], 0.7).unwrap();
        let g = radial_embed_with(&small, 1.0, 0.5, &opts).unwrap();
        assert_eq!(g.eval([0.2, -0.1]), [0.2, -0.1]);
        assert!(radial_embed_with(&small, 0.5, 0.5, &opts).is_err());
        let sq = PlanarDomain::rectangle([-1.0, -1.0], [1.0, 1.0]).unwrap();
        assert!(matches!(radial_embed_with(&sq, 1.0, 1.0 - 1e-12, &opts), Err(Error::Construction(_))));
    }

    #[test]
    fn moser_on_area_preserving_map_is_identity() {
        let sq = unit_square();
        let shear: SharedMap = Arc::new(Affine { m: [[1.0, 0.4], [0.0, 1.0]], b: [0.0, 0.0] });
        let psi = GridMap2D::sample(sq, shear.clone(), 64).unwrap();
        let out = moser_correct(&psi, &EmbedOptions { grid: 64, ..Default::default() }).unwrap();
        for (x, y) in out.samples() {
            let e = shear.apply(x);
            assert!((e[0] - y[0]).hypot(e[1] - y[1]) <= 1e-6);
        }
        let disc = PlanarDomain::disc([0.0, 0.0], 1.0).unwrap();
        let stretch: SharedMap = Arc::new(Affine { m: [[2.0, 0.0], [0.0, 0.5]], b: [0.0, 0.0] });
        let psi = GridMap2D::sample(disc.clone(), stretch, 64).unwrap();
        let out = moser_correct(&psi, &EmbedOptions { grid: 64, ..Default::default() }).unwrap();
        assert!(out.jacobian_certificate(1e-4).pass);
        let bent: SharedMap = Arc::new(RadialSqueeze { center: [0.0, 0.0], radius: 1.0, length: 1.0, power: 4, shrink: 1.0 });
        let psi = GridMap2D::sample(disc, bent, 64).unwrap();
        assert!(matches!(moser_correct(&psi, &EmbedOptions { grid: 64, ..Default::default() }), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn volume_embed_preconditions_and_disc_branch() {
        assert!(volume_embed(&unit_square(), 1.0).is_err());
        let disc = PlanarDomain::disc([2.0, -1.0], (1.0 / PI).sqrt()).unwrap();
        let e = volume_embed_with(&disc, 1.1, &EmbedOptions { grid: 64, ..Default::default() }).unwrap();
        assert!(e.certificate.max_deviation < 1e-12);
        assert!(e.inside_target());
        let star = PlanarDomain::star([0.0, 0.0], Arc::new(|t: f64| 1.0 + 0.2 * (3.0 * t).cos())).unwrap();
        assert!(matches!(volume_embed(&star, 10.0), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn flow_jacobian_matches_finite_differences() {
        let opts = EmbedOptions { grid: 64, ..Default::default() };
        let (map, _) = volume_embed_map(&unit_square(), 1.1, &opts).unwrap();
        for x in [[0.5, 0.5], [0.1, 0.8], [0.93, 0.07], [0.31, 0.66]] {
            let (_, exact) = map.apply_with_jacobian(x);
            let h = 1e-6;
            for k in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let (fp, fm) = (map.apply(xp), map.apply(xm));
                for r in 0..2 {
                    assert!(((fp[r] - fm[r]) / (2.0 * h) - exact[r][k]).abs() < 1e-6, "{x:?} {r} {k}");
                }
            }
        }
    }

    #[test]
    fn corrected_square_is_area_preserving_into_target() {
        let e = volume_embed_with(&unit_square(), 1.1, &EmbedOptions { grid: 128, ..Default::default() }).unwrap();
        assert!(e.certificate.max_deviation < 1e-3, "{:?}", e.certificate);
        assert!(e.inside_target());
        assert!(e.shrink < 1.0);
        // boundary goes to boundary, so the image curve encloses area |U|
        let ring: Vec<P2> = unit_square().boundary_samples(8192).into_iter().map(|b| e.map.eval(b)).collect();
        let enclosed: f64 = (0..ring.len())
            .map(|i| {
                let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
                0.5 * (a[0] * b[1] - a[1] * b[0])
            })
            .sum();
        assert!((enclosed - 1.0).abs() < 1e-3, "{enclosed}");
    }

    #[test]
    fn refinement_is_second_order_on_probes() {
        let probes = [[0.2, 0.3], [0.7, 0.9], [0.5, 0.05], [0.95, 0.5]];
        let maps: Vec<SharedMap> = [32, 64, 128]
            .iter()
            .map(|&grid| volume_embed_map(&unit_square(), 1.1, &EmbedOptions { grid, ..Default::default() }).unwrap().0)
            .collect();
        let gap = |a: &SharedMap, b: &SharedMap| {
            probes.iter().map(|x| {
                let (u, v) = (a.apply(*x), b.apply(*x));
                (u[0] - v[0]).hypot(u[1] - v[1])
            }).fold(0.0, f64::max)
        };
        let (coarse, fine) = (gap(&maps[0], &maps[1]), gap(&maps[1], &maps[2]));
        assert!(coarse / fine > 3.0, "{coarse:e} {fine:e}");
    }

    #[test]
    fn inverse_recovers_nodes() {
        let e = volume_embed_with(&unit_square(), 1.1, &EmbedOptions { grid: 32, ..Default::default() }).unwrap();
        let x = [0.37, 0.61];
        let back = e.map.inverse(e.map.eval(x)).unwrap();
        assert!((back[0] - x[0]).hypot(back[1] - x[1]) < 1e-9);
    }
}
