//! Linear-symplectic primitives on `R^{2n} = C^n`.
//!
//! Coordinates are ordered `(q_1, …, q_n, p_1, …, p_n)` and the complex
//! identification is `z_j = q_j + i p_j`. The standard form is
//! `ω₀ = Σ dq_j ∧ dp_j` and the Liouville form is `α = q · dp`, so that
//! `dα = ω₀` and loop integrals of `α` give enclosed symplectic area.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of samples on a loop.
pub const DEFAULT_LOOP_SAMPLES: usize = 2048;
/// Default absolute tolerance for area comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// A point of `R^{2n}` stored as `(q, p)`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    coords: Vec<f64>,
}

impl PhasePoint {
    pub fn new(n: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("half-dimension must be positive".into()));
        }
        if coords.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: coords.len() });
        }
        Ok(PhasePoint { coords })
    }

    /// Builds a point from raw coordinates; the length must be even and positive.
    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "coordinate vector of length {} is not 2n",
                coords.len()
            )));
        }
        Ok(PhasePoint { coords })
    }

    pub fn zero(n: usize) -> Self {
        PhasePoint { coords: vec![0.0; 2 * n] }
    }

    pub fn from_complex(z: &[Complex64]) -> Self {
        let n = z.len();
        let mut coords = vec![0.0; 2 * n];
        for (j, zj) in z.iter().enumerate() {
            coords[j] = zj.re;
            coords[n + j] = zj.im;
        }
        PhasePoint { coords }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        let n = self.n();
        (0..n).map(|j| Complex64::new(self.coords[j], self.coords[n + j])).collect()
    }

    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn q(&self) -> &[f64] {
        &self.coords[..self.n()]
    }

    pub fn p(&self) -> &[f64] {
        &self.coords[self.n()..]
    }

    /// The `j`-th complex coordinate (zero based).
    pub fn z(&self, j: usize) -> Complex64 {
        let n = self.n();
        Complex64::new(self.coords[j], self.coords[n + j])
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, c: f64) -> PhasePoint {
        PhasePoint { coords: self.coords.iter().map(|x| c * x).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

impl fmt::Debug for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhasePoint(q={:?}, p={:?})", self.q(), self.p())
    }
}

/// `ω₀(u, v) = Σ_j (u_{q_j} v_{p_j} − u_{p_j} v_{q_j})`.
pub fn omega0(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    if u.is_empty() || !u.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("vector length {} is not 2n", u.len())));
    }
    let n = u.len() / 2;
    Ok((0..n).map(|j| u[j] * v[n + j] - u[n + j] * v[j]).sum())
}

pub type PathFn = Arc<dyn Fn(f64) -> PhasePoint + Send + Sync>;
pub type TangentFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A closed curve `[0,1] → R^{2n}` together with its uniform sample grid.
#[derive(Clone)]
pub struct Loop {
    n: usize,
    eval: PathFn,
    derivative: Option<TangentFn>,
    samples: Vec<PhasePoint>,
}

impl fmt::Debug for Loop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Loop")
            .field("n", &self.n)
            .field("samples", &self.samples.len())
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl Loop {
    /// Samples `eval` on `m + 1` uniform points and checks closure.
    pub fn new(n: usize, m: usize, eval: PathFn) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidArgument(format!("need at least 4 loop samples, got {m}")));
        }
        let samples: Vec<PhasePoint> = (0..=m).map(|i| eval(i as f64 / m as f64)).collect();
        for s in &samples {
            if s.n() != n {
                return Err(Error::DimensionMismatch { expected: 2 * n, got: 2 * s.n() });
            }
            if !s.is_finite() {
                return Err(Error::NonFinite("loop sample"));
            }
        }
        let gap = samples[0].distance(&samples[m]);
        let scale = 1.0 + samples[0].norm();
        if gap > 1e-9 * scale {
            return Err(Error::OpenLoop { gap });
        }
        Ok(Loop { n, eval, derivative: None, samples })
    }

    pub fn from_fn<F>(n: usize, m: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> PhasePoint + Send + Sync + 'static,
    {
        Loop::new(n, m, Arc::new(f))
    }

    /// Attaches an analytic tangent `t ↦ x'(t)`.
    pub fn with_derivative(mut self, d: TangentFn) -> Self {
        self.derivative = Some(d);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid intervals `M`.
    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn samples(&self) -> &[PhasePoint] {
        &self.samples
    }

    pub fn eval(&self, t: f64) -> PhasePoint {
        (self.eval)(t)
    }

    pub fn eval_fn(&self) -> PathFn {
        self.eval.clone()
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// Tangent vector at grid node `i`: analytic if available, otherwise
    /// fourth-order central differences on the periodic grid.
    pub fn tangent_at(&self, i: usize) -> Vec<f64> {
        let m = self.intervals();
        if let Some(d) = &self.derivative {
            return d(i as f64 / m as f64);
        }
        let h = 1.0 / m as f64;
        let idx = |k: isize| -> &PhasePoint {
            let j = (i as isize + k).rem_euclid(m as isize) as usize;
            &self.samples[j]
        };
        let (xm2, xm1, xp1, xp2) = (idx(-2), idx(-1), idx(1), idx(2));
        (0..2 * self.n)
            .map(|c| {
                (-xp2.coords[c] + 8.0 * xp1.coords[c] - 8.0 * xm1.coords[c] + xm2.coords[c])
                    / (12.0 * h)
            })
            .collect()
    }

    /// Resamples the same curve on a different grid.
    pub fn resampled(&self, m: usize) -> Result<Loop> {
        let mut l = Loop::new(self.n, m, self.eval.clone())?;
        l.derivative = self.derivative.clone();
        Ok(l)
    }

    /// Applies a linear map to the curve; tangents are mapped by the same map.
    pub fn map_linear<F>(&self, f: F) -> Result<Loop>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let f = Arc::new(f);
        let eval = self.eval.clone();
        let f1 = f.clone();
        let out_n = f(self.samples[0].coords()).len() / 2;
        let mapped: PathFn = Arc::new(move |t| {
            PhasePoint::from_coords(f1(eval(t).coords())).expect("linear map must return 2n coordinates")
        });
        let mut l = Loop::new(out_n, self.intervals(), mapped)?;
        if let Some(d) = self.derivative.clone() {
            let f2 = f.clone();
            l.derivative = Some(Arc::new(move |t| f2(&d(t))));
        }
        Ok(l)
    }

    /// Applies an arbitrary smooth map; tangents fall back to finite differences.
    pub fn map_points<F>(&self, f: F) -> Result<Loop>
    where
        F: Fn(&PhasePoint) -> PhasePoint + Send + Sync + 'static,
    {
        let eval = self.eval.clone();
        let out_n = f(&self.samples[0]).n();
        Loop::new(out_n, self.intervals(), Arc::new(move |t| f(&eval(t))))
    }

    /// Precomposition with an orientation-preserving reparametrization `σ` of `[0,1]`.
    pub fn reparametrized<F>(&self, sigma: F) -> Result<Loop>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let eval = self.eval.clone();
        Loop::new(self.n, self.intervals(), Arc::new(move |t| eval(sigma(t))))
    }
}

/// `∫_{S¹} x*α = ∫₀¹ q(t)·ṗ(t) dt` by composite quadrature on the sample grid.
///
/// Orders 2 and 3 use the trapezoid rule, order 4 and above composite Simpson
/// (which requires an even number of intervals).
pub fn liouville_integral(x: &Loop, order: usize) -> Result<f64> {
    if order < 2 {
        return Err(Error::InvalidArgument(format!("quadrature order {order} < 2")));
    }
    let m = x.intervals();
    let n = x.n();
    let gap = x.samples[0].distance(&x.samples[m]);
    if gap > 1e-9 * (1.0 + x.samples[0].norm()) {
        return Err(Error::OpenLoop { gap });
    }
    let integrand: Vec<f64> = (0..=m)
        .map(|i| {
            let xi = &x.samples[i];
            let v = x.tangent_at(i);
            (0..n).map(|j| xi.coords[j] * v[n + j]).sum::<f64>()
        })
        .collect();
    if integrand.iter().any(|f| !f.is_finite()) {
        return Err(Error::NonFinite("Liouville integrand"));
    }
    let h = 1.0 / m as f64;
    let value = if order < 4 {
        h * (0.5 * integrand[0] + integrand[1..m].iter().sum::<f64>() + 0.5 * integrand[m])
    } else {
        if !m.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "Simpson quadrature needs an even number of intervals, got {m}"
            )));
        }
        let mut s = integrand[0] + integrand[m];
        for (i, f) in integrand.iter().enumerate().take(m).skip(1) {
            s += if i % 2 == 1 { 4.0 * f } else { 2.0 * f };
        }
        s * h / 3.0
    };
    Ok(value)
}

/// Symplectic area of a loop with the default (Simpson) quadrature.
pub fn loop_area(x: &Loop) -> Result<f64> {
    liouville_integral(x, 4)
}

/// `max_probes ‖DφᵀJDφ − J‖_max` with `Dφ` from central differences of step `h`.
pub fn symplecticity_defect<F>(map: F, probes: &[PhasePoint], h: f64) -> Result<f64>
where
    F: Fn(&PhasePoint) -> Result<PhasePoint> + Sync,
{
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("finite-difference step {h}")));
    }
    let defects: Vec<Result<f64>> = probes
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            let dim = x.coords.len();
            let wrap = |r: Result<PhasePoint>| -> Result<PhasePoint> {
                match r {
                    Ok(p) if p.is_finite() && p.coords.len() == dim => Ok(p),
                    Ok(p) if !p.is_finite() => Err(Error::MapEvaluation {
                        index,
                        reason: "non-finite image".into(),
                    }),
                    Ok(p) => Err(Error::MapEvaluation {
                        index,
                        reason: format!("image has {} coordinates, expected {dim}", p.coords.len()),
                    }),
                    Err(e) => Err(Error::MapEvaluation { index, reason: e.to_string() }),
                }
            };
            // jac[c][r] = ∂φ_r / ∂x_c
            let mut jac = vec![vec![0.0; dim]; dim];
            for c in 0..dim {
                let mut xp = x.coords.clone();
                let mut xm = x.coords.clone();
                xp[c] += h;
                xm[c] -= h;
                let fp = wrap(map(&PhasePoint { coords: xp }))?;
                let fm = wrap(map(&PhasePoint { coords: xm }))?;
                for r in 0..dim {
                    jac[c][r] = (fp.coords[r] - fm.coords[r]) / (2.0 * h);
                }
            }
            let n = dim / 2;
            let mut worst: f64 = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    let w = omega0(&jac[a], &jac[b])?;
                    let j_ab = if a < n && b == a + n {
                        1.0
                    } else if a >= n && b + n == a {
                        -1.0
                    } else {
                        0.0
                    };
                    worst = worst.max((w - j_ab).abs());
                }
            }
            Ok(worst)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for d in defects {
        worst = worst.max(d?);
    }
    Ok(worst)
}

/// Open ball `B^{2n}(a)` of radius `√(a/π)`; closedness is handled by slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub capacity: f64,
}

impl BallSpec {
    pub fn new(capacity: f64) -> Result<Self> {
        if capacity <= 0.0 || !capacity.is_finite() {
            return Err(Error::InvalidArgument(format!("ball capacity {capacity}")));
        }
        Ok(BallSpec { capacity })
    }

    pub fn with_radius(radius: f64) -> Result<Self> {
        BallSpec::new(PI * radius * radius)
    }

    pub fn radius(&self) -> f64 {
        (self.capacity / PI).sqrt()
    }
}

/// Cylinder `Z^{2n}(a) = B²(a) × R^{2n−2}`, constraining only `(q_1, p_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub capacity: f64,
}

impl CylinderSpec {
    pub fn new(capacity: f64) -> Result<Self> {
        if capacity <= 0.0 || !capacity.is_finite() {
            return Err(Error::InvalidArgument(format!("cylinder capacity {capacity}")));
        }
        Ok(CylinderSpec { capacity })
    }

    pub fn radius(&self) -> f64 {
        (self.capacity / PI).sqrt()
    }
}

/// Product of closed discs, one per complex coordinate; `None` means unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolydiscSpec {
    pub radii: Vec<Option<f64>>,
}

impl PolydiscSpec {
    /// `D^n` for even `n`, `D^{n−1} × C` for odd `n`.
    pub fn standard(n: usize) -> Self {
        let mut radii = vec![Some(1.0); n];
        if n % 2 == 1 {
            radii[n - 1] = None;
        }
        PolydiscSpec { radii }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Ball(BallSpec),
    Cylinder(CylinderSpec),
    Polydisc(PolydiscSpec),
}

impl Region {
    /// Signed excess of `x` over the region boundary (≤ 0 inside).
    pub fn violation(&self, x: &PhasePoint) -> Result<f64> {
        match self {
            Region::Ball(b) => Ok(x.norm() - b.radius()),
            Region::Cylinder(c) => Ok(x.z(0).norm() - c.radius()),
            Region::Polydisc(p) => {
                if p.radii.len() != x.n() {
                    return Err(Error::DimensionMismatch { expected: 2 * p.radii.len(), got: 2 * x.n() });
                }
                let mut worst = f64::NEG_INFINITY;
                for (j, r) in p.radii.iter().enumerate() {
                    if let Some(r) = r {
                        worst = worst.max(x.z(j).norm() - r);
                    }
                }
                Ok(worst)
            }
        }
    }

    /// Enlarges the region by a factor `s ≥ 1` (radii scale by `s`).
    pub fn enlarged(&self, s: f64) -> Region {
        match self {
            Region::Ball(b) => Region::Ball(BallSpec { capacity: b.capacity * s * s }),
            Region::Cylinder(c) => Region::Cylinder(CylinderSpec { capacity: c.capacity * s * s }),
            Region::Polydisc(p) => Region::Polydisc(PolydiscSpec {
                radii: p.radii.iter().map(|r| r.map(|r| r * s)).collect(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(m: usize) -> Loop {
        Loop::from_fn(1, m, |t| {
            let a = 2.0 * PI * t;
            PhasePoint::new(1, vec![a.cos(), a.sin()]).unwrap()
        })
        .unwrap()
    }

    #[test]
    fn omega0_normalization() {
        assert_eq!(omega0(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let u = [0.3, -1.2, 2.0, 0.7];
        assert_eq!(omega0(&u, &u).unwrap(), 0.0);
        assert_eq!(omega0(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn omega0_dimension_mismatch() {
        assert!(matches!(
            omega0(&[1.0, 0.0], &[0.0, 1.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn complex_view_round_trips_exactly() {
        let x = PhasePoint::new(3, vec![0.1, -2.5, 3.0, 1e-300, 7.25, -0.0]).unwrap();
        let back = PhasePoint::from_complex(&x.to_complex());
        assert_eq!(x.coords(), back.coords());
        assert_eq!(x.z(1), Complex64::new(-2.5, 7.25));
    }

    #[test]
    fn unit_circle_area() {
        let a = liouville_integral(&circle(1024), 4).unwrap();
        assert!((a - PI).abs() < 1e-8, "{a}");
    }

    #[test]
    fn constant_loop_has_zero_area() {
        let l = Loop::from_fn(2, 64, |_| PhasePoint::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        assert_eq!(liouville_integral(&l, 4).unwrap(), 0.0);
    }

    #[test]
    fn open_loop_rejected() {
        let r = Loop::from_fn(1, 64, |t| PhasePoint::new(1, vec![t, 0.0]).unwrap());
        assert!(matches!(r, Err(Error::OpenLoop { .. })));
    }

    #[test]
    fn non_finite_samples_rejected() {
        let r = Loop::from_fn(1, 64, |t| PhasePoint::new(1, vec![(t - 0.5).ln(), 0.0]).unwrap());
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn low_order_rejected() {
        assert!(liouville_integral(&circle(64), 1).is_err());
    }

    #[test]
    fn analytic_derivative_is_used() {
        let l = circle(256).with_derivative(Arc::new(|t| {
            let a = 2.0 * PI * t;
            vec![-2.0 * PI * a.sin(), 2.0 * PI * a.cos()]
        }));
        let a = liouville_integral(&l, 4).unwrap();
        assert!((a - PI).abs() < 1e-12);
    }

    #[test]
    fn identity_and_shear_are_symplectic() {
        let probes: Vec<PhasePoint> = (0..20)
            .map(|i| PhasePoint::new(1, vec![0.1 * i as f64, -0.05 * i as f64]).unwrap())
            .collect();
        let id = symplecticity_defect(|x| Ok(x.clone()), &probes, 1e-4).unwrap();
        assert!(id < 1e-10);
        let shear = symplecticity_defect(
            |x| Ok(PhasePoint::new(1, vec![x.q()[0], x.p()[0] + x.q()[0]]).unwrap()),
            &probes,
            1e-4,
        )
        .unwrap();
        assert!(shear < 1e-6);
        let squash = symplecticity_defect(
            |x| Ok(PhasePoint::new(1, vec![2.0 * x.q()[0], x.p()[0]]).unwrap()),
            &probes,
            1e-4,
        )
        .unwrap();
        assert!((squash - 1.0).abs() < 1e-8);
    }

    #[test]
    fn defect_reports_map_failure() {
        let probes = vec![PhasePoint::zero(1)];
        let r = symplecticity_defect(|_| Err(Error::NonFinite("test")), &probes, 1e-4);
        assert!(matches!(r, Err(Error::MapEvaluation { index: 0, .. })));
    }

    #[test]
    fn regions() {
        let x = PhasePoint::new(2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let ball = Region::Ball(BallSpec::new(2.0 * PI).unwrap());
        assert!((ball.violation(&x).unwrap()).abs() < 1e-15);
        let cyl = Region::Cylinder(CylinderSpec::new(PI).unwrap());
        assert!(cyl.violation(&x).unwrap().abs() < 1e-15);
        let poly = Region::Polydisc(PolydiscSpec::standard(3));
        assert_eq!(poly, Region::Polydisc(PolydiscSpec { radii: vec![Some(1.0), Some(1.0), None] }));
        assert!((BallSpec::new(PI).unwrap().radius() - 1.0).abs() < 1e-15);
    }
}
