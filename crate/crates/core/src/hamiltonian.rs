//! Hamiltonian flows, Hofer norms and displacement experiments.
//!
//! Sign convention: `q̇ⱼ = ∂H/∂pⱼ`, `ṗⱼ = −∂H/∂qⱼ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{fill_distance_or_spacing, PointIndex};
use crate::cone::{sphere_net, SampledSet};
use crate::lagrangian::APLagrangian;
use crate::error::{Error, Result};
use crate::smooth::{gauss_legendre, SmoothStep};
use crate::symplectic::PhasePoint;

pub type ScalarField = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type GradientField = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const DEFAULT_FLOW_STEPS: usize = 128;
/// Trajectories leaving this radius are reported as blow-up.
pub const FLOW_BUDGET: f64 = 1e8;
const FD_STEP: f64 = 1e-6;

/// A time-dependent Hamiltonian on `R^{2n}`, `t ∈ [0, 1]`.
#[derive(Clone)]
pub struct Hamiltonian {
    n: usize,
    name: String,
    eval: ScalarField,
    gradient: Option<GradientField>,
    /// `H(t, x) = outside(t)` for `|x| > support`.
    support: Option<f64>,
    outside: TimeFn,
    autonomous: bool,
    /// Points where extrema are expected, added to Hofer-norm probes.
    hints: Vec<Vec<f64>>,
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("support", &self.support)
            .field("autonomous", &self.autonomous)
            .finish_non_exhaustive()
    }
}

impl Hamiltonian {
    pub fn new(n: usize, name: impl Into<String>, eval: ScalarField) -> Self {
        Hamiltonian {
            n,
            name: name.into(),
            eval,
            gradient: None,
            support: None,
            outside: Arc::new(|_| 0.0),
            autonomous: false,
            hints: Vec::new(),
        }
    }

    pub fn with_gradient(mut self, g: GradientField) -> Self {
        self.gradient = Some(g);
        self
    }

    pub fn with_support(mut self, radius: f64) -> Self {
        self.support = Some(radius);
        self
    }

    pub fn autonomous(mut self) -> Self {
        self.autonomous = true;
        self
    }

    pub fn with_hints(mut self, hints: Vec<Vec<f64>>) -> Self {
        self.hints = hints;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> Option<f64> {
        self.support
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.eval)(t, x)
    }

    pub fn outside_value(&self, t: f64) -> f64 {
        (self.outside)(t)
    }

    /// `∇ₓH`, analytic when available.
    pub fn gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.gradient {
            return g(t, x);
        }
        let mut y = x.to_vec();
        (0..x.len())
            .map(|k| {
                y[k] = x[k] + FD_STEP;
                let fp = self.value(t, &y);
                y[k] = x[k] - FD_STEP;
                let fm = self.value(t, &y);
                y[k] = x[k];
                (fp - fm) / (2.0 * FD_STEP)
            })
            .collect()
    }

    /// `X_H = (∂H/∂p, −∂H/∂q)`.
    pub fn vector_field(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let g = self.gradient(t, x);
        let n = self.n;
        let mut v = vec![0.0; 2 * n];
        for j in 0..n {
            v[j] = g[n + j];
            v[n + j] = -g[j];
        }
        v
    }

    /// `H + c(t)`; outside the support the value becomes `c(t)`.
    pub fn shifted(&self, c: TimeFn) -> Hamiltonian {
        let (eval, outside) = (self.eval.clone(), self.outside.clone());
        let (c1, c2) = (c.clone(), c);
        Hamiltonian {
            eval: Arc::new(move |t, x| eval(t, x) + c1(t)),
            outside: Arc::new(move |t| outside(t) + c2(t)),
            name: format!("{} + c(t)", self.name),
            ..self.clone()
        }
    }

    /// `s·H(s·t, ·)`, whose time-`1/s` map is the time-1 map of `H`.
    pub fn time_rescaled(&self, s: f64) -> Hamiltonian {
        let eval = self.eval.clone();
        let grad = self.gradient.clone();
        let outside = self.outside.clone();
        Hamiltonian {
            eval: Arc::new(move |t, x| s * eval(s * t, x)),
            gradient: grad.map(|g| -> GradientField {
                Arc::new(move |t, x| g(s * t, x).into_iter().map(|v| s * v).collect())
            }),
            outside: Arc::new(move |t| s * outside(s * t)),
            name: format!("{} rescaled by {s}", self.name),
            ..self.clone()
        }
    }

    /// `H(1 − t, ·)`.
    pub fn time_reversed(&self) -> Hamiltonian {
        let eval = self.eval.clone();
        let grad = self.gradient.clone();
        let outside = self.outside.clone();
        Hamiltonian {
            eval: Arc::new(move |t, x| eval(1.0 - t, x)),
            gradient: grad.map(|g| -> GradientField { Arc::new(move |t, x| g(1.0 - t, x)) }),
            outside: Arc::new(move |t| outside(1.0 - t)),
            name: format!("{} reversed", self.name),
            ..self.clone()
        }
    }

    /// `c·H`.
    pub fn scaled(&self, c: f64) -> Hamiltonian {
        let eval = self.eval.clone();
        let grad = self.gradient.clone();
        let outside = self.outside.clone();
        Hamiltonian {
            eval: Arc::new(move |t, x| c * eval(t, x)),
            gradient: grad.map(|g| -> GradientField { Arc::new(move |t, x| g(t, x).into_iter().map(|v| c * v).collect()) }),
            outside: Arc::new(move |t| c * outside(t)),
            ..self.clone()
        }
    }

    /// Largest `|H − outside|` on `count` points of the shell `|x| = 1.01·support`.
    pub fn support_violation(&self, count: usize, seed: u64) -> Result<f64> {
        let r = self.support.ok_or_else(|| Error::InvalidArgument(format!("{} has no declared support", self.name)))?;
        let probes = ball_probes(2 * self.n, 1.01 * r, count, seed, true);
        Ok(probes
            .par_iter()
            .map(|x| {
                (0..4)
                    .map(|k| {
                        let t = k as f64 / 3.0;
                        (self.value(t, x) - self.outside_value(t)).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max))
    }

    pub fn zero(n: usize) -> Hamiltonian {
        Hamiltonian::new(n, "zero", Arc::new(|_, _| 0.0))
            .with_gradient(Arc::new(move |_, x| vec![0.0; x.len()]))
            .with_support(1.0)
            .autonomous()
    }

    /// `½|x|²`.
    pub fn harmonic(n: usize) -> Hamiltonian {
        Hamiltonian::new(n, "harmonic oscillator", Arc::new(|_, x| 0.5 * x.iter().map(|v| v * v).sum::<f64>()))
            .with_gradient(Arc::new(|_, x| x.to_vec()))
            .autonomous()
    }

    /// `H = p_j`, generating the translation `q_j ↦ q_j + t`.
    pub fn momentum(n: usize, j: usize) -> Hamiltonian {
        Hamiltonian::new(n, format!("p{}", j + 1), Arc::new(move |_, x| x[n + j]))
            .with_gradient(Arc::new(move |_, x| {
                let mut g = vec![0.0; x.len()];
                g[n + j] = 1.0;
                g
            }))
            .autonomous()
    }

    /// `c·β(|x − centre|/r)` with `β` equal to 1 near 0 and 0 beyond 1; range `[0, c]`.
    pub fn bump(center: Vec<f64>, radius: f64, amplitude: f64) -> Result<Hamiltonian> {
        if !center.len().is_multiple_of(2) || center.is_empty() || !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("bump of radius {radius} in dimension {}", center.len())));
        }
        let n = center.len() / 2;
        let profile = Plateau::new(-2.0, 0.0, 1.0)?;
        let (c1, c2, p1, p2) = (center.clone(), center.clone(), profile.clone(), profile);
        let support = center.iter().map(|v| v * v).sum::<f64>().sqrt() + radius;
        Ok(Hamiltonian::new(
            n,
            "bump",
            Arc::new(move |_, x| {
                let d = x.iter().zip(&c1).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                amplitude * p1.value(d / radius)
            }),
        )
        .with_gradient(Arc::new(move |_, x| {
            let d = x.iter().zip(&c2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if d == 0.0 {
                return vec![0.0; x.len()];
            }
            let s = amplitude * p2.derivative(d / radius) / (radius * d);
            x.iter().zip(&c2).map(|(a, b)| s * (a - b)).collect()
        }))
        .with_support(support)
        .with_hints(vec![center])
        .autonomous())
    }
}

/// Smooth function equal to 1 on `[lo, hi]`, 0 outside `(lo − w, hi + w)`.
#[derive(Debug, Clone)]
pub struct Plateau {
    lo: f64,
    hi: f64,
    width: f64,
    step: Arc<SmoothStep>,
    rise: Arc<Primitive>,
}

impl Plateau {
    pub fn new(lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(hi >= lo && width > 0.0) {
            return Err(Error::InvalidArgument(format!("plateau [{lo}, {hi}] with width {width}")));
        }
        let step = Arc::new(SmoothStep::new(0.0)?);
        let s2 = step.clone();
        let rise = Arc::new(Primitive::new(0.0, 1.0, 4096, Arc::new(move |u| s2.derivative(u))));
        Ok(Plateau { lo, hi, width, step, rise })
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < self.lo {
            self.rise.value((x - self.lo + self.width) / self.width)
        } else if x > self.hi {
            self.rise.value((self.hi + self.width - x) / self.width)
        } else {
            1.0
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x < self.lo {
            self.step.derivative((x - self.lo + self.width) / self.width) / self.width
        } else if x > self.hi {
            -self.step.derivative((self.hi + self.width - x) / self.width) / self.width
        } else {
            0.0
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo - self.width, self.hi + self.width)
    }
}

/// `F(x) = ∫_{a}^{x} f` for a smooth `f` vanishing left of `a`, tabulated on
/// panels by Gauss–Legendre and evaluated by cubic Hermite interpolation.
#[derive(Clone)]
pub struct Primitive {
    a: f64,
    b: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    cumulative: Vec<f64>,
    slopes: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl fmt::Debug for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Primitive").field("a", &self.a).field("b", &self.b).field("panels", &(self.cumulative.len() - 1)).finish()
    }
}

impl Primitive {
    pub fn new(a: f64, b: f64, panels: usize, f: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Self {
        let (nodes, weights) = gauss_legendre(12);
        let h = (b - a) / panels as f64;
        let slopes = (0..=panels).map(|k| f(a + k as f64 * h)).collect();
        let mut p = Primitive { a, b, f, cumulative: vec![0.0; panels + 1], slopes, nodes, weights };
        for k in 0..panels {
            p.cumulative[k + 1] = p.cumulative[k] + p.segment(a + k as f64 * h, a + (k + 1) as f64 * h);
        }
        p
    }

    fn segment(&self, x0: f64, x1: f64) -> f64 {
        let (mid, half) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * (self.f)(mid + half * x)).sum::<f64>() * half
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("at least one panel")
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return self.total();
        }
        let panels = self.cumulative.len() - 1;
        let h = (self.b - self.a) / panels as f64;
        let k = (((x - self.a) / h) as usize).min(panels - 1);
        let s = (x - self.a) / h - k as f64;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.cumulative[k] + h10 * h * self.slopes[k] + h01 * self.cumulative[k + 1] + h11 * h * self.slopes[k + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            0.0
        } else {
            (self.f)(x)
        }
    }
}

/// Time-1 point and the sampled trajectory.
#[derive(Debug, Clone)]
pub struct FlowPath {
    pub end: PhasePoint,
    pub path: Vec<PhasePoint>,
}

/// RK4 integration of `ẋ = X_H(t, x)` over `[0, 1]`.
pub fn flow(h: &Hamiltonian, x0: &PhasePoint, steps: usize) -> Result<FlowPath> {
    flow_between(h, x0, 0.0, 1.0, steps, true)
}

/// RK4 over `[t0, t1]`; the path is kept only when `keep_path`.
pub fn flow_between(h: &Hamiltonian, x0: &PhasePoint, t0: f64, t1: f64, steps: usize, keep_path: bool) -> Result<FlowPath> {
    if x0.n() != h.n {
        return Err(Error::DimensionMismatch { expected: 2 * h.n, got: 2 * x0.n() });
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("zero flow steps".into()));
    }
    let dim = 2 * h.n;
    let n = h.n;
    let dt = (t1 - t0) / steps as f64;
    let mut x = x0.coords().to_vec();
    let mut path = Vec::new();
    if keep_path {
        path.push(x0.clone());
    }
    let field = |t: f64, y: &[f64], out: &mut [f64]| {
        let g = h.gradient(t, y);
        out[..n].copy_from_slice(&g[n..]);
        for j in 0..n {
            out[n + j] = -g[j];
        }
    };
    let (mut k1, mut k2, mut k3, mut k4, mut y) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        field(t, &x, &mut k1);
        for i in 0..dim {
            y[i] = x[i] + 0.5 * dt * k1[i];
        }
        field(t + 0.5 * dt, &y, &mut k2);
        for i in 0..dim {
            y[i] = x[i] + 0.5 * dt * k2[i];
        }
        field(t + 0.5 * dt, &y, &mut k3);
        for i in 0..dim {
            y[i] = x[i] + dt * k3[i];
        }
        field(t + dt, &y, &mut k4);
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= FLOW_BUDGET) {
            return Err(Error::FlowBlowUp { t: t + dt, norm });
        }
        if keep_path {
            path.push(PhasePoint::new(h.n, x.clone())?);
        }
    }
    Ok(FlowPath { end: PhasePoint::new(h.n, x)?, path })
}

/// Time-1 map of `h`.
pub fn time_one_map(h: &Hamiltonian, x: &PhasePoint, steps: usize) -> Result<PhasePoint> {
    Ok(flow_between(h, x, 0.0, 1.0, steps, false)?.end)
}

/// Uniform points in the ball of radius `r` in `R^dim` (or on its sphere).
fn ball_probes(dim: usize, r: f64, count: usize, seed: u64, shell: bool) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let rad = if shell { r } else { r * rng.random::<f64>().powf(1.0 / dim as f64) };
            g.into_iter().map(|v| v * rad / norm).collect()
        })
        .collect()
}

/// `∫₀¹ (sup Hᵗ − inf Hᵗ) dt` with the sup and inf over random probes in the
/// support, the hint points and the value outside the support.
pub fn hofer_norm(h: &Hamiltonian, time_samples: usize, space_probes: usize) -> Result<f64> {
    let r = h.support.ok_or_else(|| Error::InvalidArgument(format!("{} has no declared support", h.name)))?;
    if time_samples == 0 {
        return Err(Error::InvalidArgument("zero time samples".into()));
    }
    let mut probes = ball_probes(2 * h.n, r, space_probes, 0x5eed, false);
    probes.extend(h.hints.iter().cloned());
    probes.push(vec![0.0; 2 * h.n]);
    let oscillation = |t: f64| {
        let (lo, hi) = probes
            .par_iter()
            .map(|x| {
                let v = h.value(t, x);
                (v, v)
            })
            .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        let out = h.outside_value(t);
        hi.max(out) - lo.min(out)
    };
    if h.autonomous {
        return Ok(oscillation(0.0));
    }
    let (x, w) = gauss_legendre(time_samples);
    Ok(x.iter().zip(&w).map(|(xi, wi)| 0.5 * wi * oscillation(0.5 * (xi + 1.0))).sum())
}

pub const DEFAULT_TIME_SAMPLES: usize = 16;
pub const DEFAULT_SPACE_PROBES: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct DisplacementCertificate {
    pub hamiltonian: String,
    /// `None` for Hamiltonians without declared support.
    pub hofer_norm: Option<f64>,
    pub displaced: bool,
    pub min_separation: f64,
    pub fill_distance: f64,
    /// `max |H(x₁) − H(x₀)|` over the samples, for autonomous `H`.
    pub energy_drift: Option<f64>,
    pub samples: usize,
}

/// Flows every sample and compares the flowed cloud with the original one.
pub fn displacement_check(h: &Hamiltonian, set: &SampledSet, steps: usize) -> Result<DisplacementCertificate> {
    if set.is_empty() {
        return Err(Error::DegenerateSet("no samples".into()));
    }
    let fill = fill_distance_or_spacing(set);
    let flowed: Vec<PhasePoint> = set.points().par_iter().map(|x| time_one_map(h, x, steps)).collect::<Result<_>>()?;
    let index = PointIndex::new(set.points());
    let min_separation = flowed
        .par_iter()
        .map(|y| index.nearest(y.coords()).map_or(f64::INFINITY, |(d, _)| d))
        .reduce(|| f64::INFINITY, f64::min);
    let energy_drift = h.autonomous.then(|| {
        set.points()
            .iter()
            .zip(&flowed)
            .map(|(a, b)| (h.value(0.0, a.coords()) - h.value(0.0, b.coords())).abs())
            .fold(0.0, f64::max)
    });
    let hofer_norm = match h.support {
        Some(_) => Some(hofer_norm(h, DEFAULT_TIME_SAMPLES, DEFAULT_SPACE_PROBES)?),
        None => None,
    };
    Ok(DisplacementCertificate {
        hamiltonian: h.name.clone(),
        hofer_norm,
        displaced: min_separation > 2.0 * fill,
        min_separation,
        fill_distance: fill,
        energy_drift,
        samples: set.len(),
    })
}

/// Lifts the unit square `(0,1)²` in `R²` by `1 + δ` in `p` using
/// `H = −(1+δ)·R(q)·C(q)·χ(p)`, where `R` is a smooth ramp with slope 1 on
/// `[0, 1]` over transition width `w`, `C` cuts off beyond the ramp and `χ`
/// covers the vertical travel. Its oscillation is `(1+δ)(1+w)`.
pub fn rectangle_ramp(delta: f64, width: f64) -> Result<Hamiltonian> {
    if !(delta > 0.0 && width > 0.0) {
        return Err(Error::InvalidArgument(format!("ramp with δ = {delta}, w = {width}")));
    }
    let slope = Plateau::new(0.0, 1.0, width)?;
    let s2 = slope.clone();
    let ramp = Primitive::new(-width, 1.0 + width, 512, Arc::new(move |x| s2.value(x)));
    let cut_q = Plateau::new(-width, 1.0 + width, 0.5)?;
    let travel = Plateau::new(-0.25, 2.25 + delta, 0.5)?;
    let amp = 1.0 + delta;
    let (r1, c1, t1) = (ramp.clone(), cut_q.clone(), travel.clone());
    let support = (2.0f64 + width).hypot(2.75 + delta);
    Ok(Hamiltonian::new(
        1,
        "rectangle ramp",
        Arc::new(move |_, x| -amp * r1.value(x[0]) * c1.value(x[0]) * t1.value(x[1])),
    )
    .with_gradient(Arc::new(move |_, x| {
        let (q, p) = (x[0], x[1]);
        let (r, c, t) = (ramp.value(q), cut_q.value(q), travel.value(p));
        vec![
            -amp * (ramp.derivative(q) * c + r * cut_q.derivative(q)) * t,
            -amp * r * c * travel.derivative(p),
        ]
    }))
    .with_support(support)
    .with_hints(vec![vec![1.0 + width, 1.0]])
    .autonomous())
}

/// Samples of the closed unit square on an `m × m` lattice, with fill distance.
pub fn unit_square_samples(m: usize) -> Result<SampledSet> {
    let pts = (0..m * m)
        .map(|k| PhasePoint::new(1, vec![(k % m) as f64 / (m - 1) as f64, (k / m) as f64 / (m - 1) as f64]))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledSet::from_points(1, pts)?.with_fill_distance(std::f64::consts::FRAC_1_SQRT_2 / (m - 1) as f64))
}

/// Parameters of the chord-shear Hamiltonian displacing `Z^{2n}(a) ∩ B(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearParams {
    /// Relative excess of the chord lift over the chord length.
    pub delta: f64,
    /// Relative enlargement of the disc whose chords are lifted.
    pub eta: f64,
    /// Extra lift, relative to the disc radius.
    pub gap: f64,
}

impl ShearParams {
    pub fn scaled(&self, f: f64) -> ShearParams {
        ShearParams { delta: self.delta * f, eta: self.eta * f, gap: self.gap * f }
    }
}

/// `H = −S(q₁)·C(q₁)·χ(p₁)·K(|w|)` with `S' = s(q) = 2(1+δ)√(r'² − q²) + γr` on the
/// disc's `q₁`-extent: every vertical chord of the disc moves up by more
/// than its length, so the disc (and the truncated cylinder) is displaced.
pub fn cylinder_shear(n: usize, a: f64, big_r: f64, params: ShearParams) -> Result<Hamiltonian> {
    if !(a > 0.0 && big_r > 0.0 && params.delta > 0.0 && params.eta > 0.0 && params.gap > 0.0) {
        return Err(Error::InvalidArgument(format!("shear with a = {a}, R = {big_r}, {params:?}")));
    }
    let r = (a / PI).sqrt();
    let r_big = r * (1.0 + params.eta);
    let w = 0.5 * params.eta * r;
    let cut = Plateau::new(-r, r, w)?;
    let c2 = cut.clone();
    let lift = move |q: f64| (2.0 * (1.0 + params.delta) * (r_big * r_big - q * q).max(0.0).sqrt() + params.gap * r) * c2.value(q);
    let max_lift = 2.0 * (1.0 + params.delta) * r_big + params.gap * r;
    let shear = Primitive::new(-r - w, r + w, 1024, Arc::new(lift));
    let outer = Plateau::new(-r - w, r + w, r)?;
    let travel = Plateau::new(-r, r + max_lift, r)?;
    let rest = Plateau::new(-1.0, big_r, 0.5 * big_r)?;
    let (s1, o1, t1, k1) = (shear.clone(), outer.clone(), travel.clone(), rest.clone());
    let rest_norm = move |x: &[f64]| (1..n).map(|j| x[j] * x[j] + x[n + j] * x[n + j]).sum::<f64>().sqrt();
    let support = (2.0 * r + w).hypot(2.0 * r + max_lift).hypot(1.5 * big_r);
    Ok(Hamiltonian::new(
        n,
        "cylinder shear",
        Arc::new(move |_, x| -s1.value(x[0]) * o1.value(x[0]) * t1.value(x[n]) * k1.value(rest_norm(x))),
    )
    .with_gradient(Arc::new(move |_, x| {
        let rho = rest_norm(x);
        let q = x[0];
        let (s, o, t, k) = (shear.value(q), outer.value(q), travel.value(x[n]), rest.value(rho));
        let mut g = vec![0.0; 2 * n];
        g[0] = -(shear.derivative(q) * o + s * outer.derivative(q)) * t * k;
        g[n] = -s * o * travel.derivative(x[n]) * k;
        if rho > 0.0 {
            let dk = -s * o * t * rest.derivative(rho) / rho;
            for j in 1..n {
                g[j] = dk * x[j];
                g[n + j] = dk * x[n + j];
            }
        }
        g
    }))
    .with_support(support)
    .with_hints(vec![{
        let mut h = vec![0.0; 2 * n];
        h[0] = r + w;
        h[n] = r;
        h
    }])
    .autonomous())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShearTrial {
    pub scale: f64,
    pub hofer_norm: f64,
    pub overhead: f64,
    pub displaced: bool,
    pub min_separation: f64,
    /// Largest change of the coordinates other than `(q₁, p₁)` along the flow.
    pub rest_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CylinderProbeReport {
    pub a: f64,
    pub big_r: f64,
    pub requested_overhead: f64,
    pub trials: Vec<ShearTrial>,
    pub best_overhead: f64,
}

pub const DEFAULT_SHEAR: ShearParams = ShearParams { delta: 0.04, eta: 0.02, gap: 0.03 };

/// Sweeps the chord shear over shrinking parameters and reports the smallest
/// overhead `‖H‖/a − 1` among displacing trials.
///
/// The flow leaves the coordinates beyond `(q₁, p₁)` fixed on `|w| ≤ R`
/// (checked per trial), so displacement of the product set reduces to
/// displacement of the disc samples in the `(q₁, p₁)` plane.
pub fn cylinder_energy_probe(n: usize, a: f64, big_r: f64, requested_overhead: f64) -> Result<CylinderProbeReport> {
    if !(a > 0.0 && big_r > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("probe with n = {n}, a = {a}, R = {big_r}")));
    }
    if !(requested_overhead > 0.0) {
        return Err(Error::DisplacementNotAchieved { best_overhead: f64::NAN, requested: requested_overhead });
    }
    let r = (a / PI).sqrt();
    let disc = disc_samples(r, 128)?;
    let disc_fill = disc.fill_distance().unwrap_or(0.0);
    let mut rest_probe = vec![0.0; 2 * n];
    if n > 1 {
        rest_probe[1] = big_r * 0.6;
        rest_probe[n + 1] = -big_r * 0.8;
    }
    let mut trials = Vec::new();
    for scale in [1.0, 0.5, 0.25] {
        let h = cylinder_shear(n, a, big_r, DEFAULT_SHEAR.scaled(scale))?;
        let norm = hofer_norm(&h, 1, DEFAULT_SPACE_PROBES)?;
        let lifted: Vec<PhasePoint> = disc
            .points()
            .par_iter()
            .map(|x| {
                let mut y = rest_probe.clone();
                y[0] = x.q()[0];
                y[n] = x.p()[0];
                time_one_map(&h, &PhasePoint::new(n, y)?, DEFAULT_FLOW_STEPS)
            })
            .collect::<Result<_>>()?;
        let rest_drift = lifted
            .iter()
            .map(|y| (0..2 * n).filter(|&k| k != 0 && k != n).map(|k| (y.coords()[k] - rest_probe[k]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let plane: Vec<PhasePoint> = lifted.iter().map(|y| PhasePoint::new(1, vec![y.q()[0], y.p()[0]])).collect::<Result<_>>()?;
        let index = PointIndex::new(disc.points());
        let min_separation = plane
            .par_iter()
            .map(|y| index.nearest(y.coords()).map_or(f64::INFINITY, |(d, _)| d))
            .reduce(|| f64::INFINITY, f64::min);
        trials.push(ShearTrial {
            scale,
            hofer_norm: norm,
            overhead: norm / a - 1.0,
            displaced: min_separation > 2.0 * disc_fill && rest_drift < 1e-12,
            min_separation,
            rest_drift,
        });
    }
    let best_overhead = trials.iter().filter(|t| t.displaced).map(|t| t.overhead).fold(f64::INFINITY, f64::min);
    if !(best_overhead <= requested_overhead) {
        return Err(Error::DisplacementNotAchieved { best_overhead, requested: requested_overhead });
    }
    Ok(CylinderProbeReport { a, big_r, requested_overhead, trials, best_overhead })
}

/// Closed disc of radius `r` in `R²` sampled on a polar lattice.
pub fn disc_samples(r: f64, rings: usize) -> Result<SampledSet> {
    let mut pts = vec![PhasePoint::new(1, vec![0.0, 0.0])?];
    let dr = r / rings as f64;
    for k in 1..=rings {
        let rho = k as f64 * dr;
        let m = ((2.0 * PI * rho / dr).ceil() as usize).max(6);
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            pts.push(PhasePoint::new(1, vec![rho * th.cos(), rho * th.sin()])?);
        }
    }
    Ok(SampledSet::from_points(1, pts)?.with_fill_distance(dr))
}

/// One member of a candidate family of displacing Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    /// Cut-off linear function: translation along a direction.
    Translation,
    /// Cut-off quadratic `x_i·x_j`: linear shear.
    Shear,
    /// Cut-off smooth ramp in one coordinate.
    Ramp,
    /// Cut-off sum of time-dependent plane waves.
    Fourier,
}

/// Key-value description of a candidate family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub kind: CandidateKind,
    pub count: usize,
    /// Target Hofer norm of each member.
    pub budget: f64,
    pub support_radius: f64,
    pub cutoff_width: f64,
    pub seed: u64,
}

/// The shipped family, every member budgeted to `0.85π`.
pub fn default_candidate_family() -> Vec<CandidateSpec> {
    let budget = 0.85 * PI;
    let base = |kind, count, seed| CandidateSpec { kind, count, budget, support_radius: 2.2, cutoff_width: 0.6, seed };
    vec![
        base(CandidateKind::Translation, 8, 1),
        base(CandidateKind::Shear, 6, 2),
        base(CandidateKind::Ramp, 4, 3),
        base(CandidateKind::Fourier, 6, 4),
    ]
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    g.into_iter().map(|v| v / norm).collect()
}

/// Builds the members of `spec` in dimension `2n` with unit amplitude.
fn raw_candidates(n: usize, spec: &CandidateSpec) -> Result<Vec<Hamiltonian>> {
    let dim = 2 * n;
    let cut = Plateau::new(-1.0, spec.support_radius - spec.cutoff_width, spec.cutoff_width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let support = spec.support_radius;
    let mut out = Vec::new();
    for i in 0..spec.count {
        // H(t, x) = K(|x|)·f(t, x), gradient K'(|x|)·f·x/|x| + K·∇f
        type Inner = Arc<dyn Fn(f64, &[f64]) -> (f64, Vec<f64>) + Send + Sync>;
        let inner: Inner = match spec.kind {
            CandidateKind::Translation => {
                let v = unit_direction(&mut rng, dim);
                Arc::new(move |_, x: &[f64]| (x.iter().zip(&v).map(|(a, b)| a * b).sum(), v.clone()))
            }
            CandidateKind::Shear => {
                let (a, b) = (unit_direction(&mut rng, dim), unit_direction(&mut rng, dim));
                Arc::new(move |_, x: &[f64]| {
                    let (u, w): (f64, f64) = (x.iter().zip(&a).map(|(p, q)| p * q).sum(), x.iter().zip(&b).map(|(p, q)| p * q).sum());
                    (u * w, a.iter().zip(&b).map(|(p, q)| p * w + q * u).collect())
                })
            }
            CandidateKind::Ramp => {
                let v = unit_direction(&mut rng, dim);
                let width = 0.3 + 0.4 * rng.random::<f64>();
                let plateau = Plateau::new(-1.5, 1.5, width)?;
                let pl = plateau.clone();
                let ramp = Primitive::new(-1.5 - width, 1.5 + width, 256, Arc::new(move |s| pl.value(s)));
                Arc::new(move |_, x: &[f64]| {
                    let s: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
                    (ramp.value(s), v.iter().map(|c| c * ramp.derivative(s)).collect())
                })
            }
            CandidateKind::Fourier => {
                let waves: Vec<(Vec<f64>, f64, f64, f64)> = (0..4)
                    .map(|_| {
                        let k: Vec<f64> = unit_direction(&mut rng, dim).into_iter().map(|c| c * (0.5 + 2.0 * rng.random::<f64>())).collect();
                        (k, rng.random::<f64>() * 2.0 * PI, (rng.random::<f64>() - 0.5) * 4.0 * PI, rng.sample::<f64, _>(StandardNormal))
                    })
                    .collect();
                Arc::new(move |t, x: &[f64]| {
                    let mut val = 0.0;
                    let mut grad = vec![0.0; x.len()];
                    for (k, phase, omega, amp) in &waves {
                        let arg = x.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() + phase + omega * t;
                        val += amp * arg.cos();
                        for (g, kc) in grad.iter_mut().zip(k) {
                            *g -= amp * arg.sin() * kc;
                        }
                    }
                    (val, grad)
                })
            }
        };
        let (f1, f2, c1, c2) = (inner.clone(), inner, cut.clone(), cut.clone());
        let mut h = Hamiltonian::new(
            n,
            format!("{:?} #{i}", spec.kind).to_lowercase(),
            Arc::new(move |t, x| {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                c1.value(r) * f1(t, x).0
            }),
        )
        .with_gradient(Arc::new(move |t, x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let (f, g) = f2(t, x);
            let (k, dk) = (c2.value(r), c2.derivative(r));
            x.iter().zip(&g).map(|(xi, gi)| k * gi + if r > 0.0 { dk * f * xi / r } else { 0.0 }).collect()
        }))
        .with_support(support);
        if spec.kind != CandidateKind::Fourier {
            h = h.autonomous();
        }
        out.push(h);
    }
    Ok(out)
}

/// Members of `spec` rescaled so that their estimated Hofer norm equals the budget.
pub fn candidate_family(n: usize, spec: &CandidateSpec) -> Result<Vec<Hamiltonian>> {
    raw_candidates(n, spec)?
        .into_iter()
        .map(|h| {
            let norm = hofer_norm(&h, DEFAULT_TIME_SAMPLES, DEFAULT_SPACE_PROBES)?;
            if !(norm > 0.0) {
                return Err(Error::Construction(format!("{} has zero oscillation", h.name)));
            }
            Ok(h.scaled(spec.budget / norm))
        })
        .collect()
}

/// `L̃` sampled on a `phase × sphere` grid, with a spacing-based fill distance.
pub fn l_tilde_samples(n: usize, phase: usize, sphere: usize) -> Result<SampledSet> {
    let model = APLagrangian::rotated(n)?;
    let net = sphere_net(n, sphere, 0);
    let pts = (0..phase)
        .flat_map(|i| {
            let phi = PI * i as f64 / phase as f64;
            net.iter().map(move |q| (phi, q))
        })
        .map(|(phi, q)| model.sample(phi, q))
        .collect::<Result<Vec<_>>>()?;
    let set = SampledSet::from_points(n, pts)?;
    let fill = fill_distance_or_spacing(&set);
    Ok(set.with_fill_distance(fill))
}

/// Displacement certificates of every member of `family` against `set`.
pub fn candidate_sweep(family: &[CandidateSpec], set: &SampledSet, steps: usize) -> Result<Vec<DisplacementCertificate>> {
    let mut out = Vec::new();
    for spec in family {
        for h in candidate_family(set.n(), spec)? {
            out.push(displacement_check(&h, set, steps)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_primitive() {
        let p = Plateau::new(0.0, 1.0, 0.5).unwrap();
        assert_eq!(p.value(0.5), 1.0);
        assert_eq!(p.value(-0.6), 0.0);
        assert!((p.value(-0.25) - 0.5).abs() < 1e-12);
        let q = p.clone();
        let prim = Primitive::new(-0.5, 1.5, 64, Arc::new(move |x| q.value(x)));
        // symmetric transitions contribute half their width each
        assert!((prim.total() - 1.5).abs() < 1e-10);
        assert!((prim.value(0.5) - 0.75).abs() < 1e-10);
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let hs = [rectangle_ramp(0.05, 0.05).unwrap(),
            cylinder_shear(2, PI, 2.0, DEFAULT_SHEAR).unwrap(),
            Hamiltonian::bump(vec![0.1, 0.2, -0.3, 0.0], 1.0, 2.0).unwrap()];
        let mut fam = Vec::new();
        for spec in default_candidate_family() {
            fam.extend(raw_candidates(2, &CandidateSpec { count: 1, ..spec }).unwrap());
        }
        for h in hs.iter().chain(&fam) {
            let x: Vec<f64> = (0..2 * h.n()).map(|k| 0.3 - 0.17 * k as f64).collect();
            let exact = h.gradient(0.3, &x);
            let mut fd = h.clone();
            fd.gradient = None;
            let num = fd.gradient(0.3, &x);
            for (a, b) in exact.iter().zip(&num) {
                assert!((a - b).abs() < 1e-6, "{}: {a} vs {b}", h.name());
            }
        }
    }
}
