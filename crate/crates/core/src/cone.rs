//! The cone over a family of based loops, its descent to a sphere map, and
//! the sampled set `X = L̃ ∪ u(S²)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::PointIndex;
use crate::error::{Error, Result};
use crate::lagrangian::{permute_psi, permute_psi_inverse, APLagrangian};
use crate::smooth::SmoothStep;
use crate::symplectic::{Loop, PhasePoint};

/// Default plateau width of the cone profile.
pub const DEFAULT_PROFILE_MARGIN: f64 = 0.1;
const BASE_POINT_TOL: f64 = 1e-9;

/// `u(t, z)` on `[0, 2k] × S¹`: generator `i` (0-based) occupies `[2i, 2i+2]`,
/// rising as `ρ(t − 2i)·xᵢ(z)` and falling as `ρ(2i + 2 − t)·xᵢ(z)`.
#[derive(Debug, Clone)]
pub struct ConeMap {
    generators: Vec<Loop>,
    rho: Arc<SmoothStep>,
}

impl ConeMap {
    pub fn generators(&self) -> &[Loop] {
        &self.generators
    }

    /// Number of generators `k`.
    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn n(&self) -> usize {
        self.generators[0].n()
    }

    pub fn profile(&self) -> &SmoothStep {
        &self.rho
    }

    /// Generator index and radial weight at time `t`.
    pub fn weight(&self, t: f64) -> Result<(usize, f64)> {
        let top = 2.0 * self.k() as f64;
        if !(0.0..=top).contains(&t) {
            return Err(Error::InvalidArgument(format!("cone time {t} outside [0, {top}]")));
        }
        let i = ((t / 2.0).floor() as usize).min(self.k() - 1);
        let local = t - 2.0 * i as f64;
        let w = if local <= 1.0 { self.rho.eval(local) } else { self.rho.eval(2.0 - local) };
        Ok((i, w))
    }

    /// `u(t, z)` with `z = e^{2πis}`.
    pub fn eval(&self, t: f64, s: f64) -> Result<PhasePoint> {
        let (i, w) = self.weight(t)?;
        Ok(self.generators[i].eval(s.rem_euclid(1.0)).scaled(w))
    }

    /// A time in the rising half of generator `i` where the weight equals `w`.
    pub fn time_for_weight(&self, i: usize, w: f64) -> Result<f64> {
        if i >= self.k() || !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("generator {i}, weight {w}")));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.rho.eval(mid) < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(2.0 * i as f64 + if w <= 0.0 { 0.0 } else { hi })
    }
}

/// Builds the cone over `generators` with profile plateaus of width `margin`.
pub fn build_cone(generators: Vec<Loop>, margin: f64) -> Result<ConeMap> {
    let first = generators
        .first()
        .ok_or_else(|| Error::InvalidArgument("cone needs at least one generator loop".into()))?;
    let base = first.eval(0.0);
    for (index, g) in generators.iter().enumerate() {
        if g.n() != first.n() {
            return Err(Error::DimensionMismatch { expected: 2 * first.n(), got: 2 * g.n() });
        }
        let gap = g.eval(0.0).distance(&base);
        if gap > BASE_POINT_TOL * (1.0 + base.norm()) {
            return Err(Error::BasePointMismatch { index, gap });
        }
    }
    Ok(ConeMap { generators, rho: Arc::new(SmoothStep::new(margin)?) })
}

/// The cone descended to `S²`: polar angle `θ = πt/(2k)`, azimuth `2πs`.
#[derive(Debug, Clone)]
pub struct SphereMap {
    cone: ConeMap,
}

/// Checks that the cone collapses its boundary circles and returns the sphere map.
pub fn sphere_map(cone: ConeMap) -> Result<SphereMap> {
    let delta = cone.profile().delta();
    if delta <= 0.0 {
        return Err(Error::ConeNotCollapsible);
    }
    let top = 2.0 * cone.k() as f64;
    for j in 0..=8 {
        let s = j as f64 / 8.0;
        for t in [0.0, 0.5 * delta, top - 0.5 * delta, top] {
            if cone.eval(t, s)?.norm() != 0.0 {
                return Err(Error::ConeNotCollapsible);
            }
        }
    }
    Ok(SphereMap { cone })
}

impl SphereMap {
    pub fn cone(&self) -> &ConeMap {
        &self.cone
    }

    /// Image of a unit vector `v ∈ S² ⊂ R³`.
    pub fn eval(&self, v: [f64; 3]) -> Result<PhasePoint> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnit { norm });
        }
        let theta = (v[2] / norm).clamp(-1.0, 1.0).acos();
        let s = v[1].atan2(v[0]) / (2.0 * PI);
        self.eval_polar(theta, s)
    }

    /// Image at polar angle `θ ∈ [0, π]` and azimuth fraction `s`.
    pub fn eval_polar(&self, theta: f64, s: f64) -> Result<PhasePoint> {
        let top = 2.0 * self.cone.k() as f64;
        let t = (theta / PI * top).clamp(0.0, top);
        self.cone.eval(t, s)
    }

    /// Largest finite-difference derivative norm over a latitude–longitude
    /// grid with `rows` latitudes, measured in the embedding metric of `S²`.
    pub fn derivative_bound(&self, rows: usize) -> Result<f64> {
        if rows < 4 {
            return Err(Error::InvalidArgument(format!("grid rows {rows} < 4")));
        }
        let h = PI / rows as f64;
        let cols = 2 * rows;
        (0..rows)
            .into_par_iter()
            .map(|i| {
                let theta = (i as f64 + 0.5) * h;
                let mut worst: f64 = 0.0;
                for j in 0..cols {
                    let s = j as f64 / cols as f64;
                    let x = self.eval_polar(theta, s)?;
                    let down = self.eval_polar((theta + h).min(PI), s)?;
                    let east = self.eval_polar(theta, s + 1.0 / cols as f64)?;
                    // east step length on the sphere is 2π sin θ / cols
                    let east_len = 2.0 * PI * theta.sin() / cols as f64;
                    let step_down = (theta + h).min(PI) - theta;
                    worst = worst.max(down.distance(&x) / step_down);
                    worst = worst.max(east.distance(&x) / east_len);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()
            .map(|v| v.into_iter().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratum {
    Lagrangian,
    Cone,
    Imported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumRange {
    pub stratum: Stratum,
    pub start: usize,
    pub end: usize,
}

/// A finite sample of a compact set with its provenance.
#[derive(Debug, Clone)]
pub struct SampledSet {
    n: usize,
    points: Vec<PhasePoint>,
    strata: Vec<StratumRange>,
    fill_distance: Option<f64>,
    psi_applied: bool,
}

impl SampledSet {
    /// A set with a single imported stratum and no fill-distance estimate.
    pub fn from_points(n: usize, points: Vec<PhasePoint>) -> Result<Self> {
        for (index, p) in points.iter().enumerate() {
            if p.n() != n {
                return Err(Error::DimensionMismatch { expected: 2 * n, got: 2 * p.n() });
            }
            if !p.is_finite() {
                return Err(Error::MapEvaluation { index, reason: "non-finite sample".into() });
            }
        }
        let strata = vec![StratumRange { stratum: Stratum::Imported, start: 0, end: points.len() }];
        Ok(SampledSet { n, points, strata, fill_distance: None, psi_applied: false })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn strata(&self) -> &[StratumRange] {
        &self.strata
    }

    pub fn fill_distance(&self) -> Option<f64> {
        self.fill_distance
    }

    pub fn psi_applied(&self) -> bool {
        self.psi_applied
    }

    pub fn with_fill_distance(mut self, h: f64) -> Self {
        self.fill_distance = Some(h);
        self
    }

    pub fn stratum_points(&self, stratum: Stratum) -> impl Iterator<Item = &PhasePoint> {
        self.strata
            .iter()
            .filter(move |r| r.stratum == stratum)
            .flat_map(move |r| self.points[r.start..r.end].iter())
    }

    /// Applies `f` to every point, keeping strata; the fill distance is
    /// multiplied by `lipschitz` when known.
    pub fn mapped<F>(&self, f: F, lipschitz: f64) -> Result<SampledSet>
    where
        F: Fn(&PhasePoint) -> Result<PhasePoint> + Sync,
    {
        let points = self.points.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
        let n = points.first().map_or(self.n, |p| p.n());
        Ok(SampledSet {
            n,
            points,
            strata: self.strata.clone(),
            fill_distance: self.fill_distance.map(|h| h * lipschitz),
            psi_applied: self.psi_applied,
        })
    }

    /// Union of two samples of the same dimension.
    pub fn union(&self, other: &SampledSet) -> Result<SampledSet> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: 2 * other.n });
        }
        let offset = self.points.len();
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        let mut strata = self.strata.clone();
        strata.extend(other.strata.iter().map(|r| StratumRange { start: r.start + offset, end: r.end + offset, ..*r }));
        let fill_distance = match (self.fill_distance, other.fill_distance) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        Ok(SampledSet { n: self.n, points, strata, fill_distance, psi_applied: self.psi_applied && other.psi_applied })
    }
}

/// Sampling densities for [`assemble_x`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XSampling {
    /// Phase samples on `[0, π)`.
    pub phase: usize,
    /// Directions on `S^{n−1}`.
    pub sphere: usize,
    /// Radial weights per generator in the cone.
    pub cone_radial: usize,
    /// Loop parameters per generator in the cone.
    pub cone_loop: usize,
    /// Random probes used for the fill-distance estimate (0 skips it).
    pub fill_probes: usize,
    pub seed: u64,
}

impl Default for XSampling {
    fn default() -> Self {
        XSampling { phase: 256, sphere: 256, cone_radial: 512, cone_loop: 512, fill_probes: 2000, seed: 0 }
    }
}

impl XSampling {
    /// Densities used for dimension estimates: 1024² grids for `n = 2`, and
    /// a balanced 160 × 10⁴ phase–sphere grid with 512² cone grids otherwise.
    pub fn dimension_study(n: usize) -> Self {
        if n == 2 {
            XSampling { phase: 1024, sphere: 1024, cone_radial: 1024, cone_loop: 1024, ..Default::default() }
        } else {
            XSampling { phase: 160, sphere: 10_000, ..Default::default() }
        }
    }

    /// Balanced densities giving roughly `total` points, with the manifold
    /// part holding about half of them.
    pub fn with_total(n: usize, total: usize) -> Self {
        let k = if n == 2 { 2 } else { 1 };
        let half = (total / 2).max(16);
        let (phase, sphere) = if n == 2 {
            let s = (half as f64).sqrt().ceil() as usize;
            (s, s)
        } else {
            let phase = (half as f64).powf(1.0 / n as f64).ceil() as usize;
            (phase, half.div_ceil(phase))
        };
        let per = (total - phase * sphere).max(16 * k) / k;
        let side = (per as f64).sqrt().ceil() as usize;
        XSampling { phase, sphere, cone_radial: side, cone_loop: side, ..Default::default() }
    }
}

/// A deterministic quasi-uniform net of `count` unit vectors in `R^n`.
pub fn sphere_net(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5.0f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - (2.0 * j as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * j as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| random_unit(n, &mut rng)).collect()
        }
    }
}

fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// The model `L̃` and the cone over its default generators.
pub fn x_components(n: usize, loop_samples: usize) -> Result<(APLagrangian, ConeMap)> {
    let model = APLagrangian::rotated(n)?;
    let cone = build_cone(model.default_generators(loop_samples)?, DEFAULT_PROFILE_MARGIN)?;
    Ok((model, cone))
}

/// Samples `X = L̃ ∪ u(S²)` in `C^n`, applying `Ψ` to every point when `n` is odd.
pub fn assemble_x(n: usize, sampling: &XSampling) -> Result<SampledSet> {
    if sampling.phase == 0 || sampling.sphere == 0 || sampling.cone_radial < 2 || sampling.cone_loop == 0 {
        return Err(Error::InvalidArgument(format!("empty sampling {sampling:?}")));
    }
    let (model, cone) = x_components(n, 64)?;
    let odd = n % 2 == 1;
    let finish = |x: PhasePoint| if odd { permute_psi(&x) } else { Ok(x) };

    let net = sphere_net(n, sampling.sphere, sampling.seed);
    let mut points: Vec<PhasePoint> = (0..sampling.phase)
        .into_par_iter()
        .flat_map_iter(|i| {
            let phi = PI * i as f64 / sampling.phase as f64;
            let model = &model;
            net.iter().map(move |q| model.sample(phi, q))
        })
        .map(|r| r.and_then(finish))
        .collect::<Result<Vec<_>>>()?;
    let manifold_end = points.len();

    // the rising half of each generator's interval already covers its image
    for i in 0..cone.k() {
        let times = (0..sampling.cone_radial)
            .map(|j| cone.time_for_weight(i, j as f64 / (sampling.cone_radial - 1) as f64))
            .collect::<Result<Vec<f64>>>()?;
        let cone_ref = &cone;
        let chunk = times
            .par_iter()
            .flat_map_iter(|&t| {
                (0..sampling.cone_loop).map(move |j| cone_ref.eval(t, j as f64 / sampling.cone_loop as f64))
            })
            .map(|r| r.and_then(finish))
            .collect::<Result<Vec<_>>>()?;
        points.extend(chunk);
    }
    let strata = vec![
        StratumRange { stratum: Stratum::Lagrangian, start: 0, end: manifold_end },
        StratumRange { stratum: Stratum::Cone, start: manifold_end, end: points.len() },
    ];
    let mut set = SampledSet { n, points, strata, fill_distance: None, psi_applied: odd };
    if sampling.fill_probes > 0 {
        let probes = x_probes(n, sampling.fill_probes, sampling.seed ^ 0x5eed)?;
        set.fill_distance = Some(PointIndex::new(set.points()).max_nearest_distance(&probes));
    }
    Ok(set)
}

/// Random points of `X` drawn from its parametrization (not from any grid).
pub fn x_probes(n: usize, count: usize, seed: u64) -> Result<Vec<PhasePoint>> {
    let (model, cone) = x_components(n, 64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let x = if j % 2 == 0 {
            let phi = rng.random_range(0.0..PI);
            model.sample(phi, &random_unit(n, &mut rng))?
        } else {
            let i = rng.random_range(0..cone.k());
            let w: f64 = rng.random_range(0.0..=1.0);
            cone.eval(cone.time_for_weight(i, w)?, rng.random_range(0.0..1.0))?
        };
        out.push(if n % 2 == 1 { permute_psi(&x)? } else { x });
    }
    Ok(out)
}

/// Largest parametrization residual over a sample of `X`: manifold points
/// must pass the membership test of `L̃`, cone points `y` must have
/// `‖y‖ ≤ √2` and, when nonzero, `√2·y/‖y‖ ∈ L̃`.
pub fn x_membership_residual(set: &SampledSet) -> Result<f64> {
    let model = APLagrangian::rotated(set.n())?;
    let unpermute = |x: &PhasePoint| if set.psi_applied() { permute_psi_inverse(x) } else { Ok(x.clone()) };
    let mut worst: f64 = 0.0;
    for r in set.strata() {
        let pts = &set.points()[r.start..r.end];
        let w = pts
            .par_iter()
            .map(|x| -> Result<f64> {
                let y = unpermute(x)?;
                match r.stratum {
                    Stratum::Lagrangian | Stratum::Imported => model.membership_residual(&y),
                    Stratum::Cone => {
                        let norm = y.norm();
                        let excess = (norm - model.scale()).max(0.0);
                        if norm < 1e-9 {
                            Ok(excess)
                        } else {
                            Ok(excess.max(model.membership_residual(&y.scaled(model.scale() / norm))?))
                        }
                    }
                }
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        worst = worst.max(w);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::Region;

    fn half_cone(m: usize) -> ConeMap {
        let model = APLagrangian::plain(2).unwrap();
        let g = model.generator_loops(m).unwrap();
        build_cone(vec![g.half], DEFAULT_PROFILE_MARGIN).unwrap()
    }

    #[test]
    fn cone_hits_generator_at_odd_times() {
        let cone = half_cone(256);
        for j in 0..50 {
            let s = j as f64 / 50.0;
            let g = cone.generators()[0].eval(s);
            assert_eq!(cone.eval(1.0, s).unwrap(), g);
            assert_eq!(cone.eval(0.0, s).unwrap().norm(), 0.0);
            assert_eq!(cone.eval(2.0, s).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn cone_rejects_bad_input() {
        assert!(build_cone(vec![], 0.1).is_err());
        let model = APLagrangian::plain(2).unwrap();
        let g = model.generator_loops(64).unwrap();
        let moved = g.fiber.map_points(|x| x.scaled(2.0)).unwrap();
        assert!(matches!(build_cone(vec![g.half, moved], 0.1), Err(Error::BasePointMismatch { index: 1, .. })));
        let cone = half_cone(64);
        assert!(cone.eval(2.5, 0.0).is_err());
    }

    #[test]
    fn cone_image_matches_scaled_loops() {
        // oracle: the double grid {τ·γ(s)} against cone samples, in both directions
        let cone = half_cone(256);
        let g = &cone.generators()[0];
        let grid = 64;
        let oracle: Vec<PhasePoint> = (0..=grid)
            .flat_map(|a| (0..grid).map(move |b| (a, b)))
            .map(|(a, b)| g.eval(b as f64 / grid as f64).scaled(a as f64 / grid as f64))
            .collect();
        let samples: Vec<PhasePoint> = (0..=grid)
            .flat_map(|a| (0..grid).map(move |b| (a, b)))
            .map(|(a, b)| {
                let t = cone.time_for_weight(0, a as f64 / grid as f64).unwrap();
                cone.eval(t, b as f64 / grid as f64).unwrap()
            })
            .collect();
        let probes: Vec<PhasePoint> = (0..2000)
            .map(|j| {
                let t = 2.0 * ((j as f64 * 0.618_033_988_7) % 1.0);
                cone.eval(t, (j as f64 * 0.754_877_666) % 1.0).unwrap()
            })
            .collect();
        let fill = PointIndex::new(&samples).max_nearest_distance(&probes);
        let forward = PointIndex::new(&oracle).max_nearest_distance(&samples);
        let backward = PointIndex::new(&samples).max_nearest_distance(&oracle);
        assert!(forward.max(backward) < 2.0 * fill.max(1e-12), "{forward} {backward} {fill}");
    }

    #[test]
    fn sphere_map_poles_and_equator() {
        let sm = sphere_map(half_cone(256)).unwrap();
        assert_eq!(sm.eval([0.0, 0.0, 1.0]).unwrap().norm(), 0.0);
        assert_eq!(sm.eval([0.0, 0.0, -1.0]).unwrap().norm(), 0.0);
        for j in 0..16 {
            let a = 2.0 * PI * j as f64 / 16.0;
            let y = sm.eval([a.cos(), a.sin(), 0.0]).unwrap();
            // equator is t = 1 for k = 1, where ρ = 1
            let g = sm.cone().generators()[0].eval(j as f64 / 16.0);
            assert!(y.distance(&g) < 1e-12);
        }
        assert!(sm.eval([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn sphere_map_derivatives_stay_bounded() {
        let sm = sphere_map(half_cone(256)).unwrap();
        let a = sm.derivative_bound(64).unwrap();
        let b = sm.derivative_bound(128).unwrap();
        assert!(a.is_finite() && b.is_finite());
        assert!(b < 1.5 * a, "{a} {b}");
    }

    #[test]
    fn sphere_map_needs_plateau() {
        let model = APLagrangian::plain(2).unwrap();
        let g = model.generator_loops(64).unwrap();
        let cone = build_cone(vec![g.half], 0.0).unwrap();
        assert_eq!(sphere_map(cone).unwrap_err(), Error::ConeNotCollapsible);
    }

    #[test]
    fn x_is_contained_and_parametrized() {
        for n in [2usize, 3, 4] {
            let s = XSampling { phase: 32, sphere: 32, cone_radial: 32, cone_loop: 32, fill_probes: 200, seed: 3 };
            let set = assemble_x(n, &s).unwrap();
            assert!(set.fill_distance().unwrap() > 0.0);
            assert!(x_membership_residual(&set).unwrap() < 1e-10, "n = {n}");
            let ball = Region::Ball(crate::symplectic::BallSpec::new(2.0 * PI).unwrap());
            let poly = Region::Polydisc(crate::symplectic::PolydiscSpec::standard(n));
            for x in set.points() {
                assert!(ball.violation(x).unwrap() <= 1e-10);
                assert!(poly.violation(x).unwrap() <= 1e-10, "n = {n}, {x:?}");
            }
        }
    }

    #[test]
    fn with_total_is_close() {
        for n in [2usize, 3] {
            let s = XSampling::with_total(n, 100_000);
            let k = if n == 2 { 2 } else { 1 };
            let total = s.phase * s.sphere + k * s.cone_radial * s.cone_loop;
            assert!((100_000..130_000).contains(&total), "{total}");
        }
    }
}
