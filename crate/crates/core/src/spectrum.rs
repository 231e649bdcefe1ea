//! Action spectra of the shipped Lagrangian and coisotropic families.
//!
//! Every factor here has a cyclic spectrum `cZ`, so spectra are stored by
//! their generator and Minkowski sums reduce to a real gcd.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::APLagrangian;
use crate::symplectic::{liouville_integral, Loop, PhasePoint};

/// Largest denominator considered by [`real_gcd`] by default.
pub const DEFAULT_GCD_DEPTH: u64 = 64;
/// Relative tolerance on the ratio used by [`real_gcd`] by default.
pub const DEFAULT_GCD_TOL: f64 = 1e-9;
/// Half-width of the coefficient window used to bound dense spectra.
const DENSE_WINDOW: i64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ApLagrangian,
    Sphere,
    Torus,
    Product,
}

/// A spectrum `cZ` (`c = 0` is the trivial spectrum `{0}`), or a dense
/// spectrum produced by incommensurable factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpectrum {
    pub generator: f64,
    pub provenance: Provenance,
    /// Smallest positive element found in a finite coefficient window when the
    /// spectrum is dense; `None` for cyclic spectra.
    pub dense_window_infimum: Option<f64>,
}

impl ActionSpectrum {
    pub fn cyclic(generator: f64, provenance: Provenance) -> Result<Self> {
        if !(generator >= 0.0 && generator.is_finite()) {
            return Err(Error::InvalidArgument(format!("spectrum generator {generator}")));
        }
        Ok(ActionSpectrum { generator, provenance, dense_window_infimum: None })
    }

    pub fn is_dense(&self) -> bool {
        self.dense_window_infimum.is_some()
    }

    /// `inf(S ∩ (0, ∞))` with `inf ∅ = ∞`; `None` for a dense spectrum, whose
    /// infimum 0 is not an element.
    pub fn minimal_area(&self) -> Option<f64> {
        if self.is_dense() {
            None
        } else if self.generator > 0.0 {
            Some(self.generator)
        } else {
            Some(f64::INFINITY)
        }
    }

    /// Whether `value ∈ cZ` up to `tol` (always false for dense spectra).
    pub fn contains(&self, value: f64, tol: f64) -> bool {
        if self.is_dense() {
            return false;
        }
        if self.generator == 0.0 {
            return value.abs() <= tol;
        }
        let k = (value / self.generator).round();
        (value - k * self.generator).abs() <= tol
    }
}

/// `(π/2)·scale²`, the minimal area of `scale·L` for `n ≥ 2`.
pub fn ap_spectrum(scale: f64, n: usize) -> Result<ActionSpectrum> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "the area formula for L needs n ≥ 2 (for n = 1, L is two circles), got {n}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale {scale}")));
    }
    ActionSpectrum::cyclic(0.5 * PI * scale * scale, Provenance::ApLagrangian)
}

/// `π·radius²` for an odd-dimensional round sphere in its own complex space.
pub fn sphere_spectrum(radius: f64) -> Result<ActionSpectrum> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {radius}")));
    }
    ActionSpectrum::cyclic(PI * radius * radius, Provenance::Sphere)
}

/// `π·radius²` for the Clifford torus `r T²`.
pub fn torus_spectrum(radius: f64) -> Result<ActionSpectrum> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {radius}")));
    }
    ActionSpectrum::cyclic(PI * radius * radius, Provenance::Torus)
}

/// Result of a rational recognition of `a/b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcdWitness {
    pub gcd: f64,
    /// `a ≈ p·gcd`
    pub p: u64,
    /// `b ≈ q·gcd`, `gcd(p, q) = 1`
    pub q: u64,
}

/// Recognizes `a/b ≈ p/q` with `q ≤ depth` through the continued-fraction
/// convergents of `a/b`; `None` if no convergent within `tol` (relative)
/// has a small enough denominator.
pub fn real_gcd_witness(a: f64, b: f64, depth: u64, tol: f64) -> Result<Option<GcdWitness>> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("gcd needs positive inputs, got ({a}, {b})")));
    }
    let x = a / b;
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, x.floor() as u64, 1u64);
    let mut frac = x - x.floor();
    for _ in 0..128 {
        if q1 > depth {
            break;
        }
        if ((p1 as f64) / (q1 as f64) - x).abs() <= tol * x {
            if p1 == 0 {
                break;
            }
            let gcd = 0.5 * (a / p1 as f64 + b / q1 as f64);
            return Ok(Some(GcdWitness { gcd, p: p1, q: q1 }));
        }
        if frac < 1e-300 {
            break;
        }
        let inv = 1.0 / frac;
        let digit = inv.floor();
        frac = inv - digit;
        if digit > 1e15 {
            break;
        }
        let d = digit as u64;
        let (p2, q2) = (d.saturating_mul(p1).saturating_add(p0), d.saturating_mul(q1).saturating_add(q0));
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    Ok(None)
}

/// `gcd{a, b} = sup{c > 0 : a, b ∈ cZ}`, or 0 when `a/b` is not within `tol`
/// of a rational with denominator at most `depth`.
pub fn real_gcd(a: f64, b: f64, depth: u64, tol: f64) -> Result<f64> {
    Ok(real_gcd_witness(a, b, depth, tol)?.map_or(0.0, |w| w.gcd))
}

/// Minkowski sum `cZ + c'Z`.
pub fn product_spectrum(s: &ActionSpectrum, t: &ActionSpectrum) -> ActionSpectrum {
    if s.is_dense() || t.is_dense() {
        let inf = s
            .dense_window_infimum
            .unwrap_or(f64::INFINITY)
            .min(t.dense_window_infimum.unwrap_or(f64::INFINITY));
        return ActionSpectrum { generator: 0.0, provenance: Provenance::Product, dense_window_infimum: Some(inf) };
    }
    let (c, d) = (s.generator, t.generator);
    if c == 0.0 || d == 0.0 {
        return ActionSpectrum { generator: c.max(d), provenance: Provenance::Product, dense_window_infimum: None };
    }
    match real_gcd(c, d, DEFAULT_GCD_DEPTH, DEFAULT_GCD_TOL) {
        Ok(g) if g > 0.0 => ActionSpectrum { generator: g, provenance: Provenance::Product, dense_window_infimum: None },
        _ => {
            let mut best = f64::INFINITY;
            for i in -DENSE_WINDOW..=DENSE_WINDOW {
                // the j closest to cancelling i·c, and its neighbours
                let j0 = (-(i as f64) * c / d).round() as i64;
                for j in [j0 - 1, j0, j0 + 1] {
                    if j.abs() > DENSE_WINDOW {
                        continue;
                    }
                    let v = (i as f64 * c + j as f64 * d).abs();
                    if v > 1e-12 * (c + d) {
                        best = best.min(v);
                    }
                }
            }
            ActionSpectrum { generator: 0.0, provenance: Provenance::Product, dense_window_infimum: Some(best) }
        }
    }
}

/// `N = r·L^{(m)} × S^{2d−2n+1}_{r'} ⊂ C^m × C^{d−n+1} = C^n`, of dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoisoProductSpec {
    /// Scale of the Lagrangian factor.
    pub r: f64,
    /// Radius of the sphere factor.
    pub r_prime: f64,
    /// Half-dimension of the Lagrangian factor, `m = 2n − d − 1`.
    pub m: usize,
    /// Real dimension of the sphere factor, `2d − 2n + 1`.
    pub sphere_dim: usize,
    pub n: usize,
    pub d: usize,
}

impl CoisoProductSpec {
    /// General factors for leaf dimension `d` in `C^n`, `n+1 ≤ d ≤ 2n−3`.
    pub fn new(n: usize, d: usize, r: f64, r_prime: f64) -> Result<Self> {
        if !(r > 0.0 && r_prime > 0.0) {
            return Err(Error::InvalidArgument(format!("radii ({r}, {r_prime}) must be positive")));
        }
        if d < n + 1 || d + 3 > 2 * n {
            return Err(Error::InvalidArgument(format!(
                "product construction needs n+1 ≤ d ≤ 2n−3, got n = {n}, d = {d}"
            )));
        }
        let m = 2 * n - d - 1;
        let sphere_dim = 2 * d - 2 * n + 1;
        Ok(CoisoProductSpec { r, r_prime, m, sphere_dim, n, d })
    }

    /// The balanced choice `√(2/3)·r·L × S_{√(1/3)·r}`.
    pub fn balanced(n: usize, d: usize, r: f64) -> Result<Self> {
        CoisoProductSpec::new(n, d, (2.0f64 / 3.0).sqrt() * r, (1.0f64 / 3.0).sqrt() * r)
    }

    /// Real dimension of `N`.
    pub fn dimension(&self) -> usize {
        self.m + self.sphere_dim
    }

    /// Complex dimension of the ambient space.
    pub fn ambient_half_dimension(&self) -> usize {
        self.m + self.sphere_dim.div_ceil(2)
    }

    /// Every point of `N` has norm² `r² + r'²`.
    pub fn squared_norm(&self) -> f64 {
        self.r * self.r + self.r_prime * self.r_prime
    }

    pub fn inside_unit_ball(&self) -> bool {
        self.squared_norm() < 1.0
    }

    /// A point of `N` from a Lagrangian sample `(φ, q)` and a unit vector of `C^{d−n+1}`.
    pub fn point(&self, phi: f64, q: &[f64], w: &[Complex64]) -> Result<PhasePoint> {
        let l = APLagrangian::scaled(self.m, self.r)?;
        let x = l.sample(phi, q)?;
        if w.len() != self.sphere_dim.div_ceil(2) {
            return Err(Error::DimensionMismatch { expected: self.sphere_dim.div_ceil(2), got: w.len() });
        }
        let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnit { norm });
        }
        let mut z = x.to_complex();
        z.extend(w.iter().map(|c| c * self.r_prime));
        Ok(PhasePoint::from_complex(&z))
    }
}

/// `A(R^{2n}, ω₀, N) = π·gcd{r²/2, r'²}`.
pub fn coiso_product_area(spec: &CoisoProductSpec) -> Result<f64> {
    let a = 0.5 * spec.r * spec.r;
    let b = spec.r_prime * spec.r_prime;
    Ok(PI * real_gcd(a, b, DEFAULT_GCD_DEPTH, DEFAULT_GCD_TOL)?)
}

/// Outcome of [`optimal_split`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub r2: f64,
    pub r_prime2: f64,
    pub value: f64,
    /// Farey order `Q` of the sweep grid.
    pub farey_order: u64,
    pub grid_points: usize,
}

/// All reduced fractions `p/q ∈ (0, 1)` with `q ≤ order`, increasing.
pub fn farey_interior(order: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    if order < 2 {
        return out;
    }
    let (mut a, mut b, mut c, mut d) = (0u64, 1u64, 1u64, order);
    while c < d || (c == d && c != 1) {
        if c == d {
            break;
        }
        out.push((c, d));
        let k = (order + b) / d;
        let (e, f) = (k * c - a, k * d - b);
        a = c;
        b = d;
        c = e;
        d = f;
    }
    out
}

/// Farey order whose grid has roughly `resolution` points (`|F_Q| ≈ 3Q²/π²`).
pub fn farey_order_for(resolution: usize) -> u64 {
    ((resolution as f64 * PI * PI / 3.0).sqrt().ceil() as u64).max(3)
}

/// One sweep sample: `(r², r'², value)`.
pub fn split_value(c: f64, r2: f64) -> Result<f64> {
    let rp2 = c - r2;
    if r2 <= 0.0 || rp2 <= 0.0 {
        return Err(Error::InvalidArgument(format!("split r² = {r2} outside (0, {c})")));
    }
    Ok(PI * real_gcd(0.5 * r2, rp2, DEFAULT_GCD_DEPTH, DEFAULT_GCD_TOL)?)
}

/// Maximizes `π·gcd{r²/2, r'²}` under `r² + r'² = c` over the rational grid
/// `r² = c·p/q`, `q ≤ Q`, with `Q` chosen so the grid has about `resolution` points.
pub fn optimal_split(c: f64, resolution: usize) -> Result<SplitResult> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("split budget {c} not in (0, 1)")));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let order = farey_order_for(resolution);
    let grid = farey_interior(order);
    let best = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(p, q))| {
            let r2 = c * p as f64 / q as f64;
            let v = split_value(c, r2).unwrap_or(0.0);
            (i, r2, v)
        })
        .reduce(
            || (usize::MAX, 0.0, f64::NEG_INFINITY),
            |a, b| if b.2 > a.2 || (b.2 == a.2 && b.0 < a.0) { b } else { a },
        );
    Ok(SplitResult { r2: best.1, r_prime2: c - best.1, value: best.2, farey_order: order, grid_points: grid.len() })
}

/// Quadrature area of the half-turn generator on `scale·L ⊂ C^n`.
pub fn ap_quadrature_area(scale: f64, n: usize, samples: usize) -> Result<f64> {
    let l = APLagrangian::scaled(n, scale)?;
    liouville_integral(&l.generator_loops(samples)?.half, 4)
}

/// Quadrature area of a Hopf circle `t ↦ radius·e^{2πit}·e₁` on the sphere in `C^k`.
pub fn sphere_quadrature_area(radius: f64, k: usize, samples: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("sphere needs k ≥ 1".into()));
    }
    let l = Loop::from_fn(k, samples, move |t| {
        let mut z = vec![Complex64::new(0.0, 0.0); k];
        z[0] = Complex64::from_polar(radius, 2.0 * PI * t);
        PhasePoint::from_complex(&z)
    })?;
    liouville_integral(&l, 4)
}

/// Quadrature area of one circle factor of `r·T^n` (the loop in the first coordinate).
pub fn torus_quadrature_area(radius: f64, n: usize, samples: usize) -> Result<f64> {
    let l = Loop::from_fn(n, samples, move |t| {
        let mut z = vec![Complex64::new(radius, 0.0); n];
        z[0] = Complex64::from_polar(radius, 2.0 * PI * t);
        PhasePoint::from_complex(&z)
    })?;
    liouville_integral(&l, 4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub n: usize,
    pub d: usize,
    pub lower: f64,
    pub lower_provenance: String,
    pub upper: f64,
    pub upper_provenance: String,
    /// Radius `r < 1` of an explicit witness inside the open ball, if computed.
    pub witness_radius: Option<f64>,
    pub witness_value: Option<f64>,
    /// Analytic generator matched a quadrature-computed loop area to 1e−6.
    pub certified: bool,
    /// Leaf loops are contractible in the ambient ball (the ball is contractible).
    pub leaf_loops_contractible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityLedger {
    pub n: usize,
    pub rows: Vec<LedgerRow>,
    /// Lagrangian capacity of the ball, a cited constant reported for context.
    pub cited_lagrangian_capacity: f64,
}

impl CapacityLedger {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,d,lower,lower-provenance,upper,upper-provenance\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.15},\"{}\",{:.15},\"{}\"",
                r.n, r.d, r.lower, r.lower_provenance, r.upper, r.upper_provenance
            );
        }
        s
    }

    pub fn row(&self, d: usize) -> Option<&LedgerRow> {
        self.rows.iter().find(|r| r.d == d)
    }
}

const CERTIFY_SAMPLES: usize = 2048;
const CERTIFY_TOL: f64 = 1e-6;

/// Lower and upper bounds on `A^d_coiso(B^{2n})` for `d = n, …, 2n−1`.
///
/// Computed rows come from explicit spectra (`r·L` for `d = n`, balanced
/// products for `n+1 ≤ d ≤ 2n−3`); the supremum over `r < 1` is reported as
/// the bound and the value at `witness_r` as an explicit witness. The rows
/// `d = 2n−2` and `d = 2n−1` carry cited constants.
pub fn capacity_ledger(n: usize, witness_r: f64) -> Result<CapacityLedger> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("ledger needs n ≥ 2, got {n}")));
    }
    if !(witness_r > 0.0 && witness_r < 1.0) {
        return Err(Error::InvalidArgument(format!("witness radius {witness_r} not in (0, 1)")));
    }
    let upper_prov = "cited: A_coiso(Z^{2n}) <= pi and B^{2n} is contained in Z^{2n}".to_string();
    let mut rows = Vec::new();
    for d in n..2 * n {
        let row = if d == n {
            let sup = ap_spectrum(1.0, n)?.generator;
            let witness = ap_spectrum(witness_r, n)?.generator;
            let quad = ap_quadrature_area(witness_r, n, CERTIFY_SAMPLES)?;
            LedgerRow {
                n,
                d,
                lower: sup,
                lower_provenance: format!("computed: sup over r<1 of A(rL) = (pi/2) r^2, L in C^{n}"),
                upper: PI,
                upper_provenance: upper_prov.clone(),
                witness_radius: Some(witness_r),
                witness_value: Some(witness),
                certified: (quad - witness).abs() <= CERTIFY_TOL,
                leaf_loops_contractible: true,
            }
        } else if d + 3 <= 2 * n {
            let sup = coiso_product_area(&CoisoProductSpec::balanced(n, d, 1.0)?)?;
            let spec = CoisoProductSpec::balanced(n, d, witness_r)?;
            let witness = coiso_product_area(&spec)?;
            let lag = ap_quadrature_area(spec.r, spec.m, CERTIFY_SAMPLES)?;
            let sph = sphere_quadrature_area(spec.r_prime, spec.sphere_dim.div_ceil(2), CERTIFY_SAMPLES)?;
            let lag_ok = (lag - ap_spectrum(spec.r, spec.m)?.generator).abs() <= CERTIFY_TOL;
            let sph_ok = (sph - sphere_spectrum(spec.r_prime)?.generator).abs() <= CERTIFY_TOL;
            let prod = product_spectrum(&ap_spectrum(spec.r, spec.m)?, &sphere_spectrum(spec.r_prime)?);
            LedgerRow {
                n,
                d,
                lower: sup,
                lower_provenance: format!(
                    "computed: sup over r<1 of A(sqrt(2/3) r L^({}) x S^{}_(sqrt(1/3) r)) = pi r^2/3",
                    spec.m, spec.sphere_dim
                ),
                upper: PI,
                upper_provenance: upper_prov.clone(),
                witness_radius: Some(witness_r),
                witness_value: Some(witness),
                certified: lag_ok && sph_ok && (prod.generator - witness).abs() <= 1e-9,
                leaf_loops_contractible: true,
            }
        } else if d + 2 == 2 * n {
            LedgerRow {
                n,
                d,
                lower: 0.5 * PI,
                lower_provenance: "cited: A^{2n-2}_coiso(B^{2n}) >= pi/2".into(),
                upper: PI,
                upper_provenance: upper_prov.clone(),
                witness_radius: None,
                witness_value: None,
                certified: false,
                leaf_loops_contractible: true,
            }
        } else {
            LedgerRow {
                n,
                d,
                lower: PI,
                lower_provenance: "cited: A^{2n-1}_coiso(B^{2n}) = pi".into(),
                upper: PI,
                upper_provenance: "cited: A^{2n-1}_coiso(B^{2n}) = pi".into(),
                witness_radius: None,
                witness_value: None,
                certified: false,
                leaf_loops_contractible: true,
            }
        };
        rows.push(row);
    }
    Ok(CapacityLedger { n, rows, cited_lagrangian_capacity: PI / n as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn ap_spectrum_values() {
        assert!((ap_spectrum(1.0, 2).unwrap().generator - PI / 2.0).abs() < 1e-15);
        assert!((ap_spectrum(SQRT_2, 3).unwrap().generator - PI).abs() < 1e-15);
        assert!((ap_spectrum(0.9, 4).unwrap().generator - 0.405 * PI).abs() < 1e-15);
        assert!(ap_spectrum(1.0, 1).is_err());
    }

    #[test]
    fn sphere_and_torus() {
        assert!((sphere_spectrum((1.0f64 / 3.0).sqrt()).unwrap().generator - PI / 3.0).abs() < 1e-15);
        assert!((sphere_spectrum(1.0).unwrap().generator - PI).abs() < 1e-15);
        let q = sphere_quadrature_area(0.5, 2, 1024).unwrap();
        assert!((q - PI / 4.0).abs() < 1e-8);
        assert!((torus_spectrum(1.0).unwrap().generator - PI).abs() < 1e-15);
        let r = 1.0 / SQRT_2 - 1e-6;
        assert!(torus_spectrum(r).unwrap().generator < PI / 2.0);
        assert!((torus_quadrature_area(0.5, 2, 1024).unwrap() - PI / 4.0).abs() < 1e-8);
    }

    #[test]
    fn gcd_examples() {
        assert!((real_gcd(0.5, 1.0 / 3.0, 64, 1e-9).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((real_gcd(PI / 2.0, PI / 3.0, 64, 1e-9).unwrap() - PI / 6.0).abs() < 1e-12);
        assert_eq!(real_gcd(1.0, SQRT_2, 64, 1e-9).unwrap(), 0.0);
        assert!((real_gcd(2.25, 1.0, 64, 1e-9).unwrap() - 0.25).abs() < 1e-12);
        assert!(real_gcd(0.0, 1.0, 64, 1e-9).is_err());
        assert!(real_gcd(1.0, -1.0, 64, 1e-9).is_err());
    }

    #[test]
    fn gcd_witness_is_coprime() {
        let w = real_gcd_witness(6.0, 4.0, 64, 1e-9).unwrap().unwrap();
        assert_eq!((w.p, w.q), (3, 2));
        assert!((w.gcd - 2.0).abs() < 1e-15);
    }

    #[test]
    fn product_examples() {
        let pi = ActionSpectrum::cyclic(PI, Provenance::Sphere).unwrap();
        assert!((product_spectrum(&pi, &pi).generator - PI).abs() < 1e-12);
        let third = sphere_spectrum((1.0f64 / 3.0).sqrt()).unwrap();
        assert!((product_spectrum(&third, &third).generator - PI / 3.0).abs() < 1e-12);
        let half = ap_spectrum(1.0, 2).unwrap();
        let one = ActionSpectrum::cyclic(1.0, Provenance::Torus).unwrap();
        let p = product_spectrum(&half, &one);
        assert_eq!(p.generator, 0.0);
        assert!(p.is_dense());
        assert_eq!(p.minimal_area(), None);
        assert!(p.dense_window_infimum.unwrap() < 1e-2);
        let trivial = ActionSpectrum::cyclic(0.0, Provenance::Product).unwrap();
        assert_eq!(trivial.minimal_area(), Some(f64::INFINITY));
        assert_eq!(product_spectrum(&trivial, &one).generator, 1.0);
    }

    #[test]
    fn coiso_area_examples() {
        let s = CoisoProductSpec::balanced(4, 5, 1.0).unwrap();
        assert!((coiso_product_area(&s).unwrap() - PI / 3.0).abs() < 1e-12);
        assert_eq!(s.dimension(), 5);
        assert_eq!(s.ambient_half_dimension(), 4);
        let s = CoisoProductSpec::new(4, 5, 3.0 / SQRT_2, 1.0).unwrap();
        assert!((coiso_product_area(&s).unwrap() - PI / 4.0).abs() < 1e-12);
        for c in [0.3f64, 0.6, 0.9] {
            let r2 = 2.0 * c / 3.0;
            let s = CoisoProductSpec::new(5, 6, r2.sqrt(), (c - r2).sqrt()).unwrap();
            assert!((coiso_product_area(&s).unwrap() - c * PI / 3.0).abs() < 1e-12);
        }
        assert!(CoisoProductSpec::new(4, 7, 0.5, 0.5).is_err());
        assert!(CoisoProductSpec::new(4, 4, 0.5, 0.5).is_err());
    }

    #[test]
    fn coiso_points_have_expected_norm() {
        let s = CoisoProductSpec::balanced(5, 6, 0.99).unwrap();
        assert!(s.inside_unit_ball());
        let q = vec![0.6, 0.0, 0.8];
        let w = vec![Complex64::new(0.0, 1.0 / SQRT_2), Complex64::new(0.5, 0.5)];
        let x = s.point(0.3, &q, &w).unwrap();
        assert_eq!(x.n(), 5);
        assert!((x.norm() - s.squared_norm().sqrt()).abs() < 1e-14);
        assert!(x.norm() < 1.0);
    }

    #[test]
    fn farey_grid() {
        assert_eq!(farey_interior(4), vec![(1, 4), (1, 3), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(farey_interior(1), vec![]);
        assert_eq!(farey_interior(50).len(), 773);
    }

    #[test]
    fn split_off_optimum() {
        let c = 0.9;
        assert!((split_value(c, c / 2.0).unwrap() - c * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn split_recovers_balanced_choice() {
        let r = optimal_split(0.9, 10_000).unwrap();
        assert!((r.r2 - 0.6).abs() < 1e-12);
        assert!((r.value - 0.3 * PI).abs() < 1e-12);
        assert!(optimal_split(1.0, 100).is_err());
    }

    #[test]
    fn ledger_rows() {
        let l = capacity_ledger(4, 0.99).unwrap();
        assert_eq!(l.rows.len(), 4);
        let r4 = l.row(4).unwrap();
        assert!((r4.lower - PI / 2.0).abs() < 1e-15 && r4.certified);
        let r5 = l.row(5).unwrap();
        assert!((r5.lower - PI / 3.0).abs() < 1e-12 && r5.certified);
        assert!(r5.lower_provenance.starts_with("computed"));
        assert!(l.row(6).unwrap().lower_provenance.starts_with("cited"));
        assert!((l.row(7).unwrap().lower - PI).abs() < 1e-15);
        let csv = l.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("n,d,lower,lower-provenance,upper,upper-provenance"));
        let l2 = capacity_ledger(2, 0.99).unwrap();
        assert_eq!(l2.rows.len(), 2);
        assert!(l2.row(2).unwrap().lower_provenance.starts_with("computed"));
    }
}
