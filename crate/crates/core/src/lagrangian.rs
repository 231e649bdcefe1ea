//! The monotone Lagrangian `L = {z q : z ∈ S¹, q ∈ S^{n−1}} ⊂ C^n`, its
//! rotated and rescaled copy `L̃ = √2·U·L` with `U R^n = W`, generator loops,
//! phase lifts and the coordinate permutation `Ψ` used for odd `n`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, SerialMatrix};
use crate::smooth::SmoothStep;
use crate::symplectic::{Loop, PhasePoint, DEFAULT_LOOP_SAMPLES};

/// Plateau width of the smooth step used by the half-turn generator.
const HALF_TURN_MARGIN: f64 = 0.1;
/// Largest admissible phase increment between adjacent samples during lifting.
const MAX_PHASE_STEP: f64 = 0.45 * PI;

/// A scaled and unitarily rotated copy of `L`.
#[derive(Debug, Clone)]
pub struct APLagrangian {
    n: usize,
    scale: f64,
    rotation: CMatrix,
}

impl APLagrangian {
    /// Plain `L` in `C^n`.
    pub fn plain(n: usize) -> Result<Self> {
        APLagrangian::scaled(n, 1.0)
    }

    /// `r·L`.
    pub fn scaled(n: usize, scale: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("half-dimension {n} < 2")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale {scale}")));
        }
        Ok(APLagrangian { n, scale, rotation: CMatrix::identity(n) })
    }

    /// `L̃ = √2·U·L`, which lies in `W = {w : w_{n+1−j} = conj(w_j)}` up to phase.
    pub fn rotated(n: usize) -> Result<Self> {
        let rotation = build_unitary(n)?;
        Ok(APLagrangian { n, scale: SQRT_2, rotation })
    }

    pub fn with_rotation(n: usize, scale: f64, rotation: CMatrix) -> Result<Self> {
        let mut m = APLagrangian::scaled(n, scale)?;
        if rotation.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rotation.n() });
        }
        let defect = rotation.unitarity_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidArgument(format!("rotation not unitary (defect {defect:e})")));
        }
        m.rotation = rotation;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &CMatrix {
        &self.rotation
    }

    /// `scale · U · (e^{iφ} q)`.
    pub fn sample(&self, phi: f64, q: &[f64]) -> Result<PhasePoint> {
        if q.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: q.len() });
        }
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnit { norm });
        }
        Ok(self.sample_unchecked(phi, q))
    }

    fn sample_unchecked(&self, phi: f64, q: &[f64]) -> PhasePoint {
        let e = Complex64::from_polar(self.scale, phi);
        let z: Vec<Complex64> = q.iter().map(|&qj| e * qj).collect();
        PhasePoint::from_complex(&self.rotation.apply(&z))
    }

    /// Maps a point back to the frame of plain `L`: `U⁻¹(x / scale)`.
    pub fn to_plain_frame(&self, x: &PhasePoint) -> Result<Vec<Complex64>> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: 2 * x.n() });
        }
        let z: Vec<Complex64> = x.to_complex().iter().map(|c| c / self.scale).collect();
        Ok(self.rotation.adjoint().apply(&z))
    }

    /// Residual of the membership test in the plain frame:
    /// `max(| |z|² − 1 |, | |Σ z_j²| − 1 |)`.
    pub fn membership_residual(&self, x: &PhasePoint) -> Result<f64> {
        let z = self.to_plain_frame(x)?;
        Ok(plain_residual(&z))
    }

    /// Whether `x` lies on the model to tolerance `tol`. A unit vector
    /// `z ∈ C^n` equals `e^{iφ} q` for real `q` exactly when `|Σ z_j²| = 1`.
    pub fn membership(&self, x: &PhasePoint, tol: f64) -> Result<bool> {
        Ok(self.membership_residual(x)? <= tol)
    }

    /// Generator loops based at `x₀ = sample(0, e₁)` with `m` sample intervals.
    pub fn generator_loops(&self, m: usize) -> Result<GeneratorLoops> {
        let step = Arc::new(SmoothStep::new(HALF_TURN_MARGIN)?);
        let n = self.n;
        let (s1, s2) = (step.clone(), step.clone());
        // γ_half(t) = e^{iπt} q(t), q(t) = cos(πσ(t)) e₁ + sin(πσ(t)) e₂
        let half_eval = move |t: f64| {
            let a = PI * s1.eval(t);
            let e = Complex64::from_polar(1.0, PI * t);
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            z[0] = e * a.cos();
            z[1] = e * a.sin();
            PhasePoint::from_complex(&z)
        };
        let half_deriv = move |t: f64| {
            let a = PI * s2.eval(t);
            let da = PI * s2.derivative(t);
            let e = Complex64::from_polar(1.0, PI * t);
            let ie = Complex64::new(0.0, PI) * e;
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            z[0] = ie * a.cos() - e * a.sin() * da;
            z[1] = ie * a.sin() + e * a.cos() * da;
            PhasePoint::from_complex(&z).into_coords()
        };
        let fiber_eval = move |t: f64| {
            let a = 2.0 * PI * t;
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            z[0] = Complex64::new(a.cos(), 0.0);
            z[1] = Complex64::new(a.sin(), 0.0);
            PhasePoint::from_complex(&z)
        };
        let fiber_deriv = move |t: f64| {
            let a = 2.0 * PI * t;
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            z[0] = Complex64::new(-2.0 * PI * a.sin(), 0.0);
            z[1] = Complex64::new(2.0 * PI * a.cos(), 0.0);
            PhasePoint::from_complex(&z).into_coords()
        };
        let full_eval = move |t: f64| {
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            z[0] = Complex64::from_polar(1.0, 2.0 * PI * t);
            PhasePoint::from_complex(&z)
        };
        let full_deriv = move |t: f64| {
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            z[0] = Complex64::new(0.0, 2.0 * PI) * Complex64::from_polar(1.0, 2.0 * PI * t);
            PhasePoint::from_complex(&z).into_coords()
        };
        let place = |l: Loop| -> Result<Loop> {
            let rot = self.rotation.clone();
            let s = self.scale;
            l.map_linear(move |v| rot.apply_real(v).into_iter().map(|c| s * c).collect())
        };
        Ok(GeneratorLoops {
            half: place(Loop::from_fn(n, m, half_eval)?.with_derivative(Arc::new(half_deriv)))?,
            fiber: place(Loop::from_fn(n, m, fiber_eval)?.with_derivative(Arc::new(fiber_deriv)))?,
            full: place(Loop::from_fn(n, m, full_eval)?.with_derivative(Arc::new(full_deriv)))?,
        })
    }

    /// The default generating set: `{γ_half, γ_fiber}` for `n = 2`, `{γ_half}` otherwise.
    pub fn default_generators(&self, m: usize) -> Result<Vec<Loop>> {
        let g = self.generator_loops(m)?;
        Ok(if self.n == 2 { vec![g.half, g.fiber] } else { vec![g.half] })
    }

    /// Lifts a loop on the model to `(φ, q)` with `x = scale·U·e^{iφ} q`.
    pub fn lift(&self, x: &Loop) -> Result<LoopLift> {
        let samples = x.samples();
        let mut phi: Vec<f64> = Vec::with_capacity(samples.len());
        let mut q = Vec::with_capacity(samples.len());
        for (index, s) in samples.iter().enumerate() {
            let z = self.to_plain_frame(s)?;
            let residual = plain_residual(&z);
            if residual > 1e-6 {
                return Err(Error::OffLagrangian { index, residual });
            }
            let sq: Complex64 = z.iter().map(|c| c * c).sum();
            let base = 0.5 * sq.arg();
            let angle = match phi.last() {
                None => base,
                Some(&prev) => {
                    // candidates base + kπ; take the one nearest the previous phase
                    let k = ((prev - base) / PI).round();
                    let cand = base + k * PI;
                    let step = (cand - prev).abs();
                    if step > MAX_PHASE_STEP {
                        return Err(Error::CoarseGrid { index, step });
                    }
                    cand
                }
            };
            let e = Complex64::from_polar(1.0, -angle);
            q.push(z.iter().map(|c| (e * c).re).collect::<Vec<f64>>());
            phi.push(angle);
        }
        let turns = (phi[phi.len() - 1] - phi[0]) / PI;
        let winding = turns.round();
        if (turns - winding).abs() > 1e-6 {
            return Err(Error::OffLagrangian { index: phi.len() - 1, residual: (turns - winding).abs() });
        }
        Ok(LoopLift { phi, q, winding: winding as i64 })
    }
}

fn plain_residual(z: &[Complex64]) -> f64 {
    let norm2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let sq: Complex64 = z.iter().map(|c| c * c).sum();
    (norm2 - 1.0).abs().max((sq.norm() - 1.0).abs())
}

/// The three shipped loops on a model, all based at `sample(0, e₁)`.
#[derive(Debug, Clone)]
pub struct GeneratorLoops {
    /// `e^{iπt} q(t)` with `q` running from `e₁` to `−e₁`; area `π/2` on `L`.
    pub half: Loop,
    /// A great circle of `S^{n−1}` at fixed phase; area 0.
    pub fiber: Loop,
    /// `e^{2πit} e₁`; area `π` on `L`.
    pub full: Loop,
}

/// Phase lift of a loop on the grid: `x(t_i) = e^{iφ_i} q_i` in the plain frame.
#[derive(Debug, Clone)]
pub struct LoopLift {
    pub phi: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub winding: i64,
}

impl LoopLift {
    /// `e^{iφ_i} q_i` in the plain frame.
    pub fn reconstruct(&self, i: usize) -> Vec<Complex64> {
        let e = Complex64::from_polar(1.0, self.phi[i]);
        self.q[i].iter().map(|&c| e * c).collect()
    }

    /// Area predicted by the lift, `(φ(1) − φ(0))/2`, in the plain frame.
    pub fn predicted_area(&self) -> f64 {
        0.5 * (self.phi[self.phi.len() - 1] - self.phi[0])
    }
}

/// Unitary `U` with `U R^n = W = {w : w_{n+1−j} = conj(w_j)}`.
///
/// Columns, for each pair `j < n+1−j`: `(e_j + e_{n+1−j})/√2` and
/// `i(e_j − e_{n+1−j})/√2`; for odd `n` the last column is the middle vector.
pub fn build_unitary(n: usize) -> Result<CMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("half-dimension {n} < 2")));
    }
    let h = 1.0 / SQRT_2;
    let zero = Complex64::new(0.0, 0.0);
    let mut cols = Vec::with_capacity(n);
    for j in 0..n / 2 {
        let k = n - 1 - j;
        let mut a = vec![zero; n];
        a[j] = Complex64::new(h, 0.0);
        a[k] = Complex64::new(h, 0.0);
        let mut b = vec![zero; n];
        b[j] = Complex64::new(0.0, h);
        b[k] = Complex64::new(0.0, -h);
        cols.push(a);
        cols.push(b);
    }
    if n % 2 == 1 {
        let mut m = vec![zero; n];
        m[n / 2] = Complex64::new(1.0, 0.0);
        cols.push(m);
    }
    Ok(CMatrix::from_columns(&cols))
}

/// `max_j |w_{n+1−j} − conj(w_j)|`, zero exactly on `W`.
pub fn conjugate_symmetry_defect(w: &[Complex64]) -> f64 {
    let n = w.len();
    (0..n).map(|j| (w[n - 1 - j] - w[j].conj()).norm()).fold(0.0, f64::max)
}

/// `Ψ(w) = (w_1, …, w_k, w_{k+2}, …, w_n, w_{k+1})` for `n = 2k+1`.
pub fn permute_psi(x: &PhasePoint) -> Result<PhasePoint> {
    let n = x.n();
    if n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("Ψ needs odd n, got {n}")));
    }
    let mut z = x.to_complex();
    let mid = z.remove(n / 2);
    z.push(mid);
    Ok(PhasePoint::from_complex(&z))
}

/// Inverse of [`permute_psi`].
pub fn permute_psi_inverse(x: &PhasePoint) -> Result<PhasePoint> {
    let n = x.n();
    if n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("Ψ needs odd n, got {n}")));
    }
    let mut z = x.to_complex();
    let last = z.pop().expect("n ≥ 1");
    z.insert(n / 2, last);
    Ok(PhasePoint::from_complex(&z))
}

/// Serializable description of a model for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub n: usize,
    pub scale: f64,
    pub rotation: SerialMatrix,
}

impl From<&APLagrangian> for ModelRecord {
    fn from(m: &APLagrangian) -> Self {
        ModelRecord { n: m.n, scale: m.scale, rotation: m.rotation.to_serial() }
    }
}

impl ModelRecord {
    pub fn to_model(&self) -> Result<APLagrangian> {
        APLagrangian::with_rotation(self.n, self.scale, self.rotation.to_matrix())
    }
}

/// Convenience: default-resolution generator loops.
pub fn default_loops(model: &APLagrangian) -> Result<GeneratorLoops> {
    model.generator_loops(DEFAULT_LOOP_SAMPLES)
}

/// A random smooth loop `e^{iφ(t)} q(t)` on `model` whose phase advances by
/// `kπ`. The direction is `cos(kπt)·a(t) + sin(kπt)·b(t)` normalized, with
/// `a`, `b` periodic perturbations of two distinct basis vectors, so `q(1) = (−1)^k q(0)`.
pub fn random_winding_loop<R: Rng + ?Sized>(model: &APLagrangian, k: i64, m: usize, rng: &mut R) -> Result<Loop> {
    let n = model.n;
    let phase0 = rng.random_range(-PI..PI);
    let wobble: Vec<(f64, f64)> = (1..=2).map(|j| (j as f64, rng.random_range(-0.3..0.3))).collect();
    let i = rng.random_range(0..n);
    let j = (i + rng.random_range(1..n)) % n;
    let amp = 0.1 / (n as f64).sqrt();
    let pert: Vec<(f64, Vec<f64>, Vec<f64>)> = (1..=2)
        .map(|f| {
            let a = (0..n).map(|_| rng.random_range(-amp..amp)).collect();
            let b = (0..n).map(|_| rng.random_range(-amp..amp)).collect();
            (f as f64, a, b)
        })
        .collect();
    let model = model.clone();
    let kf = k as f64;
    Loop::new(
        n,
        m,
        Arc::new(move |t| {
            let phi = phase0 + kf * PI * t + wobble.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum::<f64>();
            let (c, s) = ((kf * PI * t).cos(), (kf * PI * t).sin());
            let mut v = vec![0.0; n];
            v[i] += c;
            v[j] += s;
            for (f, a, b) in &pert {
                let w = (2.0 * PI * f * t).sin();
                for l in 0..n {
                    v[l] += w * (c * a[l] + s * b[l]);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            model.sample_unchecked(phi, &v)
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{liouville_integral, symplecticity_defect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r > 0.1 && r < 1.0 {
                return v.into_iter().map(|c| c / r).collect();
            }
        }
    }

    #[test]
    fn sample_examples() {
        let l = APLagrangian::plain(2).unwrap();
        assert_eq!(l.sample(0.0, &[1.0, 0.0]).unwrap().coords(), &[1.0, 0.0, 0.0, 0.0]);
        let x = l.sample(PI / 2.0, &[1.0, 0.0]).unwrap();
        let expect = [0.0, 0.0, 1.0, 0.0];
        for (a, b) in x.coords().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(l.sample(0.0, &[1.0, 1.0]), Err(Error::NotUnit { .. })));
    }

    #[test]
    fn rotated_samples_have_norm_sqrt2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..6 {
            let lt = APLagrangian::rotated(n).unwrap();
            for _ in 0..200 {
                let q = random_unit(&mut rng, n);
                let x = lt.sample(rng.random_range(0.0..2.0 * PI), &q).unwrap();
                assert!((x.norm() - SQRT_2).abs() < 1e-10);
                assert!(lt.membership(&x, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn membership_rejects_non_members() {
        let l = APLagrangian::plain(2).unwrap();
        let h = 1.0 / SQRT_2;
        let x = PhasePoint::new(2, vec![h, 0.0, 0.0, h]).unwrap();
        assert!(!l.membership(&x, 1e-6).unwrap());
        assert!(!l.membership(&PhasePoint::zero(2), 1e-6).unwrap());
        assert!(l.membership(&PhasePoint::zero(3), 1e-6).is_err());
    }

    #[test]
    fn unitary_lands_in_w() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..7 {
            let u = build_unitary(n).unwrap();
            assert!(u.unitarity_defect() < 1e-12);
            for _ in 0..100 {
                let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
                assert!(conjugate_symmetry_defect(&u.apply(&v)) < 1e-12);
            }
        }
        let u2 = build_unitary(2).unwrap();
        let h = 1.0 / SQRT_2;
        assert_eq!(u2.column(0), vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)]);
        assert_eq!(u2.column(1), vec![Complex64::new(0.0, h), Complex64::new(0.0, -h)]);
        assert!(build_unitary(1).is_err());
    }

    #[test]
    fn unitary_and_psi_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let probes: Vec<PhasePoint> = (0..100)
            .map(|_| PhasePoint::new(3, (0..6).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap())
            .collect();
        let u = build_unitary(3).unwrap();
        let d = symplecticity_defect(|x| Ok(u.apply_point(x)), &probes, 1e-3).unwrap();
        assert!(d < 1e-10, "{d}");
        let d = symplecticity_defect(permute_psi, &probes, 1e-3).unwrap();
        assert!(d < 1e-10);
    }

    #[test]
    fn psi_examples() {
        let x = PhasePoint::new(3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = permute_psi(&x).unwrap();
        assert_eq!(y.coords(), &[1.0, 3.0, 2.0, 4.0, 6.0, 5.0]);
        assert_eq!(permute_psi_inverse(&y).unwrap(), x);
        assert!(permute_psi(&PhasePoint::zero(2)).is_err());
    }

    #[test]
    fn generator_areas_and_windings() {
        for n in [2, 3, 4] {
            let l = APLagrangian::plain(n).unwrap();
            let g = l.generator_loops(2048).unwrap();
            assert!((liouville_integral(&g.half, 4).unwrap() - PI / 2.0).abs() < 1e-8);
            assert!(liouville_integral(&g.fiber, 4).unwrap().abs() < 1e-8);
            assert!((liouville_integral(&g.full, 4).unwrap() - PI).abs() < 1e-8);
            assert_eq!(l.lift(&g.half).unwrap().winding, 1);
            assert_eq!(l.lift(&g.full).unwrap().winding, 2);
            assert_eq!(l.lift(&g.fiber).unwrap().winding, 0);
        }
    }

    #[test]
    fn generator_loops_share_base_point_and_stay_on_model() {
        let lt = APLagrangian::rotated(3).unwrap();
        let g = lt.generator_loops(512).unwrap();
        let x0 = lt.sample(0.0, &[1.0, 0.0, 0.0]).unwrap();
        for l in [&g.half, &g.fiber, &g.full] {
            assert!(l.samples()[0].distance(&x0) < 1e-14);
            for s in l.samples() {
                assert!(lt.membership(s, 1e-10).unwrap());
            }
        }
    }

    #[test]
    fn lift_reconstructs_loop() {
        let l = APLagrangian::plain(3).unwrap();
        let g = l.generator_loops(1024).unwrap();
        let lift = l.lift(&g.half).unwrap();
        for (i, s) in g.half.samples().iter().enumerate() {
            let rec = PhasePoint::from_complex(&lift.reconstruct(i));
            assert!(rec.distance(s) < 1e-8);
            let qn = lift.q[i].iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((qn - 1.0).abs() < 1e-10);
        }
        assert!((lift.predicted_area() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn lift_errors() {
        let l = APLagrangian::plain(2).unwrap();
        let off = Loop::from_fn(2, 64, |t| {
            let a = 2.0 * PI * t;
            PhasePoint::new(2, vec![0.5 * a.cos(), 0.0, 0.5 * a.sin(), 0.0]).unwrap()
        })
        .unwrap();
        assert!(matches!(l.lift(&off), Err(Error::OffLagrangian { .. })));
        // phase steps of exactly π/2 are ambiguous
        let fast = Loop::from_fn(2, 16, |t| {
            PhasePoint::from_complex(&[Complex64::from_polar(1.0, 8.0 * PI * t), Complex64::new(0.0, 0.0)])
        })
        .unwrap();
        assert!(matches!(l.lift(&fast), Err(Error::CoarseGrid { .. })));
    }

    #[test]
    fn model_record_round_trip() {
        let lt = APLagrangian::rotated(3).unwrap();
        let rec = ModelRecord::from(&lt);
        let json = serde_json::to_string(&rec).unwrap();
        let back: ModelRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_model().unwrap().rotation(), lt.rotation());
    }

    #[test]
    fn random_winding_loops_have_quantized_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [2, 3, 5] {
            let model = APLagrangian::plain(n).unwrap();
            for k in -4..=4 {
                let x = random_winding_loop(&model, k, 2048, &mut rng).unwrap();
                assert!((liouville_integral(&x, 4).unwrap() - k as f64 * PI / 2.0).abs() < 1e-6);
                assert_eq!(model.lift(&x).unwrap().winding, k);
            }
        }
    }
}
