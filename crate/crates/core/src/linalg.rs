//! Small dense complex matrices acting on `C^n`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::symplectic::PhasePoint;

/// Row-major `n × n` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        CMatrix { n, data }
    }

    pub fn from_columns(cols: &[Vec<Complex64>]) -> Self {
        let n = cols.len();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), n, "column length must equal the number of columns");
            for (i, v) in c.iter().enumerate() {
                data[i * n + j] = *v;
            }
        }
        CMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        CMatrix { n, data }
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        CMatrix { n, data }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum()).collect()
    }

    pub fn apply_point(&self, x: &PhasePoint) -> PhasePoint {
        PhasePoint::from_complex(&self.apply(&x.to_complex()))
    }

    /// Real `2n`-vector in, real `2n`-vector out; suitable for [`crate::symplectic::Loop::map_linear`].
    pub fn apply_real(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let z: Vec<Complex64> = (0..n).map(|j| Complex64::new(v[j], v[n + j])).collect();
        let w = self.apply(&z);
        let mut out = vec![0.0; 2 * n];
        for j in 0..n {
            out[j] = w[j].re;
            out[n + j] = w[j].im;
        }
        out
    }

    /// `max |(U*U − I)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.get(i, j) - e).norm());
            }
        }
        worst
    }

    /// Modified Gram–Schmidt on the columns, normalizing phases so that the
    /// diagonal of the implied R factor is positive (which makes the QR of a
    /// complex Gaussian matrix Haar distributed).
    pub fn orthonormalized(&self) -> CMatrix {
        let n = self.n;
        let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| self.column(j)).collect();
        for j in 0..n {
            for k in 0..j {
                let proj: Complex64 = (0..n).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                let ck = cols[k].clone();
                for i in 0..n {
                    cols[j][i] -= proj * ck[i];
                }
            }
            let norm = cols[j].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for c in cols[j].iter_mut() {
                *c /= norm;
            }
        }
        CMatrix::from_columns(&cols)
    }

    pub fn haar_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        let cols: Vec<Vec<Complex64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        CMatrix::from_columns(&cols).orthonormalized()
    }

    /// `(I + εA)·self` re-orthonormalized, with `A` a random skew-Hermitian matrix.
    pub fn perturbed<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> CMatrix {
        let n = self.n;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                if i == j {
                    a[i * n + i] = Complex64::new(0.0, im);
                } else {
                    a[i * n + j] = Complex64::new(re, im);
                    a[j * n + i] = -Complex64::new(re, -im);
                }
            }
        }
        let mut step = CMatrix::identity(n);
        for (s, v) in step.data.iter_mut().zip(&a) {
            *s += eps * v;
        }
        step.mul(self).orthonormalized()
    }

    pub fn to_serial(&self) -> SerialMatrix {
        SerialMatrix {
            n: self.n,
            entries: self.data.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

/// Serialized matrix: row-major entries as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialMatrix {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

impl SerialMatrix {
    pub fn to_matrix(&self) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            let u = CMatrix::haar_random(n, &mut rng);
            assert!(u.unitarity_defect() < 1e-12);
            let v = u.perturbed(0.05, &mut rng);
            assert!(v.unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn serial_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = CMatrix::haar_random(3, &mut rng);
        assert_eq!(u.to_serial().to_matrix(), u);
    }
}
