//! Smooth step functions built from the compactly supported bump
//! `exp(−1/(u(1−u)))`, plus Gauss–Legendre rules used to integrate it.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `k`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn bump(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

const TABLE_CELLS: usize = 256;
const GL_POINTS: usize = 16;

/// A C^∞ map `[0,1] → [0,1]` that is exactly 0 on `[0, δ]` and exactly 1 on
/// `[1−δ, 1]`, defined as the normalized integral of a bump supported in `(δ, 1−δ)`.
#[derive(Debug, Clone)]
pub struct SmoothStep {
    delta: f64,
    cumulative: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SmoothStep {
    pub fn new(delta: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&delta) {
            return Err(Error::InvalidArgument(format!("smooth-step margin {delta} not in [0, 0.5)")));
        }
        let (nodes, weights) = gauss_legendre(GL_POINTS);
        let mut s = SmoothStep { delta, cumulative: vec![0.0; TABLE_CELLS + 1], nodes, weights };
        for k in 0..TABLE_CELLS {
            let a = k as f64 / TABLE_CELLS as f64;
            let b = (k + 1) as f64 / TABLE_CELLS as f64;
            s.cumulative[k + 1] = s.cumulative[k] + s.integrate(a, b);
        }
        Ok(s)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * bump(mid + half * x)).sum::<f64>() * half
    }

    fn unit(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let k = ((u * TABLE_CELLS as f64) as usize).min(TABLE_CELLS - 1);
        let a = k as f64 / TABLE_CELLS as f64;
        (self.cumulative[k] + self.integrate(a, u)) / self.cumulative[TABLE_CELLS]
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.unit((s - self.delta) / (1.0 - 2.0 * self.delta))
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let w = 1.0 - 2.0 * self.delta;
        bump((s - self.delta) / w) / (self.cumulative[TABLE_CELLS] * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((int - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn exact_plateaus() {
        let s = SmoothStep::new(0.1).unwrap();
        for i in 0..=100 {
            let t = 0.1 * i as f64 / 100.0;
            assert_eq!(s.eval(t), 0.0);
            assert_eq!(s.eval(1.0 - t), 1.0);
        }
        assert!((s.eval(0.5) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn monotone_and_derivative_consistent() {
        let s = SmoothStep::new(0.1).unwrap();
        let h = 1e-5;
        let mut prev = 0.0;
        for i in 1..1000 {
            let t = i as f64 / 1000.0;
            let v = s.eval(t);
            assert!(v >= prev);
            prev = v;
            let fd = (s.eval(t + h) - s.eval(t - h)) / (2.0 * h);
            assert!((fd - s.derivative(t)).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn bad_margin() {
        assert!(SmoothStep::new(0.5).is_err());
        assert!(SmoothStep::new(-0.1).is_err());
    }
}
