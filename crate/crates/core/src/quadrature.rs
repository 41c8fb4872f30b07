//! Positive-weight Gauss-type quadrature on the reference edge `[0,1]` and the
//! reference triangle `{x >= 0, y >= 0, x + y <= 1}`.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre rules,
//! which keeps every weight strictly positive for all supported degrees.

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates (`[t, 0]` for edge rules).
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        Err(Error::QuadratureDegree(degree))
    } else {
        Ok(())
    }
}

/// Gauss–Legendre rule on `[0, 1]` exact to `degree`; weights sum to 1.
pub fn edge_rule(degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n.max(1));
    Ok(QuadratureRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
        weights: w.iter().map(|&w| 0.5 * w).collect(),
        exact_degree: degree,
    })
}

/// Rule on the reference triangle exact for total degree `degree`; weights
/// sum to `1/2`.
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    // x^a y^b becomes u^a (1-u)^(b+1) v^b under x = u, y = (1-u) v
    let n = (degree + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let unit: Vec<(f64, f64)> = x.iter().zip(&w).map(|(&t, &w)| (0.5 * (t + 1.0), 0.5 * w)).collect();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for &(u, wu) in &unit {
        for &(v, wv) in &unit {
            points.push([u, (1.0 - u) * v]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exact_degree: degree,
    })
}
