//! Antipodally closed quadratures on 𝕊ⁿ⁻¹ for n = 1, 2, 3.
//!
//! n = 1 is the two-point set {±1} with unit weights, n = 2 uses M equally
//! spaced angles and n = 3 a Gauss–Legendre rule in cos θ times a uniform
//! azimuthal rule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::reduce::tree_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureLayout {
    Pair,
    Circle { count: usize },
    /// `rings` Gauss–Legendre latitudes times `2·rings` azimuths.
    Product { rings: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    n: usize,
    layout: QuadratureLayout,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    /// Gauss–Legendre abscissae (cos θ, ascending) for the product rule.
    latitudes: Vec<f64>,
}

impl SphereQuadrature {
    /// Builds a rule with roughly `nodes` points: ignored for n = 1, the
    /// exact count (even, ≥ 4) for n = 2, and 2k² points with k = round(√(nodes/2))
    /// for n = 3.
    pub fn new(n: usize, nodes: usize) -> Result<Self> {
        match n {
            1 => Ok(Self::pair()),
            2 => Self::circle(nodes),
            3 => Self::product(((nodes as f64 / 2.0).sqrt().round() as usize).max(2)),
            _ => Err(Error::Dimension { expected: 3, found: n }),
        }
    }

    pub fn pair() -> Self {
        Self {
            n: 1,
            layout: QuadratureLayout::Pair,
            nodes: vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            weights: vec![1.0, 1.0],
            latitudes: Vec::new(),
        }
    }

    pub fn circle(count: usize) -> Result<Self> {
        if count < 4 || count % 2 != 0 {
            return Err(Error::Param(format!(
                "circle quadrature needs an even count >= 4, got {count}"
            )));
        }
        let w = 2.0 * PI / count as f64;
        let nodes = (0..count)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / count as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        Ok(Self {
            n: 2,
            layout: QuadratureLayout::Circle { count },
            nodes,
            weights: vec![w; count],
            latitudes: Vec::new(),
        })
    }

    pub fn product(rings: usize) -> Result<Self> {
        if rings < 2 {
            return Err(Error::Param("product quadrature needs at least 2 rings".into()));
        }
        let (x, wx) = gauss_legendre(rings);
        let az = 2 * rings;
        let wphi = 2.0 * PI / az as f64;
        let mut nodes = Vec::with_capacity(rings * az);
        let mut weights = Vec::with_capacity(rings * az);
        for (ct, w) in x.iter().zip(&wx) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..az {
                let phi = 2.0 * PI * j as f64 / az as f64;
                nodes.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(w * wphi);
            }
        }
        Ok(Self {
            n: 3,
            layout: QuadratureLayout::Product { rings },
            nodes,
            weights,
            latitudes: x,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> QuadratureLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ wᵢ·φ(i, ξᵢ) with deterministic summation.
    pub fn integrate<F: Fn(usize, &[f64; 3]) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, x)| self.weights[i] * f(i, x))
            .collect();
        tree_sum(&terms)
    }

    /// Index of the antipode −ξᵢ.
    pub fn antipode(&self, i: usize) -> usize {
        match self.layout {
            QuadratureLayout::Pair => 1 - i,
            QuadratureLayout::Circle { count } => (i + count / 2) % count,
            QuadratureLayout::Product { rings } => {
                let az = 2 * rings;
                let (r, j) = (i / az, i % az);
                (rings - 1 - r) * az + (j + rings) % az
            }
        }
    }

    /// Interpolates node values at an arbitrary unit direction: linear in
    /// angle for n = 2, bilinear in (cos θ, φ) for n = 3.
    pub fn interpolate(&self, values: &[f64], dir: &[f64]) -> f64 {
        match self.layout {
            QuadratureLayout::Pair => {
                if dir[0] >= 0.0 {
                    values[0]
                } else {
                    values[1]
                }
            }
            QuadratureLayout::Circle { count } => {
                let t = dir[1].atan2(dir[0]).rem_euclid(2.0 * PI);
                let u = t / (2.0 * PI) * count as f64;
                let i0 = (u.floor() as usize) % count;
                let w = u - u.floor();
                (1.0 - w) * values[i0] + w * values[(i0 + 1) % count]
            }
            QuadratureLayout::Product { rings } => {
                let az = 2 * rings;
                let ct = dir[2].clamp(-1.0, 1.0);
                let phi = dir[1].atan2(dir[0]).rem_euclid(2.0 * PI);
                let u = phi / (2.0 * PI) * az as f64;
                let j0 = (u.floor() as usize) % az;
                let wj = u - u.floor();
                let ring = |r: usize| (1.0 - wj) * values[r * az + j0] + wj * values[r * az + (j0 + 1) % az];
                let lat = &self.latitudes;
                if ct <= lat[0] {
                    return ring(0);
                }
                if ct >= lat[rings - 1] {
                    return ring(rings - 1);
                }
                let r1 = lat.partition_point(|&x| x <= ct).min(rings - 1);
                let r0 = r1 - 1;
                let wr = (ct - lat[r0]) / (lat[r1] - lat[r0]);
                (1.0 - wr) * ring(r0) + wr * ring(r1)
            }
        }
    }

    /// Index pairs of neighbouring nodes, used for discrete Lipschitz checks.
    pub fn neighbour_pairs(&self) -> Vec<(usize, usize)> {
        match self.layout {
            QuadratureLayout::Pair => vec![(0, 1)],
            QuadratureLayout::Circle { count } => (0..count).map(|i| (i, (i + 1) % count)).collect(),
            QuadratureLayout::Product { rings } => {
                let az = 2 * rings;
                let mut out = Vec::new();
                for r in 0..rings {
                    for j in 0..az {
                        out.push((r * az + j, r * az + (j + 1) % az));
                        if r + 1 < rings {
                            out.push((r * az + j, (r + 1) * az + j));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Surface measure of 𝕊ⁿ⁻¹ (counting measure for n = 1).
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("dimension {n} unsupported"),
    }
}

/// Gauss–Legendre nodes (ascending) and weights on [−1, 1], by Newton
/// iteration on the three-term recurrence.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pk = if k == 1 { z } else { p1 };
            let pkm1 = if k == 1 { 1.0 } else { p0 };
            dp = k as f64 * (z * pk - pkm1) / (z * z - 1.0);
            let dz = pk / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[k - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[k - 1 - i] = wi;
    }
    (x, w)
}
