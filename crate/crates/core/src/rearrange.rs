//! Symmetric decreasing rearrangement of grid functions.
//!
//! Super-level set measures are cell counts times the cell volume, so the
//! rearrangement is exactly equimeasurable in the piecewise-constant model.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::reduce::par_map_sum;

/// The distribution function t ↦ |{f ≥ t}| at the distinct positive values.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionProfile {
    pub thresholds: Vec<f64>,
    pub measures: Vec<f64>,
}

impl DistributionProfile {
    pub fn of(f: &GridFunction) -> Self {
        let mut vals: Vec<f64> = f.values().iter().cloned().filter(|v| *v > 0.0).collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
        let cell = f.cell_volume();
        let mut thresholds = Vec::new();
        let mut measures = Vec::new();
        let mut k = 0;
        while k < vals.len() {
            let t = vals[k];
            while k < vals.len() && vals[k] == t {
                k += 1;
            }
            thresholds.push(t);
            measures.push(k as f64 * cell);
        }
        thresholds.reverse();
        measures.reverse();
        Self { thresholds, measures }
    }

    /// |{f ≥ t}| for any t > 0.
    pub fn measure(&self, t: f64) -> f64 {
        let i = self.thresholds.partition_point(|&x| x < t);
        self.measures.get(i).copied().unwrap_or(0.0)
    }
}

/// Δⁿ·#{cells with value ≥ t}.
pub fn superlevel_measure(f: &GridFunction, t: f64) -> f64 {
    f.values().iter().filter(|&&v| v >= t && v > 0.0).count() as f64 * f.cell_volume()
}

/// Cell indices ordered by distance of the cell center from the origin, ties
/// broken by flat index.
fn cells_by_radius(f: &GridFunction) -> Vec<usize> {
    let n = f.dim();
    let mut keyed: Vec<(f64, usize)> = (0..f.len())
        .map(|k| {
            let c = f.center(f.multi_index(k));
            (c[..n].iter().map(|v| v * v).sum::<f64>(), k)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, k)| k).collect()
}

/// f* on the grid of f: the k-th largest value is placed in the k-th closest
/// cell to the origin.
pub fn rearrange(f: &GridFunction) -> GridFunction {
    let mut vals = f.values().to_vec();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut out = vec![0.0; f.len()];
    for (cell, v) in cells_by_radius(f).into_iter().zip(vals) {
        out[cell] = v;
    }
    let mut g = f.with_values(out).expect("permutation of valid values");
    g.meta = f.meta.clone();
    g
}

/// Δ^{2n} Σ_{x,y} f(x)·k(x−y)·g(y), with k interpolated at the lattice
/// differences. f and g must share a grid; k may live on any grid.
pub fn riesz_functional(f: &GridFunction, k: &GridFunction, g: &GridFunction) -> Result<f64> {
    let n = f.dim();
    if g.dim() != n || k.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            found: if g.dim() != n { g.dim() } else { k.dim() },
        });
    }
    if g.cells_per_axis() != f.cells_per_axis() || g.half_width() != f.half_width() {
        return Err(Error::Grid("f and g must share a grid".into()));
    }
    let support = |u: &GridFunction| -> Vec<([i64; 3], f64)> {
        u.values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, v)| {
                let idx = u.multi_index(i);
                ([idx[0] as i64, idx[1] as i64, idx[2] as i64], *v)
            })
            .collect()
    };
    let fs = support(f);
    let gs = support(g);
    if fs.is_empty() || gs.is_empty() {
        return Ok(0.0);
    }
    let m = f.cells_per_axis() as i64;
    let span = 2 * m - 1;
    let d = f.spacing();
    let table_len = (span as usize).pow(n as u32);
    let table: Vec<f64> = (0..table_len)
        .map(|t| {
            let mut rest = t as i64;
            let mut z = [0.0; 3];
            for a in (0..n).rev() {
                z[a] = ((rest % span) - (m - 1)) as f64 * d;
                rest /= span;
            }
            k.eval(&z[..n])
        })
        .collect();
    let total = par_map_sum(fs.len(), |i| {
        let (xi, fv) = fs[i];
        let mut acc = 0.0;
        for (yi, gv) in &gs {
            let mut t = 0i64;
            for a in 0..n {
                t = t * span + (xi[a] - yi[a] + m - 1);
            }
            acc += gv * table[t as usize];
        }
        fv * acc
    });
    Ok(total * f.cell_volume() * f.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::FunctionSpec;
    use std::f64::consts::PI;

    fn sample(text: &str, n: usize, l: f64, m: usize) -> GridFunction {
        FunctionSpec::parse(text).unwrap().sample(n, l, m).unwrap()
    }

    #[test]
    fn superlevel_examples() {
        let f = sample("box([0],[1],1)", 1, 2.0, 400);
        assert!((superlevel_measure(&f, 0.5) - 1.0).abs() <= 0.01 + 1e-12);
        assert_eq!(superlevel_measure(&f, 1.5), 0.0);
        let (sigma, a) = (0.4, 2.0);
        let g = sample(&format!("gaussian([0,0],{sigma},{a})"), 2, 3.0, 256);
        for t in [0.2, 0.7, 1.5] {
            let oracle = 2.0 * PI * sigma * sigma * (a / t as f64).ln();
            assert!((superlevel_measure(&g, t) / oracle - 1.0).abs() < 0.02);
        }
        let prof = DistributionProfile::of(&g);
        assert!(prof.measures.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(prof.measure(0.7), superlevel_measure(&g, 0.7));
        assert_eq!(prof.measure(10.0), 0.0);
    }

    #[test]
    fn radial_decreasing_is_fixed() {
        let f = sample("gaussian([0,0],0.5,1)", 2, 2.0, 64);
        let r = rearrange(&f);
        let tol = f.max_value() * 0.05;
        for (a, b) in f.values().iter().zip(r.values()) {
            assert!((a - b).abs() <= tol);
        }
    }

    #[test]
    fn translated_ball_becomes_centered() {
        let f = sample("ball([0.8,-0.5],0.6,1)", 2, 2.0, 128);
        let r = rearrange(&f);
        assert_eq!(superlevel_measure(&r, 1.0), superlevel_measure(&f, 1.0));
        let d = f.spacing();
        for k in 0..r.len() {
            let c = r.center(r.multi_index(k));
            let rad = (c[0] * c[0] + c[1] * c[1]).sqrt();
            if rad < 0.6 - 2.0 * d {
                assert_eq!(r.values()[k], 1.0);
            } else if rad > 0.6 + 2.0 * d {
                assert_eq!(r.values()[k], 0.0);
            }
        }
    }

    #[test]
    fn two_steps_layer_cake() {
        let f = sample("sum(box([-3],[-2],1), box([1],[2],2))", 1, 4.0, 400);
        let r = rearrange(&f);
        let d = f.spacing();
        for k in 0..r.len() {
            let x = r.center(r.multi_index(k))[0].abs();
            let expected = if x < 0.5 - d {
                2.0
            } else if x > 0.5 + d && x < 1.0 - d {
                1.0
            } else if x > 1.0 + d {
                0.0
            } else {
                continue;
            };
            assert_eq!(r.values()[k], expected, "at {x}");
        }
    }

    #[test]
    fn equimeasurable_idempotent_monotone() {
        let f = sample("max(gaussian([0.5,0.2],0.3,1), box([-1,-1],[-0.2,0.1],0.6))", 2, 2.0, 256);
        let r = rearrange(&f);
        for p in [1.0, 2.0, 3.0] {
            assert!((r.lp_norm(p) / f.lp_norm(p) - 1.0).abs() < 1e-12);
        }
        assert_eq!(rearrange(&r), r);
        let h = sample("sum(gaussian([0.5,0.2],0.3,1), box([-1,-1],[0,0.3],0.7))", 2, 2.0, 256);
        let rh = rearrange(&h);
        assert!(f.values().iter().zip(h.values()).all(|(a, b)| a <= b));
        assert!(r.values().iter().zip(rh.values()).all(|(a, b)| a <= b));
    }

    #[test]
    fn riesz_examples() {
        let m = 400;
        let f = sample("box([0],[1],1)", 1, 2.0, m);
        let v = riesz_functional(&f, &f, &f).unwrap();
        assert!((v - 0.5).abs() < 2.0 * f.spacing());
        let z = GridFunction::zeros(1, 2.0, m).unwrap();
        assert_eq!(riesz_functional(&f, &f, &z).unwrap(), 0.0);
        assert_eq!(riesz_functional(&z, &f, &f).unwrap(), 0.0);
    }

    #[test]
    fn riesz_centered_balls_equal() {
        let f = sample("ball([0,0],0.5,1)", 2, 1.5, 48);
        let k = sample("ball([0,0],0.7,1)", 2, 1.5, 48);
        let g = sample("ball([0,0],0.4,2)", 2, 1.5, 48);
        let lhs = riesz_functional(&f, &k, &g).unwrap();
        let rhs = riesz_functional(&rearrange(&f), &rearrange(&k), &rearrange(&g)).unwrap();
        assert!((lhs / rhs - 1.0).abs() < 0.01);
    }

    #[test]
    fn riesz_shifted_is_smaller() {
        let f = sample("box([0.3,0.2],[1,0.9],1)", 2, 1.5, 48);
        let k = sample("ball([0,0],0.5,1)", 2, 1.5, 48);
        let g = sample("box([-1,-1],[-0.3,0.1],1)", 2, 1.5, 48);
        let lhs = riesz_functional(&f, &k, &g).unwrap();
        let rhs = riesz_functional(&rearrange(&f), &rearrange(&k), &rearrange(&g)).unwrap();
        assert!(lhs < rhs);
    }
}
