//! Non-negative functions sampled at cell centers of a uniform grid on
//! [−L, L]ⁿ, with multilinear interpolation between centers.

use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::reduce::tree_sum;

/// Snap interpolation coordinates this close to a node onto the node.
const NODE_SNAP: f64 = 1e-9;

pub const GRID_MAGIC: &str = "FRACGEO-GRID v1";

/// Bookkeeping attached to a sampled function.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    /// Mass (L¹) removed by truncating primitives with unbounded support.
    pub truncated_mass: f64,
    pub warnings: Vec<String>,
}

/// Index bounding box of the non-zero cells, inclusive on both ends.
pub type SupportBox = [(usize, usize); 3];

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n: usize,
    half_width: f64,
    m: usize,
    values: Vec<f64>,
    pub meta: GridMeta,
}

impl GridFunction {
    pub fn new(n: usize, half_width: f64, m: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Grid(format!("dimension {n} not in 1..=3")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Grid(format!("half width {half_width} must be positive")));
        }
        if m == 0 {
            return Err(Error::Grid("m must be positive".into()));
        }
        let expected = m.pow(n as u32);
        if values.len() != expected {
            return Err(Error::Grid(format!(
                "expected {expected} values, found {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Grid(format!("value {v} at index {i} is negative or non-finite")));
        }
        Ok(Self {
            n,
            half_width,
            m,
            values,
            meta: GridMeta::default(),
        })
    }

    pub fn zeros(n: usize, half_width: f64, m: usize) -> Result<Self> {
        Self::new(n, half_width, m, vec![0.0; m.pow(n as u32)])
    }

    /// Samples `f` at every cell center.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(n: usize, half_width: f64, m: usize, f: F) -> Result<Self> {
        let probe = Self::zeros(n, half_width, m)?;
        let values = (0..probe.len())
            .map(|k| f(&probe.center(probe.multi_index(k))[..n]))
            .collect();
        Self::new(n, half_width, m, values)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells_per_axis(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.m as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Row-major multi-index with the last axis fastest; unused axes are 0.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for a in (0..self.n).rev() {
            idx[a] = rest % self.m;
            rest /= self.m;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx[..self.n].iter().fold(0, |acc, &i| acc * self.m + i)
    }

    pub fn center(&self, idx: [usize; 3]) -> [f64; 3] {
        let d = self.spacing();
        let mut c = [0.0; 3];
        for a in 0..self.n {
            c[a] = -self.half_width + (idx[a] as f64 + 0.5) * d;
        }
        c
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// Multilinear interpolation of the cell-center samples; samples beyond
    /// the grid count as 0 and the result is exactly 0 outside [−L, L]ⁿ.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.spacing();
        let mut base = [0i64; 3];
        let mut theta = [0.0f64; 3];
        for a in 0..self.n {
            if x[a] < -self.half_width || x[a] > self.half_width {
                return 0.0;
            }
            let u = (x[a] + self.half_width) / d - 0.5;
            let mut i0 = u.floor();
            let mut t = u - i0;
            if t < NODE_SNAP {
                t = 0.0;
            } else if t > 1.0 - NODE_SNAP {
                t = 0.0;
                i0 += 1.0;
            }
            base[a] = i0 as i64;
            theta[a] = t;
        }
        let m = self.m as i64;
        let mut acc = 0.0;
        for corner in 0..(1usize << self.n) {
            let mut w = 1.0;
            let mut flat = 0usize;
            let mut inside = true;
            for a in 0..self.n {
                let bit = (corner >> a) & 1;
                let wa = if bit == 1 { theta[a] } else { 1.0 - theta[a] };
                if wa == 0.0 {
                    inside = false;
                    break;
                }
                let i = base[a] + bit as i64;
                if i < 0 || i >= m {
                    inside = false;
                    break;
                }
                w *= wa;
                flat = flat * self.m + i as usize;
            }
            if inside {
                acc += w * self.values[flat];
            }
        }
        acc
    }

    /// ∫ fᵖ over the piecewise-constant cell model.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let terms: Vec<f64> = self.values.iter().map(|&v| pow_nonneg(v, p)).collect();
        tree_sum(&terms) * self.cell_volume()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norm_pow(p).powf(1.0 / p)
    }

    /// c·f for c ≥ 0.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut out = Self::new(
            self.n,
            self.half_width,
            self.m,
            self.values.iter().map(|v| v * c).collect(),
        )?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Same lattice with the values replaced.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.half_width, self.m, values)
    }

    pub fn support_box(&self) -> Option<SupportBox> {
        let mut bx = [(usize::MAX, 0usize); 3];
        let mut any = false;
        for (k, &v) in self.values.iter().enumerate() {
            if v > 0.0 {
                any = true;
                let idx = self.multi_index(k);
                for a in 0..self.n {
                    bx[a].0 = bx[a].0.min(idx[a]);
                    bx[a].1 = bx[a].1.max(idx[a]);
                }
            }
        }
        if !any {
            return None;
        }
        for item in bx.iter_mut().skip(self.n) {
            *item = (0, 0);
        }
        Some(bx)
    }

    /// Integer cell offset of `other`'s lattice relative to ours when both
    /// share the spacing and their centers coincide: our index i and
    /// other's index i − offset sit at the same point.
    pub fn lattice_offset(&self, other: &GridFunction) -> Option<i64> {
        if self.n != other.n {
            return None;
        }
        let d = self.spacing();
        if ((d - other.spacing()) / d).abs() > 1e-12 {
            return None;
        }
        let off = (self.half_width - other.half_width) / d;
        let r = off.round();
        ((off - r).abs() < 1e-9).then_some(r as i64)
    }

    /// Realizes x ↦ f(φ⁻¹(x)) on a grid with the same spacing, grown in
    /// whole cells until it contains the image of the support.
    pub fn affine_image(&self, map: &AffineMap, max_cells: usize) -> Result<Self> {
        if map.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: map.dim(),
            });
        }
        let d = self.spacing();
        let Some(bx) = self.support_box() else {
            return Ok(self.clone());
        };
        let lo = self.center([bx[0].0, bx[1].0, bx[2].0]);
        let hi = self.center([bx[0].1, bx[1].1, bx[2].1]);
        let mut need = 0.0f64;
        for corner in 0..(1usize << self.n) {
            let pt: Vec<f64> = (0..self.n)
                .map(|a| {
                    if (corner >> a) & 1 == 1 {
                        (hi[a] + d).min(self.half_width)
                    } else {
                        (lo[a] - d).max(-self.half_width)
                    }
                })
                .collect();
            for c in map.apply(&pt) {
                need = need.max(c.abs());
            }
        }
        let grow = ((need - self.half_width) / d - 1e-9).ceil().max(0.0) as usize;
        let m_out = self.m + 2 * grow;
        if m_out > max_cells {
            return Err(Error::Size(format!(
                "image needs {m_out} cells per axis, limit is {max_cells}"
            )));
        }
        let half = self.half_width + grow as f64 * d;
        let mut out = Self::from_fn(self.n, half, m_out, |x| self.eval(&map.apply_inverse(x)))?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Moves the samples by whole cells inside the same grid. Fails when
    /// non-zero samples would leave the grid.
    pub fn shift_cells(&self, shift: &[i64]) -> Result<Self> {
        let mut values = vec![0.0; self.len()];
        for (k, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let idx = self.multi_index(k);
            let mut target = [0usize; 3];
            for a in 0..self.n {
                let t = idx[a] as i64 + shift[a];
                if t < 0 || t >= self.m as i64 {
                    return Err(Error::Size("shift moves support off the grid".into()));
                }
                target[a] = t as usize;
            }
            values[self.flat_index(&target)] = v;
        }
        let mut out = self.with_values(values)?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{GRID_MAGIC}\nn={}\nL={}\nm={}\n",
            self.n, self.half_width, self.m
        );
        for row in self.values.chunks(self.m) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut half = None;
        let mut m = None;
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line == GRID_MAGIC {
                continue;
            }
            if let Some((key, val)) = line.split_once('=') {
                let val = val.trim();
                let bad = |what: &str| Error::Format(format!("line {}: bad {what} '{val}'", lineno + 1));
                match key.trim() {
                    "n" => n = Some(val.parse::<usize>().map_err(|_| bad("n"))?),
                    "L" => half = Some(val.parse::<f64>().map_err(|_| bad("L"))?),
                    "m" => m = Some(val.parse::<usize>().map_err(|_| bad("m"))?),
                    other => {
                        return Err(Error::Format(format!(
                            "line {}: unknown header '{other}'",
                            lineno + 1
                        )))
                    }
                }
                continue;
            }
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {}: bad value '{tok}'", lineno + 1))
                })?);
            }
        }
        let (Some(n), Some(half), Some(m)) = (n, half, m) else {
            return Err(Error::Format("missing n=, L= or m= header".into()));
        };
        Self::new(n, half, m, values)
    }
}

#[inline]
pub(crate) fn pow_nonneg(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v * v
    } else if p == 1.0 {
        v
    } else if v == 0.0 {
        0.0
    } else {
        v.powf(p)
    }
}

/// Volume of the unit ball in ℝⁿ, n ≤ 3.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("dimension {n} unsupported"),
    }
}
