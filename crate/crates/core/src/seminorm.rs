//! Anisotropic fractional L_p seminorms of a pair of grid functions,
//!
//! ```text
//! Δ^{2n} Σ_{x,y} D(x, y)^p ‖x − y‖_K^{−n−ps},   D = |f(x) − h(y)|, (·)₊ or (·)₋,
//! ```
//!
//! summed over the whole lattice. Pairs inside the bounding box of the two
//! supports are enumerated by lattice difference; pairs with one point outside
//! use lattice sums of the kernel, so the result does not depend on the size of
//! the sampling box.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pow_nonneg, GridFunction};
use crate::params::Params;
use crate::quadrature::SphereQuadrature;
use crate::reduce::tree_sum;
use crate::starbody::StarBody;

/// Explicit lattice sums run over the cube |k|∞ ≤ R before the tail integral.
const LATTICE_RADIUS: [i64; 3] = [4096, 64, 24];
/// Exponent fits below this are read as a blow-up.
pub const DIVERGENCE_SLOPE: f64 = -0.05;
/// Sub-cell points per axis used to average the clamped kernel.
const SUBCELLS: [usize; 3] = [8, 6, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Abs,
    Plus,
    Minus,
}

impl Mode {
    #[inline]
    pub fn integrand(self, diff: f64, p: f64) -> f64 {
        match self {
            Mode::Abs => pow_nonneg(diff.abs(), p),
            Mode::Plus => pow_nonneg(diff.max(0.0), p),
            Mode::Minus => pow_nonneg((-diff).max(0.0), p),
        }
    }

    /// Weights of ‖f‖_p^p and ‖h‖_p^p in the far field, where one of the two
    /// functions vanishes.
    pub fn tail_weights(self) -> (f64, f64) {
        match self {
            Mode::Abs => (1.0, 1.0),
            Mode::Plus => (1.0, 0.0),
            Mode::Minus => (0.0, 1.0),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Abs => "abs",
            Mode::Plus => "plus",
            Mode::Minus => "minus",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "abs" => Ok(Mode::Abs),
            "plus" => Ok(Mode::Plus),
            "minus" => Ok(Mode::Minus),
            other => Err(Error::Param(format!("unknown mode '{other}'"))),
        }
    }
}

/// How the singular kernel is treated near the diagonal. `Truncate(ε)` uses
/// min(‖z‖_K^{−n−ps}, ε^{−n−ps}), with ε in gauge units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelPolicy {
    ExcludeDiagonal,
    Truncate { epsilon: f64 },
}

impl KernelPolicy {
    /// Truncation at twice the spacing, measured in the gauge of `k`.
    pub fn default_for(grid: &GridFunction, k: &StarBody) -> Self {
        KernelPolicy::Truncate {
            epsilon: base_level(grid.spacing(), k),
        }
    }
}

impl fmt::Display for KernelPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelPolicy::ExcludeDiagonal => f.write_str("exclude_diagonal"),
            KernelPolicy::Truncate { epsilon } => write!(f, "truncate({epsilon})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormResult {
    /// None when the seminorm is infinite.
    pub value: Option<f64>,
    /// The finite value produced by the policy, kept even when divergent.
    pub computed: f64,
    pub mode: Mode,
    pub policy: KernelPolicy,
    /// (ε, truncated value) at the diagnostic levels.
    pub levels: Vec<(f64, f64)>,
    /// Fitted α in V(ε) ≈ A + B·ε^α; about −ps for a blow-up.
    pub exponent: Option<f64>,
}

impl SeminormResult {
    pub fn is_infinite(&self) -> bool {
        self.value.is_none()
    }
}

pub(crate) fn probe_quadrature(n: usize) -> SphereQuadrature {
    SphereQuadrature::new(n, if n == 2 { 720 } else { 1152 }).expect("probe rule")
}

fn tail_quadrature(n: usize) -> SphereQuadrature {
    match n {
        1 => SphereQuadrature::pair(),
        2 => SphereQuadrature::circle(2048).expect("tail rule"),
        _ => SphereQuadrature::product(48).expect("tail rule"),
    }
}

/// ε₀ = 2Δ/min ρ_K, the largest gauge of a vector of length 2Δ.
pub fn base_level(spacing: f64, k: &StarBody) -> f64 {
    2.0 * spacing / k.min_radial(&probe_quadrature(k.dim()))
}

/// Five geometrically spaced truncation levels from ε₀ to 10·ε₀.
pub fn diagnostic_levels(spacing: f64, k: &StarBody) -> [f64; 5] {
    let e0 = base_level(spacing, k);
    let q = 10f64.powf(0.25);
    [e0, e0 * q, e0 * q * q, e0 * q * q * q, e0 * 10.0]
}

/// Dense copies of f and h on the bounding box of their joint support.
struct Window {
    dims: [usize; 3],
    fw: Vec<f64>,
    hw: Vec<f64>,
}

fn window(f: &GridFunction, h: &GridFunction) -> Result<Option<Window>> {
    let n = f.dim();
    if h.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            found: h.dim(),
        });
    }
    let off = f
        .lattice_offset(h)
        .ok_or_else(|| Error::Grid("f and h must share spacing and lattice".into()))?;
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    let mut any = false;
    if let Some(b) = f.support_box() {
        any = true;
        for a in 0..n {
            lo[a] = lo[a].min(b[a].0 as i64);
            hi[a] = hi[a].max(b[a].1 as i64);
        }
    }
    if let Some(b) = h.support_box() {
        any = true;
        for a in 0..n {
            lo[a] = lo[a].min(b[a].0 as i64 + off);
            hi[a] = hi[a].max(b[a].1 as i64 + off);
        }
    }
    if !any {
        return Ok(None);
    }
    let mut dims = [1usize; 3];
    for a in 0..n {
        dims[a] = (hi[a] - lo[a] + 1) as usize;
    }
    let total = dims[0] * dims[1] * dims[2];
    let (mf, mh) = (f.cells_per_axis() as i64, h.cells_per_axis() as i64);
    let fetch = |g: &GridFunction, m: i64, shift: i64, w: [usize; 3]| -> f64 {
        let mut idx = [0usize; 3];
        for a in 0..n {
            let i = lo[a] + w[a] as i64 - shift;
            if i < 0 || i >= m {
                return 0.0;
            }
            idx[a] = i as usize;
        }
        g.value_at(&idx[..n])
    };
    let mut fw = Vec::with_capacity(total);
    let mut hw = Vec::with_capacity(total);
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                fw.push(fetch(f, mf, 0, [i, j, k]));
                hw.push(fetch(h, mh, off, [i, j, k]));
            }
        }
    }
    Ok(Some(Window { dims, fw, hw }))
}

/// Per-difference sums over x ∈ W ∩ (W + d): Σ D(f(x), h(x−d))^p, Σ f(x)^p
/// and Σ h(x−d)^p.
fn overlap_sums(win: &Window, d: [i64; 3], mode: Mode, p: f64, fp: &[f64], hp: &[f64]) -> [f64; 3] {
    let w = win.dims;
    let range = |a: usize| -> (i64, i64) {
        let wa = w[a] as i64;
        (d[a].max(0), (wa + d[a]).min(wa))
    };
    let (r0, r1, r2) = (range(0), range(1), range(2));
    if r0.0 >= r0.1 || r1.0 >= r1.1 || r2.0 >= r2.1 {
        return [0.0; 3];
    }
    let (w1, w2) = (w[1] as i64, w[2] as i64);
    let (mut pd, mut qf, mut qh) = (0.0, 0.0, 0.0);
    for x0 in r0.0..r0.1 {
        let y0 = x0 - d[0];
        for x1 in r1.0..r1.1 {
            let y1 = x1 - d[1];
            let xr = ((x0 * w1 + x1) * w2) as usize;
            let yr = ((y0 * w1 + y1) * w2 - d[2]) as usize;
            let (a, b) = (r2.0 as usize, r2.1 as usize);
            let fs = &win.fw[xr + a..xr + b];
            let hs = &win.hw[yr + a..yr + b];
            for (u, v) in fs.iter().zip(hs) {
                pd += mode.integrand(u - v, p);
            }
            qf += fp[xr + a..xr + b].iter().sum::<f64>();
            qh += hp[yr + a..yr + b].iter().sum::<f64>();
        }
    }
    [pd, qf, qh]
}

/// Pair sums grouped by lattice difference, from which the excluded-diagonal
/// and truncated values at any ε up to `reach` follow without another pass.
#[derive(Debug, Clone)]
pub struct PairSums {
    /// Per non-zero difference z: (‖z‖_K, Σ D^p over pairs at that difference).
    pub rows: Vec<(f64, f64)>,
    /// Gauges of sub-cell points around each difference near the diagonal,
    /// `SUBCELLS[n]` per entry of `near`.
    sub_gauges: Vec<f64>,
    /// Indices into `rows` whose cells reach below `reach`.
    near: Vec<usize>,
    /// Σ D^p over the diagonal.
    pub diagonal: f64,
    /// Σ D^p·‖z‖^{−γ} over all differences beyond the tabulated ones.
    pub far: f64,
    /// Largest truncation level the table resolves.
    pub reach: f64,
    pub gamma: f64,
    /// Δ^{2n}.
    pub scale: f64,
}

impl PairSums {
    /// The diagonal removed, everything else at full strength.
    pub fn excluded(&self) -> f64 {
        let terms: Vec<f64> = self.rows.iter().map(|(g, w)| w * g.powf(-self.gamma)).collect();
        (tree_sum(&terms) + self.far) * self.scale
    }

    /// Kernel min(‖z‖^{−γ}, ε^{−γ}).
    pub fn clamped(&self, epsilon: f64) -> f64 {
        assert!(epsilon <= self.reach, "truncation level beyond the tabulated range");
        let cap = epsilon.powf(-self.gamma);
        let terms: Vec<f64> = self
            .rows
            .iter()
            .map(|(g, w)| w * g.powf(-self.gamma).min(cap))
            .collect();
        (tree_sum(&terms) + self.diagonal * cap + self.far) * self.scale
    }

    /// Truncated value with the clamped kernel averaged over each cell near
    /// the diagonal, so the clamped region grows continuously with ε. Used
    /// for the exponent fit; ε must clamp the whole diagonal cell.
    pub fn clamped_smooth(&self, epsilon: f64) -> f64 {
        assert!(epsilon <= self.reach, "truncation level beyond the tabulated range");
        let cap = epsilon.powf(-self.gamma);
        let per = if self.near.is_empty() { 0 } else { self.sub_gauges.len() / self.near.len() };
        let mut terms: Vec<f64> = self.rows.iter().map(|(g, w)| w * g.powf(-self.gamma)).collect();
        for (j, &row) in self.near.iter().enumerate() {
            let subs = &self.sub_gauges[j * per..(j + 1) * per];
            let mean = subs.iter().map(|g| g.powf(-self.gamma).min(cap)).sum::<f64>() / per as f64;
            terms[row] = self.rows[row].1 * mean;
        }
        (tree_sum(&terms) + self.diagonal * cap + self.far) * self.scale
    }
}

/// Σ_{k ≠ 0, k ∉ box} ‖k‖_K^{−γ} for the lattice box |k_a| ≤ inner[a], with
/// `gauge` and `rho` the gauge and radial function in lattice units.
fn outer_lattice_sum(
    gauge: &(dyn Fn(&[f64]) -> f64 + Sync),
    n: usize,
    inner: [i64; 3],
    rho_gamma: &dyn Fn(&[f64; 3]) -> f64,
    gamma: f64,
) -> f64 {
    let r = inner[..n].iter().cloned().max().unwrap_or(0).max(LATTICE_RADIUS[n - 1]);
    let side = 2 * r + 1;
    let count = side.pow(n as u32) as usize;
    let explicit: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|t| {
            let mut rest = t as i64;
            let mut k = [0.0; 3];
            let mut inside = true;
            for a in (0..n).rev() {
                let v = rest % side - r;
                rest /= side;
                k[a] = v as f64;
                inside &= v.abs() <= inner[a];
            }
            if inside {
                0.0
            } else {
                gauge(&k[..n]).powf(-gamma)
            }
        })
        .collect();
    let ps = gamma - n as f64;
    let edge = r as f64 + 0.5;
    let quad = tail_quadrature(n);
    let tail = quad.integrate(|_, xi| {
        let sup = xi[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rho_gamma(xi) * (edge / sup).powf(-ps) / ps
    });
    tree_sum(&explicit) + tail
}

/// Tabulates the pair sums of f against h, resolving truncation levels up to
/// `reach` (gauge units).
pub fn pair_sums(
    f: &GridFunction,
    h: &GridFunction,
    k: &StarBody,
    params: &Params,
    mode: Mode,
    reach: f64,
) -> Result<PairSums> {
    let n = params.n;
    if f.dim() != n || k.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            found: if f.dim() != n { f.dim() } else { k.dim() },
        });
    }
    let gamma = params.kernel_exponent();
    let p = params.p;
    let delta = f.spacing();
    let scale = f.cell_volume() * f.cell_volume();
    let Some(win) = window(f, h)? else {
        return Ok(PairSums {
            rows: Vec::new(),
            sub_gauges: Vec::new(),
            near: Vec::new(),
            diagonal: 0.0,
            far: 0.0,
            reach,
            gamma,
            scale,
        });
    };

    let probe = probe_quadrature(n);
    let rho_max = k.max_radial(&probe) * 1.05;
    let cover = (reach * rho_max / delta).ceil() as i64 + 2;
    let mut extent = [0i64; 3];
    for a in 0..n {
        extent[a] = (win.dims[a] as i64 - 1).max(cover);
    }
    let span = [2 * extent[0] + 1, 2 * extent[1] + 1, 2 * extent[2] + 1];
    let table_len = (span[0] * span[1] * span[2]) as usize;
    let decode = |t: usize| -> [i64; 3] {
        let t = t as i64;
        [
            t / (span[1] * span[2]) - extent[0],
            (t / span[2]) % span[1] - extent[1],
            t % span[2] - extent[2],
        ]
    };

    let fp: Vec<f64> = win.fw.iter().map(|v| pow_nonneg(*v, p)).collect();
    let hp: Vec<f64> = win.hw.iter().map(|v| pow_nonneg(*v, p)).collect();
    let f_total = tree_sum(&fp);
    let h_total = tree_sum(&hp);
    let (wf, wh) = mode.tail_weights();
    let sub_side = SUBCELLS[n - 1];
    let per = sub_side.pow(n as u32);

    let table: Vec<(f64, f64, Vec<f64>)> = (0..table_len)
        .into_par_iter()
        .map(|t| {
            let d = decode(t);
            let [pd, qf, qh] = overlap_sums(&win, d, mode, p, &fp, &hp);
            if d == [0, 0, 0] {
                return (0.0, pd, Vec::new());
            }
            let mut z = [0.0; 3];
            for a in 0..n {
                z[a] = d[a] as f64 * delta;
            }
            let g = k.gauge(&z[..n]);
            let mass = pd + wf * (f_total - qf) + wh * (h_total - qh);
            let near = (0..n).map(|a| d[a].abs()).max().unwrap_or(0) <= cover;
            let subs = if near {
                (0..per)
                    .map(|c| {
                        let mut y = z;
                        let mut rest = c;
                        for ya in y.iter_mut().take(n) {
                            let i = rest % sub_side;
                            rest /= sub_side;
                            *ya += ((i as f64 + 0.5) / sub_side as f64 - 0.5) * delta;
                        }
                        k.gauge(&y[..n])
                    })
                    .collect()
            } else {
                Vec::new()
            };
            (g, mass, subs)
        })
        .collect();

    let origin = table_len / 2;
    let diagonal = table[origin].1;
    let mut rows = Vec::with_capacity(table_len - 1);
    let mut near = Vec::new();
    let mut sub_gauges = Vec::new();
    for (t, (g, mass, subs)) in table.into_iter().enumerate() {
        if t == origin {
            continue;
        }
        if !subs.is_empty() {
            near.push(rows.len());
            sub_gauges.extend(subs);
        }
        rows.push((g, mass));
    }

    let far_mass = wf * f_total + wh * h_total;
    let far = if far_mass > 0.0 {
        let gauge_lattice = |x: &[f64]| {
            let z: Vec<f64> = x.iter().map(|v| v * delta).collect();
            k.gauge(&z) / delta
        };
        let rho_gamma = |xi: &[f64; 3]| k.radial(&xi[..n]).powf(gamma);
        far_mass * outer_lattice_sum(&gauge_lattice, n, extent, &rho_gamma, gamma) * delta.powf(-gamma)
    } else {
        0.0
    };
    Ok(PairSums {
        rows,
        sub_gauges,
        near,
        diagonal,
        far,
        reach,
        gamma,
        scale,
    })
}

/// Fits α in V(ε) = A + B·ε^α through three values at geometrically spaced ε.
pub fn fit_exponent(levels: &[(f64, f64); 3]) -> Option<f64> {
    let (v1, v2, v3) = (levels[0].1, levels[1].1, levels[2].1);
    let ratio = (v1 - v2) / (v2 - v3);
    if !(ratio.is_finite() && ratio > 0.0) {
        return None;
    }
    let q = (levels[1].0 / levels[0].0).ln();
    Some(-ratio.ln() / q)
}

/// Leading exponent α of V(ε) = A + B·ε^α + C·ε^β (α < β) from five values
/// at geometrically spaced ε. The successive differences obey a two-term
/// linear recurrence whose roots are q^α and q^β.
pub fn fit_leading_exponent(levels: &[(f64, f64); 5]) -> Option<f64> {
    let d: Vec<f64> = levels.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let det = d[0] * d[2] - d[1] * d[1];
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || det.abs() <= 1e-12 * scale * scale {
        return None;
    }
    let sum = (d[0] * d[3] - d[1] * d[2]) / det;
    let prod = (d[1] * d[3] - d[2] * d[2]) / det;
    let disc = sum * sum - 4.0 * prod;
    if !(disc >= 0.0) {
        return None;
    }
    let small = (sum - disc.sqrt()) / 2.0;
    let q = (levels[1].0 / levels[0].0).ln();
    (small > 0.0).then(|| small.ln() / q).filter(|a| a.is_finite())
}

/// The leading-exponent fit, falling back to the three-level fit over
/// ε₀, √10·ε₀, 10·ε₀ when the recurrence is degenerate.
pub fn divergence_exponent(levels: &[(f64, f64); 5]) -> Option<f64> {
    fit_leading_exponent(levels).or_else(|| fit_exponent(&[levels[0], levels[2], levels[4]]))
}

pub fn frac_seminorm(
    f: &GridFunction,
    h: &GridFunction,
    k: &StarBody,
    params: &Params,
    mode: Mode,
    policy: KernelPolicy,
) -> Result<SeminormResult> {
    if params.p < 1.0 {
        return Err(Error::Param(format!("p = {} must be at least 1", params.p)));
    }
    let diag = diagnostic_levels(f.spacing(), k);
    let mut reach = diag[4];
    if let KernelPolicy::Truncate { epsilon } = policy {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Param(format!("truncation epsilon {epsilon} must be positive")));
        }
        reach = reach.max(epsilon);
    }
    let sums = pair_sums(f, h, k, params, mode, reach)?;
    let levels: Vec<(f64, f64)> = diag.iter().map(|e| (*e, sums.clamped_smooth(*e))).collect();
    let exponent = divergence_exponent(&[levels[0], levels[1], levels[2], levels[3], levels[4]]);
    let computed = match policy {
        KernelPolicy::ExcludeDiagonal => sums.excluded(),
        KernelPolicy::Truncate { epsilon } => sums.clamped(epsilon),
    };
    let divergent = sums.diagonal > 0.0 && exponent.is_none_or(|a| a < DIVERGENCE_SLOPE);
    Ok(SeminormResult {
        value: (!divergent).then_some(computed),
        computed,
        mode,
        policy,
        levels,
        exponent,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub convergent: bool,
    pub exponent: Option<f64>,
    /// (ε, truncated value), ε decreasing.
    pub values: Vec<(f64, f64)>,
    /// |V(ε_min) − V(ε_next)| / V(ε_min).
    pub cauchy_gap: f64,
}

/// Classifies the pair as having finite or infinite seminorm from the
/// behaviour of truncated values as ε decreases.
pub fn membership_check(
    f: &GridFunction,
    h: &GridFunction,
    params: &Params,
    k: &StarBody,
    mode: Mode,
) -> Result<MembershipReport> {
    let r = frac_seminorm(f, h, k, params, mode, KernelPolicy::ExcludeDiagonal)?;
    let mut values = r.levels.clone();
    values.reverse();
    let (a, b) = (values[values.len() - 1].1, values[values.len() - 2].1);
    let cauchy_gap = if a > 0.0 { (a - b).abs() / a } else { 0.0 };
    Ok(MembershipReport {
        convergent: !r.is_infinite(),
        exponent: r.exponent,
        values,
        cauchy_gap,
    })
}

/// Local order a in ∫ D(f(x + t e₁), h(x))^p dx ≈ C·t^a, estimated from whole
/// cell shifts t = Δ, 2Δ and clamped to [0, p].
pub fn shift_order(f: &GridFunction, h: &GridFunction, p: f64, mode: Mode) -> Result<f64> {
    let Some(win) = window(f, h)? else {
        return Ok(p);
    };
    let fp: Vec<f64> = win.fw.iter().map(|v| pow_nonneg(*v, p)).collect();
    let hp: Vec<f64> = win.hw.iter().map(|v| pow_nonneg(*v, p)).collect();
    let (wf, wh) = mode.tail_weights();
    let (ft, ht) = (tree_sum(&fp), tree_sum(&hp));
    let g = |k: i64| {
        let [pd, qf, qh] = overlap_sums(&win, [-k, 0, 0], mode, p, &fp, &hp);
        pd + wf * (ft - qf) + wh * (ht - qh)
    };
    let (g1, g2) = (g(1), g(2));
    if g1 <= 0.0 || g2 <= 0.0 {
        return Ok(p);
    }
    Ok((g2 / g1).log2().clamp(0.0, p))
}

/// A value extrapolated from grids m and 2m, with |extrapolated − fine| as
/// the uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub value: f64,
    pub uncertainty: f64,
    pub order: Option<f64>,
}

/// Richardson extrapolation for an error ∝ Δ^order; skipped (returning the
/// fine value and the raw difference) when the order is too small to trust.
pub fn richardson(coarse: f64, fine: f64, order: f64) -> Refined {
    if order > 0.05 {
        let w = 2f64.powf(order);
        let value = (w * fine - coarse) / (w - 1.0);
        Refined {
            value,
            uncertainty: (value - fine).abs(),
            order: Some(order),
        }
    } else {
        Refined {
            value: fine,
            uncertainty: (fine - coarse).abs(),
            order: None,
        }
    }
}
