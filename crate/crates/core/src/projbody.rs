//! Fractional L_p polar projection bodies Π*(f, h) and their one-sided
//! versions. In direction ξ the body has gauge^{ps}
//!
//! ```text
//! G(ξ) = ∫₀^∞ t^{−ps−1} g(t) dt,   g(t) = ∫ D(f(x + tξ), h(x))^p dx,
//! ```
//!
//! evaluated with log-spaced t-nodes between Δ/2 and the separation distance
//! T★ of the supports, an exact tail beyond T★ and a fitted power-law head
//! below Δ/2.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pow_nonneg, unit_ball_volume, GridFunction};
use crate::params::Params;
use crate::quadrature::SphereQuadrature;
use crate::seminorm::{Mode, DIVERGENCE_SLOPE};
use crate::starbody::{StarBody, BODY_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub t_per_decade: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { t_per_decade: 64 }
    }
}

/// g(t) sampled along one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftProfile {
    pub direction: Vec<f64>,
    pub t: Vec<f64>,
    pub g: Vec<f64>,
    /// Value of g once the shifted supports are disjoint.
    pub tail: f64,
    /// Shift beyond which the supports are disjoint.
    pub t_star: f64,
    pub mode: Mode,
}

/// Evaluates g(t) for one (f, h, ξ, mode) on h's lattice, extended past its
/// grid where h is zero. Shifted values of f come from its multilinear
/// interpolant.
struct ShiftEvaluator<'a> {
    f: &'a GridFunction,
    h: &'a GridFunction,
    mode: Mode,
    p: f64,
    /// f's lattice index of h-index j is j − offset, when the lattices agree.
    offset: Option<i64>,
    f_box: [(i64, i64); 3],
    h_box: [(i64, i64); 3],
    empty: bool,
    tail: f64,
}

type Signed = [i64; 3];

fn for_box(n: usize, lo: Signed, hi: Signed, mut visit: impl FnMut(Signed)) {
    if (0..n).any(|a| lo[a] > hi[a]) {
        return;
    }
    let mut j = lo;
    loop {
        visit(j);
        let mut a = n;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            if j[a] < hi[a] {
                j[a] += 1;
                break;
            }
            j[a] = lo[a];
        }
    }
}

fn signed_box(g: &GridFunction) -> Option<[(i64, i64); 3]> {
    let b = g.support_box()?;
    let mut out = [(0i64, 0i64); 3];
    for a in 0..g.dim() {
        out[a] = (b[a].0 as i64, b[a].1 as i64);
    }
    Some(out)
}

impl<'a> ShiftEvaluator<'a> {
    fn new(f: &'a GridFunction, h: &'a GridFunction, mode: Mode, p: f64) -> Result<Self> {
        if f.dim() != h.dim() {
            return Err(Error::Dimension {
                expected: f.dim(),
                found: h.dim(),
            });
        }
        let (wf, wh) = mode.tail_weights();
        let tail = wf * f.lp_norm_pow(p) + wh * h.lp_norm_pow(p);
        let (fb, hb) = (signed_box(f), signed_box(h));
        Ok(Self {
            f,
            h,
            mode,
            p,
            offset: h.lattice_offset(f),
            empty: fb.is_none() && hb.is_none(),
            f_box: fb.unwrap_or([(0, -1); 3]),
            h_box: hb.unwrap_or([(0, -1); 3]),
            tail,
        })
    }

    fn h_value(&self, j: Signed) -> f64 {
        let m = self.h.cells_per_axis() as i64;
        let n = self.h.dim();
        if (0..n).all(|a| (0..m).contains(&j[a])) {
            let idx = [j[0] as usize, j[1] as usize, j[2] as usize];
            self.h.value_at(&idx[..n])
        } else {
            0.0
        }
    }

    fn h_center(&self, j: Signed) -> [f64; 3] {
        let d = self.h.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.h.dim() {
            x[a] = -self.h.half_width() + (j[a] as f64 + 0.5) * d;
        }
        x
    }

    fn g(&self, dir: &[f64], t: f64) -> f64 {
        if self.empty {
            return 0.0;
        }
        let f = self.f;
        let n = f.dim();
        let (wf, _) = self.mode.tail_weights();
        let in_h_box = |j: Signed| (0..n).all(|a| j[a] >= self.h_box[a].0 && j[a] <= self.h_box[a].1);
        let mut b_lo = [0i64; 3];
        let mut b_hi = [0i64; 3];
        let fs: Box<dyn Fn(Signed) -> f64 + '_> = if let Some(off) = self.offset {
            let d = f.spacing();
            let m = f.cells_per_axis() as i64;
            let mut base = [0i64; 3];
            let mut frac = [0.0; 3];
            for a in 0..n {
                let u = t * dir[a] / d;
                let mut fl = u.floor();
                let mut fr = u - fl;
                if fr > 1.0 - 1e-12 {
                    fl += 1.0;
                    fr = 0.0;
                } else if fr < 1e-12 {
                    fr = 0.0;
                }
                base[a] = fl as i64;
                frac[a] = fr;
                b_lo[a] = self.f_box[a].0 + off - base[a] - 1;
                b_hi[a] = self.f_box[a].1 + off - base[a];
            }
            let corners: Vec<(Signed, f64)> = (0..1usize << n)
                .filter_map(|c| {
                    let mut w = 1.0;
                    let mut shift = [0i64; 3];
                    for a in 0..n {
                        shift[a] = base[a] - off;
                        if c >> a & 1 == 1 {
                            w *= frac[a];
                            shift[a] += 1;
                        } else {
                            w *= 1.0 - frac[a];
                        }
                    }
                    (w > 0.0).then_some((shift, w))
                })
                .collect();
            let values = f.values();
            Box::new(move |j: Signed| {
                let mut acc = 0.0;
                for (shift, w) in &corners {
                    let mut flat = 0i64;
                    let mut inside = true;
                    for a in 0..n {
                        let i = j[a] + shift[a];
                        inside &= (0..m).contains(&i);
                        flat = flat * m + i;
                    }
                    if inside {
                        acc += w * values[flat as usize];
                    }
                }
                acc
            })
        } else {
            let (df, dh) = (f.spacing(), self.h.spacing());
            for a in 0..n {
                let lo = -f.half_width() + (self.f_box[a].0 as f64 - 0.5) * df - t * dir[a];
                let hi = -f.half_width() + (self.f_box[a].1 as f64 + 1.5) * df - t * dir[a];
                b_lo[a] = ((lo + self.h.half_width()) / dh - 0.5).floor() as i64;
                b_hi[a] = ((hi + self.h.half_width()) / dh - 0.5).ceil() as i64;
            }
            Box::new(move |j: Signed| {
                let x = self.h_center(j);
                let mut y = [0.0; 3];
                for a in 0..n {
                    y[a] = x[a] + t * dir[a];
                }
                f.eval(&y[..n])
            })
        };
        if self.f_box[0].0 > self.f_box[0].1 {
            b_lo = [0; 3];
            b_hi = [-1; 3];
        }
        let mut acc = 0.0;
        let mut a_lo = [0i64; 3];
        let mut a_hi = [0i64; 3];
        for a in 0..n {
            a_lo[a] = self.h_box[a].0;
            a_hi[a] = self.h_box[a].1;
        }
        for_box(n, a_lo, a_hi, |j| {
            acc += self.mode.integrand(fs(j) - self.h_value(j), self.p);
        });
        if wf > 0.0 {
            for_box(n, b_lo, b_hi, |j| {
                if !in_h_box(j) {
                    acc += wf * pow_nonneg(fs(j), self.p);
                }
            });
        }
        acc * self.h.cell_volume()
    }
}

/// Smallest shift T such that h's support, moved by tξ for any t ≥ T, misses
/// the region where the interpolant of f can be non-zero.
fn separation(f: &GridFunction, h: &GridFunction, dir: &[f64]) -> f64 {
    let n = f.dim();
    let (Some(fb), Some(hb)) = (f.support_box(), h.support_box()) else {
        return 0.0;
    };
    let (df, dh) = (f.spacing(), h.spacing());
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for a in 0..n {
        let mut ci = [0usize; 3];
        ci[a] = fb[a].0;
        let a_lo = f.center(ci)[a] - df;
        ci[a] = fb[a].1;
        let a_hi = f.center(ci)[a] + df;
        ci[a] = hb[a].0;
        let b_lo = h.center(ci)[a] - 0.5 * dh * 0.0;
        ci[a] = hb[a].1;
        let b_hi = h.center(ci)[a];
        // b + tξ_a overlaps (a_lo, a_hi) for t in an open interval.
        if dir[a].abs() < 1e-15 {
            if b_hi <= a_lo || b_lo >= a_hi {
                return 0.0;
            }
            continue;
        }
        let (t1, t2) = ((a_lo - b_hi) / dir[a], (a_hi - b_lo) / dir[a]);
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    if hi <= lo.max(0.0) {
        0.0
    } else {
        hi
    }
}

/// Log-spaced nodes from `t_min` to `t_max` inclusive.
fn log_nodes(t_min: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (t_max / t_min).log10();
    let count = ((decades * per_decade as f64).ceil() as usize).max(2);
    let step = (t_max / t_min).ln() / count as f64;
    let mut t: Vec<f64> = (0..=count).map(|i| t_min * (i as f64 * step).exp()).collect();
    t[count] = t_max;
    t
}

pub fn shift_profile(
    f: &GridFunction,
    h: &GridFunction,
    direction: &[f64],
    mode: Mode,
    p: f64,
    t_nodes: &[f64],
) -> Result<ShiftProfile> {
    if t_nodes.windows(2).any(|w| w[1] <= w[0]) || t_nodes.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Param("t-nodes must be non-negative and increasing".into()));
    }
    let dir = unit(direction, f.dim())?;
    let ev = ShiftEvaluator::new(f, h, mode, p)?;
    let t_star = separation(f, h, &dir);
    let g = t_nodes
        .iter()
        .map(|&t| if t >= t_star && t_star > 0.0 { ev.tail } else { ev.g(&dir, t) })
        .collect();
    Ok(ShiftProfile {
        direction: dir,
        t: t_nodes.to_vec(),
        g,
        tail: ev.tail,
        t_star,
        mode,
    })
}

fn unit(v: &[f64], n: usize) -> Result<Vec<f64>> {
    if v.len() < n {
        return Err(Error::Dimension {
            expected: n,
            found: v.len(),
        });
    }
    let norm = v[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Param("direction must be non-zero".into()));
    }
    Ok(v[..n].iter().map(|x| x / norm).collect())
}

/// One direction's gauge^{ps}, with the pieces that went into it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeValue {
    /// None when the small-t behaviour makes the integral diverge.
    pub value: Option<f64>,
    /// Power a of the head model g ≈ C·t^a below the first node.
    pub head_exponent: f64,
    pub head: f64,
    pub body: f64,
    pub tail: f64,
}

/// Trapezoid rule in u = ln t of t^{w}·g(t).
fn log_trapezoid(t: &[f64], g: &[f64], w: f64) -> f64 {
    let vals: Vec<f64> = t.iter().zip(g).map(|(t, g)| t.powf(w) * g).collect();
    let terms: Vec<f64> = (1..t.len())
        .map(|i| 0.5 * (vals[i] + vals[i - 1]) * (t[i] / t[i - 1]).ln())
        .collect();
    crate::reduce::tree_sum(&terms)
}

fn head_exponent(t: &[f64], g: &[f64], p: f64) -> f64 {
    if g[0] <= 0.0 {
        return p;
    }
    if g[1] <= 0.0 {
        return 0.0;
    }
    ((g[1] / g[0]).ln() / (t[1] / t[0]).ln()).min(p)
}

/// ∫₀^∞ t^{−ps−1} g(t) dt from a profile whose last node is T★.
pub fn integrate_profile(profile: &ShiftProfile, ps: f64, p: f64) -> GaugeValue {
    let (t, g) = (&profile.t, &profile.g);
    let a = head_exponent(t, g, p);
    let body = log_trapezoid(t, g, -ps);
    let t_end = *t.last().expect("nodes");
    let tail = profile.tail * t_end.powf(-ps) / ps;
    let divergent = g[0] > 0.0 && a <= (ps - DIVERGENCE_SLOPE).min(0.5 * (ps + p));
    let head = if g[0] > 0.0 { g[0] * t[0].powf(-ps) / (a - ps) } else { 0.0 };
    GaugeValue {
        value: (!divergent).then_some(head + body + tail),
        head_exponent: a,
        head: if divergent { f64::INFINITY } else { head },
        body,
        tail,
    }
}

/// Same integral without the head model or divergence check: ∫ from the
/// first node on.
pub fn integrate_profile_unchecked(profile: &ShiftProfile, ps: f64) -> f64 {
    let t_end = *profile.t.last().expect("nodes");
    log_trapezoid(&profile.t, &profile.g, -ps) + profile.tail * t_end.powf(-ps) / ps
}

/// The gauge^{ps} that pairs with the kernel min(‖z‖^{−n−ps}, ε^{−n−ps}):
/// ∫_{t₀}^∞ t^{−ps−1} g dt + t₀^{−n−ps} ∫₀^{t₀} t^{n−1} g dt, with t₀ = ε·ρ_K(ξ).
/// `profile` must have t₀ among its nodes or beyond its last node.
pub fn integrate_profile_clamped(profile: &ShiftProfile, ps: f64, p: f64, n: usize, t0: f64) -> f64 {
    let (t, g) = (&profile.t, &profile.g);
    let nf = n as f64;
    let gamma = nf + ps;
    let a = head_exponent(t, g, p);
    let head = g[0] * t[0].powf(nf) / (a + nf);
    let t_end = *t.last().expect("nodes");
    if t0 >= t_end {
        let lower = head + log_trapezoid(t, g, nf) + profile.tail * (t0.powf(nf) - t_end.powf(nf)) / nf;
        return t0.powf(-gamma) * lower + profile.tail * t0.powf(-ps) / ps;
    }
    let split = t.partition_point(|x| *x < t0 * (1.0 - 1e-12));
    let lower = head + log_trapezoid(&t[..=split], &g[..=split], nf);
    let upper = log_trapezoid(&t[split..], &g[split..], -ps) + profile.tail * t_end.powf(-ps) / ps;
    t0.powf(-gamma) * lower + upper
}

/// Nodes for one direction: Δ/2 up to T★ (or 2·Δ/2 when the supports
/// separate immediately).
pub fn direction_nodes(f: &GridFunction, h: &GridFunction, dir: &[f64], opts: &ProfileOptions, extra: Option<f64>) -> Vec<f64> {
    let t_min = 0.5 * f.spacing().min(h.spacing());
    let t_star = separation(f, h, dir).max(2.0 * t_min);
    let mut t = log_nodes(t_min, t_star, opts.t_per_decade);
    if let Some(x) = extra {
        if x > t_min && x < t_star && !t.iter().any(|v| (v / x - 1.0).abs() < 1e-12) {
            let i = t.partition_point(|v| *v < x);
            t.insert(i, x);
        }
    }
    t
}

/// gauge^{ps} of Π*(f, h) (or its ± version) in direction ξ.
pub fn pi_gauge(f: &GridFunction, h: &GridFunction, xi: &[f64], params: &Params, mode: Mode, opts: &ProfileOptions) -> Result<GaugeValue> {
    let dir = unit(xi, f.dim())?;
    let t = direction_nodes(f, h, &dir, opts, None);
    let prof = shift_profile(f, h, &dir, mode, params.p, &t)?;
    Ok(integrate_profile(&prof, params.ps(), params.p))
}

/// Truncated gauge^{ps} matched to kernel truncation at ε in the gauge of K.
pub fn pi_gauge_clamped(
    f: &GridFunction,
    h: &GridFunction,
    xi: &[f64],
    params: &Params,
    mode: Mode,
    t0: f64,
    opts: &ProfileOptions,
) -> Result<f64> {
    let dir = unit(xi, f.dim())?;
    let t = direction_nodes(f, h, &dir, opts, Some(t0));
    let prof = shift_profile(f, h, &dir, mode, params.p, &t)?;
    Ok(integrate_profile_clamped(&prof, params.ps(), params.p, params.n, t0))
}

/// Π*(f, h) sampled on a spherical quadrature as the values G(ξᵢ) = gauge^{ps}.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarProjectionBody {
    pub quad: Arc<SphereQuadrature>,
    /// gauge^{ps} per node; +∞ where the integral diverges.
    pub gauges: Vec<f64>,
    pub mode: Mode,
    pub params: Params,
}

impl PolarProjectionBody {
    pub fn is_degenerate(&self) -> bool {
        self.gauges.iter().any(|g| !g.is_finite())
    }

    /// ρ(ξᵢ) = G(ξᵢ)^{−1/(ps)}; 0 where G is infinite.
    pub fn radial_values(&self) -> Vec<f64> {
        let ps = self.params.ps();
        self.gauges.iter().map(|g| if g.is_finite() { g.powf(-1.0 / ps) } else { 0.0 }).collect()
    }

    pub fn volume(&self) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        let n = self.params.n;
        let rho = self.radial_values();
        self.quad.integrate(|i, _| rho[i].powi(n as i32)) / n as f64
    }

    pub fn to_star_body(&self) -> Result<StarBody> {
        if self.is_degenerate() {
            return Err(Error::Body("degenerate projection body".into()));
        }
        StarBody::sampled(self.quad.clone(), self.radial_values())
    }

    pub fn to_text(&self) -> String {
        let n = self.params.n;
        let mut out = format!(
            "{BODY_MAGIC}\nn={n}\nnodes={}\nmode={}\nps={}\n",
            self.quad.len(),
            self.mode,
            self.params.ps()
        );
        for (x, r) in self.quad.nodes().iter().zip(self.radial_values()) {
            let comps: Vec<String> = x[..n].iter().map(|c| format!("{c}")).collect();
            out.push_str(&format!("{} {r}\n", comps.join(" ")));
        }
        out
    }
}

/// Computes G at every node of `quad`, in parallel over directions.
pub fn pi_body(
    f: &GridFunction,
    h: &GridFunction,
    params: &Params,
    mode: Mode,
    quad: &Arc<SphereQuadrature>,
    opts: &ProfileOptions,
) -> Result<PolarProjectionBody> {
    if !params.in_projection_range() {
        return Err(Error::Param(format!(
            "projection bodies need 1 < p < n/s, got p = {}, n/s = {}",
            params.p,
            params.n as f64 / params.s
        )));
    }
    if quad.dim() != params.n {
        return Err(Error::Dimension {
            expected: params.n,
            found: quad.dim(),
        });
    }
    Ok(PolarProjectionBody {
        quad: quad.clone(),
        gauges: node_gauges(f, h, params, mode, quad, opts)?,
        mode,
        params: *params,
    })
}

/// G(ξᵢ) at every node, +∞ where divergent. Abs-mode gauges of a pair with
/// f = h are even, so only one node of each antipodal pair is computed.
fn node_gauges(
    f: &GridFunction,
    h: &GridFunction,
    params: &Params,
    mode: Mode,
    quad: &SphereQuadrature,
    opts: &ProfileOptions,
) -> Result<Vec<f64>> {
    let n = params.n;
    let symmetric = mode == Mode::Abs && f == h;
    let nodes = quad.nodes();
    let owner: Vec<usize> = (0..nodes.len())
        .map(|i| if symmetric { i.min(quad.antipode(i)) } else { i })
        .collect();
    let computed: Vec<Option<f64>> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            if owner[i] != i {
                return Ok(None);
            }
            pi_gauge(f, h, &nodes[i][..n], params, mode, opts).map(|g| Some(g.value.unwrap_or(f64::INFINITY)))
        })
        .collect::<Result<_>>()?;
    Ok(owner.iter().map(|&o| computed[o].expect("owner computed")).collect())
}

/// The seminorm through its polar form Σ wᵢ ρ_K(ξᵢ)^{n+ps} G(ξᵢ), for any
/// p ≥ 1. None when some gauge diverges.
pub fn seminorm_by_profiles(
    f: &GridFunction,
    h: &GridFunction,
    k: &StarBody,
    params: &Params,
    mode: Mode,
    quad: &SphereQuadrature,
    opts: &ProfileOptions,
) -> Result<Option<f64>> {
    let gauges = node_gauges(f, h, params, mode, quad, opts)?;
    if gauges.iter().any(|g| !g.is_finite()) {
        return Ok(None);
    }
    let gamma = params.kernel_exponent();
    let rho = k.radial_values(quad);
    Ok(Some(quad.integrate(|i, _| rho[i].powf(gamma) * gauges[i])))
}

/// Σ wᵢ ρ_K(ξᵢ)^{n+ps} G_ε(ξᵢ): the polar form of the seminorm with kernel
/// clamped at ε (gauge units of K).
pub fn clamped_polar_seminorm(
    f: &GridFunction,
    h: &GridFunction,
    k: &StarBody,
    params: &Params,
    mode: Mode,
    epsilon: f64,
    quad: &SphereQuadrature,
    opts: &ProfileOptions,
) -> Result<f64> {
    let n = params.n;
    let gamma = params.kernel_exponent();
    let rho = k.radial_values(quad);
    let nodes = quad.nodes();
    let terms: Vec<f64> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let g = pi_gauge_clamped(f, h, &nodes[i][..n], params, mode, epsilon * rho[i], opts)?;
            Ok(quad.weights()[i] * rho[i].powf(gamma) * g)
        })
        .collect::<Result<_>>()?;
    Ok(crate::reduce::tree_sum(&terms))
}

/// n·ωₙ^{(n+ps)/n}·|Π|^{−ps/n}; None (+∞) for a degenerate body.
pub fn affine_energy(body: &PolarProjectionBody) -> Option<f64> {
    if body.is_degenerate() {
        return None;
    }
    let n = body.params.n as f64;
    let ps = body.params.ps();
    let v = body.volume();
    if v.is_infinite() {
        return Some(0.0);
    }
    Some(n * unit_ball_volume(body.params.n).powf((n + ps) / n) * v.powf(-ps / n))
}

/// n·Ṽ_{−ps}(K, Π) = Σ wᵢ ρ_K^{n+ps} G(ξᵢ).
pub fn polar_seminorm(k: &StarBody, body: &PolarProjectionBody) -> Option<f64> {
    if body.is_degenerate() {
        return None;
    }
    let gamma = body.params.kernel_exponent();
    let rho = k.radial_values(&body.quad);
    Some(body.quad.integrate(|i, _| rho[i].powf(gamma) * body.gauges[i]))
}

/// An upper bound for every radial value of Π*(f, h), valid for all s ∈ (0, 1).
///
/// Beyond the support separation distance D, g(t) equals the tail constant C,
/// so G ≥ C·D^{−ps}/(ps) and ρ ≤ D·(ps/C)^{1/(ps)}. Maximizing over ps ∈ (0, p]
/// gives D·e^{1/(eC)} when eC < p and D·(p/C)^{1/p} otherwise.
pub fn uniform_radial_bound(f: &GridFunction, h: &GridFunction, p: f64, mode: Mode) -> Option<f64> {
    let (wf, wh) = mode.tail_weights();
    let c = wf * f.lp_norm_pow(p) + wh * h.lp_norm_pow(p);
    if c <= 0.0 {
        return None;
    }
    let n = f.dim();
    let fb = f.support_box()?;
    let hb = h.support_box().or(Some(fb))?;
    let mut d2 = 0.0;
    for a in 0..n {
        let mut ci = [0usize; 3];
        ci[a] = fb[a].0;
        let f_lo = f.center(ci)[a] - f.spacing();
        ci[a] = fb[a].1;
        let f_hi = f.center(ci)[a] + f.spacing();
        ci[a] = hb[a].0;
        let h_lo = h.center(ci)[a];
        ci[a] = hb[a].1;
        let h_hi = h.center(ci)[a];
        let span = (f_hi - h_lo).abs().max((h_hi - f_lo).abs());
        d2 += span * span;
    }
    let d = d2.sqrt();
    let e = std::f64::consts::E;
    Some(if e * c < p { d * (1.0 / (e * c)).exp() } else { d * (p / c).powf(1.0 / p) })
}

/// Reads a projection body written by [`PolarProjectionBody::to_text`].
pub fn read_projection_body(text: &str) -> Result<PolarProjectionBody> {
    let mut n = None;
    let mut mode = None;
    let mut ps = None;
    let mut count = None;
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line == BODY_MAGIC || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("line {}: bad {what}", lineno + 1));
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "n" => n = Some(v.trim().parse::<usize>().map_err(|_| bad("n"))?),
                "nodes" => count = Some(v.trim().parse::<usize>().map_err(|_| bad("nodes"))?),
                "mode" => mode = Some(v.parse::<Mode>()?),
                "ps" => ps = Some(v.trim().parse::<f64>().map_err(|_| bad("ps"))?),
                _ => {}
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad("number")))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = n.ok_or_else(|| Error::Format("missing n=".into()))?;
    let ps = ps.ok_or_else(|| Error::Format("missing ps=".into()))?;
    let count = count.ok_or_else(|| Error::Format("missing nodes=".into()))?;
    let quad = Arc::new(SphereQuadrature::new(n, count)?);
    if quad.len() != count || rows.len() != count {
        return Err(Error::Format(format!("expected {count} node lines, found {}", rows.len())));
    }
    let gauges = rows
        .iter()
        .map(|r| {
            let rho = *r.last().unwrap_or(&0.0);
            if rho > 0.0 {
                rho.powf(-ps)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(PolarProjectionBody {
        quad,
        gauges,
        mode: mode.unwrap_or(Mode::Abs),
        // s is recorded through ps with p = 1 as a placeholder; callers that
        // need (s, p) separately pass them alongside the file.
        params: Params { n, s: ps, p: 1.0 },
    })
}
