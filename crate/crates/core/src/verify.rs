//! End-to-end checks of the rearrangement inequalities and identities, with
//! machine-readable reports.
//!
//! Every analytic quantity is computed on two grids, m and 2m, and combined
//! by Richardson extrapolation. The uncertainty attached to a term is the
//! distance between the extrapolated and the fine value, and verdicts are
//! decided against the sum of uncertainties of the compared terms.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::params::{validate_params, Params};
use crate::projbody::{affine_energy, clamped_polar_seminorm, pi_body, seminorm_by_profiles, PolarProjectionBody, ProfileOptions};
use crate::quadrature::SphereQuadrature;
use crate::rearrange::{rearrange, riesz_functional};
use crate::seminorm::{base_level, frac_seminorm, richardson, shift_order, KernelPolicy, Mode};
use crate::spec::FunctionSpec;
use crate::starbody::{dual_mixed_bound, dual_mixed_volume, q_radial_sum, random_star_body, StarBody};

/// Relative width of the band inside which two discretized terms count as equal.
pub const EQUALITY_BAND: f64 = 0.02;

/// The same band for terms that carry no discretization error.
pub const EXACT_BAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    HoldsWithEquality,
    ViolatedWithinUncertainty,
    VacuousInfinite,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::HoldsWithEquality => "holds-with-equality",
            Verdict::ViolatedWithinUncertainty => "violated-within-uncertainty",
            Verdict::VacuousInfinite => "vacuous-infinite",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Grid sizes the value was computed on, coarse to fine.
    pub m: Vec<usize>,
    /// Raw value on each grid in `m`; None where that grid gave an infinite value.
    #[serde(default)]
    pub values: Vec<Option<f64>>,
    /// Error order used for extrapolation; None when the fine value is reported.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: Option<f64>,
    pub infinite: bool,
    pub uncertainty: f64,
    pub refinement: Refinement,
}

impl Term {
    pub fn finite(name: impl Into<String>, value: f64, uncertainty: f64, refinement: Refinement) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            infinite: false,
            uncertainty,
            refinement,
        }
    }

    pub fn infinite(name: impl Into<String>, refinement: Refinement) -> Self {
        Self {
            name: name.into(),
            value: None,
            infinite: true,
            uncertainty: 0.0,
            refinement,
        }
    }

    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Self::finite(name, value, 0.0, Refinement { m: Vec::new(), values: Vec::new(), order: None })
    }

    /// A value with no refinement study behind it and no uncertainty.
    pub fn is_exact(&self) -> bool {
        self.refinement.m.is_empty() && self.uncertainty == 0.0
    }

    fn refined(name: impl Into<String>, coarse: Option<f64>, fine: Option<f64>, order: f64, m: usize) -> Self {
        let refinement = |order| Refinement {
            m: vec![m, 2 * m],
            values: vec![coarse, fine],
            order,
        };
        match (coarse, fine) {
            (Some(c), Some(f)) => {
                let r = richardson(c, f, order);
                Self::finite(name, r.value, r.uncertainty, refinement(r.order))
            }
            _ => Self::infinite(name, refinement(None)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub name: String,
    /// None when either side is infinite.
    pub value: Option<f64>,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub relation: String,
    pub verdict: Verdict,
    /// Soft checks report problems without failing the run.
    pub soft: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub case: String,
    pub params: Params,
    pub grid: GridInfo,
    pub terms: Vec<Term>,
    pub margins: Vec<Margin>,
    pub verdicts: Vec<VerdictEntry>,
    pub runtime_seconds: f64,
}

impl ChainReport {
    fn new(case: &str, params: Params, grid: GridInfo) -> Self {
        Self {
            case: case.to_string(),
            params,
            grid,
            terms: Vec::new(),
            margins: Vec::new(),
            verdicts: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.term(name).and_then(|t| t.value)
    }

    pub fn verdict(&self, relation: &str) -> Option<Verdict> {
        self.verdicts.iter().find(|v| v.relation == relation).map(|v| v.verdict)
    }

    /// Number of hard verdicts that are violated.
    pub fn violations(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| !v.soft && v.verdict == Verdict::ViolatedWithinUncertainty)
            .count()
    }

    pub fn soft_failures(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| v.soft && v.verdict == Verdict::ViolatedWithinUncertainty)
            .count()
    }

    fn push_term(&mut self, t: Term) -> usize {
        self.terms.push(t);
        self.terms.len() - 1
    }

    /// Records `terms[a] ≥ terms[b]`.
    fn check_ge(&mut self, a: usize, b: usize) {
        let (m, v) = compare_ge(&self.terms[a], &self.terms[b]);
        let relation = format!("{} >= {}", self.terms[a].name, self.terms[b].name);
        self.margins.push(m);
        self.verdicts.push(VerdictEntry { relation, verdict: v, soft: false });
    }

    /// Records `terms[a] = terms[b]` within the equality band.
    fn check_eq(&mut self, a: usize, b: usize, soft: bool) {
        let (m, v) = compare_eq(&self.terms[a], &self.terms[b], EQUALITY_BAND);
        let relation = format!("{} = {}", self.terms[a].name, self.terms[b].name);
        self.margins.push(m);
        self.verdicts.push(VerdictEntry { relation, verdict: v, soft });
    }

    fn record(&mut self, relation: String, ok: bool, soft: bool) {
        let verdict = if ok { Verdict::HoldsWithEquality } else { Verdict::ViolatedWithinUncertainty };
        self.verdicts.push(VerdictEntry { relation, verdict, soft });
    }
}

fn margin_of(a: &Term, b: &Term) -> Margin {
    Margin {
        name: format!("{} - {}", a.name, b.name),
        value: a.value.zip(b.value).map(|(x, y)| x - y),
        uncertainty: a.uncertainty + b.uncertainty,
    }
}

/// Classifies `a ≥ b`.
pub fn compare_ge(a: &Term, b: &Term) -> (Margin, Verdict) {
    let m = margin_of(a, b);
    let verdict = match (a.value, b.value) {
        (None, _) => Verdict::VacuousInfinite,
        (Some(_), None) => Verdict::ViolatedWithinUncertainty,
        (Some(x), Some(y)) => {
            let d = x - y;
            let rel = if a.is_exact() && b.is_exact() { EXACT_BAND } else { EQUALITY_BAND };
            let band = (rel * x.abs().max(y.abs())).max(3.0 * m.uncertainty);
            if d.abs() <= band {
                Verdict::HoldsWithEquality
            } else if d < -m.uncertainty {
                Verdict::ViolatedWithinUncertainty
            } else {
                Verdict::Holds
            }
        }
    };
    (m, verdict)
}

/// Classifies `a = b` with a relative band of max(`rel`, 3·uncertainty).
pub fn compare_eq(a: &Term, b: &Term, rel: f64) -> (Margin, Verdict) {
    let m = margin_of(a, b);
    let verdict = match (a.value, b.value) {
        (None, None) => Verdict::VacuousInfinite,
        (Some(x), Some(y)) => {
            let band = (rel * x.abs().max(y.abs())).max(3.0 * m.uncertainty);
            if (x - y).abs() <= band {
                Verdict::HoldsWithEquality
            } else {
                Verdict::ViolatedWithinUncertainty
            }
        }
        _ => Verdict::ViolatedWithinUncertainty,
    };
    (m, verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicyChoice {
    ExcludeDiagonal,
    /// Fixed ε, or the grid-dependent default when None.
    Truncate(Option<f64>),
}

impl PolicyChoice {
    pub fn on(&self, spacing: f64, k: &StarBody) -> KernelPolicy {
        match self {
            PolicyChoice::ExcludeDiagonal => KernelPolicy::ExcludeDiagonal,
            PolicyChoice::Truncate(Some(epsilon)) => KernelPolicy::Truncate { epsilon: *epsilon },
            PolicyChoice::Truncate(None) => KernelPolicy::Truncate {
                epsilon: base_level(spacing, k),
            },
        }
    }
}

/// Numerical settings shared by all checks of one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub params: Params,
    pub half_width: f64,
    /// Coarse grid size; every quantity is also computed at 2m.
    pub m: usize,
    pub quad_nodes: usize,
    pub policy: PolicyChoice,
    pub t_per_decade: usize,
    pub seed: u64,
}

impl Setup {
    pub fn new(n: usize, s: f64, p: f64, half_width: f64, m: usize) -> Self {
        Self {
            params: Params { n, s, p },
            half_width,
            m,
            quad_nodes: 64,
            policy: PolicyChoice::Truncate(None),
            t_per_decade: 64,
            seed: 1,
        }
    }

    fn grid_info(&self) -> GridInfo {
        GridInfo {
            half_width: self.half_width,
            m: self.m,
        }
    }

    fn quadrature(&self) -> Result<Arc<SphereQuadrature>> {
        Ok(Arc::new(SphereQuadrature::new(self.params.n, self.quad_nodes)?))
    }

    fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            t_per_decade: self.t_per_decade,
        }
    }

    fn levels(&self) -> [usize; 2] {
        [self.m, 2 * self.m]
    }

    fn sample(&self, spec: &FunctionSpec, m: usize) -> Result<GridFunction> {
        spec.sample(self.params.n, self.half_width, m)
    }

    /// (f, h) and their rearrangements on both grids.
    fn sample_pair(&self, f: &FunctionSpec, h: &FunctionSpec) -> Result<[SampledPair; 2]> {
        let one = |m| -> Result<SampledPair> {
            let (f, h) = (self.sample(f, m)?, self.sample(h, m)?);
            Ok(SampledPair {
                fs: rearrange(&f),
                hs: rearrange(&h),
                f,
                h,
            })
        };
        let [a, b] = self.levels();
        Ok([one(a)?, one(b)?])
    }
}

struct SampledPair {
    f: GridFunction,
    h: GridFunction,
    fs: GridFunction,
    hs: GridFunction,
}

fn seminorm_term(
    name: &str,
    grids: [(&GridFunction, &GridFunction); 2],
    k: &StarBody,
    setup: &Setup,
    mode: Mode,
) -> Result<Term> {
    let p = &setup.params;
    let value = |(f, h): (&GridFunction, &GridFunction)| frac_seminorm(f, h, k, p, mode, setup.policy.on(f.spacing(), k));
    let fine = value(grids[1])?.value;
    let coarse = value(grids[0])?.computed;
    let order = shift_order(grids[1].0, grids[1].1, p.p, mode)? - p.ps();
    Ok(Term::refined(name, Some(coarse), fine, order, setup.m))
}

fn bodies(grids: [(&GridFunction, &GridFunction); 2], setup: &Setup, mode: Mode) -> Result<[PolarProjectionBody; 2]> {
    let quad = setup.quadrature()?;
    let opts = setup.profile_options();
    let one = |(f, h): (&GridFunction, &GridFunction)| pi_body(f, h, &setup.params, mode, &quad, &opts);
    Ok([one(grids[0])?, one(grids[1])?])
}

fn body_term(
    name: &str,
    bodies: &[PolarProjectionBody; 2],
    order: f64,
    setup: &Setup,
    value: impl Fn(&PolarProjectionBody) -> Option<f64>,
) -> Term {
    Term::refined(name, value(&bodies[0]), value(&bodies[1]), order, setup.m)
}

fn volume_power(b: &PolarProjectionBody) -> Option<f64> {
    let v = b.volume();
    (v > 0.0).then(|| v.powf(-b.params.ps() / b.params.n as f64))
}

fn affine_chain(case: &str, f: &FunctionSpec, h: &FunctionSpec, setup: &Setup, mode: Mode) -> Result<ChainReport> {
    let start = Instant::now();
    validate_params(setup.params.n, setup.params.s, setup.params.p, true)?;
    let mut report = ChainReport::new(case, setup.params, setup.grid_info());
    let ball = StarBody::ball(setup.params.n, 1.0)?;
    let g = setup.sample_pair(f, h)?;
    let pair = |i: usize| (&g[i].f, &g[i].h);
    let star = |i: usize| (&g[i].fs, &g[i].hs);
    let lhs = seminorm_term("lhs", [pair(0), pair(1)], &ball, setup, mode)?;
    let order = lhs.refinement.order.unwrap_or(shift_order(&g[1].f, &g[1].h, setup.params.p, mode)? - setup.params.ps());
    let b = bodies([pair(0), pair(1)], setup, mode)?;
    let middle = body_term("middle", &b, order, setup, affine_energy);
    let rhs = seminorm_term("rhs", [star(0), star(1)], &ball, setup, mode)?;
    let (l, mi, r) = (report.push_term(lhs), report.push_term(middle), report.push_term(rhs));
    report.check_ge(l, mi);
    report.check_ge(mi, r);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// lhs = isotropic seminorm of (f, h), middle = affine energy of Π*(f, h),
/// rhs = isotropic seminorm of (f*, h*); checks lhs ≥ middle ≥ rhs.
pub fn verify_chain_symmetric(case: &str, f: &FunctionSpec, h: &FunctionSpec, setup: &Setup) -> Result<ChainReport> {
    affine_chain(case, f, h, setup, Mode::Abs)
}

/// The same chain built from positive parts and Π*₊.
pub fn verify_chain_asymmetric(case: &str, f: &FunctionSpec, h: &FunctionSpec, setup: &Setup) -> Result<ChainReport> {
    affine_chain(case, f, h, setup, Mode::Plus)
}

/// seminorm(f, h, K) ≥ seminorm(f*, h*, K*) for each requested mode.
pub fn verify_anisotropic(
    case: &str,
    f: &FunctionSpec,
    h: &FunctionSpec,
    k: &StarBody,
    modes: &[Mode],
    setup: &Setup,
) -> Result<ChainReport> {
    let start = Instant::now();
    let mut report = ChainReport::new(case, setup.params, setup.grid_info());
    let quad = setup.quadrature()?;
    let ks = k.schwarz_symmetral(&quad);
    let g = setup.sample_pair(f, h)?;
    for &mode in modes {
        let lhs = seminorm_term(&format!("lhs_{mode}"), [(&g[0].f, &g[0].h), (&g[1].f, &g[1].h)], k, setup, mode)?;
        let rhs = seminorm_term(&format!("rhs_{mode}"), [(&g[0].fs, &g[0].hs), (&g[1].fs, &g[1].hs)], &ks, setup, mode)?;
        let (l, r) = (report.push_term(lhs), report.push_term(rhs));
        report.check_ge(l, r);
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// |Π*(f, h)|^{−ps/n} ≥ |Π*(f*, h*)|^{−ps/n}.
pub fn verify_volume_monotonicity(case: &str, f: &FunctionSpec, h: &FunctionSpec, setup: &Setup, mode: Mode) -> Result<ChainReport> {
    let start = Instant::now();
    validate_params(setup.params.n, setup.params.s, setup.params.p, true)?;
    let mut report = ChainReport::new(case, setup.params, setup.grid_info());
    let g = setup.sample_pair(f, h)?;
    let order = shift_order(&g[1].f, &g[1].h, setup.params.p, mode)? - setup.params.ps();
    let b = bodies([(&g[0].f, &g[0].h), (&g[1].f, &g[1].h)], setup, mode)?;
    let bs = bodies([(&g[0].fs, &g[0].hs), (&g[1].fs, &g[1].hs)], setup, mode)?;
    let l = report.push_term(body_term("volume_power", &b, order, setup, volume_power));
    let r = report.push_term(body_term("volume_power_rearranged", &bs, order, setup, volume_power));
    report.check_ge(l, r);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// (2/p)·∫‖∇f‖^p_{Z*_p K} with centered differences.
pub fn gradient_functional(f: &GridFunction, k: &StarBody, p: f64, quad: &SphereQuadrature) -> f64 {
    let n = f.dim();
    let m = f.cells_per_axis();
    let d = f.spacing();
    let rho = k.radial_values(quad);
    let weights: Vec<f64> = quad
        .weights()
        .iter()
        .zip(&rho)
        .map(|(w, r)| 0.5 * w * r.powf(n as f64 + p))
        .collect();
    let values = f.values();
    let at = |idx: [usize; 3], a: usize, delta: i64| -> f64 {
        let i = idx[a] as i64 + delta;
        if i < 0 || i >= m as i64 {
            return 0.0;
        }
        let mut j = idx;
        j[a] = i as usize;
        values[f.flat_index(&j[..n])]
    };
    let terms: Vec<f64> = (0..values.len())
        .into_par_iter()
        .map(|flat| {
            let idx = f.multi_index(flat);
            let mut grad = [0.0; 3];
            for (a, g) in grad.iter_mut().enumerate().take(n) {
                *g = (at(idx, a, 1) - at(idx, a, -1)) / (2.0 * d);
            }
            quad.nodes()
                .iter()
                .zip(&weights)
                .map(|(x, w)| {
                    let dot: f64 = (0..n).map(|a| grad[a] * x[a]).sum();
                    w * dot.abs().powf(p)
                })
                .sum::<f64>()
        })
        .collect();
    2.0 / p * crate::reduce::tree_sum(&terms) * f.cell_volume()
}

/// Compares (1−s)·seminorm(f, f, K) with the gradient functional for each s
/// in `s_list`. The seminorm is evaluated through its polar form, which keeps
/// the near-diagonal behaviour under control as ps approaches p. All checks
/// in this report are soft.
pub fn verify_limit_s1(case: &str, f: &FunctionSpec, k: &StarBody, s_list: &[f64], setup: &Setup) -> Result<ChainReport> {
    let start = Instant::now();
    let n = setup.params.n;
    let p = setup.params.p;
    let mut report = ChainReport::new(case, setup.params, setup.grid_info());
    let quad = setup.quadrature()?;
    let opts = setup.profile_options();
    let grids = [setup.sample(f, setup.m)?, setup.sample(f, 2 * setup.m)?];
    let grad: Vec<f64> = grids.iter().map(|g| gradient_functional(g, k, p, &quad)).collect();
    let gi = report.push_term(Term::refined("gradient", Some(grad[0]), Some(grad[1]), 2.0, setup.m));
    let target = report.terms[gi].value.expect("finite");
    let mut ratios = Vec::new();
    for &s in s_list {
        let params = validate_params(n, s, p, false)?;
        let vals: Vec<Option<f64>> = grids
            .iter()
            .map(|g| seminorm_by_profiles(g, g, k, &params, Mode::Abs, &quad, &opts).map(|v| v.map(|v| (1.0 - s) * v)))
            .collect::<Result<_>>()?;
        let t = Term::refined(format!("scaled_seminorm(s={s})"), vals[0], vals[1], 2.0, setup.m);
        if let Some(v) = t.value {
            let ratio = v / target;
            let unc = t.uncertainty / target + ratio * report.terms[gi].uncertainty / target;
            ratios.push((s, ratio));
            report.push_term(t.clone());
            report.push_term(Term::finite(format!("ratio(s={s})"), ratio, unc, t.refinement.clone()));
        } else {
            report.push_term(t);
        }
    }
    if let Some(&(s, r)) = ratios.last() {
        report.record(format!("ratio(s={s}) within 10% of 1"), (r - 1.0).abs() <= 0.1, true);
    }
    let trend = ratios.windows(2).all(|w| (w[1].1 - 1.0).abs() <= (w[0].1 - 1.0).abs());
    report.record("ratio approaches 1 monotonically".to_string(), trend && ratios.len() == s_list.len(), true);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn sheared(spec: &FunctionSpec, map: &AffineMap) -> FunctionSpec {
    FunctionSpec::Affine {
        map: map.clone(),
        inner: Box::new(spec.clone()),
    }
}

fn scaled_arg(spec: &FunctionSpec, r: f64) -> FunctionSpec {
    FunctionSpec::ScaleArg {
        r,
        inner: Box::new(spec.clone()),
    }
}

/// Volume covariance of Π*(f, h) under a volume-preserving linear map, and
/// the scaling law |Π*(f(r·), h(r·))|^{−ps/n} ∝ r^{−n+ps} over r ∈ {1/2, 1, 2}.
pub fn verify_invariance(case: &str, f: &FunctionSpec, h: &FunctionSpec, map: &AffineMap, setup: &Setup, mode: Mode) -> Result<ChainReport> {
    let start = Instant::now();
    let params = validate_params(setup.params.n, setup.params.s, setup.params.p, true)?;
    if !map.is_volume_preserving() {
        return Err(Error::Param("the covariance check needs a map with determinant ±1".into()));
    }
    let mut report = ChainReport::new(case, params, setup.grid_info());
    let volume_term = |name: &str, f: &FunctionSpec, h: &FunctionSpec| -> Result<Term> {
        let g = [0, 1].map(|i| (setup.sample(f, setup.levels()[i]), setup.sample(h, setup.levels()[i])));
        let g: Vec<(GridFunction, GridFunction)> = g.into_iter().map(|(a, b)| Ok((a?, b?))).collect::<Result<_>>()?;
        let order = shift_order(&g[1].0, &g[1].1, params.p, mode)? - params.ps();
        let b = bodies([(&g[0].0, &g[0].1), (&g[1].0, &g[1].1)], setup, mode)?;
        Ok(body_term(name, &b, order, setup, |b| Some(b.volume())))
    };
    let base = report.push_term(volume_term("volume", f, h)?);
    let moved = report.push_term(volume_term("volume_mapped", &sheared(f, map), &sheared(h, map))?);
    report.check_eq(moved, base, false);
    let mut pts = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        let t = volume_term(&format!("volume(r={r})"), &scaled_arg(f, r), &scaled_arg(h, r))?;
        if let Some(v) = t.value {
            pts.push((r.ln(), v.powf(-params.ps() / params.n as f64).ln()));
        }
        report.push_term(t);
    }
    let expected = -(params.n as f64) + params.ps();
    if pts.len() == 3 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        report.push_term(Term::exact("scaling_slope", slope));
        report.push_term(Term::exact("expected_slope", expected));
        report.margins.push(Margin {
            name: "scaling_slope - expected_slope".into(),
            value: Some(slope - expected),
            uncertainty: 0.0,
        });
        report.record(format!("scaling slope = {expected} ± 0.05"), (slope - expected).abs() <= 0.05, false);
    } else {
        report.record(format!("scaling slope = {expected} ± 0.05"), false, false);
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Seminorm against its polar form n·Ṽ_{−ps}(K, Π*) with matched kernel
/// truncation, on the fine grid only.
pub fn verify_identity(case: &str, f: &FunctionSpec, h: &FunctionSpec, k: &StarBody, setup: &Setup, mode: Mode) -> Result<ChainReport> {
    let start = Instant::now();
    let params = setup.params;
    let mut report = ChainReport::new(case, params, setup.grid_info());
    let m = setup.m;
    let (fg, hg) = (setup.sample(f, m)?, setup.sample(h, m)?);
    let epsilon = match setup.policy {
        PolicyChoice::Truncate(Some(e)) => e,
        _ => base_level(fg.spacing(), k),
    };
    let direct = frac_seminorm(&fg, &hg, k, &params, mode, KernelPolicy::Truncate { epsilon })?;
    let quad = setup.quadrature()?;
    let polar = clamped_polar_seminorm(&fg, &hg, k, &params, mode, epsilon, &quad, &setup.profile_options())?;
    let single = |v: f64| Refinement {
        m: vec![m],
        values: vec![Some(v)],
        order: None,
    };
    let a = report.push_term(Term::finite("seminorm", direct.computed, 0.0, single(direct.computed)));
    let b = report.push_term(Term::finite("polar_form", polar, 0.0, single(polar)));
    report.check_eq(a, b, false);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// A union of one to three random axis-parallel boxes inside [−1, 1]ⁿ.
pub fn random_indicator(n: usize, rng: &mut ChaCha8Rng) -> FunctionSpec {
    let count = rng.gen_range(1..=3);
    let parts = (0..count)
        .map(|_| {
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for _ in 0..n {
                let a: f64 = rng.gen_range(-1.0..0.6);
                let w: f64 = rng.gen_range(0.2..0.9);
                lo.push(a);
                hi.push((a + w).min(1.0));
            }
            FunctionSpec::BoxIndicator { lo, hi, amplitude: 1.0 }
        })
        .collect();
    FunctionSpec::Max(parts)
}

/// Riesz's inequality I(f, k, g) ≤ I(f*, k*, g*) on seeded indicator triples.
pub fn verify_riesz(case: &str, n: usize, count: usize, seed: u64, m: usize) -> Result<ChainReport> {
    let start = Instant::now();
    let half_width = 1.25;
    let mut report = ChainReport::new(case, Params { n, s: 0.5, p: 1.0 }, GridInfo { half_width, m });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[FunctionSpec; 3]> = (0..count)
        .map(|_| [random_indicator(n, &mut rng), random_indicator(n, &mut rng), random_indicator(n, &mut rng)])
        .collect();
    let results: Vec<(Term, Term)> = triples
        .par_iter()
        .enumerate()
        .map(|(i, t)| -> Result<(Term, Term)> {
            let mut plain = [0.0; 2];
            let mut star = [0.0; 2];
            for (level, mm) in [m, 2 * m].into_iter().enumerate() {
                let g: Vec<GridFunction> = t.iter().map(|s| s.sample(n, half_width, mm)).collect::<Result<_>>()?;
                plain[level] = riesz_functional(&g[0], &g[1], &g[2])?;
                let r: Vec<GridFunction> = g.iter().map(rearrange).collect();
                star[level] = riesz_functional(&r[0], &r[1], &r[2])?;
            }
            Ok((
                Term::refined(format!("riesz[{i}]"), Some(plain[0]), Some(plain[1]), 1.0, m),
                Term::refined(format!("riesz_rearranged[{i}]"), Some(star[0]), Some(star[1]), 1.0, m),
            ))
        })
        .collect::<Result<_>>()?;
    for (a, b) in results {
        let (a, b) = (report.push_term(a), report.push_term(b));
        report.check_ge(b, a);
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Dual mixed volume inequalities in both regimes, the dual Brunn–Minkowski
/// inequality for q = 1, and the dilate equality case, on seeded random
/// star bodies.
pub fn verify_dual(case: &str, n: usize, count: usize, seed: u64, quad_nodes: usize) -> Result<ChainReport> {
    let start = Instant::now();
    let quad = Arc::new(SphereQuadrature::new(n, quad_nodes)?);
    let mut report = ChainReport::new(case, Params { n, s: 0.5, p: 2.0 }, GridInfo { half_width: 0.0, m: 0 });
    let nf = n as f64;
    let negative = -1.0;
    let inside = 0.5 * nf;
    for i in 0..count as u64 {
        let k = random_star_body(&quad, seed.wrapping_mul(1000).wrapping_add(2 * i), 0.4)?;
        let l = random_star_body(&quad, seed.wrapping_mul(1000).wrapping_add(2 * i + 1), 0.4)?;
        let v_neg = report.push_term(Term::exact(format!("V[{i}](alpha=-1)"), dual_mixed_volume(&k, &l, negative, &quad)?));
        let b_neg = report.push_term(Term::exact(format!("bound[{i}](alpha=-1)"), dual_mixed_bound(&k, &l, negative, &quad)));
        report.check_ge(v_neg, b_neg);
        let v_in = report.push_term(Term::exact(format!("V[{i}](alpha=n/2)"), dual_mixed_volume(&k, &l, inside, &quad)?));
        let b_in = report.push_term(Term::exact(format!("bound[{i}](alpha=n/2)"), dual_mixed_bound(&k, &l, inside, &quad)));
        report.check_ge(b_in, v_in);
        let sum = q_radial_sum(&k, &l, -1.0, &quad)?;
        let lhs = sum.volume(&quad).powf(-1.0 / nf);
        let rhs = k.volume(&quad).powf(-1.0 / nf) + l.volume(&quad).powf(-1.0 / nf);
        let a = report.push_term(Term::exact(format!("dual_bm_lhs[{i}]"), lhs));
        let b = report.push_term(Term::exact(format!("dual_bm_rhs[{i}]"), rhs));
        report.check_ge(a, b);
        let c = 0.5 + i as f64 * 0.05;
        let dil = k.dilate(c)?;
        let v = dual_mixed_volume(&k, &dil, negative, &quad)?;
        let bound = dual_mixed_bound(&k, &dil, negative, &quad);
        report.record(format!("dilate equality[{i}] to 1e-10"), (v - bound).abs() <= 1e-10 * bound, false);
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Key-value run configuration (`key = value` lines, `#` comments).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub n: Option<usize>,
    pub s: Option<f64>,
    pub p: Option<f64>,
    pub m: Option<usize>,
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
    pub quad_nodes: Option<usize>,
    pub policy: Option<String>,
    pub epsilon: Option<f64>,
    pub t_per_decade: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl Config {
    pub fn empty() -> Self {
        Self {
            n: None,
            s: None,
            p: None,
            m: None,
            half_width: None,
            quad_nodes: None,
            policy: None,
            epsilon: None,
            t_per_decade: None,
            seed: None,
            threads: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::empty();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |column: usize, message: String| Error::Parse {
                line: i + 1,
                column,
                message,
            };
            let (key, value) = line.split_once('=').ok_or_else(|| err(1, "expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let column = raw.find(value).map(|c| c + 1).unwrap_or(1);
            fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("invalid number `{v}`"))
            }
            let res: std::result::Result<(), String> = (|| {
                match key {
                    "n" => c.n = Some(num(value)?),
                    "s" => c.s = Some(num(value)?),
                    "p" => c.p = Some(num(value)?),
                    "m" => c.m = Some(num(value)?),
                    "L" => c.half_width = Some(num(value)?),
                    "quad_nodes" => c.quad_nodes = Some(num(value)?),
                    "policy" => {
                        if !matches!(value, "truncate" | "exclude") {
                            return Err(format!("policy must be `truncate` or `exclude`, got `{value}`"));
                        }
                        c.policy = Some(value.to_string())
                    }
                    "epsilon" => c.epsilon = Some(num(value)?),
                    "t_per_decade" => c.t_per_decade = Some(num(value)?),
                    "seed" => c.seed = Some(num(value)?),
                    "threads" => c.threads = Some(num(value)?),
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            })();
            res.map_err(|m| err(if m.starts_with("unknown") { 1 } else { column }, m))?;
        }
        Ok(c)
    }

    /// Fills unset fields of `self` from `other`.
    pub fn or(self, other: &Config) -> Config {
        Config {
            n: self.n.or(other.n),
            s: self.s.or(other.s),
            p: self.p.or(other.p),
            m: self.m.or(other.m),
            half_width: self.half_width.or(other.half_width),
            quad_nodes: self.quad_nodes.or(other.quad_nodes),
            policy: self.policy.or(other.policy.clone()),
            epsilon: self.epsilon.or(other.epsilon),
            t_per_decade: self.t_per_decade.or(other.t_per_decade),
            seed: self.seed.or(other.seed),
            threads: self.threads.or(other.threads),
        }
    }

    /// Dimension, half-width and cells per axis; only n is required.
    pub fn grid(&self) -> Result<(usize, f64, usize)> {
        let n = self.n.ok_or_else(|| Error::Param("missing `n`".into()))?;
        if n == 0 {
            return Err(Error::Param("n must be positive".into()));
        }
        let default_m = match n {
            1 => 200,
            2 => 48,
            _ => 16,
        };
        Ok((n, self.half_width.unwrap_or(2.0), self.m.unwrap_or(default_m)))
    }

    /// A setup from this configuration; n, s and p are required.
    pub fn setup(&self) -> Result<Setup> {
        let missing = |k: &str| Error::Param(format!("missing `{k}`"));
        let (n, half_width, m) = self.grid()?;
        let s = self.s.ok_or_else(|| missing("s"))?;
        let p = self.p.ok_or_else(|| missing("p"))?;
        let params = validate_params(n, s, p, false)?;
        let policy = match self.policy.as_deref() {
            Some("exclude") => PolicyChoice::ExcludeDiagonal,
            _ => PolicyChoice::Truncate(self.epsilon),
        };
        Ok(Setup {
            params,
            half_width,
            m,
            quad_nodes: self.quad_nodes.unwrap_or(64),
            policy,
            t_per_decade: self.t_per_decade.unwrap_or(64),
            seed: self.seed.unwrap_or(1),
        })
    }
}

fn spec(text: &str) -> FunctionSpec {
    FunctionSpec::parse(text).expect("built-in case")
}

/// The kind of check a suite case runs.
#[derive(Debug, Clone)]
pub enum CaseKind {
    Symmetric { f: FunctionSpec, h: FunctionSpec },
    Asymmetric { f: FunctionSpec, h: FunctionSpec },
    Anisotropic { f: FunctionSpec, h: FunctionSpec, k: StarBody, modes: Vec<Mode> },
    Volume { f: FunctionSpec, h: FunctionSpec, mode: Mode },
    Limit { f: FunctionSpec, k: StarBody, s_list: Vec<f64> },
    Invariance { f: FunctionSpec, h: FunctionSpec, map: AffineMap },
    Identity { f: FunctionSpec, h: FunctionSpec, k: StarBody },
    Riesz { count: usize },
    Dual { count: usize },
}

#[derive(Debug, Clone)]
pub struct SuiteCase {
    pub id: String,
    pub kind: CaseKind,
    pub setup: Setup,
    /// Whether any verdict of this case should be an equality.
    pub expect_equality: bool,
    pub slow: bool,
}

impl SuiteCase {
    pub fn family(&self) -> &'static str {
        match self.kind {
            CaseKind::Symmetric { .. } => "sym",
            CaseKind::Asymmetric { .. } => "asym",
            CaseKind::Anisotropic { .. } => "aniso",
            CaseKind::Volume { .. } => "volume",
            CaseKind::Limit { .. } => "limit",
            CaseKind::Invariance { .. } => "invariance",
            CaseKind::Identity { .. } => "identity",
            CaseKind::Riesz { .. } => "riesz",
            CaseKind::Dual { .. } => "dual",
        }
    }

    pub fn run(&self) -> Result<ChainReport> {
        let s = &self.setup;
        let id = self.id.as_str();
        match &self.kind {
            CaseKind::Symmetric { f, h } => verify_chain_symmetric(id, f, h, s),
            CaseKind::Asymmetric { f, h } => verify_chain_asymmetric(id, f, h, s),
            CaseKind::Anisotropic { f, h, k, modes } => verify_anisotropic(id, f, h, k, modes, s),
            CaseKind::Volume { f, h, mode } => verify_volume_monotonicity(id, f, h, s, *mode),
            CaseKind::Limit { f, k, s_list } => verify_limit_s1(id, f, k, s_list, s),
            CaseKind::Invariance { f, h, map } => verify_invariance(id, f, h, map, s, Mode::Abs),
            CaseKind::Identity { f, h, k } => verify_identity(id, f, h, k, s, Mode::Abs),
            CaseKind::Riesz { count } => verify_riesz(id, s.params.n, *count, s.seed, s.m),
            CaseKind::Dual { count } => verify_dual(id, s.params.n, *count, s.seed, s.quad_nodes),
        }
    }
}

/// The canonical case list run by `suite`.
pub fn suite_cases() -> Vec<SuiteCase> {
    let mut cases = Vec::new();
    let mut add = |id: &str, kind: CaseKind, setup: Setup, expect_equality: bool, slow: bool| {
        cases.push(SuiteCase {
            id: id.to_string(),
            kind,
            setup,
            expect_equality,
            slow,
        })
    };
    let one = |s, p, m| Setup::new(1, s, p, 2.0, m);
    let two = |s, p, l, m| Setup {
        quad_nodes: 48,
        t_per_decade: 32,
        ..Setup::new(2, s, p, l, m)
    };
    let box1 = spec("box([0],[1],1)");
    let box2 = spec("box([0],[1],2)");
    let gauss2 = spec("gaussian([0,0],0.3,1)");
    let bumps = spec("max(gaussian([0.6,0],0.2,1), gaussian([-0.6,0.1],0.2,0.8))");
    let shear = AffineMap::shear(2, 0.6).expect("shear");
    let sheared_gauss = sheared(&gauss2, &shear);
    let ellipse = StarBody::axis_ellipsoid(&[2.0, 0.5]).expect("ellipse");

    let sym: Vec<(&str, FunctionSpec, FunctionSpec, Setup, bool)> = vec![
        ("sym-1d-box", box1.clone(), box1.clone(), one(0.25, 2.0, 200), true),
        ("sym-1d-gauss", spec("gaussian([0.4],0.3,1)"), spec("gaussian([0.4],0.3,1)"), one(0.5, 1.5, 200), true),
        ("sym-1d-two-boxes", spec("max(box([-1],[-0.2],1), box([0.3],[0.8],2))"), spec("max(box([-1],[-0.2],1), box([0.3],[0.8],2))"), one(0.25, 2.0, 200), false),
        ("sym-1d-distinct", box1.clone(), box2.clone(), one(0.25, 2.0, 200), false),
        ("sym-1d-lp-ball-p3", spec("ball([0.2],0.7,1)"), spec("ball([0.2],0.7,1)"), one(0.2, 3.0, 200), true),
        ("sym-2d-gauss", gauss2.clone(), gauss2.clone(), two(0.5, 2.0, 1.8, 48), true),
        ("sym-2d-bumps", bumps.clone(), bumps.clone(), two(0.5, 2.0, 1.8, 48), false),
        ("sym-2d-sheared-gauss", sheared_gauss.clone(), sheared_gauss.clone(), two(0.5, 2.0, 2.0, 48), false),
        ("sym-2d-disk", spec("ball([0.1,0],0.6,1)"), spec("ball([0.1,0],0.6,1)"), two(0.3, 2.0, 1.2, 48), true),
        ("sym-2d-distinct", gauss2.clone(), spec("gaussian([0,0],0.3,0.5)"), two(0.5, 2.0, 1.8, 32), false),
    ];
    for (id, f, h, s, eq) in sym {
        add(id, CaseKind::Symmetric { f, h }, s, eq, false);
    }
    add(
        "sym-3d-gauss",
        CaseKind::Symmetric { f: spec("gaussian([0,0,0],0.3,1)"), h: spec("gaussian([0,0,0],0.3,1)") },
        Setup {
            quad_nodes: 72,
            t_per_decade: 16,
            ..Setup::new(3, 0.5, 2.0, 1.8, 12)
        },
        true,
        true,
    );

    let plateau = spec("box([-0.8,-0.8],[0.8,0.8],1)");
    let asym: Vec<(&str, FunctionSpec, FunctionSpec, Setup, bool)> = vec![
        ("asym-1d-box", box1.clone(), box2.clone(), one(0.25, 2.0, 200), true),
        ("asym-1d-zero", spec("box([0],[1],0)"), box1.clone(), one(0.25, 2.0, 200), true),
        ("asym-1d-bump-under-plateau", spec("gaussian([0.3],0.1,0.5)"), spec("box([-1],[1],1)"), one(0.25, 2.0, 200), false),
        ("asym-1d-equal-gauss", spec("gaussian([0],0.3,1)"), spec("gaussian([0],0.3,1)"), one(0.5, 1.5, 200), true),
        ("asym-1d-nested-boxes", box1.clone(), spec("box([-0.5],[1.5],1)"), one(0.25, 2.0, 200), false),
        ("asym-2d-equal-gauss", gauss2.clone(), gauss2.clone(), two(0.5, 2.0, 1.8, 48), true),
        ("asym-2d-bump-under-disk", spec("gaussian([0.2,0.1],0.1,0.5)"), spec("ball([0,0],0.9,1)"), two(0.4, 2.0, 1.2, 48), false),
        ("asym-2d-disk", spec("ball([0,0],0.6,1)"), spec("ball([0,0],0.6,1)"), two(0.3, 2.0, 1.2, 48), true),
        ("asym-2d-bumps-under-plateau", spec("max(gaussian([0.3,0],0.08,0.6), gaussian([-0.3,0.2],0.08,0.4))"), plateau.clone(), two(0.4, 2.0, 1.2, 48), false),
        ("asym-2d-sheared-gauss", sheared_gauss.clone(), sheared_gauss.clone(), two(0.5, 2.0, 2.0, 48), false),
    ];
    for (id, f, h, s, eq) in asym {
        add(id, CaseKind::Asymmetric { f, h }, s, eq, false);
    }

    let both = vec![Mode::Abs, Mode::Plus];
    let pair_quad = Arc::new(SphereQuadrature::pair());
    let interval = StarBody::sampled(pair_quad, vec![1.5, 0.5]).expect("interval");
    let quad48 = Arc::new(SphereQuadrature::new(2, 48).expect("quadrature"));
    let random_k = |seed| random_star_body(&quad48, seed, 0.3).expect("random body");
    let sheared_disk = StarBody::linear_image(&shear, StarBody::ball(2, 1.0).expect("ball")).expect("image");
    let g1 = spec("gaussian([0.2],0.3,1)");
    let aniso: Vec<(&str, FunctionSpec, FunctionSpec, StarBody, Setup, bool)> = vec![
        ("aniso-1d-interval-gauss", g1.clone(), g1.clone(), interval.clone(), one(0.5, 2.0, 200), false),
        ("aniso-1d-interval-boxes", box1.clone(), box1.clone(), interval, one(0.25, 2.0, 200), false),
        ("aniso-2d-ellipse-gauss", gauss2.clone(), gauss2.clone(), ellipse.clone(), two(0.5, 2.0, 1.8, 32), false),
        ("aniso-2d-sheared-equality", sheared_gauss.clone(), sheared_gauss.clone(), sheared_disk, two(0.5, 2.0, 2.0, 32), true),
        ("aniso-2d-random-k-bumps", bumps.clone(), bumps.clone(), random_k(11), two(0.5, 2.0, 1.8, 32), false),
        ("aniso-2d-random-k-gauss", gauss2.clone(), gauss2.clone(), random_k(12), two(0.5, 2.0, 1.8, 32), false),
        ("aniso-2d-diamond-disk", spec("ball([0.2,0],0.6,1)"), spec("ball([0.2,0],0.6,1)"), StarBody::lq_ball(2, 1.0, 1.0).expect("lq"), two(0.3, 2.0, 1.2, 32), false),
        ("aniso-2d-l4-bumps", bumps.clone(), bumps.clone(), StarBody::lq_ball(2, 4.0, 0.8).expect("lq"), two(0.5, 1.5, 1.8, 32), false),
        ("aniso-2d-random-k-plateau", spec("gaussian([0.2,0.1],0.1,0.5)"), plateau.clone(), random_k(13), two(0.4, 2.0, 1.2, 32), false),
        ("aniso-2d-ellipse-plateau", spec("max(gaussian([0.3,0],0.08,0.6), gaussian([-0.3,0.2],0.08,0.4))"), plateau, ellipse.clone(), two(0.4, 2.0, 1.2, 32), false),
    ];
    for (id, f, h, k, s, eq) in aniso {
        add(id, CaseKind::Anisotropic { f, h, k, modes: both.clone() }, s, eq, false);
    }

    add("volume-1d-box", CaseKind::Volume { f: box1.clone(), h: box1.clone(), mode: Mode::Abs }, one(0.25, 2.0, 200), true, false);
    add("volume-2d-bumps", CaseKind::Volume { f: bumps.clone(), h: bumps.clone(), mode: Mode::Abs }, two(0.5, 2.0, 1.8, 48), false, false);
    add(
        "volume-2d-sheared-gauss",
        CaseKind::Volume { f: sheared_gauss.clone(), h: sheared_gauss.clone(), mode: Mode::Abs },
        two(0.5, 2.0, 2.0, 48),
        true,
        false,
    );
    add(
        "limit-1d-gauss",
        CaseKind::Limit { f: spec("gaussian([0],0.3,1)"), k: StarBody::ball(1, 1.0).expect("ball"), s_list: vec![0.9, 0.95, 0.99] },
        one(0.99, 2.0, 400),
        true,
        false,
    );
    add(
        "invariance-2d-gauss",
        CaseKind::Invariance { f: spec("gaussian([0,0],0.2,1)"), h: spec("gaussian([0,0],0.2,1)"), map: shear },
        Setup {
            quad_nodes: 64,
            t_per_decade: 32,
            ..Setup::new(2, 0.5, 2.0, 2.5, 64)
        },
        true,
        false,
    );
    for (id, k) in [("identity-2d-disk", StarBody::ball(2, 1.0).expect("ball")), ("identity-2d-ellipse", ellipse)] {
        add(
            id,
            CaseKind::Identity { f: gauss2.clone(), h: gauss2.clone(), k },
            Setup {
                quad_nodes: 256,
                ..Setup::new(2, 0.5, 2.0, 1.5, 128)
            },
            true,
            false,
        );
    }
    add("riesz-1d", CaseKind::Riesz { count: 100 }, Setup { seed: 7, ..one(0.5, 1.0, 100) }, false, false);
    add("riesz-2d", CaseKind::Riesz { count: 100 }, Setup { seed: 8, ..Setup::new(2, 0.5, 1.0, 1.25, 32) }, false, false);
    add("dual-2d", CaseKind::Dual { count: 50 }, Setup { seed: 3, quad_nodes: 128, ..Setup::new(2, 0.5, 2.0, 1.0, 1) }, true, false);
    add("dual-3d", CaseKind::Dual { count: 50 }, Setup { seed: 4, quad_nodes: 200, ..Setup::new(3, 0.5, 2.0, 1.0, 1) }, true, false);
    cases
}

/// Runs the cases concurrently; results keep the order of `cases`.
pub fn run_cases(cases: &[SuiteCase]) -> Vec<Result<ChainReport>> {
    cases.par_iter().map(SuiteCase::run).collect()
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "inf".into())
}

/// CSV with one row per (case, term, grid level) plus the extrapolated value:
/// the plot data for term versus refinement.
pub fn terms_csv(reports: &[ChainReport]) -> String {
    let mut out = String::from("case,term,m,value,infinite,uncertainty\n");
    for r in reports {
        for t in &r.terms {
            let (case, name) = (csv_field(&r.case), csv_field(&t.name));
            for (m, v) in t.refinement.m.iter().zip(&t.refinement.values) {
                out.push_str(&format!("{case},{name},{m},{},{},\n", fmt_value(*v), v.is_none()));
            }
            out.push_str(&format!("{case},{name},extrapolated,{},{},{}\n", fmt_value(t.value), t.infinite, t.uncertainty));
        }
    }
    out
}

/// CSV with one row per (case, margin): the plot data for margin versus case.
pub fn margins_csv(reports: &[ChainReport]) -> String {
    let mut out = String::from("case,margin,value,uncertainty,verdict\n");
    for r in reports {
        for (m, v) in r.margins.iter().zip(&r.verdicts) {
            let val = m.value.map(|v| v.to_string()).unwrap_or_else(|| "inf".into());
            out.push_str(&format!("{},{},{},{},{}\n", csv_field(&r.case), csv_field(&m.name), val, m.uncertainty, v.verdict));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(v: Option<f64>, u: f64) -> Term {
        match v {
            Some(v) => Term::finite("a", v, u, Refinement { m: vec![1, 2], values: vec![None, None], order: None }),
            None => Term::infinite("a", Refinement { m: vec![1, 2], values: vec![None, None], order: None }),
        }
    }

    #[test]
    fn verdict_rules() {
        let v = |a, b| compare_ge(&a, &b).1;
        assert_eq!(v(term(None, 0.0), term(Some(1.0), 0.0)), Verdict::VacuousInfinite);
        assert_eq!(v(term(Some(1.0), 0.0), term(None, 0.0)), Verdict::ViolatedWithinUncertainty);
        assert_eq!(v(term(Some(2.0), 0.01), term(Some(1.0), 0.01)), Verdict::Holds);
        assert_eq!(v(term(Some(1.0), 0.001), term(Some(1.01), 0.001)), Verdict::HoldsWithEquality);
        assert_eq!(v(term(Some(1.0), 0.05), term(Some(1.5), 0.05)), Verdict::ViolatedWithinUncertainty);
        assert_eq!(v(term(Some(1.0), 0.2), term(Some(1.5), 0.2)), Verdict::HoldsWithEquality);
        assert_eq!(v(term(Some(1.0), 0.1), term(Some(1.15), 0.1)), Verdict::HoldsWithEquality);
    }

    #[test]
    fn config_parsing() {
        let c = Config::parse("# run\nn = 2\ns=0.5\np = 2\nL = 1.5\npolicy = exclude\nthreads = 1\n").unwrap();
        let s = c.setup().unwrap();
        assert_eq!(s.params, Params { n: 2, s: 0.5, p: 2.0 });
        assert_eq!(s.policy, PolicyChoice::ExcludeDiagonal);
        assert_eq!(s.half_width, 1.5);
        let err = Config::parse("n = 2\ns = zero\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 5, .. }), "{err:?}");
        assert!(Config::parse("q = 1").is_err());
        assert!(Config::parse("policy = maybe").is_err());
    }

    #[test]
    fn report_json_fields() {
        let mut r = ChainReport::new("x", Params { n: 1, s: 0.25, p: 2.0 }, GridInfo { half_width: 2.0, m: 10 });
        let a = r.push_term(term(Some(2.0), 0.0));
        let b = r.push_term(term(None, 0.0));
        r.check_ge(b, a);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        let mut expected = vec!["case", "params", "grid", "terms", "margins", "verdicts", "runtime_seconds"];
        expected.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, expected);
        assert_eq!(v["grid"]["L"], 2.0);
        assert_eq!(v["terms"][1]["value"], serde_json::Value::Null);
        assert_eq!(v["terms"][1]["infinite"], true);
        assert_eq!(v["verdicts"][0]["verdict"], "vacuous-infinite");
        let back: ChainReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn suite_case_ids_are_unique() {
        let cases = suite_cases();
        let mut ids: Vec<&str> = cases.iter().map(|c| c.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), cases.len());
        for fam in ["sym", "asym", "aniso"] {
            assert!(cases.iter().filter(|c| c.family() == fam && !c.slow).count() >= 10, "{fam}");
        }
    }

    #[test]
    fn csv_outputs_have_headers() {
        let mut r = ChainReport::new("c,1", Params { n: 1, s: 0.25, p: 2.0 }, GridInfo { half_width: 2.0, m: 10 });
        let a = r.push_term(term(Some(2.0), 0.0));
        let b = r.push_term(term(Some(1.0), 0.0));
        r.check_ge(a, b);
        let t = terms_csv(&[r.clone()]);
        assert!(t.starts_with("case,term,m,value"));
        assert_eq!(t.lines().count(), 1 + 2 * 3);
        assert!(t.contains(",extrapolated,2,false,0\n"));
        assert!(t.contains("\"c,1\""));
        let m = margins_csv(&[r]);
        assert_eq!(m.lines().count(), 2);
        assert!(m.contains("holds"));
    }
}
