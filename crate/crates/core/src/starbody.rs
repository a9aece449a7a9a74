//! Star bodies about the origin and the dual Brunn–Minkowski toolkit:
//! volumes, q-radial sums, dual mixed volumes, Schwarz symmetrals and the
//! polar L_p moment body norm.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::grid::unit_ball_volume;
use crate::quadrature::{QuadratureLayout, SphereQuadrature};

pub const BODY_MAGIC: &str = "FRACGEO-BODY v1";

/// Radial samples of a body on the nodes of a quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBody {
    quad: Arc<SphereQuadrature>,
    radial: Vec<f64>,
}

impl SampledBody {
    pub fn new(quad: Arc<SphereQuadrature>, radial: Vec<f64>) -> Result<Self> {
        if radial.len() != quad.len() {
            return Err(Error::Body(format!(
                "{} radial values for {} nodes",
                radial.len(),
                quad.len()
            )));
        }
        if let Some((i, r)) = radial
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(Error::Body(format!("radial value {r} at node {i} is not positive and finite")));
        }
        Ok(Self { quad, radial })
    }

    pub fn quadrature(&self) -> &Arc<SphereQuadrature> {
        &self.quad
    }

    pub fn radial_values(&self) -> &[f64] {
        &self.radial
    }

    /// Largest |Δρ|/(angle) over neighbouring nodes, relative to max ρ.
    pub fn discrete_lipschitz_ratio(&self) -> f64 {
        let nodes = self.quad.nodes();
        let rmax = self.radial.iter().cloned().fold(0.0, f64::max);
        self.quad
            .neighbour_pairs()
            .into_iter()
            .map(|(i, j)| {
                let dot: f64 = (0..3).map(|a| nodes[i][a] * nodes[j][a]).sum();
                let angle = dot.clamp(-1.0, 1.0).acos().max(1e-15);
                (self.radial[i] - self.radial[j]).abs() / angle / rmax
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StarBody {
    Ball { n: usize, radius: f64 },
    /// {x : ‖A·x‖ ≤ 1}.
    Ellipsoid { matrix: AffineMap },
    LqBall { n: usize, q: f64, radius: f64 },
    /// φ·K for a linear map φ.
    LinearImage { map: AffineMap, inner: Box<StarBody> },
    Sampled(SampledBody),
}

impl StarBody {
    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Body(format!("ball radius {radius} must be positive")));
        }
        Ok(Self::Ball { n, radius })
    }

    pub fn ellipsoid(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Self::Ellipsoid {
            matrix: AffineMap::linear(rows)?,
        })
    }

    /// Ellipsoid with the given semi-axes along the coordinate axes.
    pub fn axis_ellipsoid(semi_axes: &[f64]) -> Result<Self> {
        let n = semi_axes.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 / semi_axes[i] } else { 0.0 }).collect())
            .collect();
        Self::ellipsoid(&rows)
    }

    pub fn lq_ball(n: usize, q: f64, radius: f64) -> Result<Self> {
        if !(q > 0.0 && radius > 0.0) {
            return Err(Error::Body(format!("lq ball needs q > 0 and radius > 0, got {q}, {radius}")));
        }
        Ok(Self::LqBall { n, q, radius })
    }

    pub fn linear_image(map: &AffineMap, inner: StarBody) -> Result<Self> {
        if map.dim() != inner.dim() {
            return Err(Error::Dimension {
                expected: inner.dim(),
                found: map.dim(),
            });
        }
        Ok(Self::LinearImage {
            map: map.linear_part(),
            inner: Box::new(inner),
        })
    }

    pub fn sampled(quad: Arc<SphereQuadrature>, radial: Vec<f64>) -> Result<Self> {
        Ok(Self::Sampled(SampledBody::new(quad, radial)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { n, .. } | Self::LqBall { n, .. } => *n,
            Self::Ellipsoid { matrix } => matrix.dim(),
            Self::LinearImage { map, .. } => map.dim(),
            Self::Sampled(s) => s.quad.dim(),
        }
    }

    /// c·K.
    pub fn dilate(&self, c: f64) -> Result<Self> {
        Self::linear_image(&AffineMap::scaling(self.dim(), c)?, self.clone())
    }

    /// −K.
    pub fn reflect(&self) -> Self {
        Self::linear_image(&AffineMap::scaling(self.dim(), -1.0).expect("reflection"), self.clone())
            .expect("same dimension")
    }

    /// Minkowski functional inf{λ > 0 : x ∈ λK}; 0 at the origin.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let norm = x[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        match self {
            Self::Ball { radius, .. } => norm / radius,
            Self::Ellipsoid { matrix } => {
                matrix.apply_linear(&x[..n]).iter().map(|v| v * v).sum::<f64>().sqrt()
            }
            Self::LqBall { q, radius, .. } => {
                x[..n].iter().map(|v| v.abs().powf(*q)).sum::<f64>().powf(1.0 / q) / radius
            }
            Self::LinearImage { map, inner } => inner.gauge(&map.apply_linear_inverse(&x[..n])),
            Self::Sampled(s) => {
                let dir: Vec<f64> = x[..n].iter().map(|v| v / norm).collect();
                norm / s.quad.interpolate(&s.radial, &dir)
            }
        }
    }

    /// ρ_K(ξ) for a direction ξ (need not be normalized).
    pub fn radial(&self, dir: &[f64]) -> f64 {
        let n = self.dim();
        let norm = dir[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        norm / self.gauge(dir)
    }

    /// Radial values at the nodes of `quad`; exact samples when the body was
    /// sampled on the same rule.
    pub fn radial_values(&self, quad: &SphereQuadrature) -> Vec<f64> {
        if let Self::Sampled(s) = self {
            if s.quad.layout() == quad.layout() {
                return s.radial.clone();
            }
        }
        quad.nodes().iter().map(|x| self.radial(x)).collect()
    }

    /// |K| = (1/n) Σ wᵢ ρ(ξᵢ)ⁿ.
    pub fn volume(&self, quad: &SphereQuadrature) -> f64 {
        let n = self.dim();
        let rho = self.radial_values(quad);
        quad.integrate(|i, _| rho[i].powi(n as i32)) / n as f64
    }

    /// The centered ball with the same volume.
    pub fn schwarz_symmetral(&self, quad: &SphereQuadrature) -> StarBody {
        let n = self.dim();
        let r = (self.volume(quad) / unit_ball_volume(n)).powf(1.0 / n as f64);
        StarBody::Ball { n, radius: r }
    }

    /// Samples the body on `quad`.
    pub fn to_sampled(&self, quad: Arc<SphereQuadrature>) -> Result<StarBody> {
        let rho = self.radial_values(&quad);
        Self::sampled(quad, rho)
    }

    /// Largest radial value over the rule.
    pub fn max_radial(&self, quad: &SphereQuadrature) -> f64 {
        self.radial_values(quad).into_iter().fold(0.0, f64::max)
    }

    pub fn min_radial(&self, quad: &SphereQuadrature) -> f64 {
        self.radial_values(quad).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Parses `ball:r`, `ellipsoid:a,b[,c]` (semi-axes), `ellipsoid:a11,a12,...`
    /// (gauge matrix, row-major), `lq:q,r`.
    pub fn parse_short(text: &str, n: usize) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let nums: Vec<f64> = if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad number '{t}' in body '{text}'")))
                })
                .collect::<Result<_>>()?
        };
        match kind.trim() {
            "ball" => Self::ball(n, *nums.first().unwrap_or(&1.0)),
            "ellipsoid" if nums.len() == n => Self::axis_ellipsoid(&nums),
            "ellipsoid" if nums.len() == n * n => {
                let rows: Vec<Vec<f64>> = nums.chunks(n).map(|c| c.to_vec()).collect();
                Self::ellipsoid(&rows)
            }
            "lq" if nums.len() == 2 => Self::lq_ball(n, nums[0], nums[1]),
            _ => Err(Error::Format(format!("unrecognized body '{text}' for n = {n}"))),
        }
    }

    /// Parameter list for analytic bodies, or None for sampled ones.
    pub fn short_form(&self) -> Option<String> {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        match self {
            Self::Ball { radius, .. } => Some(format!("ball:{radius}")),
            Self::Ellipsoid { matrix } => Some(format!("ellipsoid:{}", join(&matrix.matrix_rows().concat()))),
            Self::LqBall { q, radius, .. } => Some(format!("lq:{q},{radius}")),
            _ => None,
        }
    }
}

/// Body with ρ = (ρ_K^q + ρ_L^q)^{1/q} at the nodes of `quad`.
pub fn q_radial_sum(k: &StarBody, l: &StarBody, q: f64, quad: &Arc<SphereQuadrature>) -> Result<StarBody> {
    if q == 0.0 || !q.is_finite() {
        return Err(Error::Param(format!("radial sum exponent {q} must be non-zero")));
    }
    let rk = k.radial_values(quad);
    let rl = l.radial_values(quad);
    let rho = rk
        .iter()
        .zip(&rl)
        .map(|(a, b)| (a.powf(q) + b.powf(q)).powf(1.0 / q))
        .collect();
    StarBody::sampled(quad.clone(), rho)
}

/// Ṽ_α(K, L) = (1/n) Σ wᵢ ρ_K^{n−α} ρ_L^α.
pub fn dual_mixed_volume(k: &StarBody, l: &StarBody, alpha: f64, quad: &SphereQuadrature) -> Result<f64> {
    let n = k.dim();
    if l.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            found: l.dim(),
        });
    }
    if alpha == 0.0 || alpha == n as f64 {
        return Err(Error::Param(format!("alpha = {alpha} must avoid 0 and n")));
    }
    let rk = k.radial_values(quad);
    let rl = l.radial_values(quad);
    Ok(dual_mixed_from_radials(&rk, &rl, n, alpha, quad))
}

pub(crate) fn dual_mixed_from_radials(rk: &[f64], rl: &[f64], n: usize, alpha: f64, quad: &SphereQuadrature) -> f64 {
    let nf = n as f64;
    quad.integrate(|i, _| rk[i].powf(nf - alpha) * rl[i].powf(alpha)) / nf
}

/// The right-hand side |K|^{(n−α)/n}|L|^{α/n} of the dual mixed volume inequality.
pub fn dual_mixed_bound(k: &StarBody, l: &StarBody, alpha: f64, quad: &SphereQuadrature) -> f64 {
    let nf = k.dim() as f64;
    k.volume(quad).powf((nf - alpha) / nf) * l.volume(quad).powf(alpha / nf)
}

/// ‖v‖_{Z*_p K} = ((n+p)/2 ∫_K |v·x|^p dx)^{1/p}, with the body integral done in
/// polar coordinates: ∫_K |v·x|^p dx = Σ wᵢ |v·ξᵢ|^p ρ(ξᵢ)^{n+p}/(n+p).
pub fn moment_body_norm(k: &StarBody, v: &[f64], p: f64, quad: &SphereQuadrature) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::Param(format!("p = {p} must be at least 1")));
    }
    let n = k.dim();
    if v[..n].iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let rho = k.radial_values(quad);
    let np = n as f64 + p;
    let integral = quad.integrate(|i, xi| {
        let dot: f64 = (0..n).map(|a| v[a] * xi[a]).sum();
        dot.abs().powf(p) * rho[i].powf(np) / np
    });
    Ok((np / 2.0 * integral).powf(1.0 / p))
}

/// A smooth random star body ρ = r₀·exp(series) with the series amplitude kept
/// below `amplitude` (< 0.5), sampled on `quad`.
pub fn random_star_body(quad: &Arc<SphereQuadrature>, seed: u64, amplitude: f64) -> Result<StarBody> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = amplitude.clamp(0.0, 0.49) * rng.gen_range(0.3..1.0);
    let r0: f64 = rng.gen_range(0.6..1.6);
    let n = quad.dim();
    let series: Box<dyn Fn(&[f64; 3]) -> f64> = match n {
        1 => {
            let c: f64 = rng.gen_range(-1.0..1.0);
            Box::new(move |x| c * x[0])
        }
        2 => {
            let terms = 5;
            let mut coef: Vec<(f64, f64)> = (1..=terms)
                .map(|k| {
                    let decay = 1.0 / k as f64;
                    (rng.gen_range(-1.0..1.0) * decay, rng.gen_range(-1.0..1.0) * decay)
                })
                .collect();
            let total: f64 = coef.iter().map(|(a, b)| a.abs() + b.abs()).sum();
            for c in &mut coef {
                c.0 /= total;
                c.1 /= total;
            }
            Box::new(move |x| {
                let t = x[1].atan2(x[0]);
                coef.iter()
                    .enumerate()
                    .map(|(k, (a, b))| {
                        let kt = (k + 1) as f64 * t;
                        a * kt.cos() + b * kt.sin()
                    })
                    .sum()
            })
        }
        _ => {
            let mut monomials = Vec::new();
            for i in 0..=3usize {
                for j in 0..=3usize {
                    for k in 0..=3usize {
                        let deg = i + j + k;
                        if (1..=3).contains(&deg) {
                            monomials.push(([i as i32, j as i32, k as i32], rng.gen_range(-1.0..1.0) / deg as f64));
                        }
                    }
                }
            }
            let total: f64 = monomials.iter().map(|(_, c)| c.abs()).sum();
            for m in &mut monomials {
                m.1 /= total;
            }
            Box::new(move |x| {
                monomials
                    .iter()
                    .map(|(e, c)| c * x[0].powi(e[0]) * x[1].powi(e[1]) * x[2].powi(e[2]))
                    .sum()
            })
        }
    };
    let rho = quad.nodes().iter().map(|x| r0 * (amp * series(x)).exp()).collect();
    StarBody::sampled(quad.clone(), rho)
}

/// Writes a body in the FRACGEO-BODY v1 format. Extra header lines (such as
/// `mode=` and `ps=`) are inserted after `nodes=`.
pub fn write_body(body: &StarBody, quad: &SphereQuadrature, extra: &[(String, String)]) -> String {
    let n = body.dim();
    let mut out = format!("{BODY_MAGIC}\nn={n}\n");
    if let Some(short) = body.short_form() {
        out.push_str(&format!("analytic={short}\n"));
        return out;
    }
    let rho = body.radial_values(quad);
    out.push_str(&format!("nodes={}\n", quad.len()));
    for (k, v) in extra {
        out.push_str(&format!("{k}={v}\n"));
    }
    for (x, r) in quad.nodes().iter().zip(&rho) {
        let comps: Vec<String> = x[..n].iter().map(|c| format!("{c}")).collect();
        out.push_str(&format!("{} {r}\n", comps.join(" ")));
    }
    out
}

/// Parses the FRACGEO-BODY v1 format. Returns the body and any header keys
/// beyond `n`, `nodes` and `analytic`.
pub fn read_body(text: &str) -> Result<(StarBody, Vec<(String, String)>)> {
    let mut n = None;
    let mut nodes = None;
    let mut analytic = None;
    let mut extra = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line == BODY_MAGIC {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            let (k, v) = (k.trim(), v.trim());
            let bad = || Error::Format(format!("line {}: bad value for {k}", lineno + 1));
            match k {
                "n" => n = Some(v.parse::<usize>().map_err(|_| bad())?),
                "nodes" => nodes = Some(v.parse::<usize>().map_err(|_| bad())?),
                "analytic" => analytic = Some(v.to_string()),
                _ => extra.push((k.to_string(), v.to_string())),
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("line {}: bad number '{t}'", lineno + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = n.ok_or_else(|| Error::Format("missing n= header".into()))?;
    if let Some(a) = analytic {
        return Ok((StarBody::parse_short(&a, n)?, extra));
    }
    let count = nodes.ok_or_else(|| Error::Format("missing nodes= header".into()))?;
    if rows.len() != count {
        return Err(Error::Format(format!("expected {count} node lines, found {}", rows.len())));
    }
    let quad = Arc::new(SphereQuadrature::new(n, count)?);
    if quad.len() != count {
        return Err(Error::Format(format!("{count} nodes do not form a standard rule for n = {n}")));
    }
    let mut rho = Vec::with_capacity(count);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n + 1 {
            return Err(Error::Format(format!("node line {} needs {} numbers", i + 1, n + 1)));
        }
        let x = quad.nodes()[i];
        if (0..n).any(|a| (x[a] - row[a]).abs() > 1e-9) {
            return Err(Error::Format(format!("node {} does not match the standard rule", i + 1)));
        }
        rho.push(row[n]);
    }
    Ok((StarBody::sampled(quad, rho)?, extra))
}

/// Layout check used by callers that need shared node sets.
pub fn same_rule(a: &SphereQuadrature, b: &SphereQuadrature) -> bool {
    a.layout() == b.layout() && !matches!(a.layout(), QuadratureLayout::Pair if a.dim() != b.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(m: usize) -> Arc<SphereQuadrature> {
        Arc::new(SphereQuadrature::new(2, m).unwrap())
    }

    #[test]
    fn gauge_examples() {
        let b = StarBody::ball(2, 2.0).unwrap();
        assert_eq!(b.gauge(&[3.0, 0.0]), 1.5);
        let e = StarBody::ellipsoid(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(e.gauge(&[1.0, 0.0]), 2.0);
        let phi = AffineMap::linear(&[vec![1.0, 0.7], vec![0.0, 1.0]]).unwrap();
        let img = StarBody::linear_image(&phi, e.clone()).unwrap();
        let x = [0.3, -1.1];
        assert_eq!(img.gauge(&x), e.gauge(&phi.apply_linear_inverse(&x)));
        assert_eq!(b.gauge(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn gauge_radial_reciprocity_and_homogeneity() {
        let q = circle(64);
        let bodies = [
            StarBody::ball(2, 0.7).unwrap(),
            StarBody::axis_ellipsoid(&[2.0, 0.5]).unwrap(),
            StarBody::lq_ball(2, 3.0, 1.2).unwrap(),
            random_star_body(&q, 7, 0.4).unwrap(),
        ];
        for k in &bodies {
            for x in [[0.3f64, 0.4], [-1.0, 2.0], [0.01, -0.2]] {
                let nx = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let dir = [x[0] / nx, x[1] / nx];
                assert!((k.gauge(&x) * k.radial(&dir) - nx).abs() < 1e-10);
                assert!((k.gauge(&[2.5 * x[0], 2.5 * x[1]]) - 2.5 * k.gauge(&x)).abs() < 1e-12 * k.gauge(&x).max(1.0));
            }
        }
    }

    #[test]
    fn volume_examples() {
        let q = circle(512);
        assert!((StarBody::ball(2, 1.0).unwrap().volume(&q) - PI).abs() < 1e-10);
        let e = StarBody::ellipsoid(&[vec![0.5, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!((e.volume(&q) / PI - 1.0).abs() < 1e-3);
        let pair = SphereQuadrature::pair();
        assert_eq!(StarBody::ball(1, 2.0).unwrap().volume(&pair), 4.0);
        let q3 = SphereQuadrature::new(3, 800).unwrap();
        let e3 = StarBody::axis_ellipsoid(&[1.0, 2.0, 0.5]).unwrap();
        assert!((e3.volume(&q3) / (4.0 * PI / 3.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn volume_homogeneity_and_reflection() {
        let q = circle(128);
        let k = random_star_body(&q, 3, 0.45).unwrap();
        let c: f64 = 1.7;
        assert!((k.dilate(c).unwrap().volume(&q) - c * c * k.volume(&q)).abs() < 1e-10);
        assert!((k.reflect().volume(&q) - k.volume(&q)).abs() < 1e-10);
    }

    #[test]
    fn symmetral_examples() {
        let q = circle(512);
        let b = StarBody::ball(2, 1.3).unwrap();
        match b.schwarz_symmetral(&q) {
            StarBody::Ball { radius, .. } => assert!((radius - 1.3).abs() < 1e-12),
            _ => unreachable!(),
        }
        let e = StarBody::axis_ellipsoid(&[2.0, 0.5]).unwrap();
        match e.schwarz_symmetral(&q) {
            StarBody::Ball { radius, .. } => assert!((radius - 1.0).abs() < 1e-3),
            _ => unreachable!(),
        }
        let k = random_star_body(&q, 11, 0.4).unwrap();
        let v = k.volume(&q);
        assert!((k.schwarz_symmetral(&q).volume(&q) - v).abs() < 1e-12 * v);
    }

    #[test]
    fn radial_sum_examples() {
        let q = circle(32);
        let s = q_radial_sum(&StarBody::ball(2, 1.0).unwrap(), &StarBody::ball(2, 2.0).unwrap(), 2.0, &q).unwrap();
        for r in s.radial_values(&q) {
            assert!((r - 5f64.sqrt()).abs() < 1e-14);
        }
        let k = random_star_body(&q, 5, 0.3).unwrap();
        let ps = 0.6;
        let s = q_radial_sum(&k, &k, -ps, &q).unwrap();
        let factor = 2f64.powf(-1.0 / ps);
        for (a, b) in s.radial_values(&q).iter().zip(k.radial_values(&q)) {
            assert!((a - factor * b).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_mixed_volume_examples() {
        let q = circle(256);
        let k = random_star_body(&q, 9, 0.4).unwrap();
        for alpha in [-0.5, 0.7, 3.0] {
            let v = dual_mixed_volume(&k, &k, alpha, &q).unwrap();
            assert!((v - k.volume(&q)).abs() < 1e-12 * v);
        }
        let v = dual_mixed_volume(&StarBody::ball(2, 2.0).unwrap(), &StarBody::ball(2, 1.0).unwrap(), -1.0, &q).unwrap();
        assert!((v - 8.0 * PI).abs() < 1e-10);
        assert!(dual_mixed_volume(&k, &k, 2.0, &q).is_err());
        assert!(dual_mixed_volume(&k, &k, 0.0, &q).is_err());
    }

    #[test]
    fn dual_mixed_equality_for_dilates() {
        let q = circle(128);
        let k = random_star_body(&q, 21, 0.45).unwrap();
        let rho: Vec<f64> = k.radial_values(&q).iter().map(|r| 1.9 * r).collect();
        let l = StarBody::sampled(q.clone(), rho).unwrap();
        for alpha in [-1.0, -0.3, 0.5, 1.5] {
            let v = dual_mixed_volume(&k, &l, alpha, &q).unwrap();
            let b = dual_mixed_bound(&k, &l, alpha, &q);
            assert!(((v - b) / b).abs() < 1e-10);
        }
    }

    #[test]
    fn dual_inequalities_on_random_pairs() {
        let q = circle(128);
        for seed in 0..20u64 {
            let k = random_star_body(&q, 2 * seed, 0.45).unwrap();
            let l = random_star_body(&q, 2 * seed + 1, 0.45).unwrap();
            let lower = dual_mixed_volume(&k, &l, -0.5, &q).unwrap();
            assert!(lower >= dual_mixed_bound(&k, &l, -0.5, &q) * (1.0 - 1e-12));
            let upper = dual_mixed_volume(&k, &l, 0.8, &q).unwrap();
            assert!(upper <= dual_mixed_bound(&k, &l, 0.8, &q) * (1.0 + 1e-12));
            let sum = q_radial_sum(&k, &l, -1.0, &q).unwrap();
            let n = 2.0;
            let lhs = sum.volume(&q).powf(-1.0 / n);
            assert!(lhs >= (k.volume(&q).powf(-1.0 / n) + l.volume(&q).powf(-1.0 / n)) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn additivity_under_radial_sum() {
        let q = circle(64);
        let k = random_star_body(&q, 1, 0.4).unwrap();
        let l1 = random_star_body(&q, 2, 0.4).unwrap();
        let l2 = random_star_body(&q, 3, 0.4).unwrap();
        let alpha = -0.7;
        let sum = q_radial_sum(&l1, &l2, alpha, &q).unwrap();
        let lhs = dual_mixed_volume(&k, &sum, alpha, &q).unwrap();
        let rhs = dual_mixed_volume(&k, &l1, alpha, &q).unwrap() + dual_mixed_volume(&k, &l2, alpha, &q).unwrap();
        assert!(((lhs - rhs) / rhs).abs() < 1e-10);
    }

    #[test]
    fn moment_body_examples() {
        let q = circle(256);
        let b = StarBody::ball(2, 1.0).unwrap();
        let v = moment_body_norm(&b, &[1.0, 0.0], 2.0, &q).unwrap();
        assert!((v * v - PI / 2.0).abs() < 1e-12);
        assert_eq!(moment_body_norm(&b, &[0.0, 0.0], 2.0, &q).unwrap(), 0.0);
        for t in [0.1f64, 0.9, 2.0] {
            let w = moment_body_norm(&b, &[t.cos(), t.sin()], 3.0, &q).unwrap();
            let w0 = moment_body_norm(&b, &[1.0, 0.0], 3.0, &q).unwrap();
            assert!((w - w0).abs() < 1e-6);
        }
        let pair = SphereQuadrature::pair();
        let one = moment_body_norm(&StarBody::ball(1, 1.0).unwrap(), &[-2.5], 2.0, &pair).unwrap();
        assert!((one - 2.5).abs() < 1e-14);
    }

    #[test]
    fn body_files_round_trip() {
        let q = circle(16);
        let k = random_star_body(&q, 4, 0.3).unwrap();
        let text = write_body(&k, &q, &[("mode".into(), "abs".into())]);
        let (back, extra) = read_body(&text).unwrap();
        assert_eq!(extra, vec![("mode".to_string(), "abs".to_string())]);
        for (a, b) in back.radial_values(&q).iter().zip(k.radial_values(&q)) {
            assert_eq!(*a, b);
        }
        let e = StarBody::parse_short("ellipsoid:2,0.5", 2).unwrap();
        let (e2, _) = read_body(&write_body(&e, &q, &[])).unwrap();
        assert_eq!(e.gauge(&[0.3, 0.2]), e2.gauge(&[0.3, 0.2]));
        assert!(read_body("FRACGEO-BODY v1\nn=2\nnodes=3\n1 0 1\n").is_err());
    }

    #[test]
    fn random_bodies_are_valid() {
        for (n, nodes) in [(1, 2), (2, 64), (3, 128)] {
            let q = Arc::new(SphereQuadrature::new(n, nodes).unwrap());
            for seed in 0..5 {
                let k = random_star_body(&q, seed, 0.45).unwrap();
                if let StarBody::Sampled(s) = &k {
                    assert!(s.radial_values().iter().all(|r| *r > 0.0));
                    if n > 1 {
                        assert!(s.discrete_lipschitz_ratio() < 5.0);
                    }
                }
            }
        }
    }
}
