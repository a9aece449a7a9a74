//! A small prefix language describing non-negative test functions.
//!
//! ```text
//! # two bumps, one of them sheared
//! max(gaussian([0.5, 0], 0.3, 1),
//!     affine([[1, 1], [0, 1]], [-0.5, 0], ball_indicator([0, 0], 0.4, 0.7)))
//! ```
//!
//! Primitives: `gaussian(center, sigma, amplitude)`,
//! `box_indicator(lo, hi, amplitude)`, `ball_indicator(center, radius, amplitude)`.
//! Combinators: `sum(e, ...)`, `max(e, ...)`, `affine(matrix, [shift,] e)`
//! evaluating `e(φ⁻¹x)`, and `scale_arg(r, e)` evaluating `e(r·x)`.
//! In one dimension a bare number may stand in for a one-element vector.

use std::fmt;

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Gaussians are cut off at this many standard deviations.
pub const GAUSSIAN_CUTOFF: f64 = 6.0;

const MASS_TOLERANCE: f64 = 1e-6;
const MAX_PROBE_POINTS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        amplitude: f64,
    },
    BoxIndicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
        amplitude: f64,
    },
    BallIndicator {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
    Sum(Vec<FunctionSpec>),
    Max(Vec<FunctionSpec>),
    Affine {
        map: AffineMap,
        inner: Box<FunctionSpec>,
    },
    ScaleArg {
        r: f64,
        inner: Box<FunctionSpec>,
    },
}

impl FunctionSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser::new(text);
        p.skip_ws();
        let (expr, pos) = match p.value()? {
            (Value::Expr(e), pos) => (e, pos),
            (_, pos) => return Err(p.error_at(pos, "expected a function expression")),
        };
        let _ = pos;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error_at(p.pos, "trailing input after expression"));
        }
        Ok(expr)
    }

    /// Dimension implied by the vectors in the expression, if any.
    pub fn inferred_dim(&self) -> Option<usize> {
        match self {
            Self::Gaussian { center, .. } | Self::BallIndicator { center, .. } => Some(center.len()),
            Self::BoxIndicator { lo, .. } => Some(lo.len()),
            Self::Sum(v) | Self::Max(v) => v.iter().find_map(|e| e.inferred_dim()),
            Self::Affine { map, .. } => Some(map.dim()),
            Self::ScaleArg { inner, .. } => inner.inferred_dim(),
        }
    }

    /// Checks every vector against dimension n.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        let chk = |len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(Error::Dimension {
                    expected: n,
                    found: len,
                })
            }
        };
        match self {
            Self::Gaussian { center, .. } | Self::BallIndicator { center, .. } => chk(center.len()),
            Self::BoxIndicator { lo, hi, .. } => chk(lo.len()).and(chk(hi.len())),
            Self::Sum(v) | Self::Max(v) => v.iter().try_for_each(|e| e.check_dim(n)),
            Self::Affine { map, inner } => chk(map.dim()).and(inner.check_dim(n)),
            Self::ScaleArg { inner, .. } => inner.check_dim(n),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Gaussian {
                center,
                sigma,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                if r2 > (GAUSSIAN_CUTOFF * sigma).powi(2) {
                    0.0
                } else {
                    amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
                }
            }
            Self::BoxIndicator { lo, hi, amplitude } => {
                let inside = x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (l, h))| *l <= *v && *v <= *h);
                if inside {
                    *amplitude
                } else {
                    0.0
                }
            }
            Self::BallIndicator {
                center,
                radius,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                if r2 <= radius * radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            Self::Sum(v) => v.iter().map(|e| e.eval(x)).sum(),
            Self::Max(v) => v.iter().map(|e| e.eval(x)).fold(0.0, f64::max),
            Self::Affine { map, inner } => inner.eval(&map.apply_inverse(x)),
            Self::ScaleArg { r, inner } => {
                let y: Vec<f64> = x.iter().map(|v| v * r).collect();
                inner.eval(&y)
            }
        }
    }

    /// Axis-aligned box containing the support, or None for the zero function.
    pub fn support_box(&self, n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Gaussian {
                center,
                sigma,
                amplitude,
            } => (*amplitude > 0.0).then(|| {
                let r = GAUSSIAN_CUTOFF * sigma;
                (center.iter().map(|c| c - r).collect(), center.iter().map(|c| c + r).collect())
            }),
            Self::BoxIndicator { lo, hi, amplitude } => {
                (*amplitude > 0.0 && lo.iter().zip(hi).all(|(l, h)| l <= h)).then(|| (lo.clone(), hi.clone()))
            }
            Self::BallIndicator {
                center,
                radius,
                amplitude,
            } => (*amplitude > 0.0).then(|| {
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }),
            Self::Sum(v) | Self::Max(v) => v.iter().filter_map(|e| e.support_box(n)).reduce(|a, b| {
                (
                    a.0.iter().zip(&b.0).map(|(x, y)| x.min(*y)).collect(),
                    a.1.iter().zip(&b.1).map(|(x, y)| x.max(*y)).collect(),
                )
            }),
            Self::Affine { map, inner } => {
                let (lo, hi) = inner.support_box(n)?;
                let mut out_lo = vec![f64::INFINITY; n];
                let mut out_hi = vec![f64::NEG_INFINITY; n];
                for corner in 0..(1usize << n) {
                    let pt: Vec<f64> = (0..n)
                        .map(|a| if (corner >> a) & 1 == 1 { hi[a] } else { lo[a] })
                        .collect();
                    for (a, c) in map.apply(&pt).into_iter().enumerate() {
                        out_lo[a] = out_lo[a].min(c);
                        out_hi[a] = out_hi[a].max(c);
                    }
                }
                Some((out_lo, out_hi))
            }
            Self::ScaleArg { r, inner } => {
                let (lo, hi) = inner.support_box(n)?;
                Some((lo.iter().map(|v| v / r).collect(), hi.iter().map(|v| v / r).collect()))
            }
        }
    }

    /// L¹ mass cut away by the Gaussian cutoff (upper bound under `max`).
    pub fn truncated_mass(&self, n: usize) -> f64 {
        match self {
            Self::Gaussian { sigma, amplitude, .. } => {
                amplitude * (2.0 * std::f64::consts::PI * sigma * sigma).powf(n as f64 / 2.0) * chi_tail(n, GAUSSIAN_CUTOFF)
            }
            Self::BoxIndicator { .. } | Self::BallIndicator { .. } => 0.0,
            Self::Sum(v) | Self::Max(v) => v.iter().map(|e| e.truncated_mass(n)).sum(),
            Self::Affine { map, inner } => inner.truncated_mass(n) * map.determinant().abs(),
            Self::ScaleArg { r, inner } => inner.truncated_mass(n) / r.powi(n as i32),
        }
    }

    /// Samples the expression at the cell centers of [−L, L]ⁿ with m cells per axis.
    pub fn sample(&self, n: usize, half_width: f64, m: usize) -> Result<GridFunction> {
        self.check_dim(n)?;
        let mut g = GridFunction::from_fn(n, half_width, m, |x| self.eval(x))?;
        g.meta.truncated_mass = self.truncated_mass(n);
        if let Some((lo, hi)) = self.support_box(n) {
            let escapes = lo.iter().chain(&hi).any(|c| c.abs() > half_width);
            if escapes {
                let d = 2.0 * half_width / m as f64;
                let (outside, total) = self.mass_outside(n, half_width, d, &lo, &hi);
                if total > 0.0 && outside > MASS_TOLERANCE * total {
                    g.meta.warnings.push(format!(
                        "support exceeds [-{half_width}, {half_width}]^{n}: about {:.3e} of the L1 mass is cut off",
                        outside / total
                    ));
                }
            }
        }
        Ok(g)
    }

    fn mass_outside(&self, n: usize, half_width: f64, d: f64, lo: &[f64], hi: &[f64]) -> (f64, f64) {
        let mut step = d;
        let counts = |step: f64| -> Vec<usize> {
            (0..n).map(|a| (((hi[a] - lo[a]) / step).ceil() as usize).max(1)).collect()
        };
        while counts(step).iter().product::<usize>() > MAX_PROBE_POINTS {
            step *= 2.0;
        }
        let cnt = counts(step);
        let total_pts: usize = cnt.iter().product();
        let (mut outside, mut total) = (0.0, 0.0);
        let mut x = vec![0.0; n];
        for k in 0..total_pts {
            let mut rest = k;
            for a in (0..n).rev() {
                x[a] = lo[a] + (rest % cnt[a]) as f64 * step + 0.5 * step;
                rest /= cnt[a];
            }
            let v = self.eval(&x);
            total += v;
            if x.iter().any(|c| c.abs() > half_width) {
                outside += v;
            }
        }
        (outside, total)
    }
}

/// P(|Z| > c) for a standard normal vector Z in ℝⁿ.
fn chi_tail(n: usize, c: f64) -> f64 {
    use statrs::function::erf::erfc;
    let g = (-c * c / 2.0).exp();
    match n {
        1 => erfc(c / std::f64::consts::SQRT_2),
        2 => g,
        _ => erfc(c / std::f64::consts::SQRT_2) + (2.0 / std::f64::consts::PI).sqrt() * c * g,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(", "))
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, v: &[FunctionSpec]| {
            write!(f, "{name}(")?;
            for (i, e) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        };
        match self {
            Self::Gaussian {
                center,
                sigma,
                amplitude,
            } => write!(f, "gaussian({}, {sigma}, {amplitude})", fmt_vec(center)),
            Self::BoxIndicator { lo, hi, amplitude } => {
                write!(f, "box_indicator({}, {}, {amplitude})", fmt_vec(lo), fmt_vec(hi))
            }
            Self::BallIndicator {
                center,
                radius,
                amplitude,
            } => write!(f, "ball_indicator({}, {radius}, {amplitude})", fmt_vec(center)),
            Self::Sum(v) => list(f, "sum", v),
            Self::Max(v) => list(f, "max", v),
            Self::Affine { map, inner } => {
                let rows: Vec<String> = map.matrix_rows().iter().map(|r| fmt_vec(r)).collect();
                write!(f, "affine([{}], {}, {inner})", rows.join(", "), fmt_vec(map.shift()))
            }
            Self::ScaleArg { r, inner } => write!(f, "scale_arg({r}, {inner})"),
        }
    }
}

enum Value {
    Num(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Expr(FunctionSpec),
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
        }
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> Error {
        let mut line = 1;
        let mut column = 1;
        for &c in &self.chars[..pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c == '#' {
                while self.pos < self.chars.len() && self.chars[self.pos] != '\n' {
                    self.pos += 1;
                }
            } else if c.is_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.error_at(self.pos, format!("expected '{c}', found '{x}'"))),
            None => Err(self.error_at(self.pos, format!("expected '{c}', found end of input"))),
        }
    }

    fn value(&mut self) -> Result<(Value, usize)> {
        let start = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            Some('[') => {
                self.pos += 1;
                let mut items = Vec::new();
                if self.peek() != Some(']') {
                    loop {
                        items.push(self.value()?);
                        match self.peek() {
                            Some(',') => self.pos += 1,
                            _ => break,
                        }
                    }
                }
                self.expect(']')?;
                if items.is_empty() {
                    return Err(self.error_at(start, "empty list"));
                }
                if items.iter().all(|(v, _)| matches!(v, Value::Num(_))) {
                    let v = items
                        .into_iter()
                        .map(|(v, _)| match v {
                            Value::Num(x) => x,
                            _ => unreachable!(),
                        })
                        .collect();
                    Ok((Value::Vector(v), start))
                } else if items.iter().all(|(v, _)| matches!(v, Value::Vector(_))) {
                    let rows = items
                        .into_iter()
                        .map(|(v, _)| match v {
                            Value::Vector(r) => r,
                            _ => unreachable!(),
                        })
                        .collect();
                    Ok((Value::Matrix(rows), start))
                } else {
                    Err(self.error_at(start, "lists may hold numbers or rows of numbers only"))
                }
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let begin = self.pos;
                while self.pos < self.chars.len() {
                    let c = self.chars[self.pos];
                    let exp_sign = (c == '-' || c == '+')
                        && self.pos > begin
                        && matches!(self.chars[self.pos - 1], 'e' | 'E');
                    if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign || self.pos == begin {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let tok: String = self.chars[begin..self.pos].iter().collect();
                let x = tok
                    .parse::<f64>()
                    .map_err(|_| self.error_at(begin, format!("invalid number '{tok}'")))?;
                if !x.is_finite() {
                    return Err(self.error_at(begin, format!("non-finite number '{tok}'")));
                }
                Ok((Value::Num(x), start))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let begin = self.pos;
                while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_') {
                    self.pos += 1;
                }
                let name: String = self.chars[begin..self.pos].iter().collect();
                self.expect('(')?;
                let mut args = Vec::new();
                if self.peek() != Some(')') {
                    loop {
                        args.push(self.value()?);
                        match self.peek() {
                            Some(',') => self.pos += 1,
                            _ => break,
                        }
                    }
                }
                self.expect(')')?;
                let expr = self.build(&name, begin, args)?;
                Ok((Value::Expr(expr), start))
            }
            Some(c) => Err(self.error_at(self.pos, format!("unexpected character '{c}'"))),
            None => Err(self.error_at(self.pos, "unexpected end of input")),
        }
    }

    fn build(&self, name: &str, at: usize, args: Vec<(Value, usize)>) -> Result<FunctionSpec> {
        let arity = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(self.error_at(at, format!("{name} takes {k} arguments, got {}", args.len())))
            }
        };
        let vector = |v: &(Value, usize)| -> Result<Vec<f64>> {
            match &v.0 {
                Value::Vector(x) => Ok(x.clone()),
                Value::Num(x) => Ok(vec![*x]),
                _ => Err(self.error_at(v.1, "expected a vector")),
            }
        };
        let number = |v: &(Value, usize), what: &str, positive: bool| -> Result<f64> {
            match &v.0 {
                Value::Num(x) if !positive || *x > 0.0 => Ok(*x),
                Value::Num(_) => Err(self.error_at(v.1, format!("{what} must be positive"))),
                _ => Err(self.error_at(v.1, format!("expected a number for {what}"))),
            }
        };
        let amplitude = |v: &(Value, usize)| -> Result<f64> {
            let a = number(v, "amplitude", false)?;
            if a < 0.0 {
                Err(self.error_at(v.1, "amplitude must be non-negative"))
            } else {
                Ok(a)
            }
        };
        let expr_arg = |v: (Value, usize)| -> Result<FunctionSpec> {
            match v.0 {
                Value::Expr(e) => Ok(e),
                _ => Err(self.error_at(v.1, "expected a function expression")),
            }
        };
        match name {
            "gaussian" => {
                arity(3)?;
                Ok(FunctionSpec::Gaussian {
                    center: vector(&args[0])?,
                    sigma: number(&args[1], "sigma", true)?,
                    amplitude: amplitude(&args[2])?,
                })
            }
            "box_indicator" | "box" => {
                arity(3)?;
                let lo = vector(&args[0])?;
                let hi = vector(&args[1])?;
                if lo.len() != hi.len() {
                    return Err(self.error_at(args[1].1, "corner dimensions differ"));
                }
                Ok(FunctionSpec::BoxIndicator {
                    lo,
                    hi,
                    amplitude: amplitude(&args[2])?,
                })
            }
            "ball_indicator" | "ball" => {
                arity(3)?;
                Ok(FunctionSpec::BallIndicator {
                    center: vector(&args[0])?,
                    radius: number(&args[1], "radius", true)?,
                    amplitude: amplitude(&args[2])?,
                })
            }
            "sum" | "max" => {
                if args.is_empty() {
                    return Err(self.error_at(at, format!("{name} needs at least one argument")));
                }
                let items = args.into_iter().map(expr_arg).collect::<Result<Vec<_>>>()?;
                Ok(if name == "sum" {
                    FunctionSpec::Sum(items)
                } else {
                    FunctionSpec::Max(items)
                })
            }
            "affine" => {
                if !(2..=3).contains(&args.len()) {
                    return Err(self.error_at(at, "affine takes (matrix, [shift,] expression)"));
                }
                let mut it = args.into_iter();
                let (mat, mat_at) = it.next().unwrap();
                let rows = match mat {
                    Value::Matrix(r) => r,
                    Value::Vector(v) if v.len() == 1 => vec![v],
                    Value::Num(x) => vec![vec![x]],
                    _ => return Err(self.error_at(mat_at, "expected a square matrix")),
                };
                let rest: Vec<(Value, usize)> = it.collect();
                let (shift, inner) = if rest.len() == 2 {
                    let mut r = rest.into_iter();
                    let s = r.next().unwrap();
                    (vector(&s)?, r.next().unwrap())
                } else {
                    (vec![0.0; rows.len()], rest.into_iter().next().unwrap())
                };
                let map = AffineMap::new(&rows, &shift).map_err(|e| self.error_at(mat_at, e.to_string()))?;
                Ok(FunctionSpec::Affine {
                    map,
                    inner: Box::new(expr_arg(inner)?),
                })
            }
            "scale_arg" => {
                arity(2)?;
                let r = number(&args[0], "scale", true)?;
                let inner = expr_arg(args.into_iter().nth(1).unwrap())?;
                Ok(FunctionSpec::ScaleArg {
                    r,
                    inner: Box::new(inner),
                })
            }
            other => Err(self.error_at(at, format!("unknown function '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_box_counts_cells() {
        let f = FunctionSpec::parse("box_indicator([0],[1],1)").unwrap();
        let g = f.sample(1, 2.0, 400).unwrap();
        assert_eq!(g.values().iter().filter(|&&v| v == 1.0).count(), 100);
        assert!(g.meta.warnings.is_empty());
    }

    #[test]
    fn gaussian_peak_at_center() {
        let f = FunctionSpec::parse("gaussian([0, 0], 0.5, 1)").unwrap();
        let g = f.sample(2, 3.0, 121).unwrap();
        // odd m puts a cell center on the origin
        assert_eq!(g.max_value(), 1.0);
        let g = f.sample(2, 3.0, 120).unwrap();
        let half = g.spacing() / 2.0;
        let expected = (-(2.0 * half * half) / (2.0 * 0.25f64)).exp();
        assert!((g.max_value() - expected).abs() < 1e-12);
        assert!(g.meta.truncated_mass > 0.0 && g.meta.truncated_mass < 1e-7);
    }

    #[test]
    fn sheared_box_keeps_mass() {
        let f = FunctionSpec::parse("affine([[1,1],[0,1]], box_indicator([0.003,0],[1.003,1],1))").unwrap();
        let coarse = f.sample(2, 3.0, 240).unwrap().lp_norm(1.0);
        let fine = f.sample(2, 3.0, 480).unwrap().lp_norm(1.0);
        assert!((coarse - 1.0).abs() < 0.01, "{coarse}");
        assert!((coarse - fine).abs() < 0.01);
    }

    #[test]
    fn nested_combinators() {
        let f = FunctionSpec::parse(
            "# comment\n max( sum(box([0],[1],1), box([0.5],[2],1)),\n scale_arg(2, ball(3, 1, 5)) )",
        )
        .unwrap();
        assert_eq!(f.eval(&[0.75]), 2.0);
        assert_eq!(f.eval(&[1.5]), 5.0);
        assert_eq!(f.eval(&[1.9]), 5.0);
        assert_eq!(f.eval(&[-1.0]), 0.0);
        assert_eq!(f.inferred_dim(), Some(1));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = FunctionSpec::parse("sum(box([0],[1],1),\n  gausian([0], 1, 1))").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 3)),
            e => panic!("unexpected {e:?}"),
        }
        assert!(FunctionSpec::parse("box([0],[1],-1)").is_err());
        assert!(FunctionSpec::parse("gaussian([0], 0, 1)").is_err());
        assert!(FunctionSpec::parse("box([0],[1],1) extra").is_err());
        assert!(FunctionSpec::parse("affine([[1,2],[2,4]], box([0,0],[1,1],1))").is_err());
    }

    #[test]
    fn escaping_support_is_flagged() {
        let f = FunctionSpec::parse("box([0],[3],1)").unwrap();
        let g = f.sample(1, 2.0, 100).unwrap();
        assert_eq!(g.meta.warnings.len(), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let f = FunctionSpec::parse("gaussian([0,0], 1, 1)").unwrap();
        assert!(matches!(f.sample(1, 2.0, 10), Err(Error::Dimension { .. })));
    }

    fn arb_spec() -> impl Strategy<Value = FunctionSpec> {
        let leaf = prop_oneof![
            ((-1.0f64..1.0), (-1.0f64..1.0), (0.1f64..1.0), (0.0f64..3.0)).prop_map(|(a, b, s, amp)| FunctionSpec::Gaussian { center: vec![a, b], sigma: s, amplitude: amp }),
            ((-1.5f64..0.0), (0.0f64..1.5), (0.0f64..3.0)).prop_map(|(l, h, amp)| FunctionSpec::BoxIndicator { lo: vec![l, l], hi: vec![h, h], amplitude: amp }),
            ((-1.0f64..1.0), (0.1f64..1.0), (0.0f64..3.0)).prop_map(|(c, r, amp)| FunctionSpec::BallIndicator { center: vec![c, -c], radius: r, amplitude: amp }),
        ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 1..3).prop_map(FunctionSpec::Sum),
                prop::collection::vec(inner.clone(), 1..3).prop_map(FunctionSpec::Max),
                ((-1.0f64..1.0), inner.clone()).prop_map(|(l, e)| FunctionSpec::Affine { map: AffineMap::shear(2, l).unwrap(), inner: Box::new(e) }),
                ((0.5f64..2.0), inner).prop_map(|(r, e)| FunctionSpec::ScaleArg { r, inner: Box::new(e) }),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn samples_are_non_negative(spec in arb_spec()) {
            let g = spec.sample(2, 2.0, 24).unwrap();
            prop_assert!(g.values().iter().all(|&v| v >= 0.0 && v.is_finite()));
        }

        #[test]
        fn display_round_trips(spec in arb_spec(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
            let again = FunctionSpec::parse(&spec.to_string()).unwrap();
            prop_assert_eq!(spec.eval(&[x, y]), again.eval(&[x, y]));
        }
    }
}
