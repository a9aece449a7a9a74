//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any hard criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use fracgeo::projbody::{direction_nodes, integrate_profile_unchecked, shift_profile, ProfileOptions};
use fracgeo::rearrange::rearrange;
use fracgeo::seminorm::{frac_seminorm, KernelPolicy, Mode};
use fracgeo::starbody::{dual_mixed_volume, q_radial_sum, random_star_body};
use fracgeo::verify::{suite_cases, verify_dual, verify_riesz, ChainReport, Verdict};
use fracgeo::{FunctionSpec, GridFunction, Params, SphereQuadrature, StarBody};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn run_case(id: &str) -> ChainReport {
    let case = suite_cases().into_iter().find(|c| c.id == id).unwrap_or_else(|| panic!("no case {id}"));
    case.run().unwrap_or_else(|e| panic!("{id}: {e}"))
}

fn sample(text: &str, n: usize, l: f64, m: usize) -> GridFunction {
    FunctionSpec::parse(text).unwrap().sample(n, l, m).unwrap()
}

fn within(value: Option<f64>, target: f64, rel: f64) -> bool {
    value.is_some_and(|v| (v / target - 1.0).abs() <= rel)
}

/// ∫₀¹∫_{ℝ∖[0,1]} |x − y|^{−1−ps} dy dx with ps = 1/2. The inner integral
/// over y is 2x^{−1/2} + 2(1 − x)^{−1/2}; with x = sin²θ the outer integrand
/// becomes 4(cos θ + sin θ), integrated here by the midpoint rule.
fn outside_interaction() -> f64 {
    let n = 100_000;
    let h = FRAC_PI_2 / n as f64;
    let inner = |x: f64| 2.0 / x.sqrt() + 2.0 / (1.0 - x).sqrt();
    (0..n)
        .map(|i| {
            let th = (i as f64 + 0.5) * h;
            inner(th.sin().powi(2)) * 2.0 * th.sin() * th.cos()
        })
        .sum::<f64>()
        * h
}

fn golden_chain(id: &str, oracle: f64) -> Outcome {
    let start = Instant::now();
    let r = run_case(id);
    let secs = start.elapsed().as_secs_f64();
    let names = ["lhs", "middle", "rhs"];
    let ok = names.iter().all(|t| within(r.value(t), oracle, 0.02)) && r.violations() == 0 && secs < 30.0;
    let vals: Vec<String> = names.iter().map(|t| format!("{t}={:.4}", r.value(t).unwrap_or(f64::NAN))).collect();
    Outcome::new(ok, format!("{} vs {oracle:.4}, {secs:.1} s", vals.join(" ")))
}

fn criterion_1() -> Outcome {
    // The symmetric seminorm counts both orderings of the pair.
    golden_chain("sym-1d-box", 2.0 * outside_interaction())
}

fn criterion_2() -> Outcome {
    // Only x inside, y outside contributes to the positive part when h = 2f.
    golden_chain("asym-1d-box", outside_interaction())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for id in ["identity-2d-disk", "identity-2d-ellipse"] {
        let r = run_case(id);
        let (a, b) = (r.value("seminorm").unwrap_or(f64::NAN), r.value("polar_form").unwrap_or(f64::NAN));
        ok &= (a / b - 1.0).abs() <= 0.02 && r.violations() == 0;
        parts.push(format!("{id}: {a:.4} vs {b:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    Outcome::new(ok, format!("{}, {secs:.0} s", parts.join("; ")))
}

fn criterion_4() -> Outcome {
    let mut violations = Vec::new();
    let mut count = |r: &ChainReport| {
        if r.violations() > 0 {
            violations.push(format!("{}({})", r.case, r.violations()));
        }
        r.verdicts.len()
    };
    let mut checked = 0;
    for (n, m, seed) in [(1, 100, 7), (2, 32, 8)] {
        let r = verify_riesz(&format!("riesz-{n}d"), n, 100, seed, m).unwrap();
        assert_eq!(r.verdicts.len(), 100);
        checked += count(&r);
    }
    for (n, nodes, seed) in [(2, 128, 3), (3, 200, 4)] {
        let r = verify_dual(&format!("dual-{n}d"), n, 50, seed, nodes).unwrap();
        assert_eq!(r.verdicts.iter().filter(|v| v.relation.starts_with("dilate")).count(), 50);
        checked += count(&r);
    }
    let cases: Vec<_> = suite_cases()
        .into_iter()
        .filter(|c| !c.slow && matches!(c.family(), "aniso" | "sym" | "asym"))
        .collect();
    let per_family = |f: &str| cases.iter().filter(|c| c.family() == f).count();
    let families_ok = per_family("aniso") >= 10 && per_family("sym") >= 10 && per_family("asym") >= 10;
    for c in &cases {
        let r = c.run().unwrap_or_else(|e| panic!("{}: {e}", c.id));
        checked += count(&r);
    }
    let ok = violations.is_empty() && families_ok;
    let detail = if violations.is_empty() {
        format!("{checked} verdicts over {} chain cases, none violated", cases.len())
    } else {
        format!("violations in {}", violations.join(", "))
    };
    Outcome::new(ok, detail)
}

fn criterion_5() -> Outcome {
    let tol = 1e-10;
    let mut worst = [0.0f64; 4];

    // Abs profile splits into the two one-sided profiles at every direction
    // node and shift node, for a pair with all three gauges finite.
    let f = sample("max(gaussian([0.3,0],0.25,1), gaussian([-0.3,0.1],0.2,0.7))", 2, 1.5, 32);
    let h = sample("gaussian([0,0.1],0.3,0.9)", 2, 1.5, 32);
    let quad = SphereQuadrature::new(2, 32).unwrap();
    let opts = ProfileOptions { t_per_decade: 16 };
    let ps = 0.6;
    for dir in quad.nodes() {
        let dir = &dir[..2];
        let t = direction_nodes(&f, &h, dir, &opts, None);
        let prof = |mode| shift_profile(&f, &h, dir, mode, 2.0, &t).unwrap();
        let (a, p, m) = (prof(Mode::Abs), prof(Mode::Plus), prof(Mode::Minus));
        for i in 0..t.len() {
            worst[0] = worst[0].max((a.g[i] - p.g[i] - m.g[i]).abs() / a.g[i].max(1e-300));
        }
        let (ia, ip, im) = (
            integrate_profile_unchecked(&a, ps),
            integrate_profile_unchecked(&p, ps),
            integrate_profile_unchecked(&m, ps),
        );
        worst[0] = worst[0].max((ia - ip - im).abs() / ia);
    }

    // Negative-part profile of (f, h) along ξ equals the positive-part
    // profile of (h, f) along −ξ, on lattice-aligned shifts.
    let d = f.spacing();
    let lattice: Vec<f64> = (1..40).map(|k| k as f64 * d).collect();
    for dir in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
        let back = [-dir[0], -dir[1]];
        let a = shift_profile(&f, &h, &dir, Mode::Minus, 2.0, &lattice).unwrap();
        let b = shift_profile(&h, &f, &back, Mode::Plus, 2.0, &lattice).unwrap();
        for i in 0..lattice.len() {
            worst[1] = worst[1].max((a.g[i] - b.g[i]).abs() / a.g[i].abs().max(1e-12));
        }
    }

    // Dual mixed volume identities on random star bodies with a shared rule.
    let quad = Arc::new(SphereQuadrature::new(3, 200).unwrap());
    for seed in 0..10 {
        let k = random_star_body(&quad, 100 + seed, 0.4).unwrap();
        let l1 = random_star_body(&quad, 200 + seed, 0.4).unwrap();
        let l2 = random_star_body(&quad, 300 + seed, 0.4).unwrap();
        let vol = k.volume(&quad);
        for alpha in [-1.0, 0.5, 1.5, 4.0] {
            let v = dual_mixed_volume(&k, &k, alpha, &quad).unwrap();
            worst[2] = worst[2].max((v - vol).abs() / vol);
            let sum = q_radial_sum(&l1, &l2, alpha, &quad).unwrap();
            let whole = dual_mixed_volume(&k, &sum, alpha, &quad).unwrap();
            let parts = dual_mixed_volume(&k, &l1, alpha, &quad).unwrap() + dual_mixed_volume(&k, &l2, alpha, &quad).unwrap();
            worst[3] = worst[3].max((whole - parts).abs() / whole);
        }
    }
    let ok = worst.iter().all(|w| *w <= tol);
    Outcome::new(
        ok,
        format!(
            "relative errors: split {:.1e}, reflection {:.1e}, V(K,K) {:.1e}, additivity {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn criterion_6() -> Outcome {
    let r = run_case("invariance-2d-gauss");
    let (a, b) = (r.value("volume").unwrap_or(f64::NAN), r.value("volume_mapped").unwrap_or(f64::NAN));
    let slope = r.value("scaling_slope").unwrap_or(f64::NAN);
    let expected = -2.0 + r.params.s * r.params.p;
    let ok = (b / a - 1.0).abs() <= 0.02 && (slope - expected).abs() <= 0.05 && r.violations() == 0;
    Outcome::new(ok, format!("volume {a:.4} sheared {b:.4}; slope {slope:.4} (expected {expected})"))
}

fn criterion_7() -> Outcome {
    let f = sample("max(gaussian([0.5,0.2],0.3,1), box([-1,-1],[-0.2,0.1],0.6), ball([-0.4,0.9],0.3,0.8))", 2, 2.0, 256);
    let r = rearrange(&f);
    let mut worst = 0.0f64;
    for p in [1.0, 2.0, 3.0, 5.0] {
        worst = worst.max((r.lp_norm(p) / f.lp_norm(p) - 1.0).abs());
    }
    let equi = worst <= 0.005;

    // A second pass may only move values across one shell of cells at each
    // level-set boundary; away from the boundaries it must be a fixed point.
    let rr = rearrange(&r);
    let d = f.spacing();
    let radius = |k: usize| {
        let c = r.center(r.multi_index(k));
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    };
    let mut idem = true;
    for k in 0..r.len() {
        if rr.values()[k] != r.values()[k] {
            let rad = radius(k);
            // The same value must occur in r within one cell diagonal.
            let near = (0..r.len()).any(|j| (radius(j) - rad).abs() <= 2.0f64.sqrt() * d && r.values()[j] == rr.values()[k]);
            idem &= near;
        }
    }

    let h = sample("sum(gaussian([0.5,0.2],0.3,1), box([-1,-1],[0,0.3],0.7), ball([-0.4,0.9],0.35,0.9))", 2, 2.0, 256);
    let pointwise = f.values().iter().zip(h.values()).all(|(a, b)| a <= b);
    let rh = rearrange(&h);
    let mono = pointwise && r.values().iter().zip(rh.values()).all(|(a, b)| a <= b);
    Outcome::new(
        equi && idem && mono,
        format!("worst norm drift {worst:.1e}, idempotent within a shell: {idem}, monotone: {mono}"),
    )
}

fn criterion_8() -> Outcome {
    let r = run_case("limit-1d-gauss");
    let ratios: Vec<String> = [0.9, 0.95, 0.99]
        .iter()
        .map(|s| format!("{:.3}", r.value(&format!("ratio(s={s})")).unwrap_or(f64::NAN)))
        .collect();
    Outcome::new(r.soft_failures() == 0, format!("ratios {}", ratios.join(", ")))
}

fn criterion_9() -> Outcome {
    let f = sample("box([0],[1],1)", 1, 2.0, 400);
    let h = sample("box([0],[1],2)", 1, 2.0, 400);
    let k = StarBody::ball(1, 1.0).unwrap();
    let params = Params { n: 1, s: 0.25, p: 2.0 };
    let res = frac_seminorm(&f, &h, &k, &params, Mode::Abs, KernelPolicy::default_for(&f, &k)).unwrap();
    let ps = params.s * params.p;
    let exp = res.exponent.unwrap_or(f64::NAN);
    let fitted = res.is_infinite() && (exp + ps).abs() <= 0.1;

    let r = run_case("sym-1d-distinct");
    let lhs = r.term("lhs").is_some_and(|t| t.infinite && t.value.is_none());
    let verdict = r.verdict("lhs >= middle");
    let ok = fitted && lhs && verdict == Some(Verdict::VacuousInfinite) && r.violations() == 0;
    Outcome::new(ok, format!("fitted exponent {exp:.3} (expected {}), verdict {verdict:?}", -ps))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, bool); 9] = [
        ("golden symmetric chain", criterion_1, false),
        ("golden asymmetric chain", criterion_2, false),
        ("seminorm equals polar form", criterion_3, false),
        ("inequality batteries", criterion_4, false),
        ("exact algebraic identities", criterion_5, false),
        ("shear covariance and scaling", criterion_6, false),
        ("rearrangement properties", criterion_7, false),
        ("limit s -> 1", criterion_8, true),
        ("divergence diagnostics", criterion_9, false),
    ];
    let mut failed = 0;
    for (i, (name, check, soft)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let tag = match (out.pass, soft) {
            (true, _) => "PASS",
            (false, true) => "WARN",
            (false, false) => {
                failed += 1;
                "FAIL"
            }
        };
        println!("criterion {} [{tag}] {name}: {} ({:.1} s)", i + 1, out.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria met");
        ExitCode::SUCCESS
    }
}
