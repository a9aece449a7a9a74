use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fracgeo::projbody::{affine_energy, pi_body, ProfileOptions};
use fracgeo::rearrange::rearrange;
use fracgeo::seminorm::{frac_seminorm, Mode};
use fracgeo::starbody::{dual_mixed_bound, dual_mixed_volume, read_body};
use fracgeo::verify::{
    margins_csv, run_cases, suite_cases, terms_csv, verify_anisotropic, verify_chain_asymmetric, verify_chain_symmetric,
    verify_invariance, verify_limit_s1, verify_riesz, verify_volume_monotonicity, ChainReport, Config, Setup,
};
use fracgeo::{AffineMap, FunctionSpec, GridFunction, SphereQuadrature, StarBody};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fracgeo", version, about = "Fractional seminorms, polar projection bodies and rearrangement inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Symmetric decreasing rearrangement of a sampled function.
    Rearrange {
        #[command(flatten)]
        input: FunctionInput,
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the rearranged grid.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fractional seminorm of a pair.
    Seminorm {
        #[command(flatten)]
        input: PairInput,
        #[command(flatten)]
        run: RunArgs,
        /// Kernel body: short form (ball:r, ellipsoid:a,b, lq:q,r) or a body file.
        #[arg(long = "K", default_value = "ball:1")]
        k: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Abs)]
        mode: ModeArg,
    },
    /// Polar projection body of a pair.
    Projbody {
        #[command(flatten)]
        input: PairInput,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Abs)]
        mode: ModeArg,
        /// Where to write the body.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dual mixed volume of two star bodies.
    Dualmix {
        #[arg(long = "K")]
        k: String,
        #[arg(long = "L")]
        l: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 256)]
        quad_nodes: usize,
    },
    /// One verification chain.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        input: PairInput,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Kernel body for `aniso` and `limit`.
        #[arg(long = "K", default_value = "ball:1")]
        k: String,
        /// Modes for `aniso`, mode for `volume` and `invariance`.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModeArg::Abs])]
        mode: Vec<ModeArg>,
        /// s values for `limit`.
        #[arg(long, value_delimiter = ',', default_values_t = [0.9, 0.95, 0.99])]
        s_list: Vec<f64>,
        /// Number of random triples for `riesz`.
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Shear factor of the volume-preserving map for `invariance`.
        #[arg(long, default_value_t = 0.5)]
        shear: f64,
    },
    /// The full battery of canonical cases.
    Suite {
        #[command(flatten)]
        output: OutputArgs,
        /// Also run the cases marked slow.
        #[arg(long)]
        slow: bool,
        /// Only run cases whose id contains this text.
        #[arg(long)]
        filter: Option<String>,
        /// List the cases without running them.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Sym,
    Asym,
    Aniso,
    Volume,
    Limit,
    Invariance,
    Riesz,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Abs,
    Plus,
    Minus,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Abs => Mode::Abs,
            ModeArg::Plus => Mode::Plus,
            ModeArg::Minus => Mode::Minus,
        }
    }
}

#[derive(Args)]
struct FunctionInput {
    /// Function description file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Grid file, used instead of a description.
    #[arg(long, conflicts_with = "spec")]
    grid: Option<PathBuf>,
}

#[derive(Args)]
struct PairInput {
    /// Description file for f.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Description file for h; defaults to f.
    #[arg(long)]
    h_spec: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "L")]
    half_width: Option<f64>,
    #[arg(long)]
    quad_nodes: Option<usize>,
    /// truncate or exclude
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    t_per_decade: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for the CSV plot data.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

/// Errors in the inputs, reported with exit status 2.
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T>(r: anyhow::Result<T>) -> Result<T> {
    r.map_err(|e| InputError(e).into())
}

fn read(path: &Path) -> Result<String> {
    input(fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())))
}

fn load_spec(path: &Path) -> Result<FunctionSpec> {
    let text = read(path)?;
    input(FunctionSpec::parse(&text).with_context(|| path.display().to_string()))
}

impl RunArgs {
    fn config(&self) -> Result<Config> {
        let file = match &self.config {
            Some(p) => {
                let text = read(p)?;
                input(Config::parse(&text).with_context(|| p.display().to_string()))?
            }
            None => Config::empty(),
        };
        let flags = Config {
            n: self.n,
            s: self.s,
            p: self.p,
            m: self.m,
            half_width: self.half_width,
            quad_nodes: self.quad_nodes,
            policy: self.policy.clone(),
            epsilon: self.epsilon,
            t_per_decade: self.t_per_decade,
            seed: self.seed,
            threads: self.threads,
        };
        if let Some(p) = &flags.policy {
            if !matches!(p.as_str(), "truncate" | "exclude") {
                return input(Err(anyhow::anyhow!("policy must be `truncate` or `exclude`, got `{p}`")));
            }
        }
        let merged = flags.or(&file);
        if let Some(t) = merged.threads {
            // A global pool can only be installed once per process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
        Ok(merged)
    }

    fn setup(&self) -> Result<Setup> {
        input(self.config()?.setup().map_err(anyhow::Error::from))
    }
}

impl PairInput {
    fn load(&self) -> Result<(FunctionSpec, FunctionSpec)> {
        let Some(f) = &self.spec else {
            return input(Err(anyhow::anyhow!("--spec is required")));
        };
        let f = load_spec(f)?;
        let h = match &self.h_spec {
            Some(p) => load_spec(p)?,
            None => f.clone(),
        };
        Ok((f, h))
    }

    fn sample(&self, setup: &Setup) -> Result<(GridFunction, GridFunction)> {
        let (f, h) = self.load()?;
        let n = setup.params.n;
        let s = |x: &FunctionSpec| input(x.sample(n, setup.half_width, setup.m).map_err(anyhow::Error::from));
        Ok((s(&f)?, s(&h)?))
    }
}

fn load_body(text: &str, n: usize) -> Result<StarBody> {
    let path = Path::new(text);
    if path.is_file() {
        let (body, _) = input(read_body(&read(path)?).with_context(|| text.to_string()))?;
        Ok(body)
    } else {
        input(StarBody::parse_short(text, n).map_err(anyhow::Error::from))
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn emit_reports(reports: &[ChainReport], output: &OutputArgs, single: bool) -> Result<()> {
    let value = if single {
        serde_json::to_value(&reports[0])?
    } else {
        serde_json::to_value(reports)?
    };
    let text = serde_json::to_string_pretty(&value)?;
    println!("{text}");
    if let Some(p) = &output.out {
        fs::write(p, &text).with_context(|| format!("cannot write {}", p.display()))?;
    }
    if let Some(dir) = &output.csv_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("terms.csv"), terms_csv(reports))?;
        fs::write(dir.join("margins.csv"), margins_csv(reports))?;
    }
    Ok(())
}

fn status(reports: &[ChainReport]) -> ExitCode {
    for r in reports {
        for v in r.verdicts.iter().filter(|v| v.soft && v.verdict == fracgeo::verify::Verdict::ViolatedWithinUncertainty) {
            eprintln!("warning: {}: {} not met", r.case, v.relation);
        }
    }
    if reports.iter().any(|r| r.violations() > 0) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Rearrange { input: inp, run, out } => {
            let grid = match (&inp.spec, &inp.grid) {
                (_, Some(g)) => input(GridFunction::from_text(&read(g)?).with_context(|| g.display().to_string()))?,
                (Some(s), None) => {
                    let (n, half_width, m) = input(run.config()?.grid().map_err(anyhow::Error::from))?;
                    let spec = load_spec(s)?;
                    input(spec.sample(n, half_width, m).map_err(anyhow::Error::from))?
                }
                (None, None) => return input(Err(anyhow::anyhow!("--spec or --grid is required"))),
            };
            let star = rearrange(&grid);
            if let Some(p) = &out {
                fs::write(p, star.to_text()).with_context(|| format!("cannot write {}", p.display()))?;
            }
            print_json(&json!({
                "n": grid.dim(),
                "L": grid.half_width(),
                "m": grid.cells_per_axis(),
                "lp_norms": { "1": [grid.lp_norm(1.0), star.lp_norm(1.0)], "2": [grid.lp_norm(2.0), star.lp_norm(2.0)] },
                "max": [grid.max_value(), star.max_value()],
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Seminorm { input: inp, run, k, mode } => {
            let setup = run.setup()?;
            let (f, h) = inp.sample(&setup)?;
            let body = load_body(&k, setup.params.n)?;
            let policy = setup.policy.on(f.spacing(), &body);
            let r = frac_seminorm(&f, &h, &body, &setup.params, mode.into(), policy)?;
            print_json(&json!({
                "params": setup.params,
                "grid": { "L": setup.half_width, "m": setup.m },
                "value": r.value,
                "infinite": r.is_infinite(),
                "computed": r.computed,
                "mode": r.mode,
                "policy": r.policy,
                "exponent": r.exponent,
                "levels": r.levels,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Projbody { input: inp, run, mode, out } => {
            let setup = run.setup()?;
            input(
                fracgeo::validate_params(setup.params.n, setup.params.s, setup.params.p, true).map_err(anyhow::Error::from),
            )?;
            let (f, h) = inp.sample(&setup)?;
            let quad = Arc::new(SphereQuadrature::new(setup.params.n, setup.quad_nodes)?);
            let opts = ProfileOptions {
                t_per_decade: setup.t_per_decade,
            };
            let body = pi_body(&f, &h, &setup.params, mode.into(), &quad, &opts)?;
            if let Some(p) = &out {
                fs::write(p, body.to_text()).with_context(|| format!("cannot write {}", p.display()))?;
            }
            let radial = body.radial_values();
            print_json(&json!({
                "params": setup.params,
                "grid": { "L": setup.half_width, "m": setup.m },
                "mode": body.mode,
                "degenerate": body.is_degenerate(),
                "volume": body.volume(),
                "affine_energy": affine_energy(&body),
                "max_radial": radial.iter().cloned().fold(0.0, f64::max),
                "min_radial": radial.iter().cloned().fold(f64::INFINITY, f64::min),
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dualmix { k, l, alpha, n, quad_nodes } => {
            let quad = input(SphereQuadrature::new(n, quad_nodes).map_err(anyhow::Error::from))?;
            let (kb, lb) = (load_body(&k, n)?, load_body(&l, n)?);
            let value = input(dual_mixed_volume(&kb, &lb, alpha, &quad).map_err(anyhow::Error::from))?;
            print_json(&json!({
                "n": n,
                "alpha": alpha,
                "value": value,
                "bound": dual_mixed_bound(&kb, &lb, alpha, &quad),
                "volume_K": kb.volume(&quad),
                "volume_L": lb.volume(&quad),
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            check,
            input: inp,
            run,
            output,
            k,
            mode,
            s_list,
            count,
            shear,
        } => {
            let setup = run.setup()?;
            let n = setup.params.n;
            let first = Mode::from(*mode.first().unwrap_or(&ModeArg::Abs));
            let name = |c: &str| {
                inp.spec
                    .as_ref()
                    .and_then(|p| p.file_stem())
                    .map(|s| format!("{c}-{}", s.to_string_lossy()))
                    .unwrap_or_else(|| c.to_string())
            };
            let report = match check {
                Check::Sym => {
                    let (f, h) = inp.load()?;
                    verify_chain_symmetric(&name("sym"), &f, &h, &setup)
                }
                Check::Asym => {
                    let (f, h) = inp.load()?;
                    verify_chain_asymmetric(&name("asym"), &f, &h, &setup)
                }
                Check::Aniso => {
                    let (f, h) = inp.load()?;
                    let body = load_body(&k, n)?;
                    let modes: Vec<Mode> = mode.iter().map(|m| (*m).into()).collect();
                    verify_anisotropic(&name("aniso"), &f, &h, &body, &modes, &setup)
                }
                Check::Volume => {
                    let (f, h) = inp.load()?;
                    verify_volume_monotonicity(&name("volume"), &f, &h, &setup, first)
                }
                Check::Limit => {
                    let (f, _) = inp.load()?;
                    let body = load_body(&k, n)?;
                    verify_limit_s1(&name("limit"), &f, &body, &s_list, &setup)
                }
                Check::Invariance => {
                    let (f, h) = inp.load()?;
                    if n != 2 {
                        return input(Err(anyhow::anyhow!("the invariance check runs in two dimensions")));
                    }
                    let map = AffineMap::shear(2, shear)?;
                    verify_invariance(&name("invariance"), &f, &h, &map, &setup, first)
                }
                Check::Riesz => verify_riesz("riesz", n, count, setup.seed, setup.m),
            };
            let report = match report {
                Ok(r) => r,
                Err(e @ (fracgeo::Error::Param(_) | fracgeo::Error::Parse { .. } | fracgeo::Error::Dimension { .. })) => {
                    return input(Err(e.into()))
                }
                Err(e) => return Err(e.into()),
            };
            let reports = [report];
            emit_reports(&reports, &output, true)?;
            Ok(status(&reports))
        }
        Command::Suite {
            output,
            slow,
            filter,
            list,
            threads,
        } => {
            if let Some(t) = threads {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            let cases: Vec<_> = suite_cases()
                .into_iter()
                .filter(|c| slow || !c.slow)
                .filter(|c| filter.as_deref().is_none_or(|f| c.id.contains(f)))
                .collect();
            if list {
                for c in &cases {
                    println!("{}\t{}{}", c.id, c.family(), if c.slow { "\tslow" } else { "" });
                }
                return Ok(ExitCode::SUCCESS);
            }
            if cases.is_empty() {
                bail!("no cases selected");
            }
            let mut reports = Vec::new();
            for (c, r) in cases.iter().zip(run_cases(&cases)) {
                reports.push(r.with_context(|| format!("case {}", c.id))?);
            }
            emit_reports(&reports, &output, false)?;
            for r in &reports {
                eprintln!(
                    "{:32} {:>3} verdicts, {} violated  ({:.2} s)",
                    r.case,
                    r.verdicts.len(),
                    r.violations(),
                    r.runtime_seconds
                );
            }
            Ok(status(&reports))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
