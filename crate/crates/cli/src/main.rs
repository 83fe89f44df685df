use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kirchhoff_core::counterexamples::{log_grid, DEFAULT_N};
use kirchhoff_core::{
    pointwise_verify, principal_eigenpair, search_case1, search_case2, solve_in_interval, torsion, verify_pair,
    Interval, KirchhoffM, Scheme,
};
use serde::Serialize;

mod config;
mod report;

use config::{DomainSpec, Format, MSpec, ModelSpec, OutputSpec, Problem, RunConfig, SolverSpec};
use report::{print_json, CliError, ConstructionSummary, PairSummary, EXIT_FAILED, EXIT_NO_CONVERGENCE, EXIT_OK};

/// Nonlocal Kirchhoff problems -M(||u||^2) u'' = f(x,u) on an interval.
#[derive(Parser)]
#[command(name = "kirchhoff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a sub/supersolution pair for a model and solve inside it.
    Solve(SolveArgs),
    /// Check a pair (explicit or constructed) against every admissible coefficient.
    VerifyPair {
        #[arg(long)]
        config: PathBuf,
    },
    /// Comparison-principle counterexamples on (0, pi).
    #[command(subcommand)]
    Counterexample(CounterexampleCmd),
    /// Principal Dirichlet eigenpair of -d^2/dx^2.
    Eigen {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Write phi1 as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Torsion function, -e'' = 1 with zero boundary values.
    Torsion {
        #[command(flatten)]
        domain: DomainArgs,
        /// Write e as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report which structural hypotheses a coefficient M satisfies.
    ClassifyM {
        #[command(flatten)]
        m: MArgs,
        #[arg(long, default_value_t = kirchhoff_core::kirchhoff::DEFAULT_SAMPLES)]
        samples: usize,
    },
}

#[derive(Args, Clone, Copy)]
struct DomainArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value_t = PI, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, default_value_t = 2001)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    PowerShift,
    Constant,
}

#[derive(Args, Clone, Copy)]
struct MArgs {
    #[arg(id = "m-family", long = "m-family", value_enum, default_value = "power-shift")]
    family: FamilyArg,
    #[arg(id = "m-a", long = "m-a", default_value_t = 1.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(id = "m-b", long = "m-b", default_value_t = 1.0, allow_negative_numbers = true)]
    b: f64,
    #[arg(id = "m-c", long = "m-c", default_value_t = 0.0, allow_negative_numbers = true)]
    c: f64,
    #[arg(id = "m-p", long = "m-p", default_value_t = 1.0, allow_negative_numbers = true)]
    p: f64,
    /// Value of M for the constant family.
    #[arg(id = "m-value", long = "m-value", default_value_t = 1.0, allow_negative_numbers = true)]
    value: f64,
    #[arg(long = "scan-max")]
    scan_max: Option<f64>,
}

impl MArgs {
    fn spec(self) -> MSpec {
        match self.family {
            FamilyArg::PowerShift => {
                MSpec::PowerShift { a: self.a, b: self.b, c: self.c, p: self.p, scan_max: self.scan_max }
            }
            FamilyArg::Constant => MSpec::Constant { m: self.value, scan_max: self.scan_max },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Sublinear,
    ConcaveConvex,
    Logistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    MonotoneFromBelow,
    MonotoneFromAbove,
    Picard,
    Shifted,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::MonotoneFromBelow => Scheme::MonotoneFromBelow,
            SchemeArg::MonotoneFromAbove => Scheme::MonotoneFromAbove,
            SchemeArg::Picard => Scheme::Picard,
            SchemeArg::Shifted => Scheme::Shifted,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// JSON run configuration; excludes the model flags.
    #[arg(long, conflicts_with_all = ["model", "lambda", "q", "p"])]
    config: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "config")]
    model: Option<ModelArg>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    m: MArgs,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol_step: Option<f64>,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long)]
    shift_c: Option<f64>,
    /// Write the solution here (overrides the config's output path).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum CounterexampleCmd {
    /// Check one candidate M(t) = a + b (t + c)^p at a given rho.
    Verify {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
    },
    /// Search for a witness in the increasing (1) or decreasing (2) family.
    Search(SearchArgs),
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long = "case", value_parser = clap::value_parser!(u8).range(1..=2))]
    case: u8,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Case 1: coefficient b.
    #[arg(long, default_value_t = 1e4)]
    b: f64,
    /// Case 2: shift c.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Case 2: fixed rho.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Smallest |p| tried.
    #[arg(long, default_value_t = 1)]
    p_min: i32,
    /// Largest |p| tried.
    #[arg(long, default_value_t = 6)]
    p_max: i32,
    /// Case 1: number of rho grid points in (0, rho*).
    #[arg(long, default_value_t = 1000)]
    rho_points: usize,
    /// Case 2: log grid for b.
    #[arg(long, default_value_t = 1e-2)]
    b_min: f64,
    #[arg(long, default_value_t = 1e6)]
    b_max: f64,
    #[arg(long, default_value_t = 801)]
    b_points: usize,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
}

fn init_logging() {
    let level = match std::env::var("KIRCHHOFF_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            CliError::invalid("usage", first).emit();
            return ExitCode::from(report::EXIT_INVALID);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            e.emit();
            ExitCode::from(e.code)
        }
    }
}

fn run(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Solve(args) => solve(args),
        Command::VerifyPair { config } => verify(config::load(&config)?.validate()?),
        Command::Counterexample(c) => counterexample(c),
        Command::Eigen { domain, tol, out } => eigen(domain, tol, out),
        Command::Torsion { domain, out } => torsion_cmd(domain, out),
        Command::ClassifyM { m, samples } => classify(m, samples),
    }
}

fn solve_config(args: &SolveArgs) -> Result<RunConfig, CliError> {
    let mut cfg = if let Some(path) = &args.config {
        config::load(path)?
    } else {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::invalid("usage", format!("--{name} is required for this model")))
        };
        let lambda = need(args.lambda, "lambda")?;
        let model = match args.model.expect("clap enforces --model without --config") {
            ModelArg::Sublinear => ModelSpec::Sublinear { lambda, q: need(args.q, "q")? },
            ModelArg::ConcaveConvex => ModelSpec::ConcaveConvex { lambda, q: need(args.q, "q")?, p: need(args.p, "p")? },
            ModelArg::Logistic => ModelSpec::Logistic { lambda, p: need(args.p, "p")? },
        };
        RunConfig {
            domain: DomainSpec { a: args.domain.a, b: args.domain.b, n: args.domain.n },
            m: args.m.spec(),
            model,
            solver: SolverSpec::default(),
            output: OutputSpec::default(),
            pair: None,
        }
    };
    let s = &mut cfg.solver;
    s.scheme = args.scheme.map(Scheme::from).or(s.scheme);
    s.max_iter = args.max_iter.or(s.max_iter);
    s.tol_step = args.tol_step.or(s.tol_step);
    s.tol_residual = args.tol_residual.or(s.tol_residual);
    s.shift_c = args.shift_c.or(s.shift_c);
    if args.out.is_some() {
        cfg.output.path.clone_from(&args.out);
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    model: ModelSpec,
    #[serde(rename = "M")]
    m: MSpec,
    domain: DomainSpec,
    construction: Option<ConstructionSummary>,
    pair: PairSummary,
    report: &'a kirchhoff_core::SolveReport,
}

fn solve(args: SolveArgs) -> Result<u8, CliError> {
    let cfg = solve_config(&args)?;
    let (model, mspec, dspec) = (cfg.model, cfg.m, cfg.domain);
    let problem = cfg.validate()?;
    let (pair, construction) = match problem.explicit_pair()? {
        Some(pair) => (pair, None),
        None => {
            let c = problem.construct()?;
            (c.pair.clone(), Some(ConstructionSummary::new(&c)))
        }
    };
    let pair_report = verify_pair(&pair, &problem.m, &problem.f)?;
    let sol = solve_in_interval(&pair, &problem.m, &problem.f, &problem.solver)?;
    if let Some(path) = &problem.output.path {
        report::write_grid_to(&sol.u, problem.output.format, path)?;
    }
    print_json(&SolveOutput {
        model,
        m: mspec,
        domain: dspec,
        construction,
        pair: PairSummary::new(&pair_report),
        report: &sol,
    });
    if sol.converged {
        Ok(EXIT_OK)
    } else {
        log::warn!("solver stopped after {} linear solves without converging", sol.iterations);
        Ok(EXIT_NO_CONVERGENCE)
    }
}

fn verify(problem: Problem) -> Result<u8, CliError> {
    let (report, construction) = match problem.explicit_pair()? {
        Some(pair) => (verify_pair(&pair, &problem.m, &problem.f)?, None),
        None => {
            let c = problem.construct()?;
            (verify_pair(&c.pair, &problem.m, &problem.f)?, Some(ConstructionSummary::new(&c)))
        }
    };
    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        pair: PairSummary,
        construction: Option<ConstructionSummary>,
    }
    let ok = report.ok;
    print_json(&Out { pair: PairSummary::new(&report), construction });
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn counterexample(cmd: CounterexampleCmd) -> Result<u8, CliError> {
    let witness = match cmd {
        CounterexampleCmd::Verify { a, b, c, p, rho, n } => {
            let m = KirchhoffM::power_shift(a, b, c, p)?;
            pointwise_verify(&m, rho, n)?
        }
        CounterexampleCmd::Search(s) => {
            if s.p_min < 1 || s.p_max < s.p_min {
                return Err(CliError::invalid("usage", "need 1 <= --p-min <= --p-max"));
            }
            if s.case == 1 {
                search_case1(s.a, s.b, s.p_min..=s.p_max, s.rho_points, s.n)?
            } else {
                if !(s.b_min > 0.0 && s.b_max >= s.b_min) {
                    return Err(CliError::invalid("usage", "need 0 < --b-min <= --b-max"));
                }
                let grid = log_grid(s.b_min, s.b_max, s.b_points);
                search_case2(s.a, s.c, s.rho, s.p_min..=s.p_max, &grid, s.n)?
            }
        }
    };
    print_json(&witness);
    Ok(if witness.valid { EXIT_OK } else { EXIT_FAILED })
}

#[derive(Serialize)]
struct DomainOut {
    a: f64,
    b: f64,
    n: usize,
}

impl DomainOut {
    fn new(d: &Interval) -> Self {
        Self { a: d.a(), b: d.b(), n: d.n() }
    }
}

fn domain_of(d: DomainArgs) -> Result<Interval, CliError> {
    Interval::new(d.a, d.b, d.n).map_err(|e| CliError::invalid(e.kind(), format!("domain: {e}")))
}

fn eigen(d: DomainArgs, tol: f64, out: Option<PathBuf>) -> Result<u8, CliError> {
    let domain = domain_of(d)?;
    let ep = principal_eigenpair(domain, tol)?;
    if let Some(path) = out {
        report::write_grid_to(&ep.phi1, Format::Csv, &path)?;
    }
    #[derive(Serialize)]
    struct Out {
        lambda1: f64,
        iterations: usize,
        n: usize,
        domain: DomainOut,
    }
    print_json(&Out { lambda1: ep.lambda1, iterations: ep.iterations, n: domain.n(), domain: DomainOut::new(&domain) });
    Ok(EXIT_OK)
}

fn torsion_cmd(d: DomainArgs, out: Option<PathBuf>) -> Result<u8, CliError> {
    let domain = domain_of(d)?;
    let e = torsion(domain);
    if let Some(path) = out {
        report::write_grid_to(&e, Format::Csv, &path)?;
    }
    #[derive(Serialize)]
    struct Out {
        sup_e: f64,
        n: usize,
        domain: DomainOut,
    }
    print_json(&Out { sup_e: e.max(), n: domain.n(), domain: DomainOut::new(&domain) });
    Ok(EXIT_OK)
}

fn classify(m: MArgs, samples: usize) -> Result<u8, CliError> {
    let spec = m.spec();
    let km = config::build_m(spec).map_err(|e| CliError::invalid(e.kind(), format!("M: {e}")))?;
    let cls = km.classify(samples)?;
    #[derive(Serialize)]
    struct Out {
        #[serde(rename = "M")]
        m: MSpec,
        scan_max: f64,
        classification: kirchhoff_core::Classification,
        g_table: Option<kirchhoff_core::kirchhoff::GInversionTable>,
    }
    print_json(&Out { m: spec, scan_max: km.scan_max(), classification: cls, g_table: km.g_table() });
    Ok(EXIT_OK)
}
