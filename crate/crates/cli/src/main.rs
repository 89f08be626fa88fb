//! `mpf-lab`: command-line front end for the MPF laboratory.
//!
//! Every subcommand writes CSV or JSON to stdout or `--output`. A run can be
//! described by a JSON config whose keys are the flag names, for example
//! `{"command": "scheme", "m": 3, "strategy": "min-a-norm"}`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use mpf_core::bch::{effective_generator, symmetric_bch_term};
use mpf_core::commutator::{mu_m, CommutatorTable, MuReport, Variant, DEFAULT_ALPHA_BUDGET};
use mpf_core::experiments::{
    convergence_study, default_grid, heisenberg_benchmark, BenchmarkConfig, Evolver, DEFAULT_R_CAP,
};
use mpf_core::hamiltonian::{induced_one_norm, one_norm, HamiltonianSum, ModelKind, ModelSpec};
use mpf_core::operator::{matrix_exponential, spectral_norm};
use mpf_core::product_formula::trotter_u2;
use mpf_core::report::{self, Format};
use mpf_core::scheme::{MpfScheme, PowerStrategy};
use mpf_core::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_PREMISE: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "mpf-lab", version, about = "Multi-product formula simulation laboratory")]
struct Cli {
    /// JSON run description; cannot be combined with other flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (MPF_LAB_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized models.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the order conditions for an MPF scheme.
    Scheme(SchemeArgs),
    /// Nested-commutator norms and the cost parameter μ_m.
    Commutators(CommutatorArgs),
    /// One-step error against step size with a fitted slope.
    Convergence(ConvergenceArgs),
    /// Minimal step counts on Heisenberg chains and fitted exponents.
    Benchmark(BenchmarkArgs),
    /// Symmetric BCH terms against their commutator bounds.
    BchVerify(BchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    Natural,
    MinANorm,
}

impl From<Strategy> for PowerStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Natural => PowerStrategy::Natural,
            Strategy::MinANorm => PowerStrategy::MinANorm,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelChoice {
    Heisenberg1d,
    PowerLaw,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "heisenberg1d")]
    model: ModelChoice,
    /// Number of qubits.
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long)]
    periodic: bool,
    /// Lattice dimension for power-law models.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Power-law decay exponent.
    #[arg(long)]
    alpha: Option<f64>,
    /// JSON model description; overrides the other model flags.
    #[arg(long)]
    model_file: Option<PathBuf>,
}

impl ModelArgs {
    fn spec(&self, seed: u64) -> Result<ModelSpec, Failure> {
        if let Some(path) = &self.model_file {
            let text = read(path)?;
            return serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())));
        }
        Ok(ModelSpec {
            model: match self.model {
                ModelChoice::Heisenberg1d => ModelKind::Heisenberg1d,
                ModelChoice::PowerLaw => ModelKind::PowerLaw,
            },
            n: self.n,
            periodic: self.periodic,
            d: self.d,
            alpha: self.alpha,
            seed,
            terms: Vec::new(),
        })
    }

    fn build(&self, seed: u64) -> Result<(ModelSpec, HamiltonianSum), Failure> {
        let spec = self.spec(seed)?;
        let h = spec.build()?;
        Ok((spec, h))
    }
}

#[derive(Args, Debug)]
struct SchemeArgs {
    /// Half order; the scheme has order 2m over a second-order base.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Base formula order: 1 or even.
    #[arg(long, default_value_t = 2)]
    base: usize,
    #[arg(long, value_enum, default_value = "natural")]
    strategy: Strategy,
}

#[derive(Args, Debug)]
struct CommutatorArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Deepest α computed; μ_m uses j ≤ j_cap − 1.
    #[arg(long, default_value_t = 8)]
    j_cap: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    base: usize,
    /// Work budget for exact α.
    #[arg(long, default_value_t = DEFAULT_ALPHA_BUDGET as u64)]
    budget: u64,
    /// Fill depths past the budget with the growth bound instead of failing.
    #[arg(long)]
    allow_capped: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvolverChoice {
    U1,
    U2,
    U4,
    U2p,
    Mpf,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "u2")]
    evolver: EvolverChoice,
    /// Half order for `u2p`.
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Half order for `mpf`.
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    base: usize,
    #[arg(long, value_enum, default_value = "natural")]
    strategy: Strategy,
    /// Points in the default geometric grid.
    #[arg(long, default_value_t = 6)]
    points: usize,
    /// Explicit decreasing step sizes.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Chain lengths (simulation time T = n).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    m: Vec<usize>,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Open boundary conditions instead of periodic.
    #[arg(long)]
    open: bool,
    #[arg(long, value_enum, default_value = "natural")]
    strategy: Strategy,
    #[arg(long, default_value_t = DEFAULT_R_CAP)]
    r_cap: u64,
    /// Print only the theoretical exponents.
    #[arg(long)]
    theory_only: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
}

#[derive(Args, Debug)]
struct BchArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Deepest term reported.
    #[arg(long, default_value_t = 5)]
    k_max: usize,
    /// Step size.
    #[arg(long, default_value_t = 0.1)]
    s: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: String) -> Self {
        Self {
            code: EXIT_USAGE,
            message,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::BudgetExceeded { .. }
            | Error::WorkBudget { .. }
            | Error::Infeasible { .. }
            | Error::DimTooLarge { .. }
            | Error::DepthCap { .. }
            | Error::PartitionBlowup(_) => EXIT_BUDGET,
            Error::PremiseViolated(_) | Error::ConvergenceRisk(_) | Error::SingularSystem(_) => EXIT_PREMISE,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    })
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    Ok(report::to_json(v)?)
}

/// Flag vector equivalent to a JSON run description.
fn config_argv(text: &str) -> Result<Vec<String>, Failure> {
    let value: Value = serde_json::from_str(text).map_err(|e| Failure::usage(format!("config: {e}")))?;
    let Value::Object(map) = value else {
        return Err(Failure::usage("config must be a JSON object".into()));
    };
    let command = match map.get("command") {
        Some(Value::String(c)) => c.clone(),
        _ => return Err(Failure::usage("config needs a string \"command\"".into())),
    };
    let mut argv = vec!["mpf-lab".to_string(), command];
    for (key, value) in &map {
        if key == "command" {
            continue;
        }
        if key == "config" {
            return Err(Failure::usage("config files cannot nest".into()));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &Value| -> Result<String, Failure> {
            match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(Failure::usage(format!("config key {key}: unsupported value"))),
            }
        };
        match value {
            Value::Bool(true) => argv.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                argv.push(flag);
                argv.push(parts.join(","));
            }
            v => {
                argv.push(flag);
                argv.push(scalar(v)?);
            }
        }
    }
    Ok(argv)
}

fn parse() -> Result<Cli, Failure> {
    let raw: Vec<String> = std::env::args().collect();
    let config_at = raw.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let argv = match config_at {
        Some(i) => {
            let (path, used) = match raw[i].strip_prefix("--config=") {
                Some(p) => (p.to_string(), 1),
                None => match raw.get(i + 1) {
                    Some(p) => (p.clone(), 2),
                    None => return Err(Failure::usage("--config needs a path".into())),
                },
            };
            if raw.len() != 1 + used {
                return Err(Failure::usage("--config cannot be combined with other arguments".into()));
            }
            config_argv(&read(Path::new(&path))?)?
        }
        None => raw,
    };
    Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                Failure {
                    code: 0,
                    message: String::new(),
                }
            }
            _ => Failure::usage(e.to_string().trim_end().to_string()),
        }
    })
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let env = match std::env::var("MPF_LAB_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Failure::usage(format!("MPF_LAB_THREADS={v} is not a thread count")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = env.or(flag) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SchemeOutput {
    m: usize,
    base_order: usize,
    powers: Vec<u64>,
    coefficients: Vec<f64>,
    a_norm: f64,
    k_norm: f64,
    residual: f64,
}

fn cmd_scheme(a: &SchemeArgs) -> Result<String, Failure> {
    let s = MpfScheme::build(a.m, a.base, a.strategy.into())?;
    json(&SchemeOutput {
        m: s.half_order,
        base_order: s.base_order,
        residual: s.residual(),
        powers: s.powers,
        coefficients: s.coefficients,
        a_norm: s.a_norm,
        k_norm: s.k_norm,
    })
}

#[derive(Serialize)]
struct CommutatorOutput {
    model: ModelSpec,
    one_norm: f64,
    induced_one_norm: Option<f64>,
    table: CommutatorTable,
    mu: MuReport,
}

fn cmd_commutators(a: &CommutatorArgs, seed: u64) -> Result<String, Failure> {
    let (spec, h) = a.model.build(seed)?;
    if a.j_cap < 2 * a.m + 1 {
        return Err(Failure::usage(format!("--j-cap must be at least 2m + 1 = {}", 2 * a.m + 1)));
    }
    let table = CommutatorTable::compute(&h, a.j_cap, a.budget as u128, a.allow_capped)?;
    let variant = Variant::from_base_order(a.base)?;
    let mu = mu_m(&table, a.m, a.j_cap - 1, variant)?;
    json(&CommutatorOutput {
        model: spec,
        one_norm: one_norm(&h),
        induced_one_norm: induced_one_norm(&h).ok(),
        table,
        mu,
    })
}

fn cmd_convergence(a: &ConvergenceArgs, seed: u64) -> Result<String, Failure> {
    let (_, h) = a.model.build(seed)?;
    let evolver = match a.evolver {
        EvolverChoice::U1 => Evolver::U1,
        EvolverChoice::U2 => Evolver::U2,
        EvolverChoice::U4 => Evolver::U2p(2),
        EvolverChoice::U2p => Evolver::U2p(a.p),
        EvolverChoice::Mpf => Evolver::Mpf(MpfScheme::build(a.m, a.base, a.strategy.into())?),
    };
    let grid = if a.grid.is_empty() {
        default_grid(&h, &evolver, a.points)?
    } else {
        a.grid.clone()
    };
    let study = convergence_study(&h, &evolver, &grid)?;
    Ok(report::convergence_report(&study, a.format.into())?)
}

fn cmd_benchmark(a: &BenchmarkArgs) -> Result<String, Failure> {
    if a.m.is_empty() || a.m.contains(&0) {
        return Err(Failure::usage("--m needs positive values".into()));
    }
    if a.theory_only {
        return Ok(report::theory_csv(&a.m));
    }
    if a.n.is_empty() {
        return Err(Failure::usage("--n needs at least one chain length".into()));
    }
    let cfg = BenchmarkConfig {
        n_values: a.n.clone(),
        m_values: a.m.clone(),
        eps: a.eps,
        periodic: !a.open,
        strategy: a.strategy.into(),
        r_cap: a.r_cap,
    };
    let result = heisenberg_benchmark(&cfg)?;
    Ok(report::benchmark_report(&result, a.format.into())?)
}

#[derive(Serialize)]
struct BchRow {
    k: usize,
    norm: f64,
    bound: f64,
    bound_satisfied: bool,
    structural_zero: bool,
    converged_premise: bool,
}

#[derive(Serialize)]
struct GeneratorRow {
    order: usize,
    residual: f64,
}

#[derive(Serialize)]
struct BchOutput {
    model: ModelSpec,
    s: f64,
    terms: Vec<BchRow>,
    effective_generator: GeneratorRow,
}

fn cmd_bch_verify(a: &BchArgs, seed: u64) -> Result<String, Failure> {
    let (spec, h) = a.model.build(seed)?;
    if a.k_max == 0 {
        return Err(Failure::usage("--k-max must be positive".into()));
    }
    let mut terms = Vec::with_capacity(a.k_max);
    for k in 1..=a.k_max {
        let r = symmetric_bch_term(&h, k, a.s)?;
        terms.push(BchRow {
            k,
            norm: r.norm,
            bound: r.bound,
            bound_satisfied: r.norm <= r.bound + 1e-9,
            structural_zero: r.structural_zero,
            converged_premise: r.converged_premise,
        });
    }
    let order = if a.k_max % 2 == 1 { a.k_max } else { a.k_max - 1 };
    let z = effective_generator(&h, a.s, order)?;
    let residual = spectral_norm(&trotter_u2(&h, a.s).checked_sub(&matrix_exponential(&z)?)?)?;
    json(&BchOutput {
        model: spec,
        s: a.s,
        terms,
        effective_generator: GeneratorRow { order, residual },
    })
}

fn run() -> Result<(), Failure> {
    let cli = parse()?;
    configure_threads(cli.threads)?;
    let Some(command) = &cli.command else {
        return Err(Failure::usage("no subcommand given; see --help".into()));
    };
    let content = match command {
        Command::Scheme(a) => cmd_scheme(a)?,
        Command::Commutators(a) => cmd_commutators(a, cli.seed)?,
        Command::Convergence(a) => cmd_convergence(a, cli.seed)?,
        Command::Benchmark(a) => cmd_benchmark(a)?,
        Command::BchVerify(a) => cmd_bch_verify(a, cli.seed)?,
    };
    report::emit(&content, cli.output.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
