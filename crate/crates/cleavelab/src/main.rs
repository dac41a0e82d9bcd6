use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cleavelab::commands::{self, EnergyRequest, MinimizeRequest, SweepRequest, Which};
use cleavelab::config::{parse_eps, parse_eps_list, parse_grid, parse_starts, RunConfig};
use cleavelab::output::{emit, to_json};
use cleavelab::CliError;
use cleavelab_core::BoundaryVariant;

#[derive(Parser)]
#[command(
    name = "cleavelab",
    version,
    about = "Cleavage law of brittle Bravais-lattice crystals"
)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for all sampling; overrides run.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Elastic,
    Cracked,
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    Bc1,
    Bc2,
}

impl From<BcArg> for BoundaryVariant {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Bc1 => BoundaryVariant::Bc1,
            BcArg::Bc2 => BoundaryVariant::Bc2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Elastic and fracture constants with validation residuals (JSON).
    Constants,
    /// Limiting energy curve over a load grid (CSV).
    Predict {
        /// start:step:end, or a single value.
        #[arg(long)]
        a_grid: Option<String>,
        /// Use a previously emitted constants report instead of recomputing.
        #[arg(long)]
        constants: Option<PathBuf>,
    },
    /// Energy of the elastic or cracked configuration (JSON).
    Energy {
        #[arg(long, value_enum)]
        which: WhichArg,
        /// Macroscopic load; the lattice load is a·√ε.
        #[arg(long, conflicts_with = "a_eps")]
        a: Option<f64>,
        /// Lattice load a_ε given directly.
        #[arg(long)]
        a_eps: Option<f64>,
        /// Spacing, a number or an expression such as l1/64.
        #[arg(long)]
        eps: Option<String>,
        /// Crack normal, comma separated; an optimal one by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Option<Vec<f64>>,
        /// Plane offset c in x·ξ = c; through the box center by default.
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
    },
    /// Best-of-starts local minimization (JSON).
    Minimize {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, value_enum)]
        bc: Option<BcArg>,
        /// Comma separated: elastic, cracked.
        #[arg(long)]
        starts: Option<String>,
    },
    /// Minimization over a spacing schedule (CSV).
    Sweep {
        #[arg(long)]
        a: Option<f64>,
        /// Comma separated spacings, e.g. l1/8,l1/16,l1/32.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, value_enum)]
        bc: Option<BcArg>,
        #[arg(long)]
        starts: Option<String>,
        /// Append a wall-time column.
        #[arg(long)]
        timing: bool,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    RunConfig::from_path(path)
}

fn pick_eps(cfg: &RunConfig, arg: &Option<String>) -> Result<f64, CliError> {
    match arg {
        Some(s) => parse_eps(s, cfg.l1()),
        None => cfg
            .lattice
            .epsilon
            .ok_or_else(|| CliError::Config("give --eps or lattice.epsilon".into())),
    }
}

fn pick_a(cfg: &RunConfig, arg: Option<f64>) -> Result<f64, CliError> {
    let a = arg
        .or(cfg.run.a)
        .ok_or_else(|| CliError::Config("give --a or run.a".into()))?;
    if a >= 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(CliError::Config(format!(
            "load must be nonnegative, got {a}"
        )))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set thread count: {e}")))?;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Constants => {
            let cfg = load_config(&cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed());
            let (report, _) = commands::constants(&cfg, seed)?;
            emit(&to_json(&report)?, out)
        }
        Command::Predict { a_grid, constants } => {
            let law = match constants {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::Config(format!("cannot read {}: {e}", path.display()))
                    })?;
                    let report: commands::ConstantsReport = serde_json::from_str(&text)
                        .map_err(|e| CliError::Config(format!("constants report: {e}")))?;
                    commands::law_from_report(&report)?
                }
                None => {
                    let cfg = load_config(&cli)?;
                    commands::law_as_reported(&cfg, cli.seed.unwrap_or(cfg.seed()))?
                }
            };
            let grid_text = match (a_grid, &cli.config) {
                (Some(g), _) => g.clone(),
                (None, Some(_)) => load_config(&cli)?
                    .run
                    .a_grid
                    .ok_or_else(|| CliError::Config("give --a-grid or run.a_grid".into()))?,
                (None, None) => return Err(CliError::Config("give --a-grid".into())),
            };
            emit(&commands::predict(&law, &parse_grid(&grid_text)?)?, out)
        }
        Command::Energy {
            which,
            a,
            a_eps,
            eps,
            xi,
            offset,
        } => {
            let cfg = load_config(&cli)?;
            let an = commands::Analysis::new(&cfg, cli.seed.unwrap_or(cfg.seed()))?;
            let epsilon = pick_eps(&cfg, eps)?;
            let a_eps = match a_eps {
                Some(v) if *v >= 0.0 && v.is_finite() => *v,
                Some(v) => {
                    return Err(CliError::Config(format!(
                        "load must be nonnegative, got {v}"
                    )))
                }
                None => pick_a(&cfg, *a)? * epsilon.sqrt(),
            };
            let req = EnergyRequest {
                which: match which {
                    WhichArg::Elastic => Which::Elastic,
                    WhichArg::Cracked => Which::Cracked,
                },
                a_eps,
                epsilon,
                xi: xi.clone(),
                offset: *offset,
            };
            emit(&to_json(&commands::energy(&cfg, &an, &req)?)?, out)
        }
        Command::Minimize { a, eps, bc, starts } => {
            let cfg = load_config(&cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed());
            let an = commands::Analysis::new(&cfg, seed)?;
            let req = MinimizeRequest {
                a: pick_a(&cfg, *a)?,
                epsilon: pick_eps(&cfg, eps)?,
                variant: bc.map(Into::into).unwrap_or(cfg.variant()),
                kinds: match starts {
                    Some(s) => parse_starts(s.split(','))?,
                    None => cfg.start_kinds()?,
                },
                seed,
            };
            emit(&to_json(&commands::run_minimize(&cfg, &an, &req)?)?, out)
        }
        Command::Sweep {
            a,
            eps,
            bc,
            starts,
            timing,
        } => {
            let cfg = load_config(&cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed());
            let an = commands::Analysis::new(&cfg, seed)?;
            let schedule = match eps {
                Some(s) => parse_eps_list(s, cfg.l1())?,
                None => cfg
                    .eps_schedule()
                    .ok_or_else(|| CliError::Config("give --eps or run.eps".into()))??,
            };
            let req = SweepRequest {
                a: pick_a(&cfg, *a)?,
                eps: schedule,
                variant: bc.map(Into::into).unwrap_or(cfg.variant()),
                kinds: match starts {
                    Some(s) => parse_starts(s.split(','))?,
                    None => cfg.start_kinds()?,
                },
                seed,
                timing: *timing,
            };
            let rows = commands::sweep(&cfg, &an, &req)?;
            emit(&commands::sweep_csv(&rows, *timing)?, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cleavelab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
