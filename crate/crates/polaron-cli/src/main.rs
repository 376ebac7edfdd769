//! `polaron`: calibration runs, functional evaluations and inequality checks.
//!
//! Exit codes: 0 success, 1 I/O, 2 usage, 3 precondition, 4 accuracy or
//! search, 5 numeric.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(polaron::Error),
}

impl From<polaron::Error> for CliError {
    fn from(e: polaron::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        use polaron::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(E::Domain(_)) => 2,
            CliError::Lib(E::Precondition(_)) => 3,
            CliError::Lib(E::Accuracy { .. } | E::Search(_)) => 4,
            CliError::Lib(E::Numeric(_)) => 5,
            CliError::Lib(E::Io(_)) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "polaron",
    version,
    about = "Stability numerics for an impurity in a Fermi gas"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct Global {
    /// Flat key = value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for JSON, CSV and manifest files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Registry JSON; the pinned registry is used when absent.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Λ(m) with error estimates and the maximiser.
    Lambda {
        #[arg(long, allow_negative_numbers = true)]
        m: Option<f64>,
        /// k, q or s.
        #[arg(long)]
        gauge: Option<String>,
        #[arg(long)]
        quad_tol: Option<f64>,
    },
    /// Root m** of Λ(m) = 1 by bisection.
    CriticalMass {
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long)]
        m_tol: Option<f64>,
        #[arg(long)]
        quad_tol: Option<f64>,
        #[arg(long)]
        gauge: Option<String>,
    },
    /// Run the sweeps and write a registry.
    Calibrate {
        /// default or quick.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Confined, main or N-independent lower bound.
    Bound {
        #[arg(long, allow_negative_numbers = true)]
        m: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        ell: Option<f64>,
        /// Side of the large box, for the main bound.
        #[arg(long, allow_negative_numbers = true)]
        lbig: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        kappa: Option<f64>,
        /// confined, main or unconfined.
        #[arg(long)]
        kind: Option<String>,
        /// Use this Λ(m) instead of computing it.
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// Absolute constant of the main bound.
        #[arg(long = "const")]
        main_const: Option<f64>,
        #[arg(long)]
        quad_tol: Option<f64>,
    },
    /// Lieb-Thirring gap ratio over random smooth potentials.
    Ltcheck {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        basis: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        depth: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
    },
    /// Dirichlet levels of the box (0, L)³.
    Spectrum {
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
    },
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(|x| x.to_string())
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Lambda { .. } => "lambda",
            Cmd::CriticalMass { .. } => "critical-mass",
            Cmd::Calibrate { .. } => "calibrate",
            Cmd::Bound { .. } => "bound",
            Cmd::Ltcheck { .. } => "ltcheck",
            Cmd::Spectrum { .. } => "spectrum",
        }
    }

    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        match self {
            Cmd::Lambda { m, gauge, quad_tol } => {
                vec![("m", s(m)), ("gauge", s(gauge)), ("quad_tol", s(quad_tol))]
            }
            Cmd::CriticalMass {
                lo,
                hi,
                m_tol,
                quad_tol,
                gauge,
            } => vec![
                ("lo", s(lo)),
                ("hi", s(hi)),
                ("m_tol", s(m_tol)),
                ("quad_tol", s(quad_tol)),
                ("gauge", s(gauge)),
            ],
            Cmd::Calibrate { sweep } => vec![("sweep", s(sweep))],
            Cmd::Bound {
                m,
                n,
                ell,
                lbig,
                alpha,
                kappa,
                kind,
                lambda,
                main_const,
                quad_tol,
            } => vec![
                ("m", s(m)),
                ("n", s(n)),
                ("ell", s(ell)),
                ("lbig", s(lbig)),
                ("alpha", s(alpha)),
                ("kappa", s(kappa)),
                ("kind", s(kind)),
                ("lambda", s(lambda)),
                ("const", s(main_const)),
                ("quad_tol", s(quad_tol)),
            ],
            Cmd::Ltcheck {
                samples,
                n,
                basis,
                grid,
                depth,
                l,
            } => vec![
                ("samples", s(samples)),
                ("n", s(n)),
                ("basis", s(basis)),
                ("grid", s(grid)),
                ("depth", s(depth)),
                ("l", s(l)),
            ],
            Cmd::Spectrum { l, count } => vec![("l", s(l)), ("count", s(count))],
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let mut flags = cli.cmd.flags();
    flags.push(("seed", s(&g.seed)));
    flags.push(("out", g.out.as_ref().map(|p| p.display().to_string())));
    flags.push((
        "registry",
        g.registry.as_ref().map(|p| p.display().to_string()),
    ));
    flags.push(("jobs", s(&g.jobs)));
    let cfg = RunConfig::build(cli.cmd.name(), g.config.as_deref(), flags)?;
    if let Some(j) = cfg.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon_pool(j)?;
    }
    match cli.cmd {
        Cmd::Lambda { .. } => commands::lambda(&cfg),
        Cmd::CriticalMass { .. } => commands::critical_mass(&cfg),
        Cmd::Calibrate { .. } => commands::calibrate(&cfg),
        Cmd::Bound { .. } => commands::bound(&cfg),
        Cmd::Ltcheck { .. } => commands::ltcheck(&cfg),
        Cmd::Spectrum { .. } => commands::spectrum(&cfg),
    }
}

fn rayon_pool(jobs: usize) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polaron: {e}");
            ExitCode::from(e.code())
        }
    }
}
