use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtwist_harness::report::{parse_m, write_report, Command};
use qtwist_harness::{run_report, Config, HarnessError};

/// Colored Jones polynomials of twist knots and their asymptotics.
#[derive(Parser)]
#[command(name = "qtwist", version)]
struct Cli {
    /// key = value file with bits, cache_dir and workers (QTWIST_* variables override it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Mantissa bits; overrides the config.
    #[arg(long, global = true)]
    bits: Option<u32>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    #[command(flatten)]
    Run(Run),
    /// Run a command and write its JSON record (and CSV plot data) to a file.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[command(subcommand)]
        command: Run,
    },
}

#[derive(Subcommand, Clone)]
enum Run {
    /// J_N(K_p) at the root of unity e^{2πi/(N+1/M)}.
    Jones {
        #[command(flatten)]
        root: Root,
    },
    /// Critical point of the potential and the constants ζ, ω.
    Critical {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
    },
    /// Leading asymptotic term, with κ₁ when d = 1.
    Predict {
        #[command(flatten)]
        root: Root,
        #[arg(long, default_value_t = 0)]
        d: usize,
    },
    /// Fit J_N/leading against 1 + Σ κᵢ (2πi/denom)ⁱ.
    Fit {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long = "M", value_parser = parse_root_m)]
        m: RootM,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Extrapolated growth rate (2π/denom) log J_N.
    Growth {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long = "M", value_parser = parse_root_m)]
        m: RootM,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<u32>,
    },
    /// Fourier coefficients ĥ(m, n) and h̃(m, n).
    Fourier {
        #[command(flatten)]
        root: Root,
        #[arg(long = "m", allow_hyphen_values = true)]
        lattice_m: i64,
        #[arg(long = "n", allow_hyphen_values = true)]
        lattice_n: i64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Volume and Chern–Simons invariant from the critical value.
    Volume {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
    },
}

/// M as given on the command line; `inf` is M = ∞.
#[derive(Clone, Copy)]
struct RootM(Option<u32>);

fn parse_root_m(text: &str) -> Result<RootM, String> {
    parse_m(text).map(RootM)
}

#[derive(Args, Clone)]
struct Root {
    #[arg(long, allow_hyphen_values = true)]
    p: i64,
    #[arg(long = "N")]
    n: u32,
    #[arg(long = "M", value_parser = parse_root_m)]
    m: RootM,
}

impl Run {
    fn command(self) -> Command {
        match self {
            Run::Jones { root } => Command::Jones { p: root.p, n: root.n, m: root.m.0 },
            Run::Critical { p } => Command::Critical { p },
            Run::Predict { root, d } => Command::Predict { p: root.p, n: root.n, m: root.m.0, d },
            Run::Fit { p, m, n, d } => Command::Fit { p, m: m.0, nlist: n, d },
            Run::Growth { p, m, n } => Command::Growth { p, m: m.0, nlist: n },
            Run::Fourier { root, lattice_m, lattice_n, tol } => {
                Command::Fourier { p: root.p, n: root.n, m: root.m.0, lattice_m, lattice_n, tol }
            }
            Run::Volume { p } => Command::Volume { p },
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if cli.bits.is_some() {
        cfg.bits = cli.bits;
    }
    let (run, out) = match cli.command {
        Cmd::Run(r) => (r, None),
        Cmd::Report { out, command } => (command, Some(out)),
    };
    let outcome = run_report(&run.command(), &cfg)?;
    if let Some(notice) = &outcome.notice {
        eprintln!("notice: {notice}");
    }
    match out {
        Some(path) => {
            let csv = write_report(&outcome.record, &path)?;
            eprintln!("wrote {}", path.display());
            if let Some(csv) = csv {
                eprintln!("wrote {}", csv.display());
            }
        }
        None => {
            let text = serde_json::to_string_pretty(&outcome.record).map_err(|e| HarnessError::Serde(e.to_string()))?;
            println!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
