use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use symperr_cli::acceptance::invariant_suite;
use symperr_cli::{run, CliError, Command, ConfigError, Settings};

#[derive(Parser)]
#[command(name = "symperr", version, about = "Symplectic defect of fixed-point-iterated integrators")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate and write the sampled trajectory as CSV.
    Trajectory,
    /// J~ block norms over an h grid with order fits.
    DefectSweep,
    /// Print one 2N x 2N matrix J~ with 17 significant digits.
    Jtilde,
    /// |H - H0| along long runs, with a drift classification.
    EnergyDrift,
    /// Compare the quadratic-model defect with its closed form.
    Optimality,
    /// Block-order fits of J~ - J for both Stormer-Verlet variants.
    SvOrders,
    /// det DPhi against det A over an h grid.
    Volume,
    /// Run the invariant suite; exit 0 if every check passes.
    Selftest,
}

/// Flags override the config file. Tokamak parameters are SI; h is in
/// units of T0.
#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<String>,
    /// quadratic | tokamak | harmonic
    #[arg(long, global = true)]
    hamiltonian: Option<String>,
    /// p-implicit | q-implicit | sv-pq | sv-qp | linear-implicit | exact-p | exact-q
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[arg(long = "N", global = true)]
    n: Option<String>,
    /// FPI iteration count; sweeps accept a comma-separated list.
    #[arg(long = "M", global = true)]
    m: Option<String>,
    #[arg(long = "M1", global = true)]
    m1: Option<String>,
    #[arg(long = "M2", global = true)]
    m2: Option<String>,
    #[arg(long, global = true)]
    h: Option<String>,
    #[arg(long, global = true)]
    steps: Option<String>,
    #[arg(long, global = true)]
    stride: Option<String>,
    #[arg(long = "h-min", global = true)]
    h_min: Option<String>,
    #[arg(long = "h-max", global = true)]
    h_max: Option<String>,
    #[arg(long = "h-count", global = true)]
    h_count: Option<String>,
    /// Worker threads for sweeps; output order does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<String>,
    /// Run the energy drift for the full 3e6 steps.
    #[arg(long = "full-scale", global = true)]
    full_scale: bool,
}

impl Common {
    fn settings(&self) -> Result<Settings, ConfigError> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let pairs = [
            ("out", &self.out),
            ("hamiltonian", &self.hamiltonian),
            ("scheme", &self.scheme),
            ("n", &self.n),
            ("m", &self.m),
            ("m1", &self.m1),
            ("m2", &self.m2),
            ("h", &self.h),
            ("steps", &self.steps),
            ("stride", &self.stride),
            ("h_min", &self.h_min),
            ("h_max", &self.h_max),
            ("h_count", &self.h_count),
            ("jobs", &self.jobs),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.set(k, v.as_str())?;
            }
        }
        if self.full_scale {
            flags.set("full_scale", "true")?;
        }
        s.overlay(&flags);
        Ok(s)
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let settings = cli.common.settings()?;
    let command = match cli.command {
        Sub::Trajectory => Command::Trajectory,
        Sub::DefectSweep => Command::DefectSweep,
        Sub::Jtilde => Command::Jtilde,
        Sub::EnergyDrift => Command::EnergyDrift,
        Sub::Optimality => Command::Optimality,
        Sub::SvOrders => Command::SvOrders,
        Sub::Volume => Command::Volume,
        Sub::Selftest => return selftest(),
    };
    let out = run(command, &settings)?;
    match settings.get("out") {
        Some(path) => std::fs::write(path, &out.body).map_err(|e| CliError::Io(format!("{path}: {e}")))?,
        None => std::io::stdout().write_all(out.body.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
    }
    eprint!("{}", out.summary);
    Ok(())
}

fn selftest() -> Result<(), CliError> {
    let checks = invariant_suite();
    for c in &checks {
        println!("{c}");
    }
    match checks.iter().filter(|c| !c.pass).count() {
        0 => Ok(()),
        n => Err(CliError::Compute(symperr::Error::Invariant(if n == 1 {
            "one self-test check failed"
        } else {
            "several self-test checks failed"
        }))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
