//! `superharm`: batch front end for the superharm-core numerics.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use config::{Command, Flags, RunConfig, OUT_ENV};
use error::CliError;
use output::Output;

#[derive(Parser)]
#[command(name = "superharm", version, about = "Fractional Laplacian eigenfunction superharmonicity checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Coefficients a_j(q), γ_k, the power-rule identity and the sign ledger
    Coeffs,
    /// Subordinator density f_t(s) and its Laplace certificate
    Density,
    /// Transition density by subordination against Fourier inversion
    Kernel,
    /// First Dirichlet eigenpair with grid extrapolation
    Eig,
    /// Full verification report; exit 0 iff every mandatory check passes
    Verify,
    /// Monte Carlo survival curve and decay-rate estimate
    Mc,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Coeffs => Command::Coeffs,
            Cmd::Density => Command::Density,
            Cmd::Kernel => Command::Kernel,
            Cmd::Eig => Command::Eig,
            Cmd::Verify => Command::Verify,
            Cmd::Mc => Command::Mc,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let env_out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let config = RunConfig::resolve(cli.command.into(), cli.flags, env_out)?;
    commands::preflight(&config)?;
    let out = Output::create(&config)?;
    let result = match cli.command {
        Cmd::Coeffs => commands::coeffs(&config, &out),
        Cmd::Density => commands::density(&config, &out),
        Cmd::Kernel => commands::kernel(&config, &out),
        Cmd::Eig => commands::eig(&config, &out),
        Cmd::Verify => commands::verify(&config, &out),
        Cmd::Mc => commands::mc(&config, &out),
    };
    eprintln!("outputs in {}", out.dir().display());
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                eprintln!("{}", Cli::command().render_usage());
            }
            ExitCode::from(e.exit_code())
        }
    }
}
