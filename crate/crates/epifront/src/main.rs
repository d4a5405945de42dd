use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use epifront::cli::{
    cmd_eigen, cmd_lstar, cmd_mustar, cmd_ode, cmd_simulate, cmd_sweep, cmd_validate, load_config,
    CliError,
};

#[derive(Parser)]
#[command(
    name = "epifront",
    about = "Nonlocal-diffusion free-boundary epidemic model: simulation and thresholds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps and bisection probes.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check model assumptions and print the derived threshold scalars.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the free-boundary system; write trajectory, snapshots, verdict.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Principal eigenvalues over the configured interval lengths.
    Eigen {
        #[command(flatten)]
        common: Common,
    },
    /// The critical range length l*.
    Lstar {
        #[command(flatten)]
        common: Common,
    },
    /// The critical expansion coefficient mu* as a bracket.
    Mustar {
        #[command(flatten)]
        common: Common,
    },
    /// Classify every (alpha, h0, mu) triple of the configured grid.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// The spatially homogeneous ODE system by RK4.
    Ode {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cmd: &Command) -> Result<(), CliError> {
    let common = match cmd {
        Command::Validate { common }
        | Command::Simulate { common }
        | Command::Eigen { common }
        | Command::Lstar { common }
        | Command::Mustar { common }
        | Command::Sweep { common }
        | Command::Ode { common } => common,
    };
    let mut cfg = load_config(&common.config)?;
    if let Some(w) = common.workers {
        cfg.workers = w.max(1);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cmd {
        Command::Validate { .. } => cmd_validate(&cfg, &mut out),
        Command::Simulate { .. } => {
            let path = cmd_simulate(&cfg, &common.out)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(())
        }
        Command::Eigen { .. } => cmd_eigen(&cfg, &common.out, &mut out),
        Command::Lstar { .. } => cmd_lstar(&cfg, &mut out),
        Command::Mustar { .. } => cmd_mustar(&cfg, &mut out),
        Command::Sweep { .. } => {
            let path = cmd_sweep(&cfg, &common.out)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(())
        }
        Command::Ode { .. } => {
            let path = cmd_ode(&cfg, &common.out)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
