use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tritter_qcm_cli::{cmd_propagate, cmd_spectrum, cmd_sweep, cmd_wigner, output_dir, CliError, RunConfig};

/// Stroboscopic tritter collision-model simulator.
#[derive(Parser)]
#[command(name = "tritter-qcm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, env = "TRITTER_QCM_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectory and measure series.
    Propagate(Common),
    /// Final S_re and E_N over the configured angle grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (defaults to the number of CPUs).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Liouvillian spectrum, gap, decay fit and dark-state report.
    Spectrum(Common),
    /// Single-mode Wigner grids at selected collision counts.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// Snapshots, e.g. `60,96,116,136`; overrides `[wigner] collisions`.
        #[arg(long, value_delimiter = ',')]
        collisions: Option<Vec<usize>>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Propagate(c) => {
            let cfg = RunConfig::load(&c.config)?;
            for p in cmd_propagate(&cfg, &output_dir(c.out, &cfg))? {
                println!("{}", p.display());
            }
        }
        Command::Sweep { common: c, jobs } => {
            let cfg = RunConfig::load(&c.config)?;
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            if jobs == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            println!("{}", cmd_sweep(&cfg, &output_dir(c.out, &cfg), jobs)?.display());
        }
        Command::Spectrum(c) => {
            let cfg = RunConfig::load(&c.config)?;
            print!("{}", cmd_spectrum(&cfg, &output_dir(c.out, &cfg))?);
        }
        Command::Wigner { common: c, collisions } => {
            let cfg = RunConfig::load(&c.config)?;
            let snaps = collisions.unwrap_or_else(|| cfg.wigner.collisions.clone());
            for p in cmd_wigner(&cfg, &output_dir(c.out, &cfg), &snaps)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
