use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ktflow::cli::{self, CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "ktflow",
    about = "Pluriclosed flow and Vaisman geometry for T²-invariant metrics on the Kodaira–Thurston surface",
    after_help = "Environment: KTFLOW_THREADS caps internal parallelism (0 = auto). \
                  Computation is sequential and bitwise deterministic, so any cap is honored."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// JSON run configuration; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Right-hand-side variant (overrides flow.rhs_variant)
    #[arg(long, value_parser = ["newsystem", "bismut"])]
    rhs_variant: Option<String>,
    /// Grid points per axis, even and at least 8 (overrides grid.n)
    #[arg(long)]
    grid_n: Option<usize>,
    /// Classification tolerance (overrides tolerances.vaisman)
    #[arg(long)]
    tol: Option<f64>,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let overrides = Overrides {
            out: self.out.clone(),
            rhs_variant: self.rhs_variant.clone(),
            grid_n: self.grid_n,
            tol: self.tol,
        };
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured initial metric, save it, print its analysis
    Init(CommonArgs),
    /// Integrate the pluriclosed flow and write monitor.csv, snapshots, report.json
    Evolve(CommonArgs),
    /// Print the analysis report for a snapshot file
    Analyze {
        /// Snapshot JSON produced by init or evolve
        snapshot: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the full invariant suite and print a machine-readable summary
    Verify(CommonArgs),
    /// Run the Vaisman drift experiment from a type-II profile
    Drift(CommonArgs),
}

fn dispatch(command: Command) -> Result<(), CliError> {
    if let Err(e) = cli::parse_threads_env(std::env::var("KTFLOW_THREADS").ok().as_deref()) {
        return Err(e);
    }
    match command {
        Command::Init(args) => {
            let config = args.load()?;
            print!("{}", cli::cmd_init(&config)?);
            Ok(())
        }
        Command::Evolve(args) => {
            let config = args.load()?;
            let (report, terminated_early) = cli::cmd_evolve(&config)?;
            print!("{report}");
            if terminated_early {
                return Err(CliError::Positivity(
                    "run ended before t_end; see report.json".into(),
                ));
            }
            Ok(())
        }
        Command::Analyze { snapshot, common } => {
            let config = common.load()?;
            print!(
                "{}",
                cli::cmd_analyze(&snapshot, config.tolerances.vaisman)?
            );
            Ok(())
        }
        Command::Verify(args) => {
            let config = args.load()?;
            print!("{}", cli::cmd_verify(&config)?);
            Ok(())
        }
        Command::Drift(args) => {
            let config = args.load()?;
            print!("{}", cli::cmd_drift(&config)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ktflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
