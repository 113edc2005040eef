use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use emslab::cli::{self, CliError, ControllerKind, SimulateArgs, SolveDpArgs};
use emslab::dp::DpGrid;
use emslab::learn::DEFAULT_RIDGE_LAMBDA;
use emslab::workspace::WorkspaceLayout;

#[derive(Parser)]
#[command(
    name = "emslab",
    version,
    about = "PHEV energy-management laboratory: trip generation, per-trip DP, value-function training, and closed-loop controller comparison"
)]
struct Cli {
    /// Workspace root (default: $EMSLAB_WORKSPACE or ./emslab-workspace).
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,
    /// Overwrite artifacts whose recorded provenance does not match.
    #[arg(long, global = true)]
    force: bool,
    /// Powertrain parameter file (TOML); built-in synthetic defaults when omitted.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Output directory override (defaults to the workspace layout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Cdcs,
    Aecms,
    Mpc,
    Dp,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> ControllerKind {
        match c {
            ControllerArg::Cdcs => ControllerKind::CdCs,
            ControllerArg::Aecms => ControllerKind::Aecms,
            ControllerArg::Mpc => ControllerKind::Mpc,
            ControllerArg::Dp => ControllerKind::Dp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic trips from a cycle spec, one per seed.
    Generate {
        /// Cycle spec file (TOML).
        #[arg(long)]
        spec: PathBuf,
        /// Seeds: `1-16`, `7`, or `1,3,9`.
        #[arg(long, default_value = "1-16")]
        seeds: String,
    },
    /// Solve one trip's optimal energy split by backward DP.
    SolveDp {
        /// Trip CSV file.
        #[arg(long)]
        trip: PathBuf,
        #[arg(long, default_value_t = DpGrid::DEFAULT_SOC_POINTS)]
        soc_points: usize,
        #[arg(long, default_value_t = DpGrid::DEFAULT_TORQUE_POINTS)]
        torque_points: usize,
        /// Initial SOC (default: 10% below the ceiling).
        #[arg(long)]
        soc0: Option<f64>,
        /// Verify the rollout against exhaustive enumeration (toy trips only).
        #[arg(long, hide = true)]
        oracle: bool,
    },
    /// Fit the leave-one-out value-function policy for one target trip.
    Train {
        /// Route identifier (directory under trips/ and dp/).
        #[arg(long)]
        route: String,
        /// Target trip to exclude from training.
        #[arg(long)]
        exclude: String,
        #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
        ridge: f64,
        #[arg(long, default_value_t = 100.0)]
        bin_length: f64,
    },
    /// Run one controller over one trip and write traces + summary.
    Simulate {
        /// Trip CSV file.
        #[arg(long)]
        trip: PathBuf,
        #[arg(long, value_enum)]
        controller: ControllerArg,
        /// Policy file (mpc; default: the trip's leave-one-out policy).
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Representative SOC profile (aecms; default: the trip's file).
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Value table (dp controller; default: the trip's table).
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        soc0: Option<f64>,
        #[arg(long, default_value_t = 41)]
        torque_candidates: usize,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
    },
    /// Leave-one-out four-way comparison over a route.
    Compare {
        #[arg(long)]
        route: String,
        #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
        ridge: f64,
        #[arg(long, default_value_t = 100.0)]
        bin_length: f64,
        #[arg(long)]
        soc0: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ws = match &cli.workspace {
        Some(root) => WorkspaceLayout::new(root.clone()),
        None => WorkspaceLayout::from_env(),
    };
    let params = cli.params.as_deref();
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate { spec, seeds } => {
            let seeds = cli::parse_seeds(&seeds)?;
            let written = cli::cmd_generate(&ws, &spec, &seeds, out, cli.force)?;
            println!("wrote {} trip files", written.len());
            Ok(())
        }
        Command::SolveDp { trip, soc_points, torque_points, soc0, oracle } => {
            let args = SolveDpArgs { soc_points, torque_points, soc0, oracle };
            cli::cmd_solve_dp(&ws, &trip, params, &args, out, cli.force)?;
            Ok(())
        }
        Command::Train { route, exclude, ridge, bin_length } => {
            cli::cmd_train(&ws, &route, &exclude, params, ridge, bin_length, out, cli.force)?;
            Ok(())
        }
        Command::Simulate {
            trip,
            controller,
            policy,
            profile,
            table,
            soc0,
            torque_candidates,
            horizon,
        } => {
            let args = SimulateArgs {
                controller: controller.into(),
                policy_path: policy,
                profile_path: profile,
                table_path: table,
                soc0,
                torque_candidates,
                horizon,
            };
            cli::cmd_simulate(&ws, &trip, params, &args, out, cli.force)?;
            Ok(())
        }
        Command::Compare { route, ridge, bin_length, soc0 } => {
            cli::cmd_compare(&ws, &route, params, ridge, bin_length, soc0, out, cli.force)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
