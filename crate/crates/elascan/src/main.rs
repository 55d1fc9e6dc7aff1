use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use elascan::cli::{
    cmd_forward, cmd_m0, cmd_reconstruct, cmd_sweep, cmd_verify, CliError, CommonArgs,
    MtildeChoice,
};
use elascan::mesh::LoadDirections;

/// Monotonicity-based inclusion detection for time-harmonic elasticity.
#[derive(Parser)]
#[command(name = "elascan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario's mesh subdivision
    #[arg(long)]
    mesh_n: Option<usize>,
    /// Override the scenario's patches per edge
    #[arg(long)]
    patches: Option<usize>,
    /// Override the traction directions: normal | full
    #[arg(long, value_parser = parse_directions)]
    directions: Option<LoadDirections>,
    /// Override the eigenvalue negativity tolerance
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Rayon thread count (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem for one boundary load; write VTK output
    Forward {
        #[command(flatten)]
        common: Common,
        /// Angular frequency in rad/s
        #[arg(long)]
        omega: f64,
        /// Which load of the family to apply
        #[arg(long, default_value_t = 0)]
        load_index: usize,
    },
    /// Eigenvalue budget M0 per frequency
    M0 {
        #[command(flatten)]
        common: Common,
        /// Comma-separated list of angular frequencies
        #[arg(long, value_delimiter = ',')]
        omegas: Vec<f64>,
    },
    /// Monotonicity sweep over the scenario's cover of test blocks
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Angular frequency in rad/s
        #[arg(long)]
        omega: f64,
        /// Negative-eigenvalue threshold: a number or `auto`
        #[arg(long, value_parser = parse_mtilde, default_value = "auto")]
        mtilde: MtildeChoice,
    },
    /// Turn a sweep artifact into an outer-support mask (VTK + CSV)
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// sweep_result.json produced by `sweep`
        #[arg(long)]
        sweep: PathBuf,
        /// Re-threshold with a different M-tilde
        #[arg(long, value_parser = parse_mtilde_num)]
        mtilde: Option<usize>,
    },
    /// Run the verification oracles and the convergence study
    Verify {
        #[command(flatten)]
        common: Common,
        /// Mesh sizes for the convergence study
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16])]
        mesh_sizes: Vec<usize>,
    },
}

fn parse_directions(s: &str) -> Result<LoadDirections, String> {
    match s {
        "normal" => Ok(LoadDirections::Normal),
        "full" => Ok(LoadDirections::Full),
        other => Err(format!("unknown directions '{other}' (use normal|full)")),
    }
}

fn parse_mtilde(s: &str) -> Result<MtildeChoice, String> {
    if s == "auto" {
        Ok(MtildeChoice::Auto)
    } else {
        s.parse::<usize>()
            .map(MtildeChoice::Fixed)
            .map_err(|_| format!("mtilde must be a non-negative integer or 'auto', got '{s}'"))
    }
}

fn parse_mtilde_num(s: &str) -> Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("mtilde must be a non-negative integer, got '{s}'"))
}

fn to_common_args(c: &Common) -> CommonArgs {
    CommonArgs {
        scenario: c.scenario.clone(),
        out: c.out.clone(),
        mesh_n: c.mesh_n,
        patches: c.patches,
        directions: c.directions,
        rel_tol: c.rel_tol,
        threads: c.threads,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Forward { common, .. }
        | Command::M0 { common, .. }
        | Command::Sweep { common, .. }
        | Command::Reconstruct { common, .. }
        | Command::Verify { common, .. } => common,
    };
    if let Some(threads) = common.threads {
        // a fixed thread count makes runs bit-reproducible on any machine
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot configure {threads} threads: {e}")))?;
    }
    let args = to_common_args(common);
    match cli.command {
        Command::Forward {
            omega, load_index, ..
        } => cmd_forward(&args, omega, load_index),
        Command::M0 { omegas, .. } => {
            if omegas.is_empty() {
                return Err(CliError::Input("m0 needs at least one --omegas value".into()));
            }
            cmd_m0(&args, &omegas)
        }
        Command::Sweep { omega, mtilde, .. } => cmd_sweep(&args, omega, mtilde).map(|_| ()),
        Command::Reconstruct { sweep, mtilde, .. } => cmd_reconstruct(&args, &sweep, mtilde),
        Command::Verify { mesh_sizes, .. } => cmd_verify(&args, &mesh_sizes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
