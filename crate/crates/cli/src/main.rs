use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use regrefl_cli::{cmd_solve, cmd_state2, cmd_sweep, cmd_verify, exit_code, Angle, RunConfig, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use regrefl_core::gas::incident_shock;
use regrefl_core::Result;

/// Regular shock reflection off a wedge: background states, free-boundary
/// solves, sigma sweeps and re-verification of written fields.
#[derive(Parser)]
#[command(name = "regrefl", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the normal-reflection and state (2) quantities.
    State2 {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        rho0: f64,
        #[arg(long)]
        rho1: f64,
        /// wedge angle in radians
        #[arg(long, conflicts_with = "sigma", required_unless_present = "sigma")]
        theta_w: Option<f64>,
        /// pi/2 - theta_w
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Solve one configuration and write fields, shock and summary.
    Solve {
        config: PathBuf,
        /// overrides out_dir from the config
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for each sigma concurrently and tabulate the distance to
    /// normal reflection.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        sigmas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the verification checks on the output of `solve`.
    Verify { dir: PathBuf },
}

fn load(path: &PathBuf) -> Result<RunConfig> {
    RunConfig::parse(&std::fs::read_to_string(path)?)
}

fn run(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::State2 { gamma, rho0, rho1, theta_w, sigma } => {
            let angle = match (theta_w, sigma) {
                (Some(t), _) => Angle::ThetaW(t),
                (None, Some(s)) => Angle::Sigma(s),
                (None, None) => unreachable!("clap requires one of the two"),
            };
            print!("{}", cmd_state2(&incident_shock(gamma, rho0, rho1)?, angle)?);
            Ok(EXIT_OK)
        }
        Cmd::Solve { config, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            let sol = cmd_solve(&cfg, &dir)?;
            print!("{}", sol.verification);
            println!("converged={} outer_iterations={} output={}", sol.converged, sol.diagnostics.outer_iterations, dir.display());
            Ok(if sol.verification.all_pass() { EXIT_OK } else { EXIT_VERIFY })
        }
        Cmd::Sweep { config, sigmas, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            let res = cmd_sweep(&cfg, &sigmas, &dir)?;
            println!("sigma,shock_distance,w11,p1_error,outer_iterations");
            for r in &res.rows {
                println!("{},{:e},{:e},{:e},{}", r.sigma, r.shock_distance, r.w11, r.p1_error, r.outer_iterations);
            }
            Ok(if res.pass { EXIT_OK } else { EXIT_VERIFY })
        }
        Cmd::Verify { dir } => {
            let report = cmd_verify(&dir)?;
            print!("{report}");
            Ok(if report.all_pass() { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
