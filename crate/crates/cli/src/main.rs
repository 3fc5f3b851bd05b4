use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qg_cli::{
    cmd_resume, cmd_run, cmd_sweep, cmd_verify_thm1, cmd_verify_thm2, parse_config, CliError,
    ResumeOptions, RunConfig, Status, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "qg", version, about = "Dissipative quasi-geostrophic solver and norm checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write series.csv plus checkpoints
    Run { config: PathBuf },
    /// Check the small-data a-priori inequality along the run
    #[command(name = "verify-thm1")]
    VerifyThm1 { config: PathBuf },
    /// Check that the critical norm decays below the configured ratio
    #[command(name = "verify-thm2")]
    VerifyThm2 { config: PathBuf },
    /// Run the cartesian product of sweep.* values
    Sweep { config: PathBuf },
    /// Continue a checkpoint to a new horizon
    Resume {
        checkpoint: PathBuf,
        #[arg(long = "t-end")]
        t_end: f64,
        /// Config supplying dt, cfl, dealias, record_every and output_dir
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        /// Earlier series.csv whose running integral is continued
        #[arg(long)]
        series: Option<PathBuf>,
    },
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = env_out_dir() {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<Status, CliError> {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr();
    match command {
        Command::Run { config } => cmd_run(&load(&config)?, &mut stdout),
        Command::VerifyThm1 { config } => cmd_verify_thm1(&load(&config)?, &mut stdout),
        Command::VerifyThm2 { config } => cmd_verify_thm2(&load(&config)?, &mut stdout, &mut stderr),
        Command::Sweep { config } => cmd_sweep(&load(&config)?, &mut stdout),
        Command::Resume {
            checkpoint,
            t_end,
            config,
            dt,
            series,
        } => {
            let opts = ResumeOptions {
                checkpoint,
                t_end,
                config: config.as_deref().map(load).transpose()?,
                dt,
                output_dir: env_out_dir(),
                series,
            };
            cmd_resume(&opts, &mut stdout, &mut stderr)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let status = dispatch(cli.command).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.status()
    });
    ExitCode::from(status.code() as u8)
}
