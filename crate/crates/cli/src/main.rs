use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hartree_cli::commands::{cmd_classify, cmd_ground_state, cmd_minimize, cmd_sweep};
use hartree_cli::verify::cmd_verify;
use hartree_cli::{CliError, CliResult, RunConfig};

/// Minimizers of coupled pseudo-relativistic Hartree energies.
#[derive(Parser, Debug)]
#[command(name = "hartree-min", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` config; missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Grid points per axis.
    #[arg(long, global = true)]
    grid: Option<String>,

    /// Box side length.
    #[arg(long = "box", global = true)]
    box_length: Option<String>,

    /// First coupling, e.g. `0.5*astar`.
    #[arg(long, global = true)]
    a1: Option<String>,

    #[arg(long, global = true)]
    a2: Option<String>,

    /// Mixed coupling, e.g. `1.2*beta_low` or an absolute value.
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,

    /// Particle mass.
    #[arg(long, global = true)]
    m: Option<String>,

    /// Concurrent sweep rows.
    #[arg(long, global = true)]
    jobs: Option<String>,

    /// Output directory.
    #[arg(long, global = true)]
    output: Option<String>,

    /// Any other key, as `key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", allow_hyphen_values = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve (or load) the scalar ground state and print `a*`.
    GroundState,
    /// Minimize the coupled energy.
    Minimize,
    /// Classify the parameters by the existence rules.
    Classify,
    /// Classify a grid of parameters; CSV to stdout.
    Sweep,
    /// Run the invariant checks.
    Verify {
        /// Comma-separated suites.
        #[arg(long)]
        only: Option<String>,
        /// Inject a known fault.
        #[arg(long)]
        inject: Option<String>,
    },
}

fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let flags = [
        ("n", &cli.grid),
        ("box", &cli.box_length),
        ("a1", &cli.a1),
        ("a2", &cli.a2),
        ("beta", &cli.beta),
        ("m", &cli.m),
        ("jobs", &cli.jobs),
        ("output", &cli.output),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = resolve_config(cli)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let res = match &cli.command {
        Command::GroundState => cmd_ground_state(&cfg, &mut out),
        Command::Minimize => cmd_minimize(&cfg, &mut out),
        Command::Classify => cmd_classify(&cfg, &mut out),
        Command::Sweep => cmd_sweep(&cfg, &mut out),
        Command::Verify { only, inject } => cmd_verify(&cfg, only.as_deref(), inject.as_deref(), &mut out),
    };
    out.flush()?;
    res
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
