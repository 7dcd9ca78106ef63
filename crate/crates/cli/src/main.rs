use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rqt_cli::commands::{cmd_analyze, cmd_basis, cmd_figure, cmd_trace};
use rqt_cli::config::{IntegratorChoice, Sign};
use rqt_cli::{preset, CliError, Outcome, Overrides, Problem, RunConfig};

/// Relativistic quantum trajectories: Klein-Gordon basis, reduced action,
/// trajectories, node analysis and residual validation.
#[derive(Debug, Parser)]
#[command(name = "rqt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Figure preset (1, 2 or 3); used by `figure`
    #[arg(long, global = true, value_name = "N")]
    figure: Option<u8>,

    /// Scale ħ by this factor
    #[arg(long, global = true, value_name = "FLOAT")]
    epsilon_hbar: Option<f64>,

    /// Klein-Gordon integrator for numeric bases
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,

    /// Direction of motion, + or -
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_sign)]
    direction: Option<Sign>,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Euler,
    Rk4,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the Klein-Gordon basis and a Wronskian drift summary
    Basis,
    /// Write one trajectory per (a, b) set plus a manifest
    Trace,
    /// Write node and validation reports and print a summary table
    Analyze,
    /// Write the data and gnuplot script of a figure
    Figure,
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    match s {
        "+" => Ok(Sign::Plus),
        "-" => Ok(Sign::Minus),
        _ => Err(format!("expected + or -, got `{s}`")),
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (&cli.config, cli.figure, &cli.command) {
        (Some(path), _, _) => RunConfig::load(path)?,
        (None, Some(n), _) => {
            let text = preset(n).ok_or_else(|| CliError::Config(format!("no figure preset {n}; expected 1, 2 or 3")))?;
            RunConfig::from_toml(text)?
        }
        (None, None, _) => return Err(CliError::Config("--config PATH (or --figure N) is required".into())),
    };
    cfg.apply(&Overrides {
        hbar_scale: cli.epsilon_hbar,
        integrator: cli.method.map(|m| match m {
            Method::Euler => IntegratorChoice::Euler,
            Method::Rk4 => IntegratorChoice::Rk4,
        }),
        direction: cli.direction,
        out: cli.out.clone(),
    })?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let problem = Problem::new(load(cli)?)?;
    match cli.command {
        Command::Basis => cmd_basis(&problem),
        Command::Trace => cmd_trace(&problem),
        Command::Analyze => cmd_analyze(&problem),
        Command::Figure => {
            let n = cli.figure.ok_or_else(|| CliError::Config("`figure` needs --figure N".into()))?;
            if !(1..=3).contains(&n) {
                return Err(CliError::Config(format!("no figure {n}; expected 1, 2 or 3")));
            }
            cmd_figure(&problem, n)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.failures > 0 {
                let err = CliError::PartialFailure { count: outcome.failures, total: outcome.failures.max(1) };
                eprintln!("error: {err}");
                return ExitCode::from(err.exit_code() as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
