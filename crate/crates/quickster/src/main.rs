use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quickster::config::Strictness;
use quickster::{
    cmd_ab_rolling, cmd_push_grid, cmd_run, cmd_sweep, load_config, CliError, Outcome, Overrides, PushGrid, DEFAULT_SPEEDS,
};

#[derive(Parser)]
#[command(name = "quickster", version, about = "Reduced-order biped walking simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    rolling: Option<OnOff>,
    /// Closed-loop step-to-step eigenvalue.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Constant forward speed [m/s], replacing the config's velocity profile.
    #[arg(long, global = true, allow_negative_numbers = true)]
    speed: Option<f64>,
    /// Warn about unknown config keys instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario.
    Run,
    /// Steady-state metrics over a list of constant speeds.
    Sweep {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = DEFAULT_SPEEDS)]
        speeds: Vec<f64>,
    },
    /// Compare rolling contact on and off on the same scenario.
    AbRolling,
    /// Largest recoverable impulse per push direction.
    PushGrid {
        #[arg(long, default_value_t = 8)]
        directions: usize,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long, default_value_t = 4)]
        recovery_steps: usize,
        /// Step during which the push lands.
        #[arg(long, default_value_t = 5)]
        push_step: usize,
        #[arg(long, default_value_t = 40)]
        iterations: usize,
    },
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let c = &cli.common;
    let strictness = if c.lenient { Strictness::Lenient } else { Strictness::Strict };
    let overrides = Overrides {
        seed: c.seed,
        rolling: c.rolling.map(|r| matches!(r, OnOff::On)),
        lambda: c.lambda,
        speed: c.speed,
    };
    match &cli.command {
        Command::Sweep { .. } if c.speed.is_some() => {
            return Err(CliError::Usage("sweep takes --speeds, not --speed".into()));
        }
        Command::AbRolling if c.rolling.is_some() => {
            return Err(CliError::Usage("ab-rolling sets rolling contact itself".into()));
        }
        _ => {}
    }
    let loaded = load_config(c.config.as_deref(), strictness, overrides)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let cfg = &loaded.config;
    match cli.command {
        Command::Run => cmd_run(cfg, &c.out),
        Command::Sweep { speeds } => cmd_sweep(cfg, &speeds, &c.out),
        Command::AbRolling => cmd_ab_rolling(cfg, &c.out),
        Command::PushGrid {
            directions,
            fraction,
            recovery_steps,
            push_step,
            iterations,
        } => {
            let mut grid = PushGrid {
                directions,
                fraction,
                recovery_steps,
                ..PushGrid::default()
            };
            grid.protocol.step = push_step;
            grid.protocol.iterations = iterations;
            cmd_push_grid(cfg, &grid, &c.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(outcome) => {
            for line in &outcome.report {
                if outcome.exit_code == 0 {
                    println!("{line}");
                } else {
                    eprintln!("{line}");
                }
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
