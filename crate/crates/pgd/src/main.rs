use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pgd::commands;
use pgd::config::{ExperimentConfig, Format, MixingMethod};
use pgd::{CliError, Outputs};

#[derive(Parser)]
#[command(name = "pgd", version, about = "Parallel Glauber dynamics CSMA experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Product-form law against the exact stationary vector.
    Stationary(Common),
    /// TV curves, coalescence times and mixing bounds.
    Mixing {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "montecarlo")]
        exact: bool,
        #[arg(long)]
        montecarlo: bool,
    },
    /// Solve for fugacities that give target service rates.
    Fugacity(Common),
    /// Queueing simulation, fixed or adaptive.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Replace the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seeds = vec![s];
    }
    if let Some(dir) = &common.out {
        cfg.output.dir = Some(dir.clone());
    }
    match common.format {
        Some(FormatArg::Csv) => cfg.output.format = Format::Csv,
        Some(FormatArg::Json) => cfg.output.format = Format::Json,
        None => {}
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (cfg, out) = match cli.command {
        Command::Stationary(c) => {
            let cfg = load(&c)?;
            let out = commands::cmd_stationary(&cfg)?;
            (cfg, out)
        }
        Command::Mixing {
            common,
            exact,
            montecarlo,
        } => {
            let mut cfg = load(&common)?;
            if exact {
                cfg.mixing.method = MixingMethod::Exact;
            } else if montecarlo {
                cfg.mixing.method = MixingMethod::Montecarlo;
            }
            let out = commands::cmd_mixing(&cfg)?;
            (cfg, out)
        }
        Command::Fugacity(c) => {
            let cfg = load(&c)?;
            let out = commands::cmd_fugacity(&cfg)?;
            (cfg, out)
        }
        Command::Simulate(c) => {
            let cfg = load(&c)?;
            let out = commands::cmd_simulate(&cfg)?;
            (cfg, out)
        }
    };
    emit(&cfg, &out)?;
    Ok(out.exit_code)
}

fn emit(cfg: &ExperimentConfig, out: &Outputs) -> Result<(), CliError> {
    match &cfg.output.dir {
        Some(dir) => {
            for path in out.write(cfg, dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            // Tables are inlined so nothing is lost without a directory.
            let mut cfg = cfg.clone();
            cfg.output.format = Format::Json;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for (_, bytes) in out.render(&cfg)? {
                lock.write_all(&bytes)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
