use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kpn::algebra::SplitMode;
use kpn::run::{
    cmd_correspondence, cmd_flow, cmd_krichever, cmd_verify, error_exit_code, render,
    with_overrides, Outcome, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "kpn",
    version,
    about = "Exact computations for the multi-variable KP hierarchy"
)]
struct Cli {
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the random generator for random seeds and points.
    #[arg(long, global = true)]
    seed_rng: Option<u64>,
    #[arg(long, global = true, value_enum)]
    split_mode: Option<Split>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Revlex,
    Componentwise,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flows from a seed and check the Lax and wave identities.
    Flow,
    /// Round trip between a point and its wave function, bilinear identity.
    Correspondence,
    /// Build the point of a geometry and, in the big cell, its solution.
    Krichever {
        /// Keep functions with 0 ⊆ v(f) instead of v(f) ⊆ 0.
        #[arg(long)]
        literal_v_filter: bool,
    },
    /// Recheck a saved report.
    Verify { report: PathBuf },
}

fn run(cli: &Cli) -> kpn::Result<Outcome> {
    if let Command::Verify { report } = &cli.command {
        let text = std::fs::read_to_string(report)
            .map_err(|e| kpn::Error::Usage(format!("cannot read {}: {e}", report.display())))?;
        let v = serde_json::from_str(&text)
            .map_err(|e| kpn::Error::Usage(format!("{}: {e}", report.display())))?;
        return cmd_verify(&v);
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let split = cli.split_mode.map(|s| match s {
        Split::Revlex => SplitMode::Revlex,
        Split::Componentwise => SplitMode::Componentwise,
    });
    let literal = matches!(
        cli.command,
        Command::Krichever {
            literal_v_filter: true
        }
    );
    let cfg = with_overrides(cfg, cli.seed_rng, split, literal).resolve()?;
    match cli.command {
        Command::Flow => cmd_flow(&cfg),
        Command::Correspondence => cmd_correspondence(&cfg),
        Command::Krichever { .. } => cmd_krichever(&cfg),
        Command::Verify { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KPN_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let text = render(&outcome.report);
            let written = match &cli.out {
                Some(p) => std::fs::write(p, text)
                    .map_err(|e| format!("cannot write {}: {e}", p.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("kpn: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("kpn: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
