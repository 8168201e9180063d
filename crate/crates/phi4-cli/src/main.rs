mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::{
    ComedownArgs, CumulantArgs, PowercountArgs, RegularityArgs, RenormArgs, SampleArgs, SimulateArgs, TreesArgs,
};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_REFUSED: u8 = 4;
pub const EXIT_BLOWUP: u8 = 5;
pub const EXIT_INPUT: u8 = 6;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O or other failure
  2  unknown flag or malformed flag value
  3  invalid configuration (config file, or parameters rejected by validation)
  4  refused experiment precondition (cutoff, burn-in, too few samples or levels, graph too large)
  5  numerical blow-up (partial outputs and manifest are still written)
  6  malformed input file (graph or field)

Config files (--config) hold `key = value` lines, optionally under
`[subcommand]` sections, or the same layout as JSON. A manifest.json from an
earlier run is accepted and replays its resolved options. Flags on the command
line override the file; both are recorded in the manifest.";

#[derive(Parser, Debug)]
#[command(name = "phi4", version, about = "Stochastic quantization of the Phi^4 model on flat tori", after_help = EXIT_CODES)]
#[command(args_override_self = true)]
struct Cli {
    /// Config file (sections or JSON, or a manifest to replay).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "PHI4_OUT_DIR", default_value = "phi4-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the renormalized equation and write diagnostics and checkpoints.
    Simulate(SimulateArgs),
    /// Sample the enhanced noise, or sweep r to report counterterm divergences.
    Trees(TreesArgs),
    /// Sweep r and tabulate closed-form against numerical counterterms.
    #[command(name = "renorm-constants")]
    RenormConstants(RenormArgs),
    /// Power-count every relevant subgraph of the graphs in a file.
    Powercount(PowercountArgs),
    /// Estimate the Hoelder-Besov regularity of a tree from dyadic block variances.
    Regularity(RegularityArgs),
    /// Run the coming-down-from-infinity experiment.
    Comedown(ComedownArgs),
    /// Fourth cumulant of smoothed invariant samples against the probe scale.
    Cumulant(CumulantArgs),
    /// Draw Birkhoff samples of the invariant measure.
    Sample(SampleArgs),
}

/// Options of `name` that may appear in a config file: all long flags, and
/// which of them are switches.
fn known_options(name: &str) -> (Vec<String>, Vec<String>) {
    let cmd = Cli::command();
    let mut known = Vec::new();
    let mut flags = Vec::new();
    if let Some(sub) = cmd.find_subcommand(name) {
        for arg in sub.get_arguments() {
            let Some(long) = arg.get_long() else { continue };
            if matches!(long, "config" | "help" | "version") {
                continue;
            }
            known.push(long.to_string());
            if matches!(arg.get_action(), ArgAction::SetTrue) {
                flags.push(long.to_string());
            }
        }
    }
    known.push("out".into());
    (known, flags)
}

fn parse(argv: Vec<String>) -> Result<(Cli, Option<config::ConfigFile>), anyhow::Error> {
    let first = Cli::try_parse_from(&argv)?;
    let Some(path) = first.config.clone() else { return Ok((first, None)) };
    let cfg = config::load(&path)?;
    let name = first.command.name();
    let (known, flags) = known_options(name);
    let injected = cfg.to_args(name, &known, &flags)?;
    // config values go right after the subcommand so that later flags win
    let at = argv.iter().skip(1).position(|a| a == name).map_or(argv.len(), |i| i + 2);
    let mut merged: Vec<String> = argv[..at].to_vec();
    merged.extend(injected);
    merged.extend(argv[at..].iter().cloned());
    let matches = Cli::command().try_get_matches_from(&merged)?;
    Ok((Cli::from_arg_matches(&matches)?, Some(cfg)))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Trees(_) => "trees",
            Command::RenormConstants(_) => "renorm-constants",
            Command::Powercount(_) => "powercount",
            Command::Regularity(_) => "regularity",
            Command::Comedown(_) => "comedown",
            Command::Cumulant(_) => "cumulant",
            Command::Sample(_) => "sample",
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<clap::Error>() {
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
        if cause.downcast_ref::<config::ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if cause.downcast_ref::<commands::UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if cause.downcast_ref::<commands::Stopped>().is_some() {
            return EXIT_BLOWUP;
        }
        if let Some(e) = cause.downcast_ref::<phi4::Error>() {
            use phi4::Error::*;
            return match e {
                InvalidGrid(_) | GridMismatch | NonFiniteMultiplier { .. } | NonPositiveStep(_) | InvalidArgument(_) => {
                    EXIT_CONFIG
                }
                InsufficientCutoff { .. }
                | TooFewSamples { .. }
                | TooFewLevels { .. }
                | HypothesisViolated { .. }
                | Refused(_) => EXIT_REFUSED,
                BlowUp { .. } => EXIT_BLOWUP,
                Format(_) => EXIT_INPUT,
                Io(_) => EXIT_FAILURE,
            };
        }
        if let Some(e) = cause.downcast_ref::<phi4_graph::GraphError>() {
            return match e {
                phi4_graph::GraphError::Parse(_) => EXIT_INPUT,
                phi4_graph::GraphError::TooLarge { .. } => EXIT_REFUSED,
            };
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let result = parse(argv.clone()).and_then(|(cli, cfg)| {
        let ctx = commands::Context { out: cli.out.clone(), config: cfg, flags: argv[1..].to_vec() };
        match cli.command {
            Command::Simulate(a) => commands::simulate(&ctx, a),
            Command::Trees(a) => commands::trees(&ctx, a),
            Command::RenormConstants(a) => commands::renorm_constants(&ctx, a),
            Command::Powercount(a) => commands::powercount(&ctx, a),
            Command::Regularity(a) => commands::regularity(&ctx, a),
            Command::Comedown(a) => commands::comedown(&ctx, a),
            Command::Cumulant(a) => commands::cumulant(&ctx, a),
            Command::Sample(a) => commands::sample(&ctx, a),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let Some(e) = err.downcast_ref::<clap::Error>() {
                let _ = e.print();
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
