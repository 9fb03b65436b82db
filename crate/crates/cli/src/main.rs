use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rollerchain::codec::Decode;
use rollerchain::node::ChainDump;
use rollerchain::simnet::run_experiment;
use rollerchain_cli::{
    exit, params_text, resolve_out, verify_chain, write_outputs, ChainVerdict, Scenario, OUT_ENV,
};

/// Rollerchain simulator and chain checker.
#[derive(Parser)]
#[command(name = "rollerchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment a scenario describes and write its outputs.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory; beats the scenario's `out` and $ROLLERCHAIN_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a chain dump written by `run`.
    VerifyChain {
        chain: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Print resolved parameters and derived quantities.
    PrintParams {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file of `key=value` lines; defaults apply without one.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `KEY=VALUE` settings applied after the file.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<Scenario, String> {
        let mut sc = match &self.scenario {
            Some(path) => Scenario::load(path).map_err(|e| e.to_string())?,
            None => Scenario::default(),
        };
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        sc.apply_overrides(&overrides).map_err(|e| e.to_string())?;
        Ok(sc)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(match cli.command {
        Command::Run { scenario, out } => run(&scenario, out),
        Command::VerifyChain { chain, scenario } => verify(&chain, &scenario),
        Command::PrintParams { scenario } => match scenario.resolve() {
            Ok(sc) => match params_text(&sc.config) {
                Ok(text) => {
                    print!("{text}");
                    exit::OK
                }
                Err(e) => parse_error(e),
            },
            Err(e) => parse_error(e),
        },
    })
}

fn parse_error(e: impl std::fmt::Display) -> u8 {
    eprintln!("error: {e}");
    exit::PARSE_ERROR
}

fn run(args: &ScenarioArgs, out: Option<PathBuf>) -> u8 {
    let sc = match args.resolve() {
        Ok(sc) => sc,
        Err(e) => return parse_error(e),
    };
    let output = match run_experiment(&sc.config) {
        Ok(o) => o,
        Err(e) => return parse_error(e),
    };
    let dir = resolve_out(out, sc.out, std::env::var(OUT_ENV).ok());
    if let Err(e) = write_outputs(&dir, &sc.config, &output) {
        eprintln!("error: writing {}: {e}", dir.display());
        return exit::PARSE_ERROR;
    }
    print!("{}", output.report.to_kv());
    println!("out={}", dir.display());
    if output.violations.is_empty() {
        exit::OK
    } else {
        for v in &output.violations {
            eprintln!("violation: {v}");
        }
        exit::INVARIANT_VIOLATION
    }
}

fn verify(chain: &PathBuf, args: &ScenarioArgs) -> u8 {
    let sc = match args.resolve() {
        Ok(sc) => sc,
        Err(e) => return parse_error(e),
    };
    let bytes = match std::fs::read(chain) {
        Ok(b) => b,
        Err(e) => return parse_error(format!("cannot read {}: {e}", chain.display())),
    };
    let dump = match ChainDump::decode(&bytes) {
        Ok(d) => d,
        Err(e) => return parse_error(format!("{}: {e}", chain.display())),
    };
    match verify_chain(&dump, &sc.config) {
        Ok(ChainVerdict::Valid {
            height,
            blocks,
            content_checked,
        }) => {
            println!("valid height={height} blocks={blocks} content_checked={content_checked}");
            exit::OK
        }
        Ok(ChainVerdict::Invalid { height, reason }) => {
            println!("invalid height={height}: {reason}");
            exit::INVALID_CHAIN
        }
        Err(e) => parse_error(e),
    }
}
