use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use semilab::config::{ConfigFile, Experiment, ExperimentConfig};
use semilab::manifest::RegistryManifest;
use semilab::{cmd_run, cmd_verify, first_failure, report_line};

#[derive(Parser)]
#[command(name = "semilab", version, about = "Exact semimeasure experiments and invariant checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exhaustive invariant suite; exits non-zero on the first failure.
    Verify(Flags),
    /// Run one experiment and write its CSV, JSON and plot files.
    Run {
        /// solomonoff-convergence, lemma1-bounds, counterexample, prop1, prop2, anti-dominance or poly3-limit
        experiment: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Print the default registry manifest.
    Registry,
}

#[derive(Args, Default)]
struct Flags {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registry manifest (JSON); the shipped default when absent.
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Stage cap T of the staged semimeasures.
    #[arg(long)]
    stages: Option<u32>,
    /// Depth of exhaustive enumerations.
    #[arg(long)]
    depth: Option<usize>,
    /// Working precision in bits.
    #[arg(long)]
    precision: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Registry index of the measure omega is sampled from.
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    /// Contamination weight, "num/den".
    #[arg(long)]
    gamma: Option<String>,
    /// Slack factor for the convergence bounds, "num/den".
    #[arg(long)]
    slack: Option<String>,
    /// Cap on strings of one length in exhaustive enumerations.
    #[arg(long)]
    budget: Option<u128>,
}

impl Flags {
    fn resolve(self, experiment: Option<String>) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let over = ConfigFile {
            experiment,
            registry: self.registry,
            horizon: self.horizon,
            stages: self.stages,
            depth: self.depth,
            precision: self.precision,
            seed: self.seed,
            out: self.out,
            mu: self.mu,
            k0: self.k0,
            gamma: self.gamma,
            slack: self.slack,
            budget: self.budget,
        };
        let cfg = ExperimentConfig::resolve(file.overridden_by(over))?;
        if let Some(w) = cfg.precision_warning() {
            eprintln!("{w}");
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Registry => {
            print!("{}", RegistryManifest::default_manifest().to_json());
            Ok(true)
        }
        Command::Verify(flags) => {
            let cfg = flags.resolve(None)?;
            let (_, verdicts) = cmd_verify(&cfg, |v| println!("{}", report_line(v)))?;
            println!("report written to {}", cfg.out.display());
            if let Err(e) = first_failure(&verdicts) {
                eprintln!("first failure: {e}");
                return Ok(false);
            }
            Ok(true)
        }
        Command::Run { experiment, flags } => {
            let exp: Experiment = experiment.parse()?;
            let cfg = flags.resolve(Some(experiment))?;
            let (manifest, out) = cmd_run(exp, &cfg)?;
            for v in &out.verdicts {
                println!("{}", report_line(v));
            }
            println!("{} files written to {}", manifest.files.len() + 1, cfg.out.display());
            Ok(out.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
