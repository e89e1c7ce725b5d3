//! Experiment configuration: a JSON file whose fields can be overridden by
//! command-line flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use semilab_core::alphabet::{Alphabet, Budget};
use semilab_core::prob::{parse_rational, Rational};
use semilab_core::real::Precision;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SolomonoffConvergence,
    Lemma1Bounds,
    Counterexample,
    Prop1,
    Prop2,
    AntiDominance,
    Poly3Limit,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::SolomonoffConvergence,
        Experiment::Lemma1Bounds,
        Experiment::Counterexample,
        Experiment::Prop1,
        Experiment::Prop2,
        Experiment::AntiDominance,
        Experiment::Poly3Limit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SolomonoffConvergence => "solomonoff-convergence",
            Experiment::Lemma1Bounds => "lemma1-bounds",
            Experiment::Counterexample => "counterexample",
            Experiment::Prop1 => "prop1",
            Experiment::Prop2 => "prop2",
            Experiment::AntiDominance => "anti-dominance",
            Experiment::Poly3Limit => "poly3-limit",
        }
    }

    /// Horizon used when neither the config file nor the flags give one.
    pub fn default_horizon(self) -> usize {
        match self {
            Experiment::SolomonoffConvergence | Experiment::Prop1 | Experiment::Prop2 => 200,
            Experiment::Lemma1Bounds => 10,
            Experiment::Counterexample => 30,
            Experiment::AntiDominance => 40,
            Experiment::Poly3Limit => 1_000_000,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownExperiment(pub String);

impl fmt::Display for UnknownExperiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let known: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        write!(f, "unknown experiment '{}' (expected one of {})", self.0, known.join(", "))
    }
}

impl std::error::Error for UnknownExperiment {}

impl FromStr for Experiment {
    type Err = UnknownExperiment;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| UnknownExperiment(s.to_string()))
    }
}

/// Every field is optional; missing ones fall back to [`ExperimentConfig`] defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<String>,
    pub registry: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub stages: Option<u32>,
    pub depth: Option<usize>,
    pub precision: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// 1-based registry index of the measure `ω` is sampled from.
    pub mu: Option<usize>,
    /// Registry index `k₀` for the convergence experiment.
    pub k0: Option<usize>,
    /// Contamination weight of `M′`, as "num/den".
    pub gamma: Option<String>,
    /// Slack factor for the convergence bounds, as "num/den".
    pub slack: Option<String>,
    /// Cap on the number of strings of one length enumerated exhaustively.
    pub budget: Option<u128>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            experiment: other.experiment.or(self.experiment),
            registry: other.registry.or(self.registry),
            horizon: other.horizon.or(self.horizon),
            stages: other.stages.or(self.stages),
            depth: other.depth.or(self.depth),
            precision: other.precision.or(self.precision),
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
            mu: other.mu.or(self.mu),
            k0: other.k0.or(self.k0),
            gamma: other.gamma.or(self.gamma),
            slack: other.slack.or(self.slack),
            budget: other.budget.or(self.budget),
        }
    }
}

/// A fully resolved configuration. Serialized verbatim into every run manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    /// `None` selects the shipped default registry.
    pub registry: Option<PathBuf>,
    pub horizon: usize,
    pub stages: u32,
    pub depth: usize,
    pub precision: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub mu: usize,
    pub k0: usize,
    pub gamma: String,
    pub slack: String,
    pub budget: u128,
}

pub const DEFAULT_STAGES: u32 = 64;
pub const DEFAULT_DEPTH: usize = 8;
pub const DEFAULT_VERIFY_HORIZON: usize = 10;
/// Staircase B(2/3) in the default registry.
pub const DEFAULT_MU: usize = 3;
pub const DEFAULT_GAMMA: &str = "1/9";
pub const DEFAULT_SLACK: &str = "1";
/// Depth used by the exhaustive suites, which grow as `N^depth`.
pub const MAX_DEPTH: usize = 24;

impl ExperimentConfig {
    pub fn resolve(file: ConfigFile) -> Result<Self> {
        let experiment = file.experiment.as_deref().map(Experiment::from_str).transpose()?;
        let horizon = file
            .horizon
            .unwrap_or_else(|| experiment.map_or(DEFAULT_VERIFY_HORIZON, Experiment::default_horizon));
        let out = file
            .out
            .unwrap_or_else(|| PathBuf::from("out").join(experiment.map_or("verify", Experiment::name)));
        let mu = file.mu.unwrap_or(DEFAULT_MU);
        let cfg = ExperimentConfig {
            experiment,
            registry: file.registry,
            horizon,
            stages: file.stages.unwrap_or(DEFAULT_STAGES),
            depth: file.depth.unwrap_or(DEFAULT_DEPTH),
            precision: file.precision.unwrap_or(Precision::DEFAULT.bits()),
            seed: file.seed.unwrap_or(0),
            out,
            mu,
            k0: file.k0.unwrap_or(mu),
            gamma: file.gamma.unwrap_or_else(|| DEFAULT_GAMMA.to_string()),
            slack: file.slack.unwrap_or_else(|| DEFAULT_SLACK.to_string()),
            budget: file.budget.unwrap_or(Budget::DEFAULT.max_strings),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        Precision::new(self.precision).map_err(anyhow::Error::msg)?;
        if self.depth > MAX_DEPTH {
            bail!("depth {} is above the cap {MAX_DEPTH}", self.depth);
        }
        self.budget().check_level(Alphabet::BINARY, self.depth).map_err(anyhow::Error::msg)?;
        if self.stages == 0 {
            bail!("stages must be positive");
        }
        if self.mu == 0 || self.k0 == 0 {
            bail!("registry indices start at 1");
        }
        self.gamma()?;
        self.slack()?;
        Ok(())
    }

    pub fn precision(&self) -> Precision {
        Precision::new(self.precision).expect("validated")
    }

    pub fn budget(&self) -> Budget {
        Budget::new(self.budget)
    }

    pub fn gamma(&self) -> Result<Rational> {
        parse_rational(&self.gamma).map_err(|e| anyhow::anyhow!("gamma: {e}"))
    }

    pub fn slack(&self) -> Result<Rational> {
        parse_rational(&self.slack).map_err(|e| anyhow::anyhow!("slack: {e}"))
    }

    /// Precision below 64 bits leaves a tolerance coarse enough to hide
    /// genuine violations of small inequalities.
    pub fn precision_warning(&self) -> Option<String> {
        let p = self.precision();
        (p.bits() < 64).then(|| {
            format!(
                "warning: precision {} bits gives tolerance 2^-{}; inequality verdicts may absorb rounding",
                p.bits(),
                p.tolerance_bits()
            )
        })
    }
}
