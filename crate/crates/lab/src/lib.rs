//! Std companion of `semilab-core`: registry manifests, experiment configs,
//! the experiment runner, the verification suite and their output files.

pub mod artifacts;
pub mod config;
pub mod experiments;
pub mod manifest;
pub mod verify;

use std::time::Instant;

use anyhow::{bail, Result};

use artifacts::{ExperimentRecord, Output, RunManifest, Verdict, Writer};
use config::{Experiment, ExperimentConfig};
use manifest::load_registry;

pub const ARTIFACT: &str = "semilab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn manifest_for(cfg: &ExperimentConfig, registry: &manifest::RegistryManifest) -> RunManifest {
    RunManifest {
        artifact: ARTIFACT,
        version: VERSION,
        config: cfg.clone(),
        registry: serde_json::to_value(registry).expect("registry serializes"),
        experiments: Vec::new(),
        files: Vec::new(),
        wall_clock_seconds: 0.0,
    }
}

/// Runs one experiment and writes its files into `cfg.out`.
pub fn cmd_run(exp: Experiment, cfg: &ExperimentConfig) -> Result<(RunManifest, Output)> {
    let start = Instant::now();
    let (regfile, reg) = load_registry(cfg.registry.as_deref())?;
    let out = experiments::run(exp, cfg, &reg)?;
    let mut w = Writer::new(&cfg.out)?;
    w.experiment(exp.name(), cfg, &out)?;
    let mut m = manifest_for(cfg, &regfile);
    m.experiments.push(ExperimentRecord { name: exp.name().into(), passed: out.passed(), verdicts: out.verdicts.clone() });
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok((w.finish(m)?, out))
}

/// Runs the invariant suite, writes `report.txt` and the manifest, and
/// returns the verdicts. `progress` sees each verdict as it completes.
pub fn cmd_verify(cfg: &ExperimentConfig, progress: impl FnMut(&Verdict)) -> Result<(RunManifest, Vec<Verdict>)> {
    let start = Instant::now();
    let (regfile, reg) = load_registry(cfg.registry.as_deref())?;
    let verdicts = verify::Suite::new(cfg, &reg).run(progress);
    let mut w = Writer::new(&cfg.out)?;
    w.text("report.txt", &report_text(&verdicts), "one line per check: PASS or FAIL, name, detail")?;
    let mut m = manifest_for(cfg, &regfile);
    m.experiments.push(ExperimentRecord {
        name: "verify".into(),
        passed: verdicts.iter().all(|v| v.passed),
        verdicts: verdicts.clone(),
    });
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok((w.finish(m)?, verdicts))
}

pub fn report_line(v: &Verdict) -> String {
    let status = if v.passed { "PASS" } else { "FAIL" };
    if v.detail.is_empty() {
        format!("{status} {}", v.name)
    } else {
        format!("{status} {}: {}", v.name, v.detail)
    }
}

pub fn report_text(verdicts: &[Verdict]) -> String {
    verdicts.iter().map(|v| report_line(v) + "\n").collect()
}

/// `Err` with the first failing verdict, if any.
pub fn first_failure(verdicts: &[Verdict]) -> Result<()> {
    match verdicts.iter().find(|v| !v.passed) {
        Some(v) => bail!("{}", report_line(v)),
        None => Ok(()),
    }
}
