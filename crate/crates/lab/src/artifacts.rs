//! Output files of one run: CSV tables, plot scripts, the result JSON and the
//! run manifest listing each file with its SHA-256 digest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub doc: String,
}

pub fn col(name: impl Into<String>, doc: impl Into<String>) -> Column {
    Column { name: name.into(), doc: doc.into() }
}

/// A CSV table plus the columns a plot script draws against the first one.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
    pub plot: Vec<usize>,
    pub log_y: bool,
}

impl Table {
    pub fn new(name: impl Into<String>, title: impl Into<String>, columns: Vec<Column>) -> Self {
        Table { name: name.into(), title: title.into(), columns, rows: Vec::new(), plot: Vec::new(), log_y: false }
    }

    pub fn plot(mut self, columns: &[usize]) -> Self {
        self.plot = columns.to_vec();
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn csv_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
    }

    fn plot_script(&self, seed: u64) -> String {
        let mut s = String::new();
        s.push_str(&format!("# {}\n# seed {seed}\n", self.title));
        s.push_str("set datafile separator ','\n");
        s.push_str("set terminal pngcairo size 960,600\n");
        s.push_str(&format!("set output '{}.png'\n", self.name));
        s.push_str(&format!("set title '{}'\n", self.title.replace('\'', "")));
        s.push_str(&format!("set xlabel '{}'\n", self.columns[0].name));
        s.push_str("set key left top\n");
        if self.log_y {
            s.push_str("set logscale y\n");
        }
        let lines: Vec<String> = self
            .plot
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let src = if i == 0 { format!("'{}'", self.csv_name()) } else { "''".to_string() };
                format!("{src} using 1:{} skip 1 with lines title '{}'", c + 1, self.columns[c].name)
            })
            .collect();
        s.push_str(&format!("plot {}\n", lines.join(", \\\n     ")));
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { name: name.into(), passed, detail: detail.into() }
    }
}

/// Everything an experiment produces before it is written to disk.
#[derive(Clone, Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    /// Named bound values and summary numbers, in insertion order.
    pub bounds: Vec<(String, Value)>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

impl Output {
    pub fn bound(&mut self, name: &str, v: impl Into<Value>) {
        self.bounds.push((name.to_string(), v.into()));
    }

    pub fn verdict(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict::new(name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
    pub kind: &'static str,
    pub description: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<Column>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRecord {
    pub name: String,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub registry: Value,
    pub experiments: Vec<ExperimentRecord>,
    pub files: Vec<FileRecord>,
    /// The only nondeterministic field; excluded from the digests above.
    pub wall_clock_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULT_FILE: &str = "result.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn pretty(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Collects files in memory so the manifest can list every one of them.
pub struct Writer {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Writer { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8], kind: &'static str, description: String, columns: Vec<Column>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
            kind,
            description,
            columns,
        });
        Ok(())
    }

    /// Writes the CSV tables, their plot scripts and the result JSON.
    pub fn experiment(&mut self, name: &str, cfg: &ExperimentConfig, out: &Output) -> Result<()> {
        let mut series = Vec::new();
        for t in &out.tables {
            self.write(&t.csv_name(), &t.csv_bytes()?, "csv", t.title.clone(), t.columns.clone())?;
            if !t.plot.is_empty() {
                let script = t.plot_script(cfg.seed);
                self.write(&format!("{}.gp", t.name), script.as_bytes(), "gnuplot", format!("plot of {}", t.csv_name()), vec![])?;
            }
            let mut values = serde_json::Map::new();
            for (i, c) in t.columns.iter().enumerate() {
                let column: Vec<Value> = t.rows.iter().map(|r| json_number(&r[i])).collect();
                values.insert(c.name.clone(), Value::Array(column));
            }
            series.push(serde_json::json!({ "name": t.name, "file": t.csv_name(), "values": values }));
        }
        let bounds: serde_json::Map<String, Value> = out.bounds.iter().cloned().collect();
        let result = serde_json::json!({
            "experiment": name,
            "seed": cfg.seed,
            "horizon": cfg.horizon,
            "series": series,
            "bounds": bounds,
            "verdicts": out.verdicts,
            "notes": out.notes,
        });
        self.write(RESULT_FILE, &pretty(&result)?, "json", format!("{name} series, bounds and verdicts"), vec![])
    }

    pub fn text(&mut self, name: &str, text: &str, description: &str) -> Result<()> {
        self.write(name, text.as_bytes(), "text", description.to_string(), vec![])
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.files = self.files;
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

/// Numeric cells become JSON numbers; anything else stays a string.
fn json_number(cell: &str) -> Value {
    if let Ok(i) = cell.parse::<i64>() {
        return Value::from(i);
    }
    match cell.parse::<f64>() {
        Ok(f) if f.is_finite() => Value::from(f),
        _ => Value::from(cell),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_input() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn csv_and_script() {
        let mut t = Table::new("s", "a series", vec![col("t", "step"), col("v", "value")]).plot(&[1]);
        t.push(vec!["1".into(), "0.5".into()]);
        assert_eq!(String::from_utf8(t.csv_bytes().unwrap()).unwrap(), "t,v\n1,0.5\n");
        let gp = t.plot_script(4);
        assert!(gp.contains("# seed 4") && gp.contains("'s.csv' using 1:2"));
    }

    #[test]
    fn cells_to_json() {
        assert_eq!(json_number("3"), Value::from(3));
        assert_eq!(json_number("2.5"), Value::from(2.5));
        assert_eq!(json_number("1/3"), Value::from("1/3"));
        assert_eq!(json_number("-inf"), Value::from("-inf"));
    }
}
