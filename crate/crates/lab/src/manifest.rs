//! Registry manifest files.
//!
//! ```json
//! { "alphabet": 2,
//!   "entries": [ { "index": 1, "family": "bernoulli", "params": ["1/3"],
//!                  "code_length": 2, "is_measure": true } ] }
//! ```

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use semilab_core::alphabet::Alphabet;
use semilab_core::registry::{default_registry, default_specs, EntrySpec, ModelRegistry, FAMILIES};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub index: usize,
    pub family: String,
    /// Exact rationals are written "numerator/denominator".
    #[serde(default)]
    pub params: Vec<String>,
    pub code_length: u32,
    pub is_measure: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryManifest {
    #[serde(default = "binary")]
    pub alphabet: usize,
    pub entries: Vec<ManifestEntry>,
}

fn binary() -> usize {
    2
}

impl RegistryManifest {
    pub fn default_manifest() -> Self {
        let entries = default_specs()
            .into_iter()
            .enumerate()
            .map(|(i, s)| ManifestEntry {
                index: i + 1,
                family: s.family,
                params: s.params,
                code_length: s.code_length,
                is_measure: s.is_measure,
            })
            .collect();
        RegistryManifest { alphabet: 2, entries }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading registry {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing registry {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn build(&self) -> Result<ModelRegistry> {
        let alphabet = Alphabet::new(self.alphabet)?;
        let mut specs = Vec::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            if e.index != i + 1 {
                bail!("entry {} has index {}; indices must run 1, 2, 3, ...", i + 1, e.index);
            }
            if !FAMILIES.contains(&e.family.as_str()) {
                bail!("entry {}: unknown family '{}' (known: {})", e.index, e.family, FAMILIES.join(", "));
            }
            specs.push(EntrySpec {
                family: e.family.clone(),
                params: e.params.clone(),
                code_length: e.code_length,
                is_measure: e.is_measure,
            });
        }
        ModelRegistry::from_specs(alphabet, &specs).with_context(|| "building registry")
    }
}

/// The registry named by `path`, or the shipped default.
pub fn load_registry(path: Option<&Path>) -> Result<(RegistryManifest, ModelRegistry)> {
    match path {
        Some(p) => {
            let m = RegistryManifest::load(p)?;
            let reg = m.build()?;
            Ok((m, reg))
        }
        None => Ok((RegistryManifest::default_manifest(), default_registry()?)),
    }
}
