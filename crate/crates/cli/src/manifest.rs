use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};
use surfpinn_core::inverse::{Experiment, Preset};
use surfpinn_core::io::ManifestFormat;

/// Everything needed to rerun a command: the fully resolved experiment, the
/// seeds, the inputs and what was written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub seed: u64,
    pub runs: usize,
    pub workers: usize,
    pub experiment: Experiment,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub summary: Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &str, preset: Option<Preset>, seed: u64, runs: usize, workers: usize, experiment: Experiment) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            preset,
            seed,
            runs,
            workers,
            experiment,
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: Map::new(),
        }
    }

    /// Format chosen by extension: `.json` or anything else as key-value.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let format = if path.extension().is_some_and(|e| e == "json") {
            ManifestFormat::Json
        } else {
            ManifestFormat::Kv
        };
        format
            .parse(text)
            .with_context(|| format!("parsing manifest {}", path.display()))
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary
            .insert(key.to_string(), serde_json::to_value(value).expect("summary values serialize"));
    }
}

/// Output directory plus the manifest being filled in.
pub struct Outputs {
    pub dir: PathBuf,
    pub format: ManifestFormat,
    pub manifest: Manifest,
}

impl Outputs {
    pub fn new(dir: &Path, format: ManifestFormat, manifest: Manifest) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            manifest,
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        Ok(path)
    }

    pub fn input(&mut self, path: &Path) {
        self.manifest.inputs.push(path.display().to_string());
    }

    /// Writes `<command>.manifest.<ext>` and returns its path.
    pub fn finish(self) -> Result<PathBuf> {
        let name = format!("{}.manifest.{}", self.manifest.command, self.format.extension());
        let path = self.dir.join(name);
        let text = self.format.render(&self.manifest)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifests_round_trip_in_both_formats() {
        let mut m = Manifest::new("sweep", Some(Preset::Desk), 3, 5, 2, Preset::Desk.experiment());
        m.outputs.push("sweep.csv".into());
        m.note("monotone_increasing", true);
        m.note("means", vec![1.5, 2.25]);
        for (format, name) in [(ManifestFormat::Json, "m.json"), (ManifestFormat::Kv, "m.kv")] {
            let text = format.render(&m).unwrap();
            assert_eq!(Manifest::parse(Path::new(name), &text).unwrap(), m);
        }
    }
}
