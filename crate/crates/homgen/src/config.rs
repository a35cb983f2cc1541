//! JSON configuration for `generate`: the pipeline settings plus a `dataset`
//! section naming the frame sequences.

use std::fs;
use std::path::{Path, PathBuf};

use homgen_core::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the frames live. Either list sequences explicitly or point `root` at
/// a directory whose subdirectories are sequences (or which holds the frames
/// of a single sequence). Relative paths resolve against the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub root: Option<PathBuf>,
    pub sequences: Vec<Vec<PathBuf>>,
    /// Informational only.
    pub fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub pipeline: PipelineConfig,
    pub dataset: DatasetSpec,
    pub base_dir: PathBuf,
}

impl GenerateConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse("config", e.line(), e))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::parse("config", 1, "top level must be an object"))?;
        let dataset = match obj.remove("dataset") {
            Some(v) => serde_json::from_value(v).map_err(|e| Error::parse("config.dataset", 0, e))?,
            None => DatasetSpec::default(),
        };
        let pipeline: PipelineConfig = serde_json::from_value(value).map_err(|e| Error::parse("config", 0, e))?;
        pipeline.validate()?;
        Ok(Self {
            pipeline,
            dataset,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&text, base)
    }

    /// The config as JSON, with the dataset section merged in.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.pipeline).expect("config serializes");
        v["dataset"] = serde_json::to_value(&self.dataset).expect("dataset serializes");
        v
    }

    /// Frame paths per sequence, resolved and sorted.
    pub fn sequences(&self) -> Result<Vec<Vec<PathBuf>>> {
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { self.base_dir.join(p) };
        let mut out: Vec<Vec<PathBuf>> = self
            .dataset
            .sequences
            .iter()
            .map(|s| s.iter().map(resolve).collect())
            .collect();
        if let Some(root) = &self.dataset.root {
            out.extend(scan_root(&resolve(root))?);
        }
        out.retain(|s| !s.is_empty());
        Ok(out)
    }
}

fn is_frame(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("ppm" | "pgm" | "pnm")
    )
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    Ok(entries)
}

fn scan_root(root: &Path) -> Result<Vec<Vec<PathBuf>>> {
    let entries = sorted_entries(root)?;
    let frames: Vec<PathBuf> = entries.iter().filter(|p| p.is_file() && is_frame(p)).cloned().collect();
    let mut seqs = Vec::new();
    if !frames.is_empty() {
        seqs.push(frames);
    }
    for dir in entries.iter().filter(|p| p.is_dir()) {
        let frames: Vec<PathBuf> = sorted_entries(dir)?.into_iter().filter(|p| p.is_file() && is_frame(p)).collect();
        if !frames.is_empty() {
            seqs.push(frames);
        }
    }
    Ok(seqs)
}
