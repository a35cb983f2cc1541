//! Dataset manifest: JSON lines, one header, one record per sample (or per
//! skipped sample) and a closing summary.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use homgen_core::augment::AugmentationSpec;
use homgen_core::homography::{FourPointHomography, Homography};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifestLine {
    Header(ManifestHeader),
    Sample(SampleRecord),
    Skipped(SkippedRecord),
    Summary(ManifestSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub requested: u64,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: u64,
    pub seed: u64,
    pub sequence: usize,
    pub anchor_frame: usize,
    pub offset_frame: usize,
    pub t: i64,
    /// `[x, y, width, height]` of the crop in the pre-resized frame.
    pub crop: [u32; 4],
    pub four_point: FourPointHomography,
    /// Label homography `G`, row-major, scaled so that `g22 = 1` when possible.
    pub homography: [f64; 9],
    pub fallback: bool,
    pub rollouts_used: u32,
    pub fill_pixels: usize,
    pub augmentation: AugmentationSpec,
    pub anchor_file: String,
    pub offset_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub index: u64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestSummary {
    pub written: u64,
    pub skipped: u64,
}

pub fn homography_row_major(g: &Homography) -> [f64; 9] {
    let m = g.g22_normalized().unwrap_or_else(|| g.normalized());
    std::array::from_fn(|i| m[(i / 3, i % 3)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub samples: Vec<SampleRecord>,
    pub skipped: Vec<SkippedRecord>,
    pub summary: Option<ManifestSummary>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let (mut samples, mut skipped, mut summary) = (Vec::new(), Vec::new(), None);
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ManifestLine = serde_json::from_str(&line).map_err(|e| Error::parse(path.display(), i + 1, e))?;
        match parsed {
            ManifestLine::Header(h) if header.is_none() && i == 0 => header = Some(h),
            ManifestLine::Header(_) => return Err(Error::parse(path.display(), i + 1, "header must be the first line")),
            ManifestLine::Sample(s) => samples.push(s),
            ManifestLine::Skipped(s) => skipped.push(s),
            ManifestLine::Summary(s) => summary = Some(s),
        }
    }
    let header = header.ok_or_else(|| Error::parse(path.display(), 1, "missing header"))?;
    Ok(Manifest {
        header,
        samples,
        skipped,
        summary,
    })
}
