//! Offline dataset emitter.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use homgen_core::pipeline::{sample_at, sample_from_seed, FrameSource, GeneratedSample, PipelineConfig};
use homgen_core::rng::derive_seed;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifest::{
    homography_row_major, ManifestHeader, ManifestLine, ManifestSummary, SampleRecord, SkippedRecord,
};
use crate::pnm;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SAMPLE_DIR: &str = "samples";
const CHUNK: u64 = 64;

pub struct GenerateOptions<'a> {
    pub num_samples: u64,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Echoed into the manifest header.
    pub config_echo: &'a serde_json::Value,
}

enum Outcome {
    Written(Box<SampleRecord>, Vec<u8>, Vec<u8>),
    Skipped(SkippedRecord),
}

fn record_for(s: &GeneratedSample) -> SampleRecord {
    let rect = s
        .sample
        .crop_polygon
        .as_axis_rect()
        .and_then(|r| r.to_pixels())
        .expect("pipeline crops are pixel rectangles");
    let stem = format!("{:06}", s.index);
    SampleRecord {
        index: s.index,
        seed: s.seed,
        sequence: s.sequence,
        anchor_frame: s.anchor_frame,
        offset_frame: s.offset_frame,
        t: s.t(),
        crop: [rect.0 as u32, rect.1 as u32, rect.2 as u32, rect.3 as u32],
        four_point: s.sample.label,
        homography: s
            .sample
            .motion
            .homography()
            .map(|g| homography_row_major(&g))
            .unwrap_or([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
        fallback: s.sample.motion.fallback,
        rollouts_used: s.sample.motion.rollouts_used,
        fill_pixels: s.sample.fill_pixels,
        augmentation: s.sample.augmentation.clone(),
        anchor_file: format!("{SAMPLE_DIR}/{stem}_anchor.ppm"),
        offset_file: format!("{SAMPLE_DIR}/{stem}_offset.ppm"),
    }
}

fn build<S: FrameSource + Sync + ?Sized>(source: &S, cfg: &PipelineConfig, index: u64) -> Outcome {
    match sample_at(source, cfg, index) {
        Ok(s) => Outcome::Written(
            Box::new(record_for(&s)),
            pnm::encode(&s.sample.anchor_crop),
            pnm::encode(&s.sample.warped_offset_crop),
        ),
        Err(e) => {
            log::warn!("sample {index} skipped: {e}");
            Outcome::Skipped(SkippedRecord {
                index,
                seed: derive_seed(cfg.master_seed, index),
                error: e.to_string(),
            })
        }
    }
}

fn write_line(w: &mut impl Write, line: &ManifestLine, path: &Path) -> Result<()> {
    serde_json::to_writer(&mut *w, line).expect("manifest lines serialize");
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

/// Writes `num_samples` samples and the manifest into `out_dir`. Samples are
/// built in parallel and written in index order, so the output depends only on
/// the source, the config and the master seed.
pub fn generate_dataset<S: FrameSource + Sync + ?Sized>(
    source: &S,
    cfg: &PipelineConfig,
    out_dir: &Path,
    opts: &GenerateOptions,
) -> Result<ManifestSummary> {
    cfg.validate()?;
    if opts.num_samples > 0 && source.total_frames() == 0 {
        return Err(homgen_core::Error::EmptyInput.into());
    }
    let sample_dir = out_dir.join(SAMPLE_DIR);
    fs::create_dir_all(&sample_dir).map_err(|e| Error::io(&sample_dir, e))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut out = BufWriter::new(file);

    let header = ManifestHeader {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: cfg.master_seed,
        requested: opts.num_samples,
        config: opts.config_echo.clone(),
    };
    write_line(&mut out, &ManifestLine::Header(header), &manifest_path)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::parse("thread pool", 0, e))?;

    let mut summary = ManifestSummary { written: 0, skipped: 0 };
    let mut start = 0;
    while start < opts.num_samples {
        let end = (start + CHUNK).min(opts.num_samples);
        let outcomes: Vec<Outcome> = pool.install(|| (start..end).into_par_iter().map(|i| build(source, cfg, i)).collect());
        for outcome in outcomes {
            match outcome {
                Outcome::Written(rec, anchor, offset) => {
                    for (name, bytes) in [(&rec.anchor_file, anchor), (&rec.offset_file, offset)] {
                        let p = out_dir.join(name);
                        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
                    }
                    write_line(&mut out, &ManifestLine::Sample(*rec), &manifest_path)?;
                    summary.written += 1;
                }
                Outcome::Skipped(rec) => {
                    write_line(&mut out, &ManifestLine::Skipped(rec), &manifest_path)?;
                    summary.skipped += 1;
                }
            }
        }
        start = end;
    }
    write_line(&mut out, &ManifestLine::Summary(summary), &manifest_path)?;
    out.flush().map_err(|e| Error::io(&manifest_path, e))?;
    log::info!("wrote {} samples ({} skipped) to {}", summary.written, summary.skipped, out_dir.display());
    Ok(summary)
}

/// Rebuilds a manifest sample from its recorded seed.
pub fn regenerate<S: FrameSource + ?Sized>(source: &S, cfg: &PipelineConfig, rec: &SampleRecord) -> Result<GeneratedSample> {
    let mut s = sample_from_seed(source, cfg, rec.seed)?;
    s.index = rec.index;
    Ok(s)
}
