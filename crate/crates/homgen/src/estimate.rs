//! Classical pairwise estimation over a list of frames.

use std::path::{Path, PathBuf};

use homgen_core::classical::{estimate_pair, EstimatorConfig};
use homgen_core::geometry::rect_corners;
use homgen_core::homography::{matrix_to_four_point, FourPointHomography};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pnm;

#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub reference: PathBuf,
    pub offset: PathBuf,
    pub pair_id: String,
}

/// Parses a frame list. Lines holding one path form a sequence whose
/// consecutive frames are paired with ids `"i-(i+1)"`. Lines holding two paths
/// (and optionally an id) are explicit pairs, id defaulting to the line's pair
/// number. Blank lines and `#` comments are ignored; relative paths resolve
/// against `base`.
pub fn parse_frame_list(text: &str, base: &Path, what: &str) -> Result<Vec<FramePair>> {
    let resolve = |t: &str| {
        let p = PathBuf::from(t);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty() && !t[0].starts_with('#'))
        .collect();
    if lines.iter().all(|(_, t)| t.len() == 1) {
        return Ok(lines
            .windows(2)
            .enumerate()
            .map(|(i, w)| FramePair {
                reference: resolve(w[0].1[0]),
                offset: resolve(w[1].1[0]),
                pair_id: format!("{}-{}", i, i + 1),
            })
            .collect());
    }
    lines
        .iter()
        .enumerate()
        .map(|(k, (line, t))| match t.len() {
            2 | 3 => Ok(FramePair {
                reference: resolve(t[0]),
                offset: resolve(t[1]),
                pair_id: t.get(2).map_or_else(|| k.to_string(), |s| s.to_string()),
            }),
            n => Err(Error::parse(what, *line, format!("expected 2 or 3 fields in a pair list, got {n}"))),
        })
        .collect()
}

/// Output record: the four-point prediction plus the RANSAC inlier count.
/// Pairs where estimation fails carry a zero displacement and `ok = false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub pair_id: String,
    pub four_point: FourPointHomography,
    pub inliers: usize,
    pub ok: bool,
}

pub fn estimate_pairs(pairs: &[FramePair], cfg: &EstimatorConfig) -> Result<Vec<EstimateRecord>> {
    pairs
        .par_iter()
        .map(|p| {
            let a = pnm::read(&p.reference)?;
            let b = pnm::read(&p.offset)?;
            let corners = rect_corners(0.0, 0.0, a.width() as f64, a.height() as f64);
            let fit = estimate_pair(&a, &b, cfg).and_then(|r| Ok((matrix_to_four_point(&r.homography, &corners)?, r.inlier_count)));
            Ok(match fit {
                Ok((four_point, inliers)) => EstimateRecord {
                    pair_id: p.pair_id.clone(),
                    four_point,
                    inliers,
                    ok: true,
                },
                Err(e) => {
                    log::warn!("pair {}: {e}; emitting zero displacement", p.pair_id);
                    EstimateRecord {
                        pair_id: p.pair_id.clone(),
                        four_point: FourPointHomography::zero(),
                        inliers: 0,
                        ok: false,
                    }
                }
            })
        })
        .collect()
}
