//! Accuracy metrics for four-point predictions and ground truth from tracked
//! landmarks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::homography::{matrix_to_four_point, solve_dlt_with, Correspondence, DltOptions, FourPointHomography};
use crate::math;

pub const DEFAULT_PERCENTILES: [f64; 4] = [30.0, 50.0, 70.0, 90.0];

/// Mean pairwise distance: the mean over the four corners of the Euclidean
/// norm of the displacement difference.
pub fn mpd(pred: &FourPointHomography, gt: &FourPointHomography) -> f64 {
    pred.deltas
        .iter()
        .zip(&gt.deltas)
        .map(|(p, g)| math::hypot(p[0] - g[0], p[1] - g[1]))
        .sum::<f64>()
        / 4.0
}

/// Nearest-rank percentiles: the value at rank `ceil(p * n / 100)` of the
/// sorted input, for each `p` in `(0, 100]`. Returns `(p, value)` pairs in the
/// order requested.
pub fn cdf_thresholds(mpds: &[f64], percentiles: &[f64]) -> Result<Vec<(f64, f64)>> {
    if mpds.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(p) = percentiles.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
        return Err(Error::InvalidConfig(alloc::format!("percentile {p} outside (0, 100]")));
    }
    let mut sorted = mpds.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(percentiles
        .iter()
        .map(|p| {
            let rank = math::ceil(p * n as f64 / 100.0 - 1e-9).max(1.0) as usize;
            (*p, sorted[rank.min(n) - 1])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkTrack {
    pub frame_index: usize,
    pub landmark_id: String,
    pub position: Point2,
}

/// Ground-truth four-point motion between two frames from landmarks visible in
/// both. Frame `a` positions are the reference points and frame `b` positions
/// the offset points, so the result holds the displacement of each corner from
/// frame `a` to frame `b`.
pub fn gt_from_landmarks(
    tracks: &[LandmarkTrack],
    frame_a: usize,
    frame_b: usize,
    corners: &[Point2; 4],
) -> Result<FourPointHomography> {
    let a = frame_positions(tracks, frame_a)?;
    let b = frame_positions(tracks, frame_b)?;
    let corr: Vec<Correspondence> = a
        .iter()
        .filter_map(|(id, pa)| b.get(id).map(|pb| Correspondence::new(*pa, *pb)))
        .collect();
    if corr.len() < 4 {
        return Err(Error::TooFewPoints {
            required: 4,
            got: corr.len(),
        });
    }
    let g = solve_dlt_with(&corr, DltOptions { precondition: true })?;
    matrix_to_four_point(&g, corners)
}

fn frame_positions(tracks: &[LandmarkTrack], frame: usize) -> Result<BTreeMap<&str, Point2>> {
    let mut out = BTreeMap::new();
    for t in tracks.iter().filter(|t| t.frame_index == frame) {
        if out.insert(t.landmark_id.as_str(), t.position).is_some() {
            return Err(Error::InvalidSpec(alloc::format!(
                "landmark {} appears twice in frame {}",
                t.landmark_id,
                frame
            )));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub count: usize,
    /// `(percentile, threshold)` pairs.
    pub thresholds: Vec<(f64, f64)>,
    pub mpds: Vec<f64>,
}

impl EvalReport {
    pub fn from_mpds(mpds: Vec<f64>, percentiles: &[f64]) -> Result<Self> {
        let thresholds = cdf_thresholds(&mpds, percentiles)?;
        Ok(Self {
            count: mpds.len(),
            thresholds,
            mpds,
        })
    }

    pub fn from_pairs(pairs: &[(FourPointHomography, FourPointHomography)], percentiles: &[f64]) -> Result<Self> {
        Self::from_mpds(pairs.iter().map(|(p, g)| mpd(p, g)).collect(), percentiles)
    }

    pub fn threshold(&self, percentile: f64) -> Option<f64> {
        self.thresholds.iter().find(|(p, _)| *p == percentile).map(|(_, t)| *t)
    }
}
