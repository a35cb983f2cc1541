//! Landmark tracks from CSV (`frame,landmark_id,u,v`) and the ground-truth
//! motion between consecutive frames.

use std::path::Path;

use homgen_core::eval::{gt_from_landmarks, LandmarkTrack};
use homgen_core::Point2;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::report::FourPointRecord;

const HEADER: [&str; 4] = ["frame", "landmark_id", "u", "v"];

#[derive(Deserialize)]
struct Row {
    frame: usize,
    landmark_id: String,
    u: f64,
    v: f64,
}

pub fn parse_landmarks(text: &str, what: &str) -> Result<Vec<LandmarkTrack>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(what, 1, e))?;
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(Error::parse(what, 1, format!("header must be {}", HEADER.join(","))));
    }
    reader
        .deserialize::<Row>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| Error::parse(what, i + 2, e))?;
            if !row.u.is_finite() || !row.v.is_finite() {
                return Err(Error::parse(what, i + 2, "non-finite coordinate"));
            }
            Ok(LandmarkTrack {
                frame_index: row.frame,
                landmark_id: row.landmark_id,
                position: Point2::new(row.u, row.v),
            })
        })
        .collect()
}

pub fn read_landmarks(path: &Path) -> Result<Vec<LandmarkTrack>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmarks(&text, &path.display().to_string())
}

/// Ground truth for every pair of consecutive frames `(f, f + 1)` that both
/// carry landmarks, with pair id `"f-(f+1)"`. Pairs whose landmarks do not
/// determine a homography are skipped with a warning.
pub fn consecutive_ground_truth(tracks: &[LandmarkTrack], corners: &[Point2; 4]) -> Result<Vec<FourPointRecord>> {
    let mut frames: Vec<usize> = tracks.iter().map(|t| t.frame_index).collect();
    frames.sort_unstable();
    frames.dedup();
    let mut out = Vec::new();
    for w in frames.windows(2).filter(|w| w[1] == w[0] + 1) {
        match gt_from_landmarks(tracks, w[0], w[1], corners) {
            Ok(four_point) => out.push(FourPointRecord {
                pair_id: format!("{}-{}", w[0], w[1]),
                four_point,
            }),
            Err(e @ (homgen_core::Error::TooFewPoints { .. } | homgen_core::Error::DegenerateConfiguration)) => {
                log::warn!("frames {}-{}: {e}", w[0], w[1]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use homgen_core::geometry::rect_corners;

    #[test]
    fn parses_and_builds_pairs() {
        let mut csv = String::from("frame,landmark_id,u,v\n");
        for f in 0..3 {
            for (i, (u, v)) in [(10.0, 10.0), (300.0, 20.0), (20.0, 200.0), (290.0, 220.0)].iter().enumerate() {
                csv.push_str(&format!("{f},p{i},{},{}\n", u + 2.0 * f as f64, v));
            }
        }
        let tracks = parse_landmarks(&csv, "test").unwrap();
        assert_eq!(tracks.len(), 12);
        let gt = consecutive_ground_truth(&tracks, &rect_corners(0.0, 0.0, 320.0, 240.0)).unwrap();
        assert_eq!(gt.iter().map(|r| r.pair_id.as_str()).collect::<Vec<_>>(), ["0-1", "1-2"]);
        for r in gt {
            for d in r.four_point.deltas {
                assert!((d[0] - 2.0).abs() < 1e-9 && d[1].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bad_header_or_row() {
        assert!(parse_landmarks("frame,id,u,v\n0,a,1,2\n", "t").is_err());
        let err = parse_landmarks("frame,landmark_id,u,v\n0,a,1,2\n0,b,x,2\n", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
