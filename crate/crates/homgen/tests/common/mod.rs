#![allow(dead_code)]

use std::path::{Path, PathBuf};

use homgen::pnm;
use homgen_core::augment::value_noise;
use homgen_core::image::ImageBuffer;
use homgen_core::Point2;

/// Smooth multi-scale RGB texture with enough structure for corners.
pub fn texture(h: usize, w: usize, seed: u64) -> ImageBuffer {
    let coarse = value_noise(h, w, seed);
    let fine = value_noise(h * 4, w * 4, seed ^ 0x9e37);
    ImageBuffer::from_fn(h, w, 3, |r, c, k| {
        let v = 0.55 * coarse[r * w + c] + 0.45 * fine[(r * 4) * (w * 4) + c * 4];
        (20.0 + 215.0 * v + 10.0 * k as f64) as u8
    })
    .unwrap()
}

/// Writes `n` textured frames of one sequence and returns their paths.
pub fn write_sequence(dir: &Path, n: usize, h: usize, w: usize, seed: u64) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    (0..n)
        .map(|i| {
            let p = dir.join(format!("frame_{i:03}.ppm"));
            pnm::write(&p, &texture(h, w, seed + i as u64)).unwrap();
            p
        })
        .collect()
}

pub const GRID: f64 = 0.25;
const EPS: f64 = 1e-9;

/// Closed extent of a convex polygon on the horizontal line `y`, if any.
fn row_extent(poly: &[Point2], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (ymin, ymax) = (a.y.min(b.y), a.y.max(b.y));
        if y < ymin - EPS || y > ymax + EPS {
            continue;
        }
        if (b.y - a.y).abs() <= EPS {
            lo = lo.min(a.x.min(b.x));
            hi = hi.max(a.x.max(b.x));
        } else {
            let t = ((y - a.y) / (b.y - a.y)).clamp(0.0, 1.0);
            let x = a.x + t * (b.x - a.x);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Dense-sampling containment oracle for convex polygons: every point of the
/// 0.25 px lattice lying in `inner` must lie in `outer` (both closed). Rows of
/// the lattice are evaluated through their exact extent in each polygon, which
/// tests the same lattice points as checking them one by one. Returns the
/// number of lattice points of `inner` that fall outside `outer`.
pub fn lattice_points_outside(outer: &[Point2], inner: &[Point2]) -> u64 {
    let ymin = inner.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let ymax = inner.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let mut bad = 0u64;
    let k0 = ((ymin - EPS) / GRID).ceil() as i64;
    let k1 = ((ymax + EPS) / GRID).floor() as i64;
    for k in k0..=k1 {
        let y = k as f64 * GRID;
        let Some((b0, b1)) = row_extent(inner, y) else { continue };
        let i0 = ((b0 - EPS) / GRID).ceil() as i64;
        let i1 = ((b1 + EPS) / GRID).floor() as i64;
        if i1 < i0 {
            continue;
        }
        let total = (i1 - i0 + 1) as u64;
        match row_extent(outer, y) {
            None => bad += total,
            Some((a0, a1)) => {
                let j0 = ((a0 - EPS) / GRID).ceil() as i64;
                let j1 = ((a1 + EPS) / GRID).floor() as i64;
                let covered = (i1.min(j1) - i0.max(j0) + 1).max(0) as u64;
                bad += total - covered;
            }
        }
    }
    bad
}

fn seg_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.x - a.x - t * dx).powi(2) + (p.y - a.y - t * dy).powi(2)).sqrt()
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Minimum distance between the two polygon boundaries.
pub fn boundary_distance(p: &[Point2], q: &[Point2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..p.len() {
        let (a, b) = (p[i], p[(i + 1) % p.len()]);
        for j in 0..q.len() {
            let (c, d) = (q[j], q[(j + 1) % q.len()]);
            if segments_cross(a, b, c, d) {
                return 0.0;
            }
            best = best
                .min(seg_dist(a, c, d))
                .min(seg_dist(b, c, d))
                .min(seg_dist(c, a, b))
                .min(seg_dist(d, a, b));
        }
    }
    best
}

/// Projects a polygon through the row-major 3x3 matrix `m`. `None` unless
/// every vertex has homogeneous weight of one common sign, which keeps the
/// image of a convex polygon convex.
pub fn project_polygon(m: &[f64; 9], pts: &[Point2]) -> Option<Vec<Point2>> {
    let ws: Vec<f64> = pts.iter().map(|p| m[6] * p.x + m[7] * p.y + m[8]).collect();
    let all_pos = ws.iter().all(|w| *w > 1e-12);
    let all_neg = ws.iter().all(|w| *w < -1e-12);
    if !(all_pos || all_neg) {
        return None;
    }
    Some(
        pts.iter()
            .zip(&ws)
            .map(|(p, w)| {
                Point2::new(
                    (m[0] * p.x + m[1] * p.y + m[2]) / w,
                    (m[3] * p.x + m[4] * p.y + m[5]) / w,
                )
            })
            .collect(),
    )
}
