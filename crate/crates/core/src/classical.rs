//! Feature-based homography estimation: Shi–Tomasi corners, ZNCC patch
//! matching and RANSAC over the direct linear transform.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;

use crate::augment::reflect;
use crate::error::{Error, Result};
use crate::geometry::{any_three_collinear, Point2};
use crate::homography::{solve_dlt, solve_four, Correspondence, Homography};
use crate::image::ImageBuffer;
use crate::math;
use crate::rng::rng_from_seed;

const WINDOW_RADIUS: i64 = 2;
const BORDER: usize = 3;
const MIN_ZNCC: f64 = 0.8;
const MAX_REDRAWS: usize = 10;
const SAMPLE_COLLINEAR_TOL: f64 = 1e-10;

/// Minimum-eigenvalue corner response of the gradient structure tensor
/// accumulated over a 5x5 Gaussian window (sigma 1). Returned row-major, zero within the border band.
pub fn corner_response(img: &ImageBuffer) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let lum = img.luma_f64();
    let at = |r: i64, c: i64| lum[reflect(r, h) * w + reflect(c, w)];

    let mut ixx = vec![0.0; h * w];
    let mut iyy = vec![0.0; h * w];
    let mut ixy = vec![0.0; h * w];
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            let gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
            let i = r as usize * w + c as usize;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }
    let (sxx, syy, sxy) = (window_sum(&ixx, h, w), window_sum(&iyy, h, w), window_sum(&ixy, h, w));

    let mut resp = vec![0.0; h * w];
    if h <= 2 * BORDER || w <= 2 * BORDER {
        return resp;
    }
    for r in BORDER..h - BORDER {
        for c in BORDER..w - BORDER {
            let i = r * w + c;
            let (a, b, d) = (sxx[i], sxy[i], syy[i]);
            let half_diff = (a - d) / 2.0;
            resp[i] = ((a + d) / 2.0 - math::sqrt(half_diff * half_diff + b * b)).max(0.0);
        }
    }
    resp
}

fn window_sum(src: &[f64], h: usize, w: usize) -> Vec<f64> {
    let weights: [f64; (2 * WINDOW_RADIUS + 1) as usize] =
        core::array::from_fn(|k| math::exp(-((k as i64 - WINDOW_RADIUS).pow(2) as f64) / 2.0));
    let weight = |d: i64| weights[(d + WINDOW_RADIUS) as usize];
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut s = 0.0;
            for d in -WINDOW_RADIUS..=WINDOW_RADIUS {
                s += weight(d) * src[r * w + reflect(c as i64 + d, w)];
            }
            tmp[r * w + c] = s;
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut s = 0.0;
            for d in -WINDOW_RADIUS..=WINDOW_RADIUS {
                s += weight(d) * tmp[reflect(r as i64 + d, h) * w + c];
            }
            out[r * w + c] = s;
        }
    }
    out
}

/// Detects up to `max_corners` corners, strongest first, in continuous pixel
/// coordinates (pixel `(r, c)` covers `[c, c+1] x [r, r+1]`).
///
/// Candidates are 3x3 local maxima whose response is at least `quality` times
/// the global maximum. They are accepted greedily so that no two are closer
/// than `min_distance`, then refined by a quadratic fit on the 3x3 response
/// neighborhood.
pub fn detect_corners(img: &ImageBuffer, max_corners: usize, quality: f64, min_distance: f64) -> Vec<Point2> {
    let (h, w) = (img.height(), img.width());
    let resp = corner_response(img);
    let peak = resp.iter().cloned().fold(0.0, f64::max);
    if !(peak > 1e-9) || max_corners == 0 {
        return Vec::new();
    }
    let floor = (quality * peak).max(1e-9);

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for r in BORDER..h - BORDER {
        for c in BORDER..w - BORDER {
            let v = resp[r * w + c];
            if v < floor {
                continue;
            }
            let is_max = (r - 1..=r + 1).all(|rr| (c - 1..=c + 1).all(|cc| resp[rr * w + cc] <= v));
            if is_max {
                candidates.push((v, r, c));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });

    let mut accepted: Vec<(usize, usize)> = Vec::new();
    let min_d2 = min_distance * min_distance;
    for (_, r, c) in candidates {
        let far = accepted.iter().all(|(ar, ac)| {
            let dr = *ar as f64 - r as f64;
            let dc = *ac as f64 - c as f64;
            dr * dr + dc * dc >= min_d2
        });
        if far {
            accepted.push((r, c));
            if accepted.len() == max_corners {
                break;
            }
        }
    }
    accepted.into_iter().map(|(r, c)| refine_peak(&resp, w, r, c)).collect()
}

fn refine_peak(resp: &[f64], w: usize, r: usize, c: usize) -> Point2 {
    let v = |dr: i64, dc: i64| resp[(r as i64 + dr) as usize * w + (c as i64 + dc) as usize];
    let gx = (v(0, 1) - v(0, -1)) / 2.0;
    let gy = (v(1, 0) - v(-1, 0)) / 2.0;
    let hxx = v(0, 1) - 2.0 * v(0, 0) + v(0, -1);
    let hyy = v(1, 0) - 2.0 * v(0, 0) + v(-1, 0);
    let hxy = (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / 4.0;
    let det = hxx * hyy - hxy * hxy;
    let (mut ox, mut oy) = (0.0, 0.0);
    if hxx < 0.0 && det > 0.0 {
        ox = -(hyy * gx - hxy * gy) / det;
        oy = -(hxx * gy - hxy * gx) / det;
        if ox.abs() > 1.0 || oy.abs() > 1.0 {
            ox = 0.0;
            oy = 0.0;
        }
        ox = ox.clamp(-0.5, 0.5);
        oy = oy.clamp(-0.5, 0.5);
    }
    Point2::new(c as f64 + 0.5 + ox, r as f64 + 0.5 + oy)
}

struct Integral {
    w1: usize,
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Integral {
    fn new(lum: &[f64], h: usize, w: usize) -> Self {
        let w1 = w + 1;
        let mut sum = vec![0.0; (h + 1) * w1];
        let mut sq = vec![0.0; (h + 1) * w1];
        for r in 0..h {
            let (mut rs, mut rq) = (0.0, 0.0);
            for c in 0..w {
                let v = lum[r * w + c];
                rs += v;
                rq += v * v;
                sum[(r + 1) * w1 + c + 1] = sum[r * w1 + c + 1] + rs;
                sq[(r + 1) * w1 + c + 1] = sq[r * w1 + c + 1] + rq;
            }
        }
        Self { w1, sum, sq }
    }

    /// Sums over rows `r0..r1` and columns `c0..c1`.
    fn window(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> (f64, f64) {
        let f = |t: &[f64]| t[r1 * self.w1 + c1] - t[r0 * self.w1 + c1] - t[r1 * self.w1 + c0] + t[r0 * self.w1 + c0];
        (f(&self.sum), f(&self.sq))
    }
}

/// Matches each corner of `img_a` into `img_b` by exhaustive zero-normalized
/// cross-correlation over integer displacements up to `search_radius`,
/// keeping peaks with score at least 0.8 and refining them with a per-axis
/// parabola. Correspondences have the `img_a` point as reference.
pub fn match_correspondences(
    img_a: &ImageBuffer,
    img_b: &ImageBuffer,
    corners_a: &[Point2],
    search_radius: usize,
    patch_radius: usize,
) -> Vec<Correspondence> {
    if img_a.height() != img_b.height() || img_a.width() != img_b.width() {
        return Vec::new();
    }
    let (h, w) = (img_a.height(), img_a.width());
    let (la, lb) = (img_a.luma_f64(), img_b.luma_f64());
    let integral = Integral::new(&lb, h, w);
    let pr = patch_radius as i64;
    let side = 2 * patch_radius + 1;
    let count = (side * side) as f64;
    let sr = search_radius as i64;
    let span = (2 * sr + 1) as usize;
    let inside = |r: i64, c: i64| r - pr >= 0 && c - pr >= 0 && r + pr < h as i64 && c + pr < w as i64;

    let mut out = Vec::new();
    let mut scores = vec![f64::NEG_INFINITY; span * span];
    let mut patch = vec![0.0; side * side];
    for p in corners_a {
        let (r0, c0) = (math::floor(p.y) as i64, math::floor(p.x) as i64);
        if !inside(r0, c0) {
            continue;
        }
        let mut mean = 0.0;
        for (k, slot) in patch.iter_mut().enumerate() {
            let (dr, dc) = ((k / side) as i64 - pr, (k % side) as i64 - pr);
            *slot = la[(r0 + dr) as usize * w + (c0 + dc) as usize];
            mean += *slot;
        }
        mean /= count;
        let mut var_a = 0.0;
        for v in patch.iter_mut() {
            *v -= mean;
            var_a += *v * *v;
        }
        if var_a <= 1e-9 {
            continue;
        }

        scores.fill(f64::NEG_INFINITY);
        let mut best: Option<(f64, i64, i64)> = None;
        for dy in -sr..=sr {
            for dx in -sr..=sr {
                let (rb, cb) = (r0 + dy, c0 + dx);
                if !inside(rb, cb) {
                    continue;
                }
                let (s, sq) = integral.window(
                    (rb - pr) as usize,
                    (cb - pr) as usize,
                    (rb + pr + 1) as usize,
                    (cb + pr + 1) as usize,
                );
                let var_b = sq - s * s / count;
                if var_b <= 1e-9 {
                    continue;
                }
                let mut acc = [0.0; 4];
                for i in 0..side {
                    let row = &lb[(rb - pr + i as i64) as usize * w + (cb - pr) as usize..][..side];
                    let prow = &patch[i * side..(i + 1) * side];
                    for (pa, pb) in prow.chunks(4).zip(row.chunks(4)) {
                        for k in 0..pa.len() {
                            acc[k] += pa[k] * pb[k];
                        }
                    }
                }
                let cross = (acc[0] + acc[1]) + (acc[2] + acc[3]);
                let score = cross / math::sqrt(var_a * var_b);
                scores[(dy + sr) as usize * span + (dx + sr) as usize] = score;
                if best.is_none_or(|(b, _, _)| score > b) {
                    best = Some((score, dx, dy));
                }
            }
        }
        let Some((score, dx, dy)) = best else { continue };
        if score < MIN_ZNCC {
            continue;
        }
        let (mut ox, mut oy) = (0.0, 0.0);
        if score < 1.0 - 1e-9 {
            let at = |x: i64, y: i64| -> Option<f64> {
                if x.abs() > sr || y.abs() > sr {
                    return None;
                }
                let v = scores[(y + sr) as usize * span + (x + sr) as usize];
                v.is_finite().then_some(v)
            };
            ox = parabola_offset(at(dx - 1, dy), score, at(dx + 1, dy));
            oy = parabola_offset(at(dx, dy - 1), score, at(dx, dy + 1));
        }
        out.push(Correspondence::new(*p, p.offset(dx as f64 + ox, dy as f64 + oy)));
    }
    out
}

fn parabola_offset(minus: Option<f64>, center: f64, plus: Option<f64>) -> f64 {
    match (minus, plus) {
        (Some(m), Some(p)) => {
            let denom = m - 2.0 * center + p;
            if denom < 0.0 {
                (0.5 * (m - p) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Symmetric transfer error bound, pixels.
    pub inlier_threshold: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_threshold: 3.0,
            min_inliers: 8,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("ransac iterations must be >= 1".into()));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::InvalidConfig("ransac inlier threshold must be > 0".into()));
        }
        if self.min_inliers < 4 {
            return Err(Error::InvalidConfig("ransac min_inliers must be >= 4".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub homography: Homography,
    pub inlier_mask: Vec<bool>,
    pub inlier_count: usize,
}

/// Homography paired with its inverse, for repeated error evaluation.
struct TwoWay {
    fwd: [f64; 9],
    inv: [f64; 9],
}

impl TwoWay {
    fn new(g: &Homography) -> Option<Self> {
        let inv = g.invert().ok()?;
        Some(Self {
            fwd: row_major_unit(g),
            inv: row_major_unit(&inv),
        })
    }

    fn error(&self, c: &Correspondence) -> Option<f64> {
        let e1 = map_distance(&self.fwd, c.offset, c.reference)?;
        let e2 = map_distance(&self.inv, c.reference, c.offset)?;
        Some((e1 + e2) / 2.0)
    }
}

fn row_major_unit(g: &Homography) -> [f64; 9] {
    let n = g.normalized();
    core::array::from_fn(|i| n[(i / 3, i % 3)])
}

fn map_distance(m: &[f64; 9], from: Point2, to: Point2) -> Option<f64> {
    let z = m[6] * from.x + m[7] * from.y + m[8];
    if z.abs() < 1e-12 {
        return None;
    }
    let x = (m[0] * from.x + m[1] * from.y + m[2]) / z;
    let y = (m[3] * from.x + m[4] * from.y + m[5]) / z;
    Some(math::hypot(x - to.x, y - to.y))
}

/// Mean of the forward (`G p'` against `p`) and backward (`G^-1 p` against
/// `p'`) reprojection distances, or `None` if either maps to infinity.
pub fn symmetric_transfer_error(g: &Homography, c: &Correspondence) -> Option<f64> {
    TwoWay::new(g)?.error(c)
}

fn inlier_count(model: &TwoWay, corr: &[Correspondence], threshold: f64) -> usize {
    corr.iter()
        .filter(|c| model.error(c).is_some_and(|e| e <= threshold))
        .count()
}

fn inlier_mask(model: &TwoWay, corr: &[Correspondence], threshold: f64) -> (Vec<bool>, usize) {
    let mask: Vec<bool> = corr
        .iter()
        .map(|c| model.error(c).is_some_and(|e| e <= threshold))
        .collect();
    let n = mask.iter().filter(|b| **b).count();
    (mask, n)
}

/// Robust fit of the homography mapping offset points onto reference points.
///
/// Each iteration draws four distinct correspondences (redrawing degenerate
/// samples up to ten times without consuming the iteration), solves the DLT
/// and scores the model by symmetric transfer error. The best model (earliest
/// on ties) is refitted on its inliers and the mask recomputed with the refit.
pub fn ransac_homography(corr: &[Correspondence], cfg: &RansacConfig) -> Result<RansacResult> {
    cfg.validate()?;
    if corr.len() < 4 {
        return Err(Error::TooFewPoints {
            required: 4,
            got: corr.len(),
        });
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut best: Option<(Homography, Vec<bool>, usize)> = None;

    for _ in 0..cfg.iterations {
        let mut model = None;
        for _ in 0..=MAX_REDRAWS {
            let idx = sample(&mut rng, corr.len(), 4);
            let refs: [Point2; 4] = core::array::from_fn(|k| corr[idx.index(k)].reference);
            let offs: [Point2; 4] = core::array::from_fn(|k| corr[idx.index(k)].offset);
            if any_three_collinear(&refs, SAMPLE_COLLINEAR_TOL) || any_three_collinear(&offs, SAMPLE_COLLINEAR_TOL) {
                continue;
            }
            if let Ok(g) = solve_four(&refs, &offs) {
                model = Some(g);
                break;
            }
        }
        let Some(g) = model else { continue };
        let Some(two_way) = TwoWay::new(&g) else { continue };
        let count = inlier_count(&two_way, corr, cfg.inlier_threshold);
        if best.as_ref().is_none_or(|(_, _, b)| count > *b) {
            best = Some((g, inlier_mask(&two_way, corr, cfg.inlier_threshold).0, count));
        }
    }

    let best_count = best.as_ref().map_or(0, |b| b.2);
    let (g, mask, count) = match best {
        Some(b) if b.2 >= cfg.min_inliers => b,
        _ => {
            return Err(Error::NoConsensus {
                best: best_count,
                required: cfg.min_inliers,
            })
        }
    };

    let inliers: Vec<Correspondence> = corr.iter().zip(&mask).filter(|(_, m)| **m).map(|(c, _)| *c).collect();
    if let Ok(refit) = solve_dlt(&inliers) {
        if let Some(two_way) = TwoWay::new(&refit) {
            let (rmask, rcount) = inlier_mask(&two_way, corr, cfg.inlier_threshold);
            if rcount >= cfg.min_inliers {
                return Ok(RansacResult {
                    homography: refit,
                    inlier_mask: rmask,
                    inlier_count: rcount,
                });
            }
        }
    }
    Ok(RansacResult {
        homography: g,
        inlier_mask: mask,
        inlier_count: count,
    })
}

/// Detector and matcher settings for [`estimate_pair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub max_corners: usize,
    pub quality: f64,
    pub min_distance: f64,
    pub search_radius: usize,
    pub patch_radius: usize,
    pub ransac: RansacConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            max_corners: 150,
            quality: 0.01,
            min_distance: 8.0,
            search_radius: 16,
            patch_radius: 7,
            ransac: RansacConfig::default(),
        }
    }
}

/// Corners in `reference`, matched into `offset`, then RANSAC. The result maps
/// `offset` points onto `reference` points.
pub fn estimate_pair(reference: &ImageBuffer, offset: &ImageBuffer, cfg: &EstimatorConfig) -> Result<RansacResult> {
    let corners = detect_corners(reference, cfg.max_corners, cfg.quality, cfg.min_distance);
    let corr = match_correspondences(reference, offset, &corners, cfg.search_radius, cfg.patch_radius);
    ransac_homography(&corr, &cfg.ransac)
}
