//! Detection of the circular telescope boundary in laparoscopic frames.
//!
//! The frame is smoothed with an edge-preserving bilateral filter and
//! thresholded. Rays cast from the image center record where the bright view
//! ends. A circle is then fitted to those points by linear least squares on
//! `[2u, 2v, 1] [x0, x1, x2]^T = u^2 + v^2`, giving center `(x0, x1)` and
//! radius `sqrt(x2 + x0^2 + x1^2)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::image::{crop_rect, resize_image, ImageBuffer};
use crate::math;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

impl Circle {
    /// Signed distance of `p` from the circle (positive outside).
    pub fn residual(&self, p: Point2) -> f64 {
        p.distance(self.center) - self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundarySamples {
    pub points: Vec<Point2>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryParams {
    pub spatial_sigma: f64,
    /// Range sigma in 8-bit intensity levels.
    pub range_sigma: f64,
    pub kernel_radius: usize,
    /// Pixels with filtered luma strictly above this level are "bright".
    pub threshold: u8,
    /// Step along each ray, pixels.
    pub ray_step: f64,
    /// Seeds the angular offset of the ray fan.
    pub seed: u64,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        Self {
            spatial_sigma: 5.0,
            range_sigma: 30.0,
            kernel_radius: 7,
            threshold: 16,
            ray_step: 0.25,
            seed: 0,
        }
    }
}

/// Default number of rays.
pub const DEFAULT_RAY_COUNT: usize = 64;

/// Bilateral filter on the luma plane, returned as an 8-bit gray image.
pub fn bilateral_filter(img: &ImageBuffer, spatial_sigma: f64, range_sigma: f64, radius: usize) -> ImageBuffer {
    let gray = img.to_gray();
    let (h, w) = (gray.height(), gray.width());
    let r = radius as i64;
    let side = 2 * radius + 1;
    let spatial: Vec<f64> = (0..side * side)
        .map(|i| {
            let dy = (i / side) as f64 - radius as f64;
            let dx = (i % side) as f64 - radius as f64;
            math::exp(-(dx * dx + dy * dy) / (2.0 * spatial_sigma * spatial_sigma))
        })
        .collect();
    let range: Vec<f64> = (0..256)
        .map(|d| math::exp(-((d * d) as f64) / (2.0 * range_sigma * range_sigma)))
        .collect();
    let src = gray.data();
    let mut out = vec![0u8; h * w];
    for y in 0..h {
        for x in 0..w {
            let center = src[y * w + x] as i32;
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -r..=r {
                let yy = y as i64 + dy;
                if yy < 0 || yy >= h as i64 {
                    continue;
                }
                for dx in -r..=r {
                    let xx = x as i64 + dx;
                    if xx < 0 || xx >= w as i64 {
                        continue;
                    }
                    let v = src[yy as usize * w + xx as usize];
                    let wgt = spatial[(dy + r) as usize * side + (dx + r) as usize]
                        * range[(v as i32 - center).unsigned_abs() as usize];
                    num += wgt * v as f64;
                    den += wgt;
                }
            }
            out[y * w + x] = math::to_u8(num / den);
        }
    }
    ImageBuffer::new(h, w, 1, out).expect("same shape")
}

/// Casts `n` rays from the image center at evenly spaced angles (with a seeded
/// common offset) and records, per ray, the outermost bright-to-dark
/// transition of the thresholded, bilateral-filtered frame, provided the ray
/// stays dark from there to the image edge. Rays without such a transition are
/// dropped.
pub fn sample_boundary_points(img: &ImageBuffer, n: usize, params: &BoundaryParams) -> Result<BoundarySamples> {
    let filtered = bilateral_filter(img, params.spatial_sigma, params.range_sigma, params.kernel_radius);
    let (h, w) = (filtered.height(), filtered.width());
    let bright = |x: f64, y: f64| -> Option<bool> {
        if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
            return None;
        }
        Some(filtered.get(y as usize, x as usize, 0) > params.threshold)
    };

    let mut rng = rng_from_seed(params.seed);
    let spacing = core::f64::consts::TAU / n.max(1) as f64;
    let offset = rng.gen_range(0.0..spacing);
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let step = params.ray_step;

    let mut points = Vec::new();
    for k in 0..n {
        let theta = offset + spacing * k as f64;
        let (dx, dy) = (math::cos(theta), math::sin(theta));
        let mut prev = match bright(cx, cy) {
            Some(b) => b,
            None => continue,
        };
        let mut last_edge: Option<f64> = None;
        let mut i = 1usize;
        loop {
            let t = i as f64 * step;
            let Some(cur) = bright(cx + t * dx, cy + t * dy) else { break };
            if prev && !cur {
                last_edge = Some(t - step / 2.0);
            } else if !prev && cur {
                last_edge = None;
            }
            prev = cur;
            i += 1;
        }
        if let (Some(t), false) = (last_edge, prev) {
            points.push(Point2::new(cx + t * dx, cy + t * dy));
        }
    }
    if points.len() < 3 {
        return Err(Error::NoBoundaryFound { found: points.len() });
    }
    Ok(BoundarySamples { points })
}

/// Linear least-squares circle through the samples, solved by QR on the
/// design matrix in mean-centered coordinates.
pub fn fit_circle(samples: &BoundarySamples) -> Result<Circle> {
    let pts = &samples.points;
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            required: 3,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mu = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.y).sum::<f64>() / n;

    let mut a = DMatrix::<f64>::zeros(pts.len(), 3);
    let mut b = DVector::<f64>::zeros(pts.len());
    for (i, p) in pts.iter().enumerate() {
        let (u, v) = (p.x - mu, p.y - mv);
        a[(i, 0)] = 2.0 * u;
        a[(i, 1)] = 2.0 * v;
        a[(i, 2)] = 1.0;
        b[i] = u * u + v * v;
    }
    let qr = a.qr();
    let r = qr.r();
    let diag_max = (0..3).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..3).any(|i| r[(i, i)].abs() <= 1e-10 * diag_max) || diag_max == 0.0 {
        return Err(Error::DegenerateConfiguration);
    }
    let qtb = qr.q().transpose() * b;
    let x = r.solve_upper_triangular(&qtb).ok_or(Error::DegenerateConfiguration)?;

    let radicand = x[2] + x[0] * x[0] + x[1] * x[1];
    if !(radicand > 0.0) {
        return Err(Error::NegativeRadicand);
    }
    Ok(Circle {
        center: Point2::new(x[0] + mu, x[1] + mv),
        radius: math::sqrt(radicand),
    })
}

/// Fits, drops samples whose absolute residual exceeds twice the median
/// absolute residual, and fits once more.
pub fn fit_circle_trimmed(samples: &BoundarySamples) -> Result<Circle> {
    let first = fit_circle(samples)?;
    let mut res: Vec<f64> = samples.points.iter().map(|p| first.residual(*p).abs()).collect();
    let mut sorted = res.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let median = sorted[sorted.len() / 2];
    let cutoff = 2.0 * median + 1e-12;
    let kept: Vec<Point2> = samples
        .points
        .iter()
        .zip(res.drain(..))
        .filter(|(_, r)| *r <= cutoff)
        .map(|(p, _)| *p)
        .collect();
    if kept.len() < 3 || kept.len() == samples.points.len() {
        return Ok(first);
    }
    fit_circle(&BoundarySamples { points: kept })
}

/// Crops the largest `out_h:out_w` rectangle centered on the circle that fits
/// inside both the image and the circle's inscribed square, then resizes it to
/// `out_h x out_w`.
pub fn circle_crop(img: &ImageBuffer, c: &Circle, out_h: usize, out_w: usize) -> Result<ImageBuffer> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let (cx, cy) = (c.center.x, c.center.y);
    if out_h == 0 || out_w == 0 || !(c.radius > 0.0) {
        return Err(Error::DegenerateCrop);
    }
    let half_square = c.radius / core::f64::consts::SQRT_2;
    let hw_lim = cx.min(w - cx).min(half_square);
    let hh_lim = cy.min(h - cy).min(half_square);
    if !(hw_lim > 0.0 && hh_lim > 0.0) {
        return Err(Error::DegenerateCrop);
    }
    let aspect = out_w as f64 / out_h as f64;
    let hh = hh_lim.min(hw_lim / aspect);
    let hw = hh * aspect;

    let x0 = math::ceil(cx - hw - 1e-9).max(0.0);
    let x1 = math::floor(cx + hw + 1e-9).min(w);
    let y0 = math::ceil(cy - hh - 1e-9).max(0.0);
    let y1 = math::floor(cy + hh + 1e-9).min(h);
    if x1 - x0 < 2.0 || y1 - y0 < 2.0 {
        return Err(Error::DegenerateCrop);
    }
    let cropped = crop_rect(img, x0 as usize, y0 as usize, (x1 - x0) as usize, (y1 - y0) as usize)?;
    resize_image(&cropped, out_h, out_w)
}
