//! 8-bit raster images and the geometric operations on them.
//!
//! All resampling is bilinear with the pixel-center convention: pixel
//! `(row, col)` is located at `(col + 0.5, row + 0.5)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::homography::Homography;
use crate::math;
use crate::polygon::Polygon;

/// Slack when deciding whether a sample point lies inside the image rectangle.
const BOUNDS_TOLERANCE: f64 = 1e-9;

/// Row-major, channel-interleaved 8-bit image with 1 or 3 channels.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl core::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!("unsupported channel count {channels}")));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage("empty image".into()));
        }
        if data.len() != height * width * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds an image from `f(row, col, channel)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> u8 {
        self.data[self.index(row, col, ch)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: u8) {
        let i = self.index(row, col, ch);
        self.data[i] = v;
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Luma plane as `f64` (`0.299 R + 0.587 G + 0.114 B`, or the single channel).
    pub fn luma_f64(&self) -> Vec<f64> {
        match self.channels {
            1 => self.data.iter().map(|v| *v as f64).collect(),
            _ => self
                .data
                .chunks_exact(3)
                .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
                .collect(),
        }
    }

    /// Single-channel luma image, rounded half away from zero.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self.luma_f64().into_iter().map(math::to_u8).collect();
        ImageBuffer {
            height: self.height,
            width: self.width,
            channels: 1,
            data,
        }
    }

    /// Bilinear sample of channel `ch` at continuous point `(x, y)`, or `None`
    /// when the point lies outside the image rectangle `[0, W] x [0, H]`.
    /// Points between the outermost pixel centers and the image edge replicate
    /// the edge pixels.
    pub fn sample_bilinear(&self, x: f64, y: f64, ch: usize) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(x >= -BOUNDS_TOLERANCE && x <= w + BOUNDS_TOLERANCE && y >= -BOUNDS_TOLERANCE && y <= h + BOUNDS_TOLERANCE) {
            return None;
        }
        Some(self.sample_clamped(x, y, ch))
    }

    fn sample_clamped(&self, x: f64, y: f64, ch: usize) -> f64 {
        let (c0, c1, fx) = axis_taps(x - 0.5, self.width);
        let (r0, r1, fy) = axis_taps(y - 0.5, self.height);
        let v00 = self.get(r0, c0, ch) as f64;
        let v01 = self.get(r0, c1, ch) as f64;
        let v10 = self.get(r1, c0, ch) as f64;
        let v11 = self.get(r1, c1, ch) as f64;
        let top = v00 + fx * (v01 - v00);
        let bottom = v10 + fx * (v11 - v10);
        top + fy * (bottom - top)
    }
}

/// Neighbouring indices and fractional weight along one axis, clamped to the
/// valid index range.
#[inline]
fn axis_taps(pos: f64, len: usize) -> (usize, usize, f64) {
    let max = (len - 1) as f64;
    let p = pos.clamp(0.0, max);
    let i0 = math::floor(p);
    let f = p - i0;
    let i0 = i0 as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, f)
}

/// Warped image and the mask of output pixels whose source point fell inside
/// the input image.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpOutput {
    pub image: ImageBuffer,
    pub valid: Vec<bool>,
}

impl WarpOutput {
    pub fn fill_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }
}

/// Projective warp with inverse mapping: output pixel center `q` takes the
/// bilinear sample of `img` at `g^-1 q`, i.e. content at input point `x`
/// moves to `g x`. Samples outside the input are filled with 0.
pub fn warp_image(img: &ImageBuffer, g: &Homography, out_h: usize, out_w: usize) -> Result<ImageBuffer> {
    Ok(warp_image_with_mask(img, g, out_h, out_w)?.image)
}

pub fn warp_image_with_mask(img: &ImageBuffer, g: &Homography, out_h: usize, out_w: usize) -> Result<WarpOutput> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidImage("empty output size".into()));
    }
    let inv = g.invert()?;
    let m = *inv.matrix();
    let ch = img.channels;
    let mut data = vec![0u8; out_h * out_w * ch];
    let mut valid = vec![false; out_h * out_w];
    for r in 0..out_h {
        let qy = r as f64 + 0.5;
        for c in 0..out_w {
            let qx = c as f64 + 0.5;
            let w = m[(2, 0)] * qx + m[(2, 1)] * qy + m[(2, 2)];
            if w == 0.0 {
                continue;
            }
            let sx = (m[(0, 0)] * qx + m[(0, 1)] * qy + m[(0, 2)]) / w;
            let sy = (m[(1, 0)] * qx + m[(1, 1)] * qy + m[(1, 2)]) / w;
            let (w_img, h_img) = (img.width as f64, img.height as f64);
            if !(sx >= -BOUNDS_TOLERANCE
                && sx <= w_img + BOUNDS_TOLERANCE
                && sy >= -BOUNDS_TOLERANCE
                && sy <= h_img + BOUNDS_TOLERANCE)
            {
                continue;
            }
            let base = (r * out_w + c) * ch;
            for k in 0..ch {
                data[base + k] = math::to_u8(img.sample_clamped(sx, sy, k));
            }
            valid[r * out_w + c] = true;
        }
    }
    Ok(WarpOutput {
        image: ImageBuffer::new(out_h, out_w, ch, data)?,
        valid,
    })
}

/// Copies the pixels covered by an axis-aligned integer rectangle.
pub fn crop_image(img: &ImageBuffer, crop: &Polygon) -> Result<ImageBuffer> {
    let (x0, y0, w, h) = crop
        .as_axis_rect()
        .and_then(|r| r.to_pixels())
        .ok_or(Error::NonRectangularCrop)?;
    crop_rect(img, x0, y0, w, h)
}

/// [`crop_image`] on explicit pixel bounds.
pub fn crop_rect(img: &ImageBuffer, x0: usize, y0: usize, w: usize, h: usize) -> Result<ImageBuffer> {
    if w == 0 || h == 0 || x0 + w > img.width || y0 + h > img.height {
        return Err(Error::CropOutOfBounds);
    }
    let ch = img.channels;
    let mut data = Vec::with_capacity(w * h * ch);
    for r in y0..y0 + h {
        let start = img.index(r, x0, 0);
        data.extend_from_slice(&img.data[start..start + w * ch]);
    }
    ImageBuffer::new(h, w, ch, data)
}

/// Bilinear resize with pixel-center alignment.
pub fn resize_image(img: &ImageBuffer, out_h: usize, out_w: usize) -> Result<ImageBuffer> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidImage("empty output size".into()));
    }
    if out_h == img.height && out_w == img.width {
        return Ok(img.clone());
    }
    let sx = img.width as f64 / out_w as f64;
    let sy = img.height as f64 / out_h as f64;
    let ch = img.channels;
    let mut data = Vec::with_capacity(out_h * out_w * ch);
    for r in 0..out_h {
        let y = (r as f64 + 0.5) * sy;
        for c in 0..out_w {
            let x = (c as f64 + 0.5) * sx;
            for k in 0..ch {
                data.push(math::to_u8(img.sample_clamped(x, y, k)));
            }
        }
    }
    ImageBuffer::new(out_h, out_w, ch, data)
}

/// Mean absolute difference over the pixels where `mask` is true.
pub fn masked_mean_abs_diff(a: &ImageBuffer, b: &ImageBuffer, mask: &[bool]) -> Option<f64> {
    if !a.same_shape(b) || mask.len() != a.height * a.width {
        return None;
    }
    let ch = a.channels;
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, m) in mask.iter().enumerate() {
        if *m {
            for k in 0..ch {
                sum += (a.data[i * ch + k] as f64 - b.data[i * ch + k] as f64).abs();
            }
            n += ch;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Pixel-center location of `(row, col)`.
pub fn pixel_center(row: usize, col: usize) -> Point2 {
    Point2::new(col as f64 + 0.5, row as f64 + 0.5)
}
