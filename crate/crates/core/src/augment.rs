//! Photometric and geometric augmentations applied identically to both images
//! of a training pair.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{crop_rect, resize_image, ImageBuffer};
use crate::math;
use crate::rng::{derive_seed, rng_from_seed};

/// Luma weights for RGB to gray conversion.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Cell size of the fog value-noise lattice, pixels.
pub const FOG_CELL: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Augmentation {
    Grayscale,
    HorizontalFlip,
    VerticalFlip,
    /// Crop a `scale`-sized window at a seeded position and resize it back to
    /// the original dimensions.
    Crop { scale: f64 },
    Brightness { factor: f64 },
    Contrast { factor: f64 },
    GaussianBlur { sigma: f64 },
    Fog { density: f64 },
}

impl Augmentation {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSpec(msg.into()));
        match *self {
            Augmentation::Crop { scale } if !(scale > 0.0 && scale <= 1.0) => bad("crop scale must be in (0, 1]"),
            Augmentation::Brightness { factor } | Augmentation::Contrast { factor }
                if !(factor > 0.0 && factor.is_finite()) =>
            {
                bad("factor must be finite and > 0")
            }
            Augmentation::GaussianBlur { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                bad("sigma must be finite and >= 0")
            }
            Augmentation::Fog { density } if !(0.0..=1.0).contains(&density) => bad("fog density must be in [0, 1]"),
            _ => Ok(()),
        }
    }

    /// Whether the operation moves pixels.
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            Augmentation::HorizontalFlip | Augmentation::VerticalFlip | Augmentation::Crop { .. }
        )
    }
}

/// An ordered list of augmentations and the seed for the randomized ones
/// (crop position, fog field). Applying the same spec to two images applies
/// identical parameters to both.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AugmentationSpec {
    pub ops: Vec<Augmentation>,
    pub seed: u64,
}

impl AugmentationSpec {
    pub fn single(op: Augmentation, seed: u64) -> Self {
        Self { ops: vec![op], seed }
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.ops.iter().try_for_each(Augmentation::validate)
    }
}

/// Applies `spec.ops` in order. Deterministic in `(img, spec)`.
pub fn apply_augmentation(img: &ImageBuffer, spec: &AugmentationSpec) -> Result<ImageBuffer> {
    spec.validate()?;
    let mut out = img.clone();
    for (i, op) in spec.ops.iter().enumerate() {
        let op_seed = derive_seed(spec.seed, i as u64);
        out = apply_one(&out, op, op_seed)?;
    }
    Ok(out)
}

fn apply_one(img: &ImageBuffer, op: &Augmentation, seed: u64) -> Result<ImageBuffer> {
    match *op {
        Augmentation::Grayscale => Ok(grayscale(img)),
        Augmentation::HorizontalFlip => Ok(flip(img, true)),
        Augmentation::VerticalFlip => Ok(flip(img, false)),
        Augmentation::Crop { scale } => random_crop(img, scale, seed),
        Augmentation::Brightness { factor } => Ok(map_samples(img, |s| s * factor)),
        Augmentation::Contrast { factor } => Ok(map_samples(img, |s| 128.0 + factor * (s - 128.0))),
        Augmentation::GaussianBlur { sigma } => Ok(gaussian_blur(img, sigma)),
        Augmentation::Fog { density } => Ok(fog(img, density, seed)),
    }
}

fn map_samples(img: &ImageBuffer, f: impl Fn(f64) -> f64) -> ImageBuffer {
    let data = img.data().iter().map(|s| math::to_u8(f(*s as f64))).collect();
    ImageBuffer::new(img.height(), img.width(), img.channels(), data).expect("same shape")
}

/// Luma replicated to every channel.
pub fn grayscale(img: &ImageBuffer) -> ImageBuffer {
    if img.channels() == 1 {
        return img.clone();
    }
    let mut data = Vec::with_capacity(img.data().len());
    for p in img.data().chunks_exact(3) {
        let y = math::to_u8(LUMA_WEIGHTS[0] * p[0] as f64 + LUMA_WEIGHTS[1] * p[1] as f64 + LUMA_WEIGHTS[2] * p[2] as f64);
        data.extend_from_slice(&[y, y, y]);
    }
    ImageBuffer::new(img.height(), img.width(), 3, data).expect("same shape")
}

fn flip(img: &ImageBuffer, horizontal: bool) -> ImageBuffer {
    let (h, w) = (img.height(), img.width());
    ImageBuffer::from_fn(h, w, img.channels(), |r, c, k| {
        if horizontal {
            img.get(r, w - 1 - c, k)
        } else {
            img.get(h - 1 - r, c, k)
        }
    })
    .expect("same shape")
}

fn random_crop(img: &ImageBuffer, scale: f64, seed: u64) -> Result<ImageBuffer> {
    let (h, w) = (img.height(), img.width());
    let ch_ = (math::round(scale * h as f64) as usize).clamp(1, h);
    let cw = (math::round(scale * w as f64) as usize).clamp(1, w);
    let mut rng = rng_from_seed(seed);
    let y0 = rng.gen_range(0..=h - ch_);
    let x0 = rng.gen_range(0..=w - cw);
    resize_image(&crop_rect(img, x0, y0, cw, ch_)?, h, w)
}

/// Normalized Gaussian taps for offsets `-radius..=radius`, `radius = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = math::ceil(3.0 * sigma) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| math::exp(-((x * x) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Mirror index without repeating the edge sample (`... 2 1 | 0 1 2 ... | n-2 n-3 ...`).
pub(crate) fn reflect(i: i64, n: usize) -> usize {
    if i >= 0 && (i as usize) < n {
        return i as usize;
    }
    if n == 1 {
        return 0;
    }
    let n = n as i64;
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Separable Gaussian blur with reflected borders.
pub fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> ImageBuffer {
    let kernel = gaussian_kernel(sigma);
    if kernel.len() == 1 {
        return img.clone();
    }
    let radius = (kernel.len() / 2) as i64;
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let mut tmp = vec![0.0f64; h * w * ch];
    for r in 0..h {
        for c in 0..w {
            for k in 0..ch {
                let mut acc = 0.0;
                for (t, wt) in kernel.iter().enumerate() {
                    let cc = reflect(c as i64 + t as i64 - radius, w);
                    acc += wt * img.get(r, cc, k) as f64;
                }
                tmp[(r * w + c) * ch + k] = acc;
            }
        }
    }
    let mut data = vec![0u8; h * w * ch];
    for r in 0..h {
        for c in 0..w {
            for k in 0..ch {
                let mut acc = 0.0;
                for (t, wt) in kernel.iter().enumerate() {
                    let rr = reflect(r as i64 + t as i64 - radius, h);
                    acc += wt * tmp[(rr * w + c) * ch + k];
                }
                data[(r * w + c) * ch + k] = math::to_u8(acc);
            }
        }
    }
    ImageBuffer::new(h, w, ch, data).expect("same shape")
}

/// Low-frequency value noise in `[0, 1]`: uniform values on a lattice with
/// spacing [`FOG_CELL`], smoothstep-interpolated.
pub fn value_noise(height: usize, width: usize, seed: u64) -> Vec<f64> {
    let gh = (height as f64 / FOG_CELL) as usize + 2;
    let gw = (width as f64 / FOG_CELL) as usize + 2;
    let mut rng = rng_from_seed(seed);
    let lattice: Vec<f64> = (0..gh * gw).map(|_| rng.gen::<f64>()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(height * width);
    for r in 0..height {
        let fy = (r as f64 + 0.5) / FOG_CELL;
        let y0 = math::floor(fy) as usize;
        let ty = smooth(fy - y0 as f64);
        for c in 0..width {
            let fx = (c as f64 + 0.5) / FOG_CELL;
            let x0 = math::floor(fx) as usize;
            let tx = smooth(fx - x0 as f64);
            let at = |y: usize, x: usize| lattice[y * gw + x];
            let top = at(y0, x0) + tx * (at(y0, x0 + 1) - at(y0, x0));
            let bottom = at(y0 + 1, x0) + tx * (at(y0 + 1, x0 + 1) - at(y0 + 1, x0));
            out.push(top + ty * (bottom - top));
        }
    }
    out
}

/// Blends toward white with per-pixel alpha `density * noise`.
fn fog(img: &ImageBuffer, density: f64, seed: u64) -> ImageBuffer {
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let noise = value_noise(h, w, seed);
    let data = img
        .data()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let alpha = density * noise[i / ch];
            let s = *s as f64;
            math::to_u8(s + alpha * (255.0 - s))
        })
        .collect();
    ImageBuffer::new(h, w, ch, data).expect("same shape")
}

/// Checks every op of a spec, returning a descriptive error for the first
/// invalid one.
pub fn describe_invalid(spec: &AugmentationSpec) -> Option<alloc::string::String> {
    spec.ops
        .iter()
        .enumerate()
        .find_map(|(i, op)| op.validate().err().map(|e| format!("op {i}: {e}")))
}
