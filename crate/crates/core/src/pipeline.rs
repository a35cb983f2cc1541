//! Training-pair construction: pair sampling from sequences, shared
//! augmentation, synthetic motion and the anchor/offset crops.
//!
//! Every sample is a pure function of the frame source, the configuration and
//! a per-sample seed derived from the master seed and the sample index, so the
//! streaming iterator and any offline emitter agree sample for sample.

use alloc::vec::Vec;

use rand::Rng;

use crate::augment::{apply_augmentation, Augmentation, AugmentationSpec};
use crate::error::{Error, Result};
use crate::generation::{generate_motion, sample_crop_polygon, GeneratedMotion, HomGenConfig};
use crate::homography::FourPointHomography;
use crate::image::{crop_image, crop_rect, resize_image, warp_image_with_mask, ImageBuffer};
use crate::polygon::Polygon;
use crate::rng::{derive_seed, rng_from_seed, ChaCha8Rng};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Size {
    pub height: u32,
    pub width: u32,
}

/// Pixel rectangle, top-left corner plus extent.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

/// Per-kind application probabilities and magnitude ranges. Each kind is
/// switched on independently; active kinds are applied in the fixed order
/// horizontal flip, vertical flip, crop, grayscale, brightness, contrast,
/// blur, fog.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AugmentationPolicy {
    pub horizontal_flip: f64,
    pub vertical_flip: f64,
    pub crop: f64,
    pub grayscale: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub blur: f64,
    pub fog: f64,
    pub crop_scale: Range,
    pub brightness_factor: Range,
    pub contrast_factor: Range,
    pub blur_sigma: Range,
    pub fog_density: Range,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self {
            horizontal_flip: 0.3,
            vertical_flip: 0.3,
            crop: 0.3,
            grayscale: 0.3,
            brightness: 0.3,
            contrast: 0.3,
            blur: 0.3,
            fog: 0.3,
            crop_scale: Range::new(0.8, 1.0),
            brightness_factor: Range::new(0.5, 1.5),
            contrast_factor: Range::new(0.5, 1.5),
            blur_sigma: Range::new(0.0, 3.0),
            fog_density: Range::new(0.0, 0.6),
        }
    }
}

impl AugmentationPolicy {
    /// A policy that never augments.
    pub fn disabled() -> Self {
        Self {
            horizontal_flip: 0.0,
            vertical_flip: 0.0,
            crop: 0.0,
            grayscale: 0.0,
            brightness: 0.0,
            contrast: 0.0,
            blur: 0.0,
            fog: 0.0,
            ..Self::default()
        }
    }

    fn probabilities(&self) -> [f64; 8] {
        [
            self.horizontal_flip,
            self.vertical_flip,
            self.crop,
            self.grayscale,
            self.brightness,
            self.contrast,
            self.blur,
            self.fog,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.probabilities().iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig("augmentation probabilities must lie in [0, 1]".into()));
        }
        let ranges = [
            self.crop_scale,
            self.brightness_factor,
            self.contrast_factor,
            self.blur_sigma,
            self.fog_density,
        ];
        if ranges.iter().any(|r| !r.is_valid()) {
            return Err(Error::InvalidConfig("augmentation ranges need finite lo <= hi".into()));
        }
        let probe = [
            Augmentation::Crop { scale: self.crop_scale.lo },
            Augmentation::Crop { scale: self.crop_scale.hi },
            Augmentation::Brightness { factor: self.brightness_factor.lo },
            Augmentation::Contrast { factor: self.contrast_factor.lo },
            Augmentation::GaussianBlur { sigma: self.blur_sigma.lo },
            Augmentation::Fog { density: self.fog_density.lo },
            Augmentation::Fog { density: self.fog_density.hi },
        ];
        probe
            .iter()
            .try_for_each(Augmentation::validate)
            .map_err(|e| Error::InvalidConfig(alloc::format!("augmentation range: {e}")))
    }

    /// Draws one augmentation spec. Consumes a fixed number of random values
    /// per kind regardless of the outcome.
    pub fn sample_spec(&self, rng: &mut ChaCha8Rng) -> AugmentationSpec {
        let mut ops = Vec::new();
        let on = self.probabilities().map(|p| rng.gen::<f64>() < p);
        if on[0] {
            ops.push(Augmentation::HorizontalFlip);
        }
        if on[1] {
            ops.push(Augmentation::VerticalFlip);
        }
        let scale = self.crop_scale.draw(rng);
        if on[2] {
            ops.push(Augmentation::Crop { scale });
        }
        if on[3] {
            ops.push(Augmentation::Grayscale);
        }
        let factor = self.brightness_factor.draw(rng);
        if on[4] {
            ops.push(Augmentation::Brightness { factor });
        }
        let factor = self.contrast_factor.draw(rng);
        if on[5] {
            ops.push(Augmentation::Contrast { factor });
        }
        let sigma = self.blur_sigma.draw(rng);
        if on[6] {
            ops.push(Augmentation::GaussianBlur { sigma });
        }
        let density = self.fog_density.draw(rng);
        if on[7] {
            ops.push(Augmentation::Fog { density });
        }
        AugmentationSpec { ops, seed: rng.gen() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PipelineConfig {
    /// Motion generator settings. The border dimensions are taken from
    /// `pre_resize`; the values stored here are ignored.
    pub homgen: HomGenConfig,
    /// Maximum frame offset `T` between anchor and offset frame.
    pub sequence_window: u32,
    pub augmentation: AugmentationPolicy,
    /// Fixed rectangle cut from every raw frame before resizing.
    pub pre_crop: Option<PixelRect>,
    pub pre_resize: Size,
    pub output_dir: Option<alloc::string::String>,
    pub master_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            homgen: HomGenConfig {
                edge_deviation: 48.0,
                ..HomGenConfig::default()
            },
            sequence_window: 25,
            augmentation: AugmentationPolicy::default(),
            pre_crop: None,
            pre_resize: Size {
                height: 306,
                width: 408,
            },
            output_dir: None,
            master_seed: 0,
        }
    }
}

impl PipelineConfig {
    /// `homgen` with its border set to the pre-resized frame size.
    pub fn effective_homgen(&self) -> HomGenConfig {
        HomGenConfig {
            border_height: self.pre_resize.height,
            border_width: self.pre_resize.width,
            ..self.homgen.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pre_resize.height == 0 || self.pre_resize.width == 0 {
            return Err(Error::InvalidConfig("pre_resize must be positive".into()));
        }
        if let Some(r) = self.pre_crop {
            if r.width == 0 || r.height == 0 {
                return Err(Error::InvalidConfig("pre_crop must be non-empty".into()));
            }
        }
        self.effective_homgen().validate()?;
        self.augmentation.validate()
    }
}

/// Draws the offset frame for anchor `n` of a sequence of `len` frames:
/// `t` is uniform over the integers of `[-window, window]` that keep `n + t`
/// inside the sequence. Returns `(n, n + t)`.
pub fn sample_pair(len: usize, n: usize, window: u32, rng: &mut ChaCha8Rng) -> (usize, usize) {
    assert!(n < len, "anchor index {n} outside sequence of length {len}");
    let lo = -(n.min(window as usize) as i64);
    let hi = (len - 1 - n).min(window as usize) as i64;
    let t = rng.gen_range(lo..=hi);
    (n, (n as i64 + t) as usize)
}

/// Applies the configured pre-crop and resizes to `pre_resize`.
pub fn preprocess(frame: &ImageBuffer, cfg: &PipelineConfig) -> Result<ImageBuffer> {
    let cropped = match cfg.pre_crop {
        Some(r) => crop_rect(frame, r.x as usize, r.y as usize, r.width as usize, r.height as usize)?,
        None => frame.clone(),
    };
    resize_image(&cropped, cfg.pre_resize.height as usize, cfg.pre_resize.width as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub anchor_crop: ImageBuffer,
    pub warped_offset_crop: ImageBuffer,
    pub label: FourPointHomography,
    pub crop_polygon: Polygon,
    pub motion: GeneratedMotion,
    pub augmentation: AugmentationSpec,
    /// Offset-crop pixels whose source fell outside the offset image.
    pub fill_pixels: usize,
}

/// Builds one training pair from preprocessed frames. Both frames receive the
/// same augmentation; the offset frame is then warped by `G^-1` so that the
/// offset crop at `q` shows the offset frame at `G q`.
pub fn build_training_sample(
    img_n: &ImageBuffer,
    img_nt: &ImageBuffer,
    cfg: &PipelineConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainingSample> {
    let (h, w) = (cfg.pre_resize.height as usize, cfg.pre_resize.width as usize);
    for img in [img_n, img_nt] {
        if img.height() != h || img.width() != w {
            return Err(Error::InvalidImage(alloc::format!(
                "frame is {}x{}, expected {h}x{w}",
                img.height(),
                img.width()
            )));
        }
    }
    let augmentation = cfg.augmentation.sample_spec(rng);
    let aug_n = apply_augmentation(img_n, &augmentation)?;
    let aug_nt = apply_augmentation(img_nt, &augmentation)?;

    let homgen = cfg.effective_homgen();
    let crop = sample_crop_polygon(&homgen, rng)?;
    let motion = generate_motion(&homgen, &crop, rng)?;

    let anchor_crop = crop_image(&aug_n, &crop)?;
    let warped = warp_image_with_mask(&aug_nt, &motion.g_inverse, h, w)?;
    let warped_offset_crop = crop_image(&warped.image, &crop)?;
    let (x0, y0, cw, ch) = crop
        .as_axis_rect()
        .and_then(|r| r.to_pixels())
        .ok_or(Error::NonRectangularCrop)?;
    let fill_pixels = (y0..y0 + ch)
        .map(|r| warped.valid[r * w + x0..r * w + x0 + cw].iter().filter(|v| !**v).count())
        .sum();

    Ok(TrainingSample {
        anchor_crop,
        warped_offset_crop,
        label: motion.four_point,
        crop_polygon: crop,
        motion,
        augmentation,
        fill_pixels,
    })
}

/// Random-access frames grouped into sequences.
pub trait FrameSource {
    fn sequence_count(&self) -> usize;
    fn sequence_len(&self, sequence: usize) -> usize;
    /// Raw frame `index` of `sequence`, before preprocessing.
    fn frame(&self, sequence: usize, index: usize) -> Result<ImageBuffer>;

    fn total_frames(&self) -> usize {
        (0..self.sequence_count()).map(|s| self.sequence_len(s)).sum()
    }
}

/// A training sample together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSample {
    pub index: u64,
    pub seed: u64,
    pub sequence: usize,
    pub anchor_frame: usize,
    pub offset_frame: usize,
    pub sample: TrainingSample,
}

impl GeneratedSample {
    pub fn t(&self) -> i64 {
        self.offset_frame as i64 - self.anchor_frame as i64
    }
}

/// Sample number `index` of the stream defined by `cfg.master_seed`.
pub fn sample_at<S: FrameSource + ?Sized>(source: &S, cfg: &PipelineConfig, index: u64) -> Result<GeneratedSample> {
    let mut s = sample_from_seed(source, cfg, derive_seed(cfg.master_seed, index))?;
    s.index = index;
    Ok(s)
}

/// Rebuilds a sample from its recorded seed. The anchor is uniform over all
/// frames, which weights sequences by length.
pub fn sample_from_seed<S: FrameSource + ?Sized>(source: &S, cfg: &PipelineConfig, seed: u64) -> Result<GeneratedSample> {
    let total = source.total_frames();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = rng_from_seed(seed);
    let mut k = rng.gen_range(0..total);
    let mut sequence = 0;
    while k >= source.sequence_len(sequence) {
        k -= source.sequence_len(sequence);
        sequence += 1;
    }
    let (n, m) = sample_pair(source.sequence_len(sequence), k, cfg.sequence_window, &mut rng);
    let img_n = preprocess(&source.frame(sequence, n)?, cfg)?;
    let img_m = if m == n {
        img_n.clone()
    } else {
        preprocess(&source.frame(sequence, m)?, cfg)?
    };
    let sample = build_training_sample(&img_n, &img_m, cfg, &mut rng)?;
    Ok(GeneratedSample {
        index: 0,
        seed,
        sequence,
        anchor_frame: n,
        offset_frame: m,
        sample,
    })
}

/// Endless sample stream for a training loop; item `i` equals
/// `sample_at(source, cfg, start + i)`.
pub struct SampleStream<'a, S: FrameSource + ?Sized> {
    source: &'a S,
    cfg: PipelineConfig,
    next: u64,
}

impl<'a, S: FrameSource + ?Sized> SampleStream<'a, S> {
    pub fn new(source: &'a S, cfg: PipelineConfig, start: u64) -> Self {
        Self { source, cfg, next: start }
    }
}

impl<S: FrameSource + ?Sized> Iterator for SampleStream<'_, S> {
    type Item = Result<GeneratedSample>;

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.next;
        self.next = self.next.wrapping_add(1);
        Some(sample_at(self.source, &self.cfg, i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homography::four_point_to_matrix;
    use crate::geometry::rect_corners;
    use crate::image::{masked_mean_abs_diff, warp_image_with_mask};
    use alloc::vec;

    struct Synthetic {
        lens: Vec<usize>,
    }

    impl FrameSource for Synthetic {
        fn sequence_count(&self) -> usize {
            self.lens.len()
        }
        fn sequence_len(&self, s: usize) -> usize {
            self.lens[s]
        }
        fn frame(&self, s: usize, i: usize) -> Result<ImageBuffer> {
            let noise = crate::augment::value_noise(153, 204, (s * 1000 + i) as u64);
            ImageBuffer::from_fn(153, 204, 3, |r, c, k| {
                let v = noise[r * 204 + c] * 200.0 + ((r * 7 + c * 3 + k * 40) % 50) as f64;
                v as u8
            })
        }
    }

    fn static_cfg() -> PipelineConfig {
        PipelineConfig {
            augmentation: AugmentationPolicy::disabled(),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn pair_window_clamping() {
        let mut rng = rng_from_seed(4);
        for _ in 0..50 {
            assert_eq!(sample_pair(1, 0, 25, &mut rng), (0, 0));
        }
        let mut seen = [false; 26];
        for _ in 0..5000 {
            let (n, m) = sample_pair(100, 0, 25, &mut rng);
            assert_eq!(n, 0);
            assert!(m <= 25);
            seen[m] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn fully_static_sample() {
        let mut cfg = static_cfg();
        cfg.homgen.edge_deviation = 0.0;
        let img = preprocess(&Synthetic { lens: vec![1] }.frame(0, 0).unwrap(), &cfg).unwrap();
        let s = build_training_sample(&img, &img, &cfg, &mut rng_from_seed(1)).unwrap();
        assert_eq!(s.anchor_crop, s.warped_offset_crop);
        assert!(s.label.is_zero());
        assert_eq!(s.fill_pixels, 0);
    }

    #[test]
    fn static_pair_label_is_sound() {
        let cfg = static_cfg();
        let img = preprocess(&Synthetic { lens: vec![1] }.frame(0, 0).unwrap(), &cfg).unwrap();
        let corners = rect_corners(0.0, 0.0, 320.0, 240.0);
        for seed in 0..10 {
            let s = build_training_sample(&img, &img, &cfg, &mut rng_from_seed(seed)).unwrap();
            assert!(!s.motion.fallback);
            assert_eq!(s.fill_pixels, 0);
            let g = four_point_to_matrix(&s.label, &corners).unwrap();
            let back = warp_image_with_mask(&s.warped_offset_crop, &g, 240, 320).unwrap();
            let mae = masked_mean_abs_diff(&back.image, &s.anchor_crop, &back.valid).unwrap();
            assert!(mae < 3.0, "seed {seed}: {mae}");
        }
    }

    #[test]
    fn stream_matches_random_access() {
        let src = Synthetic { lens: vec![3, 5] };
        let cfg = PipelineConfig {
            master_seed: 77,
            sequence_window: 2,
            ..PipelineConfig::default()
        };
        let streamed: Vec<_> = SampleStream::new(&src, cfg.clone(), 10).take(3).map(|s| s.unwrap()).collect();
        for (i, s) in streamed.iter().enumerate() {
            let direct = sample_at(&src, &cfg, 10 + i as u64).unwrap();
            assert_eq!(*s, direct);
            assert!(s.t().abs() <= 2);
            let again = sample_from_seed(&src, &cfg, s.seed).unwrap();
            assert_eq!(again.sample, s.sample);
        }
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let small = PipelineConfig {
            pre_resize: Size { height: 100, width: 100 },
            ..PipelineConfig::default()
        };
        assert!(small.validate().is_err());
        let mut bad = PipelineConfig::default();
        bad.augmentation.fog = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wrong_frame_size_rejected() {
        let img = ImageBuffer::filled(10, 10, 1, 0).unwrap();
        assert!(matches!(
            build_training_sample(&img, &img, &PipelineConfig::default(), &mut rng_from_seed(0)),
            Err(Error::InvalidImage(_))
        ));
    }
}
