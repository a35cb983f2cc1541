//! Binary PGM (`P5`) and PPM (`P6`) images with 8-bit samples.

use std::fs;
use std::path::Path;

use homgen_core::image::ImageBuffer;

use crate::error::{Error, Result};

/// Decodes a `P5` or `P6` file. Samples with a maxval below 255 are rescaled
/// to the full 8-bit range.
pub fn decode(bytes: &[u8]) -> std::result::Result<ImageBuffer, String> {
    let mut pos = 0;
    let magic = token(bytes, &mut pos).ok_or("missing magic number")?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        other => return Err(format!("unsupported magic {:?}", String::from_utf8_lossy(other))),
    };
    let mut field = |name: &str| -> std::result::Result<usize, String> {
        let t = token(bytes, &mut pos).ok_or(format!("missing {name}"))?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(format!("bad {name}"))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if !(1..=255).contains(&maxval) {
        return Err(format!("maxval {maxval} unsupported (8-bit only)"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let len = width * height * channels;
    let raster = bytes
        .get(pos..pos + len)
        .ok_or_else(|| format!("raster truncated: need {len} bytes, have {}", bytes.len().saturating_sub(pos)))?;
    let data = if maxval == 255 {
        raster.to_vec()
    } else {
        raster
            .iter()
            .map(|v| ((*v as u32 * 255 + maxval as u32 / 2) / maxval as u32).min(255) as u8)
            .collect()
    };
    ImageBuffer::new(height, width, channels, data).map_err(|e| e.to_string())
}

fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

pub fn encode(img: &ImageBuffer) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn read(path: &Path) -> Result<ImageBuffer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|msg| Error::parse(path.display(), 1, msg))
}

pub fn write(path: &Path, img: &ImageBuffer) -> Result<()> {
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}
