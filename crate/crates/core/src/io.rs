//! Deterministic image and configuration I/O.
//!
//! Images are 8-bit RGB PNG, the only on-disk image format. Writing
//! quantizes unit-range samples with round-half-away-from-zero to
//! 0..=255, so a write-then-read round trip reproduces the quantized
//! values exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::sampler::SampleConfig;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Reads an 8-bit RGB PNG into a unit-range plane.
pub fn read_image(path: &Path) -> Result<Plane> {
    let img = image::open(path).map_err(|e| io_err(path, e))?;
    let rgb = match img {
        image::DynamicImage::ImageRgb8(buf) => buf,
        image::DynamicImage::ImageLuma8(buf) => {
            image::DynamicImage::ImageLuma8(buf).to_rgb8()
        }
        other => {
            let bits = other.color().bits_per_pixel();
            if bits > 32 {
                return Err(io_err(path, format!("unsupported bit depth ({bits} bpp)")));
            }
            other.to_rgb8()
        }
    };
    let (w, h) = rgb.dimensions();
    let data: Vec<f64> = rgb.as_raw().iter().map(|&b| f64::from(b) / 255.0).collect();
    Plane::from_vec(h as usize, w as usize, 3, data)
}

/// Writes a unit-range plane as 8-bit RGB PNG. Single-channel planes are
/// replicated into gray RGB. Values must already lie in [0, 1].
pub fn write_image(path: &Path, plane: &Plane) -> Result<()> {
    if plane.channels() != 3 && plane.channels() != 1 {
        return Err(Error::Dimension(format!(
            "write_image needs 1 or 3 channels, got {}",
            plane.channels()
        )));
    }
    if plane.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Config("image samples must lie in [0, 1] before writing".into()));
    }
    let (h, w) = (plane.height(), plane.width());
    let mut raw = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let v = plane.get(y, x, c.min(plane.channels() - 1));
                raw.push((v * 255.0).round() as u8);
            }
        }
    }
    let buf: image::RgbImage =
        image::ImageBuffer::from_raw(w as u32, h as u32, raw).expect("sized buffer");
    buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| io_err(path, e))
}

/// A run configuration document: the sampling setup plus dataset paths.
/// Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sample: SampleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.sample.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run config serializes")
    }
}
