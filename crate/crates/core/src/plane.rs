//! 2-D sample arrays shared by images and latents.

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// A dense H x W x C array of real samples in row-major order with
/// interleaved channels. Carries both image pixels and latents.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Plane {
    /// Builds a plane from raw row-major data, checking shape and finiteness.
    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Dimension(format!(
                "plane dims must be >= 1, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::Dimension(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Dimension("plane contains non-finite values".into()));
        }
        Ok(Self { height, width, channels, data })
    }

    /// A plane filled with a constant.
    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self::from_vec(height, width, channels, vec![value; height * width * channels])
            .expect("constant plane is always valid for nonzero dims")
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    /// A plane of standard-normal samples drawn from `rng`.
    pub fn normal(height: usize, width: usize, channels: usize, rng: &mut StreamRng) -> Self {
        let n = height * width * channels;
        let data = rng.normal_vec(n);
        Self { height, width, channels, data }
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Returns a dimension error unless both planes share H, W, and C.
    pub fn check_same_shape(&self, other: &Plane, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        let i = self.index(y, x, c);
        self.data[i] = v;
    }

    /// Elementwise map into a new plane.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Plane { height: self.height, width: self.width, channels: self.channels, data }
    }

    /// Elementwise combination of two same-shaped planes.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Result<Plane> {
        self.check_same_shape(other, "zip_map")?;
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Plane { height: self.height, width: self.width, channels: self.channels, data })
    }

    /// Copies the `w x h` region with top-left `(x, y)` into a new plane.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Plane> {
        if x + w > self.width || y + h > self.height || w == 0 || h == 0 {
            return Err(Error::Dimension(format!(
                "crop {w}x{h}+{x}+{y} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for yy in y..y + h {
            let row = (yy * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[row..row + w * self.channels]);
        }
        Ok(Plane { height: h, width: w, channels: self.channels, data })
    }

    /// Writes `patch` at top-left `(x, y)`, overwriting previous contents.
    pub fn paste(&mut self, x: usize, y: usize, patch: &Plane) -> Result<()> {
        if patch.channels != self.channels
            || x + patch.width > self.width
            || y + patch.height > self.height
        {
            return Err(Error::Dimension(format!(
                "paste {}x{}x{}+{x}+{y} exceeds {}x{}x{}",
                patch.width, patch.height, patch.channels, self.width, self.height, self.channels
            )));
        }
        let row_len = patch.width * self.channels;
        for (yy, src_row) in patch.data.chunks_exact(row_len).enumerate() {
            let dst = ((y + yy) * self.width + x) * self.channels;
            self.data[dst..dst + row_len].copy_from_slice(src_row);
        }
        Ok(())
    }

    /// Bilinear resample to exactly `out_h x out_w` using half-pixel
    /// centers and edge clamping. Aspect distortion is permitted.
    pub fn resize_bilinear(&self, out_h: usize, out_w: usize) -> Result<Plane> {
        if out_h == 0 || out_w == 0 {
            return Err(Error::Dimension("resize target dims must be >= 1".into()));
        }
        let sy = self.height as f64 / out_h as f64;
        let sx = self.width as f64 / out_w as f64;
        let mut data = vec![0.0; out_h * out_w * self.channels];
        for oy in 0..out_h {
            let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for ox in 0..out_w {
                let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                for c in 0..self.channels {
                    let v00 = self.get(y0, x0, c);
                    let v01 = self.get(y0, x1, c);
                    let v10 = self.get(y1, x0, c);
                    let v11 = self.get(y1, x1, c);
                    let top = v00 + (v01 - v00) * wx;
                    let bot = v10 + (v11 - v10) * wx;
                    data[(oy * out_w + ox) * self.channels + c] = top + (bot - top) * wy;
                }
            }
        }
        Plane::from_vec(out_h, out_w, self.channels, data)
    }

    /// Mean over all samples.
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance over all samples.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Plane::from_vec(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Plane::from_vec(0, 2, 1, vec![]).is_err());
        assert!(Plane::from_vec(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn crop_paste_round_trip() {
        let mut p = Plane::zeros(4, 5, 2);
        for (i, v) in p.data_mut().iter_mut().enumerate() {
            *v = i as f64;
        }
        let c = p.crop(1, 2, 3, 2).unwrap();
        assert_eq!(c.width(), 3);
        assert_eq!(c.height(), 2);
        assert_eq!(c.get(0, 0, 0), p.get(2, 1, 0));
        let mut q = Plane::zeros(4, 5, 2);
        q.paste(1, 2, &c).unwrap();
        assert_eq!(q.get(3, 3, 1), p.get(3, 3, 1));
        assert_eq!(q.get(0, 0, 0), 0.0);
    }

    #[test]
    fn resize_same_size_is_identity() {
        let mut p = Plane::zeros(3, 4, 1);
        for (i, v) in p.data_mut().iter_mut().enumerate() {
            *v = (i as f64).sin();
        }
        let r = p.resize_bilinear(3, 4).unwrap();
        for (a, b) in p.data().iter().zip(r.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn resize_preserves_constants() {
        let p = Plane::filled(5, 7, 3, 0.42);
        let r = p.resize_bilinear(11, 3).unwrap();
        for v in r.data() {
            assert!((v - 0.42).abs() < 1e-12);
        }
    }

    #[test]
    fn checkerboard_downsample_matches_hand_oracle() {
        // 4x4 checkerboard to 2x2: each output center sits exactly between
        // two source rows and columns, so every output is the 4-neighbour
        // average 0.5.
        let mut p = Plane::zeros(4, 4, 1);
        for y in 0..4 {
            for x in 0..4 {
                p.set(y, x, 0, ((x + y) % 2) as f64);
            }
        }
        let r = p.resize_bilinear(2, 2).unwrap();
        for v in r.data() {
            assert!((v - 0.5).abs() < 1e-12, "got {v}");
        }
    }
}
