//! Quality and cost metrics: luminance PSNR, SSIM, a seam-discontinuity
//! score, and an analytical peak-memory model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::tiling::TilePlan;

/// BT.601 luminance weights.
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];
/// PSNR cap returned when the luminance MSE is below 1e-12.
pub const PSNR_CAP_DB: f64 = 99.0;

fn luminance(p: &Plane) -> Result<Vec<f64>> {
    match p.channels() {
        1 => Ok(p.data().to_vec()),
        3 => {
            let mut out = Vec::with_capacity(p.height() * p.width());
            for px in p.data().chunks_exact(3) {
                out.push(LUMA[0] * px[0] + LUMA[1] * px[1] + LUMA[2] * px[2]);
            }
            Ok(out)
        }
        c => Err(Error::Dimension(format!("luminance needs 1 or 3 channels, got {c}"))),
    }
}

/// PSNR on the BT.601 luminance channel for unit-range images, capped at
/// [`PSNR_CAP_DB`] when the error vanishes.
pub fn psnr_y(a: &Plane, b: &Plane) -> Result<f64> {
    a.check_same_shape(b, "psnr_y")?;
    if a.channels() != 3 {
        return Err(Error::Dimension(format!(
            "psnr_y needs 3-channel images, got {}",
            a.channels()
        )));
    }
    let ya = luminance(a)?;
    let yb = luminance(b)?;
    let mse = ya
        .iter()
        .zip(yb.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / ya.len() as f64;
    if mse < 1e-12 {
        Ok(PSNR_CAP_DB)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}

/// SSIM on luminance with an 8x8 uniform sliding window, K1 = 0.01,
/// K2 = 0.03, dynamic range 1.0; mean over all window positions.
pub fn ssim(a: &Plane, b: &Plane) -> Result<f64> {
    a.check_same_shape(b, "ssim")?;
    const WIN: usize = 8;
    let (h, w) = (a.height(), a.width());
    if h < WIN || w < WIN {
        return Err(Error::Dimension(format!(
            "ssim needs at least {WIN}x{WIN} images, got {h}x{w}"
        )));
    }
    let ya = luminance(a)?;
    let yb = luminance(b)?;
    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let n = (WIN * WIN) as f64;

    let mut total = 0.0;
    let mut windows = 0usize;
    for y0 in 0..=h - WIN {
        for x0 in 0..=w - WIN {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + WIN {
                for x in x0..x0 + WIN {
                    let va = ya[y * w + x];
                    let vb = yb[y * w + x];
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            }
            let ma = sa / n;
            let mb = sb / n;
            let va = saa / n - ma * ma;
            let vb = sbb / n - mb * mb;
            let cov = sab / n - ma * mb;
            let score = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            total += score;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// Boundary-vs-interior gradient statistics around tile edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamReport {
    /// Mean absolute difference across boundary-straddling pixel pairs.
    pub boundary_grad: f64,
    /// Mean absolute difference across all other adjacent pairs.
    pub interior_grad: f64,
    /// `boundary_grad / interior_grad`; 1 when the interior gradient or
    /// the boundary set is degenerate.
    pub score: f64,
    /// True when there were no boundary pairs or no interior signal.
    pub degenerate: bool,
}

fn pixel_difference(img: &Plane, y0: usize, x0: usize, y1: usize, x1: usize) -> f64 {
    let c = img.channels();
    let mut acc = 0.0;
    for ch in 0..c {
        acc += (img.get(y0, x0, ch) - img.get(y1, x1, ch)).abs();
    }
    acc / c as f64
}

/// Marks, in image coordinates, the adjacent pixel pairs that straddle a
/// tile edge of `plan` scaled by `factor`. Returns (vertical-edge pairs,
/// horizontal-edge pairs) as boolean grids indexed by the pair's second
/// pixel: `v[y][x]` marks the pair ((y, x-1), (y, x)).
fn boundary_pair_masks(
    plan: &TilePlan,
    factor: usize,
    h: usize,
    w: usize,
) -> (Vec<bool>, Vec<bool>) {
    let mut vert = vec![false; h * w];
    let mut horz = vec![false; h * w];
    for t in &plan.tiles {
        let (y0, y1) = (t.y * factor, t.bottom() * factor);
        let (x0, x1) = (t.x * factor, t.right() * factor);
        for &xe in &[x0, x1] {
            if xe == 0 || xe >= w {
                continue;
            }
            for y in y0..y1.min(h) {
                vert[y * w + xe] = true;
            }
        }
        for &ye in &[y0, y1] {
            if ye == 0 || ye >= h {
                continue;
            }
            for x in x0..x1.min(w) {
                horz[ye * w + x] = true;
            }
        }
    }
    (vert, horz)
}

/// Ratio of boundary-adjacent to interior-adjacent mean absolute pixel
/// differences, with the plan's tile edges scaled up to image pixels.
pub fn seam_score(image: &Plane, plan: &TilePlan) -> Result<SeamReport> {
    let (h, w) = (image.height(), image.width());
    let (ch, cw) = plan.canvas;
    if h % ch != 0 || w % cw != 0 || h / ch != w / cw || h / ch == 0 {
        return Err(Error::Dimension(format!(
            "image {h}x{w} is not an integer multiple of plan canvas {ch}x{cw}"
        )));
    }
    let factor = h / ch;
    let (vert, horz) = boundary_pair_masks(plan, factor, h, w);

    let (mut b_sum, mut b_n) = (0.0f64, 0usize);
    let (mut i_sum, mut i_n) = (0.0f64, 0usize);
    for y in 0..h {
        for x in 1..w {
            let d = pixel_difference(image, y, x - 1, y, x);
            if vert[y * w + x] {
                b_sum += d;
                b_n += 1;
            } else {
                i_sum += d;
                i_n += 1;
            }
        }
    }
    for y in 1..h {
        for x in 0..w {
            let d = pixel_difference(image, y - 1, x, y, x);
            if horz[y * w + x] {
                b_sum += d;
                b_n += 1;
            } else {
                i_sum += d;
                i_n += 1;
            }
        }
    }

    let boundary_grad = if b_n > 0 { b_sum / b_n as f64 } else { 0.0 };
    let interior_grad = if i_n > 0 { i_sum / i_n as f64 } else { 0.0 };
    let degenerate = b_n == 0 || interior_grad < 1e-9;
    let score = if degenerate { 1.0 } else { boundary_grad / interior_grad };
    Ok(SeamReport { boundary_grad, interior_grad, score, degenerate })
}

/// Per-pixel boundary-gradient magnitudes: zero away from tile edges,
/// the cross-edge absolute difference at boundary-adjacent pixels.
/// Used by the seam-map rendering.
pub fn seam_map(image: &Plane, plan: &TilePlan) -> Result<Plane> {
    let (h, w) = (image.height(), image.width());
    let (ch, cw) = plan.canvas;
    if h % ch != 0 || w % cw != 0 || h / ch != w / cw || h / ch == 0 {
        return Err(Error::Dimension(format!(
            "image {h}x{w} is not an integer multiple of plan canvas {ch}x{cw}"
        )));
    }
    let factor = h / ch;
    let (vert, horz) = boundary_pair_masks(plan, factor, h, w);
    let mut out = Plane::zeros(h, w, 1);
    for y in 0..h {
        for x in 0..w {
            let mut m: f64 = 0.0;
            if x > 0 && vert[y * w + x] {
                m = m.max(pixel_difference(image, y, x - 1, y, x));
            }
            if x + 1 < w && vert[y * w + x + 1] {
                m = m.max(pixel_difference(image, y, x, y, x + 1));
            }
            if y > 0 && horz[y * w + x] {
                m = m.max(pixel_difference(image, y - 1, x, y, x));
            }
            if y + 1 < h && horz[(y + 1) * w + x] {
                m = m.max(pixel_difference(image, y, x, y + 1, x));
            }
            out.set(y, x, 0, m.min(1.0));
        }
    }
    Ok(out)
}

/// Analytical peak-memory model in gigabytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryModel {
    pub base_g: f64,
    pub per_latent_pixel_g: f64,
    pub per_active_pixel_g: f64,
}

/// Which working set is resident at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryStrategy {
    Full,
    /// Tiled with the given tile size in output pixels.
    Tiled { tile: (usize, usize) },
}

impl MemoryModel {
    pub fn validate(&self) -> Result<()> {
        if self.base_g < 0.0 || self.per_latent_pixel_g < 0.0 || self.per_active_pixel_g < 0.0 {
            return Err(Error::Config("memory model terms must be >= 0".into()));
        }
        Ok(())
    }

    /// Two-point calibration from full-frame anchor measurements
    /// `(resolution, gigabytes)`. The anchors pin `base` and the total
    /// per-pixel slope; `active_share` in [0, 1] decides how much of the
    /// slope is working-set (tile-dependent) versus resident-latent.
    pub fn calibrate_two_point(
        r1: (usize, usize),
        m1: f64,
        r2: (usize, usize),
        m2: f64,
        active_share: f64,
    ) -> Result<MemoryModel> {
        let p1 = (r1.0 * r1.1) as f64;
        let p2 = (r2.0 * r2.1) as f64;
        if p1 == p2 {
            return Err(Error::Config("calibration anchors need distinct areas".into()));
        }
        if !(0.0..=1.0).contains(&active_share) {
            return Err(Error::Config("active_share must lie in [0, 1]".into()));
        }
        let slope = (m2 - m1) / (p2 - p1);
        let base = m1 - slope * p1;
        if slope < 0.0 || base < 0.0 {
            return Err(Error::Config(format!(
                "anchors produce a negative model: base {base}, slope {slope}"
            )));
        }
        Ok(MemoryModel {
            base_g: base,
            per_latent_pixel_g: slope * (1.0 - active_share),
            per_active_pixel_g: slope * active_share,
        })
    }

    /// Smallest square resolution whose full-frame estimate exceeds
    /// `budget_g`.
    pub fn full_oom_side(&self, budget_g: f64) -> f64 {
        let slope = self.per_latent_pixel_g + self.per_active_pixel_g;
        if slope <= 0.0 {
            return f64::INFINITY;
        }
        (((budget_g - self.base_g) / slope).max(0.0)).sqrt()
    }
}

/// Peak-memory estimate: the resident latent scales with the output, and
/// the denoised working set scales with the whole output (full) or only
/// the tile (tiled).
pub fn estimate_peak_memory(
    model: &MemoryModel,
    out_resolution: (usize, usize),
    strategy: MemoryStrategy,
) -> Result<f64> {
    model.validate()?;
    let (h, w) = out_resolution;
    if h == 0 || w == 0 {
        return Err(Error::Dimension("resolution must be positive".into()));
    }
    let pixels = (h * w) as f64;
    let active = match strategy {
        MemoryStrategy::Full => pixels,
        MemoryStrategy::Tiled { tile } => (tile.0 * tile.1) as f64,
    };
    Ok(model.base_g + model.per_latent_pixel_g * pixels + model.per_active_pixel_g * active)
}

/// One row of the metrics report CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub strategy: String,
    pub psnr_y: f64,
    pub ssim: f64,
    pub seam_score: f64,
    pub invocations: usize,
    pub wall_time_s: f64,
    pub est_memory_g: f64,
}

/// CSV header shared by every metrics report.
pub const METRICS_CSV_HEADER: [&str; 8] = [
    "run_id",
    "strategy",
    "psnr_y",
    "ssim",
    "seam_score",
    "invocations",
    "wall_time_s",
    "est_memory_g",
];

/// Appends metrics rows (with header) to a CSV writer.
pub fn write_metrics_csv<W: std::io::Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let io_err = |e: csv::Error| Error::Io { path: "<csv>".into(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_CSV_HEADER).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.run_id.as_str(),
            r.strategy.as_str(),
            &format!("{:.6}", r.psnr_y),
            &format!("{:.6}", r.ssim),
            &format!("{:.6}", r.seam_score),
            &r.invocations.to_string(),
            &format!("{:.6}", r.wall_time_s),
            &format!("{:.6}", r.est_memory_g),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Io { path: "<csv>".into(), message: e.to_string() })?;
    Ok(())
}
