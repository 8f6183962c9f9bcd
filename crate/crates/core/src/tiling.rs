//! Tile plans for the three tiled-sampling strategies.
//!
//! A plan partitions a latent canvas into fixed-size tiles:
//!
//! - disjoint: zero-offset grid, far-edge tiles clamped into the canvas,
//! - explicit: grid with stride `tile - overlap`, so neighbours share pixels,
//! - shifted: the disjoint grid translated by a per-step offset; the tile
//!   COUNT never changes, far-edge tiles clamp, and the uncovered margin
//!   becomes the constant region that keeps its previous-step values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned tile rectangle in latent pixels; `x` is the column of the
/// left edge, `y` the row of the top edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl TileRect {
    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }
}

/// Boolean canvas mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl Mask {
    fn new(height: usize, width: usize) -> Self {
        Self { height, width, data: vec![false; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }

    fn set_rect(&mut self, r: &TileRect) {
        for y in r.y..r.bottom() {
            let row = y * self.width;
            self.data[row + r.x..row + r.right()].fill(true);
        }
    }

    fn complement(&self) -> Mask {
        Mask {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    /// Run-length encoding: alternating run lengths, starting with a
    /// (possibly zero) run of `false`.
    pub fn to_rle(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0usize;
        for &b in &self.data {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    fn from_rle(height: usize, width: usize, runs: &[usize]) -> Result<Mask> {
        let mut data = Vec::with_capacity(height * width);
        let mut value = false;
        for &len in runs {
            data.extend(std::iter::repeat(value).take(len));
            value = !value;
        }
        if data.len() != height * width {
            return Err(Error::ConfigParse(format!(
                "mask RLE covers {} pixels, canvas has {}",
                data.len(),
                height * width
            )));
        }
        Ok(Mask { height, width, data })
    }
}

/// One step's tiles plus the shifted/constant decomposition of the canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct TilePlan {
    /// Canvas size as (height, width) in latent pixels.
    pub canvas: (usize, usize),
    /// Tiles in raster order (row-major by start position).
    pub tiles: Vec<TileRect>,
    /// Step offset (dx, dy) that produced this plan.
    pub offset: (usize, usize),
    /// Union of all tile rectangles.
    pub shifted_mask: Mask,
    /// Complement of the union: pixels that keep their previous value.
    pub constant_mask: Mask,
}

impl TilePlan {
    fn from_tiles(canvas: (usize, usize), tiles: Vec<TileRect>, offset: (usize, usize)) -> Self {
        let mut shifted = Mask::new(canvas.0, canvas.1);
        for t in &tiles {
            shifted.set_rect(t);
        }
        let constant = shifted.complement();
        Self { canvas, tiles, offset, shifted_mask: shifted, constant_mask: constant }
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn to_json(&self) -> PlanJson {
        PlanJson {
            canvas: self.canvas,
            offset: self.offset,
            tiles: self.tiles.clone(),
            shifted_mask_rle: self.shifted_mask.to_rle(),
        }
    }

    pub fn from_json(j: &PlanJson) -> Result<TilePlan> {
        let shifted = Mask::from_rle(j.canvas.0, j.canvas.1, &j.shifted_mask_rle)?;
        let constant = shifted.complement();
        Ok(TilePlan {
            canvas: j.canvas,
            tiles: j.tiles.clone(),
            offset: j.offset,
            shifted_mask: shifted,
            constant_mask: constant,
        })
    }
}

/// Debug-serializable form of a [`TilePlan`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanJson {
    pub canvas: (usize, usize),
    pub offset: (usize, usize),
    pub tiles: Vec<TileRect>,
    pub shifted_mask_rle: Vec<usize>,
}

fn check_tile_fits(canvas: (usize, usize), tile: (usize, usize)) -> Result<()> {
    if tile.0 == 0 || tile.1 == 0 {
        return Err(Error::Dimension("tile dims must be >= 1".into()));
    }
    if tile.0 > canvas.0 || tile.1 > canvas.1 {
        return Err(Error::Dimension(format!(
            "tile {}x{} larger than canvas {}x{}",
            tile.0, tile.1, canvas.0, canvas.1
        )));
    }
    Ok(())
}

/// Start positions along one axis: `0, stride, 2*stride, ...` with the
/// final start clamped to `len - tile` so the last tile stays in-canvas.
fn axis_starts(len: usize, tile: usize, stride: usize) -> Vec<usize> {
    debug_assert!(tile <= len && stride >= 1);
    let mut starts = Vec::new();
    let mut pos = 0;
    loop {
        if pos + tile >= len {
            starts.push(len - tile);
            break;
        }
        starts.push(pos);
        pos += stride;
    }
    starts
}

fn grid(canvas: (usize, usize), tile: (usize, usize), ys: &[usize], xs: &[usize]) -> Vec<TileRect> {
    let mut tiles = Vec::with_capacity(ys.len() * xs.len());
    for &y in ys {
        for &x in xs {
            debug_assert!(y + tile.0 <= canvas.0 && x + tile.1 <= canvas.1);
            tiles.push(TileRect { x, y, w: tile.1, h: tile.0 });
        }
    }
    tiles
}

/// Zero-offset grid with stride = tile size. When an axis is not an exact
/// multiple the final start clamps to `axis - tile`, creating a bounded
/// overlap at the far edge.
pub fn plan_disjoint(height: usize, width: usize, tile: (usize, usize)) -> Result<TilePlan> {
    check_tile_fits((height, width), tile)?;
    let ys = axis_starts(height, tile.0, tile.0);
    let xs = axis_starts(width, tile.1, tile.1);
    Ok(TilePlan::from_tiles((height, width), grid((height, width), tile, &ys, &xs), (0, 0)))
}

/// Tile count for the explicit-overlap configuration: the floor of
/// `W/(W_tile-overlap) * H/(H_tile-overlap)`, evaluated exactly.
pub fn n_tiles_explicit(
    image_w: usize,
    image_h: usize,
    tile_w: usize,
    tile_h: usize,
    overlap: usize,
) -> Result<usize> {
    if overlap >= tile_w.min(tile_h) {
        return Err(Error::Config(format!(
            "overlap {overlap} must be smaller than tile {tile_w}x{tile_h}"
        )));
    }
    // The product of the two ratios is the exact rational
    // (W * H) / ((W_tile - overlap) * (H_tile - overlap)).
    let num = image_w as u128 * image_h as u128;
    let den = (tile_w - overlap) as u128 * (tile_h - overlap) as u128;
    Ok((num / den) as usize)
}

/// Overlapping grid with stride `tile - overlap`; the final start per axis
/// clamps to `axis - tile`. Every canvas pixel is covered.
pub fn plan_explicit(
    height: usize,
    width: usize,
    tile: (usize, usize),
    overlap: usize,
) -> Result<TilePlan> {
    check_tile_fits((height, width), tile)?;
    if overlap >= tile.0.min(tile.1) {
        return Err(Error::Config(format!(
            "overlap {overlap} must be smaller than tile {}x{}",
            tile.0, tile.1
        )));
    }
    let ys = axis_starts(height, tile.0, tile.0 - overlap);
    let xs = axis_starts(width, tile.1, tile.1 - overlap);
    Ok(TilePlan::from_tiles((height, width), grid((height, width), tile, &ys, &xs), (0, 0)))
}

/// The disjoint grid shifted by `(dx, dy)`, keeping the same number of
/// starts per axis as the zero-offset plan; each start clamps to
/// `axis - tile`. Pixels left of `dx` / above `dy` form the constant
/// region (empty only when the offset is zero or a tile spans the axis).
pub fn plan_shifted(
    height: usize,
    width: usize,
    tile: (usize, usize),
    offset: (usize, usize),
) -> Result<TilePlan> {
    check_tile_fits((height, width), tile)?;
    let (dx, dy) = offset;
    if dx >= tile.1 || dy >= tile.0 {
        return Err(Error::Offset(format!(
            "offset ({dx}, {dy}) must be within the tile {}x{}",
            tile.0, tile.1
        )));
    }
    let count_y = axis_starts(height, tile.0, tile.0).len();
    let count_x = axis_starts(width, tile.1, tile.1).len();
    let ys: Vec<usize> = (0..count_y).map(|i| (dy + i * tile.0).min(height - tile.0)).collect();
    let xs: Vec<usize> = (0..count_x).map(|i| (dx + i * tile.1).min(width - tile.1)).collect();
    Ok(TilePlan::from_tiles((height, width), grid((height, width), tile, &ys, &xs), (dx, dy)))
}

/// Per-tile blending weights for overlapping plans: each pixel's weight is
/// `1 / coverage`, so contributions average uniformly and per-pixel weights
/// sum to one across covering tiles.
pub fn blend_weights(plan: &TilePlan) -> Vec<crate::plane::Plane> {
    let (h, w) = plan.canvas;
    let mut coverage = vec![0u32; h * w];
    for t in &plan.tiles {
        for y in t.y..t.bottom() {
            for x in t.x..t.right() {
                coverage[y * w + x] += 1;
            }
        }
    }
    plan.tiles
        .iter()
        .map(|t| {
            let mut data = Vec::with_capacity(t.w * t.h);
            for y in t.y..t.bottom() {
                for x in t.x..t.right() {
                    data.push(1.0 / f64::from(coverage[y * w + x]));
                }
            }
            crate::plane::Plane::from_vec(t.h, t.w, 1, data).expect("tile dims are nonzero")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_exact_tiling() {
        let p = plan_disjoint(128, 128, (64, 64)).unwrap();
        let starts: Vec<(usize, usize)> = p.tiles.iter().map(|t| (t.x, t.y)).collect();
        assert_eq!(starts, vec![(0, 0), (64, 0), (0, 64), (64, 64)]);
        assert_eq!(p.constant_mask.count(), 0);
    }

    #[test]
    fn disjoint_clamps_far_edge() {
        let p = plan_disjoint(100, 100, (64, 64)).unwrap();
        assert_eq!(p.tile_count(), 4);
        let xs: Vec<usize> = p.tiles.iter().map(|t| t.x).collect();
        assert_eq!(xs, vec![0, 36, 0, 36]);
        assert_eq!(p.constant_mask.count(), 0);
    }

    #[test]
    fn disjoint_single_tile() {
        let p = plan_disjoint(64, 64, (64, 64)).unwrap();
        assert_eq!(p.tile_count(), 1);
        assert_eq!(p.tiles[0], TileRect { x: 0, y: 0, w: 64, h: 64 });
    }

    #[test]
    fn disjoint_rejects_oversized_tile() {
        assert!(plan_disjoint(32, 32, (64, 64)).is_err());
    }

    #[test]
    fn n_tiles_matches_hand_floors() {
        assert_eq!(n_tiles_explicit(1024, 1024, 512, 512, 0).unwrap(), 4);
        assert_eq!(n_tiles_explicit(1024, 1024, 256, 256, 16).unwrap(), 18);
        assert!(n_tiles_explicit(128, 128, 64, 64, 64).is_err());
    }

    #[test]
    fn n_tiles_zero_overlap_matches_disjoint_plan_when_divisible() {
        for (hw, t) in [(128usize, 64usize), (256, 64), (96, 32)] {
            let plan = plan_disjoint(hw, hw, (t, t)).unwrap();
            assert_eq!(n_tiles_explicit(hw, hw, t, t, 0).unwrap(), plan.tile_count());
        }
    }

    #[test]
    fn explicit_stride_trace() {
        let p = plan_explicit(128, 128, (64, 64), 32).unwrap();
        assert_eq!(p.tile_count(), 9);
        let xs: Vec<usize> = p.tiles[..3].iter().map(|t| t.x).collect();
        assert_eq!(xs, vec![0, 32, 64]);
    }

    #[test]
    fn explicit_zero_overlap_equals_disjoint() {
        let a = plan_explicit(100, 130, (32, 48), 0).unwrap();
        let b = plan_disjoint(100, 130, (32, 48)).unwrap();
        assert_eq!(a.tiles, b.tiles);
    }

    #[test]
    fn explicit_covers_canvas() {
        let p = plan_explicit(100, 100, (64, 64), 16).unwrap();
        assert_eq!(p.constant_mask.count(), 0);
        // Brute-force rasterization oracle.
        for y in 0..100 {
            for x in 0..100 {
                assert!(p.tiles.iter().any(|t| t.contains(y, x)), "({y},{x}) uncovered");
            }
        }
    }

    #[test]
    fn shifted_zero_offset_is_disjoint() {
        let a = plan_shifted(128, 100, (64, 32), (0, 0)).unwrap();
        let b = plan_disjoint(128, 100, (64, 32)).unwrap();
        assert_eq!(a.tiles, b.tiles);
        assert_eq!(a.constant_mask.count(), 0);
    }

    #[test]
    fn shifted_clamp_trace() {
        let p = plan_shifted(128, 128, (64, 64), (16, 16)).unwrap();
        assert_eq!(p.tile_count(), 4);
        let starts: Vec<(usize, usize)> = p.tiles.iter().map(|t| (t.x, t.y)).collect();
        assert_eq!(starts, vec![(16, 16), (64, 16), (16, 64), (64, 64)]);
        // Constant region: strips x < 16 or y < 16.
        assert_eq!(p.constant_mask.count(), 128 * 128 - 112 * 112);
        for y in 0..128 {
            for x in 0..128 {
                assert_eq!(p.constant_mask.get(y, x), x < 16 || y < 16);
            }
        }
    }

    #[test]
    fn shifted_rejects_offset_outside_tile() {
        assert!(matches!(
            plan_shifted(128, 128, (64, 64), (64, 0)),
            Err(Error::Offset(_))
        ));
    }

    #[test]
    fn shifted_count_matches_zero_offset_count() {
        let mut rng = crate::rng::StreamRng::derive(11, "tiling_count", 0);
        for _ in 0..100 {
            let th = 4 + rng.below(13) as usize;
            let tw = 4 + rng.below(13) as usize;
            let h = th + rng.below(40) as usize;
            let w = tw + rng.below(40) as usize;
            let dy = rng.below(th as u32) as usize;
            let dx = rng.below(tw as u32) as usize;
            let base = plan_disjoint(h, w, (th, tw)).unwrap();
            let shifted = plan_shifted(h, w, (th, tw), (dx, dy)).unwrap();
            assert_eq!(base.tile_count(), shifted.tile_count(), "h={h} w={w} t=({th},{tw})");
        }
    }

    #[test]
    fn masks_partition_canvas() {
        let p = plan_shifted(50, 70, (20, 30), (7, 3)).unwrap();
        for y in 0..50 {
            for x in 0..70 {
                assert!(p.shifted_mask.get(y, x) ^ p.constant_mask.get(y, x));
                let covered = p.tiles.iter().any(|t| t.contains(y, x));
                assert_eq!(covered, p.shifted_mask.get(y, x));
            }
        }
    }

    #[test]
    fn tiles_stay_in_canvas() {
        for plan in [
            plan_disjoint(77, 91, (16, 23)).unwrap(),
            plan_explicit(77, 91, (16, 23), 5).unwrap(),
            plan_shifted(77, 91, (16, 23), (11, 9)).unwrap(),
        ] {
            for t in &plan.tiles {
                assert!(t.right() <= 91 && t.bottom() <= 77);
            }
        }
    }

    #[test]
    fn blend_weights_non_overlapping_are_one() {
        let p = plan_disjoint(128, 128, (64, 64)).unwrap();
        for w in blend_weights(&p) {
            assert!(w.data().iter().all(|v| *v == 1.0));
        }
    }

    #[test]
    fn blend_weights_shared_strip_is_half() {
        // Two tiles overlapping in a strip: starts {0, 32} with tile 64.
        let p = plan_explicit(64, 96, (64, 64), 32).unwrap();
        assert_eq!(p.tile_count(), 2);
        let w = blend_weights(&p);
        // Tile 0 columns 32..64 overlap tile 1.
        assert_eq!(w[0].get(0, 0, 0), 1.0);
        assert_eq!(w[0].get(0, 40, 0), 0.5);
        assert_eq!(w[1].get(0, 8, 0), 0.5);
        assert_eq!(w[1].get(0, 63, 0), 1.0);
    }

    #[test]
    fn blend_weights_sum_to_one() {
        let p = plan_explicit(128, 128, (64, 64), 32).unwrap();
        let ws = blend_weights(&p);
        let mut sums = vec![0.0f64; 128 * 128];
        for (t, w) in p.tiles.iter().zip(ws.iter()) {
            for y in 0..t.h {
                for x in 0..t.w {
                    sums[(t.y + y) * 128 + (t.x + x)] += w.get(y, x, 0);
                }
            }
        }
        for s in sums {
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn plan_json_round_trip() {
        let p = plan_shifted(40, 56, (16, 16), (5, 9)).unwrap();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let parsed: PlanJson = serde_json::from_str(&text).unwrap();
        let q = TilePlan::from_json(&parsed).unwrap();
        assert_eq!(p, q);
    }
}
