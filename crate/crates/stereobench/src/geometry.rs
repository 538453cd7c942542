//! Disparity-based view geometry: depth conversion, forward warping of a
//! left view into a right view, and occlusion handling.
//!
//! Warping follows the screen convention in which nearer content sits at
//! larger disparity and the right-view image of a pixel moves left:
//! `x' = round(x - d)`, rounding half away from zero.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMap, Image};

/// Per-pixel depth in scene units, row-major. Values must be finite and
/// positive-or-zero; zero depth is handled by the conversion clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Per-pixel horizontal disparity in pixels, row-major, non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Output of [`forward_warp`]: the warped image and the mask of target
/// pixels no source pixel reached (true = occluded hole).
#[derive(Debug, Clone)]
pub struct WarpResult {
    pub image: Image,
    pub occlusion: BinaryMap,
}

fn check_plane(width: usize, height: usize, data: &[f64], what: &str) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    if data.len() != width * height {
        return Err(Error::invalid(format!(
            "{what} length {} does not match {}x{}",
            data.len(),
            width,
            height
        )));
    }
    Ok(())
}

impl DepthMap {
    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_plane(width, height, &data, "depth")?;
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("depth sample {v} must be finite and >= 0")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl DisparityMap {
    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_plane(width, height, &data, "disparity")?;
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!(
                "disparity sample {v} must be finite and >= 0"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_data(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Scales every disparity by `factor >= 0`; used to build degradation
    /// ladders.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(Error::invalid(format!(
                "scale factor {factor} must be finite and >= 0"
            )));
        }
        Self::from_data(
            self.width,
            self.height,
            self.data.iter().map(|d| d * factor).collect(),
        )
    }
}

/// Converts depth to disparity via `d = focal_times_baseline / depth`, with
/// depth clamped below at `min_depth_clamp` so zero or near-zero depth stays
/// finite. Both parameters must be positive.
pub fn depth_to_disparity(
    depth: &DepthMap,
    focal_times_baseline: f64,
    min_depth_clamp: f64,
) -> Result<DisparityMap> {
    if !(focal_times_baseline.is_finite() && focal_times_baseline > 0.0) {
        return Err(Error::NonPositiveParam {
            name: "focal_times_baseline",
            value: focal_times_baseline,
        });
    }
    if !(min_depth_clamp.is_finite() && min_depth_clamp > 0.0) {
        return Err(Error::NonPositiveParam {
            name: "min_depth_clamp",
            value: min_depth_clamp,
        });
    }
    let data = depth
        .data
        .iter()
        .map(|z| focal_times_baseline / z.max(min_depth_clamp))
        .collect();
    DisparityMap::from_data(depth.width, depth.height, data)
}

/// Forward-warps a left view by its disparity map: each source pixel splats
/// to `x' = round(x - d)` in its own row, out-of-bounds targets are dropped,
/// and collisions resolve by z-buffer (larger disparity wins; at equal
/// disparity the leftmost source wins). Unreached target pixels are zero
/// filled and flagged in the occlusion mask.
///
/// Zero disparity reproduces the source bit-exactly with an empty mask, and
/// a uniform disparity `d` occludes exactly `min(round(d), width)` columns.
pub fn forward_warp(src: &Image, disparity: &DisparityMap) -> Result<WarpResult> {
    if src.width() != disparity.width || src.height() != disparity.height {
        return Err(Error::DimensionMismatch {
            expected_width: src.width(),
            expected_height: src.height(),
            width: disparity.width,
            height: disparity.height,
        });
    }
    let (width, height) = (src.width(), src.height());
    let mut image = Image::new(width, height)?;
    let mut occlusion = BinaryMap::new(width, height)?;
    let mut best = vec![f64::NEG_INFINITY; width];
    for y in 0..height {
        best.fill(f64::NEG_INFINITY);
        for x in 0..width {
            let d = disparity.get(x, y);
            let target = (x as f64 - d).round();
            if target < 0.0 || target >= width as f64 {
                continue;
            }
            let tx = target as usize;
            if d > best[tx] {
                best[tx] = d;
                image.set_pixel(tx, y, src.pixel(x, y));
            }
        }
        for (x, b) in best.iter().enumerate() {
            if b.is_infinite() {
                occlusion.set(x, y, true);
            }
        }
    }
    Ok(WarpResult { image, occlusion })
}

/// Fills occluded pixels row by row: each hole copies the first valid pixel
/// to its right, falling back to the first valid pixel to its left. Rows
/// with no valid pixel at all are filled column-wise from the nearest valid
/// row (upper row wins a distance tie). Errors with [`Error::AllOccluded`]
/// when the mask covers the whole image.
pub fn fill_occlusions_nearest(warped: &Image, occlusion: &BinaryMap) -> Result<Image> {
    if warped.width() != occlusion.width() || warped.height() != occlusion.height() {
        return Err(Error::DimensionMismatch {
            expected_width: warped.width(),
            expected_height: warped.height(),
            width: occlusion.width(),
            height: occlusion.height(),
        });
    }
    let (width, height) = (warped.width(), warped.height());
    if occlusion.count_ones() == width * height {
        return Err(Error::AllOccluded);
    }
    let mut out = warped.clone();
    let mut row_has_valid = vec![false; height];
    for (y, has_valid) in row_has_valid.iter_mut().enumerate() {
        let valid_in_row = (0..width).any(|x| !occlusion.get(x, y));
        *has_valid = valid_in_row;
        if !valid_in_row {
            continue;
        }
        for x in 0..width {
            if !occlusion.get(x, y) {
                continue;
            }
            let right = (x + 1..width).find(|&sx| !occlusion.get(sx, y));
            let source = right.or_else(|| (0..x).rev().find(|&sx| !occlusion.get(sx, y)));
            let sx = source.expect("row checked to contain a valid pixel");
            out.set_pixel(x, y, warped.pixel(sx, y));
        }
    }
    for y in 0..height {
        if row_has_valid[y] {
            continue;
        }
        let source_row = (1..height)
            .find_map(|dist| {
                let up = y.checked_sub(dist).filter(|&r| row_has_valid[r]);
                up.or_else(|| {
                    let down = y + dist;
                    (down < height && row_has_valid[down]).then_some(down)
                })
            })
            .expect("not all rows can be empty after the AllOccluded check");
        for x in 0..width {
            let px = out.pixel(x, source_row);
            out.set_pixel(x, y, px);
        }
    }
    Ok(out)
}

/// Sidecar describing how a disparity file is encoded. Lives at
/// `<disparity path>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum DisparitySidecar {
    /// 16-bit grayscale PNG; disparity in pixels = stored value / scale.
    Png16 { scale: f64 },
    /// Raw little-endian f32 samples, row-major.
    RawF32 { width: usize, height: usize },
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    std::path::PathBuf::from(os)
}

/// Loads a disparity map according to its JSON sidecar.
pub fn load_disparity(path: impl AsRef<Path>) -> Result<DisparityMap> {
    let path = path.as_ref();
    let sidecar = sidecar_path(path);
    let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let meta: DisparitySidecar =
        serde_json::from_str(&text).map_err(|e| Error::json(&sidecar, e))?;
    match meta {
        DisparitySidecar::Png16 { scale } => {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::NonPositiveParam {
                    name: "scale",
                    value: scale,
                });
            }
            let dynimg = image::open(path).map_err(|e| Error::codec(path, e))?;
            let gray = dynimg.to_luma16();
            let (w, h) = (gray.width() as usize, gray.height() as usize);
            let data = gray.pixels().map(|p| p.0[0] as f64 / scale).collect();
            DisparityMap::from_data(w, h, data)
        }
        DisparitySidecar::RawF32 { width, height } => {
            let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let mut bytes = Vec::new();
            file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
            if bytes.len() != width * height * 4 {
                return Err(Error::invalid(format!(
                    "raw disparity {} holds {} bytes, expected {} for {}x{}",
                    path.display(),
                    bytes.len(),
                    width * height * 4,
                    width,
                    height
                )));
            }
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            DisparityMap::from_data(width, height, data)
        }
    }
}

/// Writes a disparity map as raw little-endian f32 plus its JSON sidecar.
pub fn save_disparity_raw(path: impl AsRef<Path>, disparity: &DisparityMap) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(disparity.data.len() * 4);
    for v in &disparity.data {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = sidecar_path(path);
    let meta = DisparitySidecar::RawF32 {
        width: disparity.width,
        height: disparity.height,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::json(&sidecar, e))?;
    std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

/// Writes a disparity map as 16-bit PNG with the given fixed-point scale,
/// plus its JSON sidecar.
pub fn save_disparity_png16(
    path: impl AsRef<Path>,
    disparity: &DisparityMap,
    scale: f64,
) -> Result<()> {
    let path = path.as_ref();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::NonPositiveParam {
            name: "scale",
            value: scale,
        });
    }
    let mut buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
        disparity.width as u32,
        disparity.height as u32,
    );
    for y in 0..disparity.height {
        for x in 0..disparity.width {
            let v = (disparity.get(x, y) * scale).round();
            if v > u16::MAX as f64 {
                return Err(Error::invalid(format!(
                    "disparity {} at ({x}, {y}) overflows 16 bits at scale {scale}",
                    disparity.get(x, y)
                )));
            }
            buf.put_pixel(x as u32, y as u32, image::Luma([v as u16]));
        }
    }
    buf.save(path).map_err(|e| Error::codec(path, e))?;
    let sidecar = sidecar_path(path);
    let meta = DisparitySidecar::Png16 { scale };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::json(&sidecar, e))?;
    std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Image;
    use approx::assert_abs_diff_eq;

    fn ramp_image(width: usize, height: usize) -> Image {
        Image::from_fn(width, height, |x, y| {
            let v = ((x * 13 + y * 29) % 256) as f64;
            [v, (v + 3.0).min(255.0), (v + 7.0).min(255.0)]
        })
        .unwrap()
    }

    #[test]
    fn depth_conversion_clamps_tiny_depth() {
        let depth = DepthMap::from_data(2, 1, vec![1e-9, 2.0]).unwrap();
        let disp = depth_to_disparity(&depth, 1.0, 0.1).unwrap();
        assert_abs_diff_eq!(disp.get(0, 0), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(disp.get(1, 0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn depth_conversion_rejects_nonpositive_params() {
        let depth = DepthMap::from_data(1, 1, vec![1.0]).unwrap();
        assert!(matches!(
            depth_to_disparity(&depth, 0.0, 0.1),
            Err(Error::NonPositiveParam { name: "focal_times_baseline", .. })
        ));
        assert!(matches!(
            depth_to_disparity(&depth, 1.0, 0.0),
            Err(Error::NonPositiveParam { name: "min_depth_clamp", .. })
        ));
    }

    #[test]
    fn zero_disparity_warp_is_identity() {
        let img = ramp_image(9, 4);
        let disp = DisparityMap::constant(9, 4, 0.0).unwrap();
        let out = forward_warp(&img, &disp).unwrap();
        assert_eq!(out.image, img);
        assert_eq!(out.occlusion.count_ones(), 0);
    }

    #[test]
    fn uniform_disparity_shifts_and_occludes_rightmost_columns() {
        let img = ramp_image(10, 3);
        let disp = DisparityMap::constant(10, 3, 3.0).unwrap();
        let out = forward_warp(&img, &disp).unwrap();
        for y in 0..3 {
            for x in 0..7 {
                assert_eq!(out.image.pixel(x, y), img.pixel(x + 3, y));
                assert!(!out.occlusion.get(x, y));
            }
            for x in 7..10 {
                assert!(out.occlusion.get(x, y));
            }
        }
    }

    #[test]
    fn uniform_disparity_occludes_min_round_d_columns() {
        for (w, d) in [(10usize, 2.3), (10, 2.5), (10, 2.7), (8, 3.5), (6, 9.0)] {
            let img = ramp_image(w, 2);
            let disp = DisparityMap::constant(w, 2, d).unwrap();
            let out = forward_warp(&img, &disp).unwrap();
            let expected = (d.round() as usize).min(w);
            assert_eq!(
                out.occlusion.count_ones(),
                expected * 2,
                "width {w}, disparity {d}"
            );
        }
    }

    #[test]
    fn larger_disparity_wins_collisions() {
        // Pixel 2 carries disparity 2 and pixel 1 carries disparity 1: both
        // land on target 0, the nearer (larger-disparity) source must win.
        let img = ramp_image(4, 1);
        let disp = DisparityMap::from_data(4, 1, vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        let out = forward_warp(&img, &disp).unwrap();
        assert_eq!(out.image.pixel(0, 0), img.pixel(2, 0));
    }

    #[test]
    fn fill_copies_right_neighbor_first() {
        let mut img = Image::new(3, 1).unwrap();
        img.set_pixel(0, 0, [10.0, 10.0, 10.0]);
        img.set_pixel(2, 0, [30.0, 30.0, 30.0]);
        let mut occ = BinaryMap::new(3, 1).unwrap();
        occ.set(1, 0, true);
        let filled = fill_occlusions_nearest(&img, &occ).unwrap();
        assert_eq!(filled.pixel(1, 0), [30.0, 30.0, 30.0]);
    }

    #[test]
    fn fill_falls_back_to_left_neighbor() {
        let mut img = Image::new(3, 1).unwrap();
        img.set_pixel(0, 0, [10.0, 10.0, 10.0]);
        let mut occ = BinaryMap::new(3, 1).unwrap();
        occ.set(1, 0, true);
        occ.set(2, 0, true);
        let filled = fill_occlusions_nearest(&img, &occ).unwrap();
        assert_eq!(filled.pixel(1, 0), [10.0, 10.0, 10.0]);
        assert_eq!(filled.pixel(2, 0), [10.0, 10.0, 10.0]);
    }

    #[test]
    fn fill_handles_fully_occluded_rows_column_wise() {
        let mut img = Image::new(2, 3).unwrap();
        img.set_pixel(0, 0, [50.0, 50.0, 50.0]);
        img.set_pixel(1, 0, [60.0, 60.0, 60.0]);
        let mut occ = BinaryMap::new(2, 3).unwrap();
        for x in 0..2 {
            occ.set(x, 1, true);
            occ.set(x, 2, true);
        }
        let filled = fill_occlusions_nearest(&img, &occ).unwrap();
        assert_eq!(filled.pixel(0, 2), [50.0, 50.0, 50.0]);
        assert_eq!(filled.pixel(1, 1), [60.0, 60.0, 60.0]);
    }

    #[test]
    fn fill_rejects_fully_occluded_image() {
        let img = Image::new(2, 2).unwrap();
        let occ = BinaryMap::from_data(2, 2, vec![true; 4]).unwrap();
        assert!(matches!(
            fill_occlusions_nearest(&img, &occ),
            Err(Error::AllOccluded)
        ));
    }

    #[test]
    fn disparity_raw_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("disp.f32");
        let disp = DisparityMap::from_data(3, 2, vec![0.0, 1.5, 2.25, 3.0, 4.5, 6.75]).unwrap();
        save_disparity_raw(&path, &disp).unwrap();
        let back = load_disparity(&path).unwrap();
        assert_eq!(back.width(), 3);
        assert_eq!(back.height(), 2);
        for (a, b) in disp.data().iter().zip(back.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn disparity_png16_roundtrip_respects_scale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("disp.png");
        let disp = DisparityMap::from_data(2, 2, vec![0.0, 0.5, 1.25, 200.0]).unwrap();
        save_disparity_png16(&path, &disp, 256.0).unwrap();
        let back = load_disparity(&path).unwrap();
        for (a, b) in disp.data().iter().zip(back.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1.0 / 256.0);
        }
    }
}
