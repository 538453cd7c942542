//! Core raster types and pixel operations.
//!
//! Images hold `f64` samples on the `[0, 255]` scale, regardless of the
//! on-disk bit depth. Quantization to 8-bit happens only when a file is
//! written (round half up); every in-memory operation keeps full precision
//! so metric values do not depend on intermediate save/load round trips.

use std::path::Path;

use crate::error::{Error, Result};

/// Interleaved RGB image, row-major, values in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Single-channel image, row-major, values in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Row-major boolean mask. Meaning is contextual: edge map, occlusion mask,
/// or thresholded difference map.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    Ok(())
}

impl Image {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        })
    }

    /// Builds from interleaved RGB data. The length must be `width * height * 3`
    /// and every sample must lie in `[0, 255]`.
    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "rgb data length {} does not match {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::invalid(format!("sample {v} outside [0, 255]")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                data.extend_from_slice(&px);
            }
        }
        Self::from_data(width, height, data)
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
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// `value` components must already be in `[0, 255]`.
    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, value: [f64; 3]) {
        debug_assert!(value.iter().all(|v| (0.0..=255.0).contains(v)));
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&value);
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![0.0; width * height],
        })
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "gray data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::invalid(format!("sample {v} outside [0, 255]")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_data(width, height, data)
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

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!((0.0..=255.0).contains(&value));
        self.data[y * self.width + x] = value;
    }
}

impl BinaryMap {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![false; width * height],
        })
    }

    pub fn from_data(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "mask length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
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

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }
}

/// ITU-R BT.601 luma: `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(img: &Image) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2])
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Splits a side-by-side frame at the vertical midline into (left, right).
pub fn split_side_by_side(frame: &Image) -> Result<(Image, Image)> {
    if !frame.width.is_multiple_of(2) {
        return Err(Error::OddWidth { width: frame.width });
    }
    let half = frame.width / 2;
    let mut left = Image::new(half, frame.height)?;
    let mut right = Image::new(half, frame.height)?;
    for y in 0..frame.height {
        for x in 0..half {
            left.set_pixel(x, y, frame.pixel(x, y));
            right.set_pixel(x, y, frame.pixel(x + half, y));
        }
    }
    Ok((left, right))
}

/// Concatenates two equal-height images horizontally (left | right).
pub fn hconcat(left: &Image, right: &Image) -> Result<Image> {
    if left.height != right.height {
        return Err(Error::DimensionMismatch {
            expected_width: left.width,
            expected_height: left.height,
            width: right.width,
            height: right.height,
        });
    }
    let mut out = Image::new(left.width + right.width, left.height)?;
    for y in 0..left.height {
        for x in 0..left.width {
            out.set_pixel(x, y, left.pixel(x, y));
        }
        for x in 0..right.width {
            out.set_pixel(left.width + x, y, right.pixel(x, y));
        }
    }
    Ok(out)
}

/// Bilinear resize with pixel-center alignment: destination center `d + 0.5`
/// maps to source coordinate `(d + 0.5) * src / dst`. Resizing to the same
/// size reproduces the input bit-exactly; sampling outside the source is
/// clamped to the border.
pub fn resize_bilinear(img: &Image, width: usize, height: usize) -> Result<Image> {
    check_dims(width, height)?;
    let sx_scale = img.width as f64 / width as f64;
    let sy_scale = img.height as f64 / height as f64;
    let mut out = Image::new(width, height)?;
    for dy in 0..height {
        let sy = (dy as f64 + 0.5) * sy_scale - 0.5;
        let y0 = sy.floor();
        let fy = sy - y0;
        let y0i = (y0 as isize).clamp(0, img.height as isize - 1) as usize;
        let y1i = (y0 as isize + 1).clamp(0, img.height as isize - 1) as usize;
        for dx in 0..width {
            let sx = (dx as f64 + 0.5) * sx_scale - 0.5;
            let x0 = sx.floor();
            let fx = sx - x0;
            let x0i = (x0 as isize).clamp(0, img.width as isize - 1) as usize;
            let x1i = (x0 as isize + 1).clamp(0, img.width as isize - 1) as usize;
            let p00 = img.pixel(x0i, y0i);
            let p10 = img.pixel(x1i, y0i);
            let p01 = img.pixel(x0i, y1i);
            let p11 = img.pixel(x1i, y1i);
            let mut px = [0.0; 3];
            for c in 0..3 {
                let top = p00[c] + fx * (p10[c] - p00[c]);
                let bottom = p01[c] + fx * (p11[c] - p01[c]);
                px[c] = top + fy * (bottom - top);
            }
            out.set_pixel(dx, dy, px);
        }
    }
    Ok(out)
}

/// Red-cyan anaglyph: red channel from the left view, green and blue from the
/// right view. Dimensions must match.
pub fn render_anaglyph(left: &Image, right: &Image) -> Result<Image> {
    if left.width != right.width || left.height != right.height {
        return Err(Error::DimensionMismatch {
            expected_width: left.width,
            expected_height: left.height,
            width: right.width,
            height: right.height,
        });
    }
    let mut out = Image::new(left.width, left.height)?;
    for y in 0..left.height {
        for x in 0..left.width {
            let l = left.pixel(x, y);
            let r = right.pixel(x, y);
            out.set_pixel(x, y, [l[0], r[1], r[2]]);
        }
    }
    Ok(out)
}

/// Per-pixel absolute difference, averaged over channels, as a gray image.
pub fn diff_heatmap(a: &Image, b: &Image) -> Result<GrayImage> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch {
            expected_width: a.width,
            expected_height: a.height,
            width: b.width,
            height: b.height,
        });
    }
    let data = a
        .data
        .chunks_exact(3)
        .zip(b.data.chunks_exact(3))
        .map(|(pa, pb)| {
            ((pa[0] - pb[0]).abs() + (pa[1] - pb[1]).abs() + (pa[2] - pb[2]).abs()) / 3.0
        })
        .collect();
    Ok(GrayImage {
        width: a.width,
        height: a.height,
        data,
    })
}

/// Absolute difference of two gray images.
pub fn gray_abs_diff(a: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch {
            expected_width: a.width,
            expected_height: a.height,
            width: b.width,
            height: b.height,
        });
    }
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).abs())
        .collect();
    Ok(GrayImage {
        width: a.width,
        height: a.height,
        data,
    })
}

#[inline]
fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Loads a PNG or JPEG as RGB. Alpha, if present, is dropped with a warning
/// on stderr; 16-bit sources are scaled to the `[0, 255]` range.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let dynimg = image::open(path).map_err(|e| Error::codec(path, e))?;
    if dynimg.color().has_alpha() {
        eprintln!("warning: {} has an alpha channel, dropping it", path.display());
    }
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let color = dynimg.color();
    let deep = color.bytes_per_pixel() as usize / color.channel_count() as usize >= 2;
    let data = if deep {
        dynimg
            .to_rgb16()
            .pixels()
            .flat_map(|p| p.0)
            .map(|v| v as f64 * (255.0 / 65535.0))
            .collect()
    } else {
        dynimg
            .to_rgb8()
            .pixels()
            .flat_map(|p| p.0)
            .map(|v| v as f64)
            .collect()
    };
    Image::from_data(w, h, data)
}

/// Writes PNG or JPEG depending on the file extension, quantizing to 8-bit
/// with round half up.
pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let mut buf = image::RgbImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            let p = img.pixel(x, y);
            buf.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([quantize(p[0]), quantize(p[1]), quantize(p[2])]),
            );
        }
    }
    check_save_ext(path)?;
    buf.save(path).map_err(|e| Error::codec(path, e))
}

pub fn save_gray(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let mut buf = image::GrayImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            buf.put_pixel(x as u32, y as u32, image::Luma([quantize(img.get(x, y))]));
        }
    }
    check_save_ext(path)?;
    buf.save(path).map_err(|e| Error::codec(path, e))
}

/// Writes a mask as an 8-bit PNG with 255 for set pixels.
pub fn save_binary(path: impl AsRef<Path>, map: &BinaryMap) -> Result<()> {
    let path = path.as_ref();
    let mut buf = image::GrayImage::new(map.width as u32, map.height as u32);
    for y in 0..map.height {
        for x in 0..map.width {
            let v = if map.get(x, y) { 255 } else { 0 };
            buf.put_pixel(x as u32, y as u32, image::Luma([v]));
        }
    }
    check_save_ext(path)?;
    buf.save(path).map_err(|e| Error::codec(path, e))
}

/// Loads an 8-bit mask written by [`save_binary`]; any nonzero pixel is set.
pub fn load_binary(path: impl AsRef<Path>) -> Result<BinaryMap> {
    let path = path.as_ref();
    let dynimg = image::open(path).map_err(|e| Error::codec(path, e))?;
    let gray = dynimg.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let data = gray.pixels().map(|p| p.0[0] != 0).collect();
    BinaryMap::from_data(w, h, data)
}

fn check_save_ext(path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg") => Ok(()),
        other => Err(Error::invalid(format!(
            "unsupported image extension {:?} for {}, use png or jpeg",
            other,
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grayscale_matches_bt601_weights() {
        let img = Image::from_fn(2, 1, |x, _| if x == 0 { [255.0, 0.0, 0.0] } else { [0.0, 255.0, 0.0] }).unwrap();
        let gray = to_grayscale(&img);
        assert_abs_diff_eq!(gray.get(0, 0), 76.245, epsilon = 1e-12);
        assert_abs_diff_eq!(gray.get(1, 0), 149.685, epsilon = 1e-12);
    }

    #[test]
    fn split_rejects_odd_width() {
        let img = Image::new(5, 2).unwrap();
        assert!(matches!(
            split_side_by_side(&img),
            Err(Error::OddWidth { width: 5 })
        ));
    }

    #[test]
    fn split_then_concat_is_identity() {
        let img = Image::from_fn(8, 3, |x, y| {
            let v = (x * 31 + y * 7) as f64 % 256.0;
            [v, (v + 10.0).min(255.0), (v + 20.0).min(255.0)]
        })
        .unwrap();
        let (l, r) = split_side_by_side(&img).unwrap();
        assert_eq!(l.width(), 4);
        assert_eq!(r.width(), 4);
        let back = hconcat(&l, &r).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn resize_same_size_is_bit_exact() {
        let img = Image::from_fn(7, 5, |x, y| {
            let v = ((x * 53 + y * 11) % 255) as f64 + 0.25;
            [v, v / 2.0, 255.0 - v]
        })
        .unwrap();
        let out = resize_bilinear(&img, 7, 5).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn resize_checkerboard_to_single_pixel_averages() {
        let img = Image::from_fn(2, 2, |x, y| {
            let v = if (x + y) % 2 == 0 { 0.0 } else { 255.0 };
            [v, v, v]
        })
        .unwrap();
        let out = resize_bilinear(&img, 1, 1).unwrap();
        assert_abs_diff_eq!(out.pixel(0, 0)[0], 127.5, epsilon = 1e-12);
    }

    #[test]
    fn upscale_of_two_pixel_row_is_monotone() {
        let img = Image::from_fn(2, 1, |x, _| {
            let v = if x == 0 { 0.0 } else { 255.0 };
            [v, v, v]
        })
        .unwrap();
        let out = resize_bilinear(&img, 4, 1).unwrap();
        let row: Vec<f64> = (0..4).map(|x| out.pixel(x, 0)[0]).collect();
        assert_eq!(row, vec![0.0, 63.75, 191.25, 255.0]);
    }

    #[test]
    fn anaglyph_takes_red_from_left_and_cyan_from_right() {
        let left = Image::from_fn(1, 1, |_, _| [10.0, 20.0, 30.0]).unwrap();
        let right = Image::from_fn(1, 1, |_, _| [40.0, 50.0, 60.0]).unwrap();
        let ana = render_anaglyph(&left, &right).unwrap();
        assert_eq!(ana.pixel(0, 0), [10.0, 50.0, 60.0]);
    }

    #[test]
    fn image_roundtrip_through_png_preserves_quantized_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = Image::from_fn(5, 4, |x, y| {
            [
                (x * 50) as f64,
                (y * 60) as f64,
                ((x + y) * 30) as f64,
            ]
        })
        .unwrap();
        save_image(&path, &img).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.width(), 5);
        assert_eq!(back.height(), 4);
        for (a, b) in img.data().iter().zip(back.data()) {
            assert_abs_diff_eq!(a.round(), *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_out_of_range_samples() {
        assert!(Image::from_data(1, 1, vec![0.0, 0.0, 256.0]).is_err());
        assert!(GrayImage::from_data(1, 1, vec![-0.5]).is_err());
        assert!(Image::new(0, 3).is_err());
    }
}
