//! Gradient and edge extraction on single-channel planes.
//!
//! All convolutions use replicate padding: reads outside the plane clamp to
//! the nearest border sample. A plane is any row-major `f64` slice with
//! explicit dimensions, so the same operators serve both images on the
//! `[0, 255]` scale and latent channels on arbitrary scales.

use crate::error::{Error, Result};
use crate::raster::{BinaryMap, GrayImage};

/// Sobel output: per-pixel horizontal and vertical derivatives plus their
/// Euclidean magnitude. `magnitude[i]` always equals `hypot(gx[i], gy[i])`.
#[derive(Debug, Clone)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }
}

/// Canny parameters. Thresholds apply to the Sobel magnitude of the blurred
/// plane, so they share the input's intensity scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CannyParams {
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub gaussian_sigma: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            low_threshold: 50.0,
            high_threshold: 150.0,
            gaussian_sigma: 1.4,
        }
    }
}

impl CannyParams {
    fn validate(&self) -> Result<()> {
        if !self.low_threshold.is_finite()
            || !self.high_threshold.is_finite()
            || self.low_threshold <= 0.0
            || self.high_threshold < self.low_threshold
        {
            return Err(Error::invalid(format!(
                "canny thresholds must satisfy 0 < low <= high, got low={}, high={}",
                self.low_threshold, self.high_threshold
            )));
        }
        if !self.gaussian_sigma.is_finite() || self.gaussian_sigma <= 0.0 {
            return Err(Error::NonPositiveParam {
                name: "gaussian_sigma",
                value: self.gaussian_sigma,
            });
        }
        Ok(())
    }
}

#[inline]
fn clamp_idx(v: isize, max: usize) -> usize {
    v.clamp(0, max as isize - 1) as usize
}

fn check_plane(width: usize, height: usize, data: &[f64]) -> Result<()> {
    if width == 0 || height == 0 || data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if data.len() != width * height {
        return Err(Error::invalid(format!(
            "plane length {} does not match {}x{}",
            data.len(),
            width,
            height
        )));
    }
    Ok(())
}

/// Standard 3x3 Sobel derivatives with replicate padding. On a horizontal
/// unit ramp `f(x, y) = x` every interior pixel yields `gx = 8`, `gy = 0`;
/// inputs narrower than 3 samples fall back to the clamped reads and produce
/// correspondingly damped derivatives.
pub fn sobel(width: usize, height: usize, data: &[f64]) -> Result<GradientField> {
    check_plane(width, height, data)?;
    let at = |x: isize, y: isize| data[clamp_idx(y, height) * width + clamp_idx(x, width)];
    let mut gx = vec![0.0; width * height];
    let mut gy = vec![0.0; width * height];
    let mut magnitude = vec![0.0; width * height];
    for y in 0..height as isize {
        for x in 0..width as isize {
            let tl = at(x - 1, y - 1);
            let tc = at(x, y - 1);
            let tr = at(x + 1, y - 1);
            let ml = at(x - 1, y);
            let mr = at(x + 1, y);
            let bl = at(x - 1, y + 1);
            let bc = at(x, y + 1);
            let br = at(x + 1, y + 1);
            let dx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            let dy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
            let i = y as usize * width + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            magnitude[i] = dx.hypot(dy);
        }
    }
    Ok(GradientField {
        width,
        height,
        gx,
        gy,
        magnitude,
    })
}

/// Adjoint of [`sobel`] as a linear map: given cotangents for `gx` and `gy`,
/// accumulates the contribution of every replicate-padded read back onto the
/// input plane, so `<sobel(x), (u, v)> == <x, sobel_adjoint(u, v)>` holds for
/// any plane `x` and cotangents `(u, v)`.
pub fn sobel_adjoint(width: usize, height: usize, gx_bar: &[f64], gy_bar: &[f64]) -> Result<Vec<f64>> {
    check_plane(width, height, gx_bar)?;
    check_plane(width, height, gy_bar)?;
    let mut out = vec![0.0; width * height];
    const X_KERNEL: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    const Y_KERNEL: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    for y in 0..height as isize {
        for x in 0..width as isize {
            let i = y as usize * width + x as usize;
            for (ky, row) in (-1..=1).zip(X_KERNEL.iter().zip(Y_KERNEL.iter())) {
                for (kx, (wx, wy)) in (-1..=1).zip(row.0.iter().zip(row.1.iter())) {
                    let j = clamp_idx(y + ky, height) * width + clamp_idx(x + kx, width);
                    out[j] += wx * gx_bar[i] + wy * gy_bar[i];
                }
            }
        }
    }
    Ok(out)
}

/// Normalized 1-D Gaussian taps. The radius follows the kernel-size rule
/// `radius = max(1, floor(2 sigma))`, giving the classic 5x5 kernel at the
/// default `sigma = 1.4`.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = ((2.0 * sigma).floor() as usize).max(1);
    let mut taps: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|j| (-((j * j) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian blur with replicate padding.
pub fn gaussian_blur(width: usize, height: usize, data: &[f64], sigma: f64) -> Result<Vec<f64>> {
    check_plane(width, height, data)?;
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::NonPositiveParam {
            name: "sigma",
            value: sigma,
        });
    }
    let taps = gaussian_taps(sigma);
    let radius = (taps.len() / 2) as isize;
    let mut horizontal = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width as isize {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                let sx = clamp_idx(x + k as isize - radius, width);
                acc += tap * data[y * width + sx];
            }
            horizontal[y * width + x as usize] = acc;
        }
    }
    let mut out = vec![0.0; width * height];
    for y in 0..height as isize {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                let sy = clamp_idx(y + k as isize - radius, height);
                acc += tap * horizontal[sy * width + x];
            }
            out[y as usize * width + x] = acc;
        }
    }
    Ok(out)
}

/// Canny edge detector: Gaussian blur, Sobel gradients, non-maximum
/// suppression along the quantized gradient direction (4 bins), then
/// double-threshold hysteresis with 8-connectivity.
///
/// The outermost one-pixel ring is never marked, which avoids spurious
/// border responses. Suppression keeps a pixel only if it is strictly
/// greater than the neighbor on the negative side of the gradient direction
/// and at least as large as the one on the positive side, so a symmetric
/// two-pixel magnitude plateau thins to a single-pixel edge.
pub fn canny(img: &GrayImage, params: &CannyParams) -> Result<BinaryMap> {
    params.validate()?;
    let (width, height) = (img.width(), img.height());
    let blurred = gaussian_blur(width, height, img.data(), params.gaussian_sigma)?;
    let grad = sobel(width, height, &blurred)?;
    let mag = grad.magnitude();

    // Non-maximum suppression on interior pixels.
    let mut thinned = vec![0.0; width * height];
    if width > 2 && height > 2 {
        for y in 1..height - 1 {
            for x in 1..width - 1 {
                let i = y * width + x;
                let m = mag[i];
                if m == 0.0 {
                    continue;
                }
                // Direction modulo 180 degrees, quantized to 4 bins with
                // 22.5 degree boundaries.
                let angle = grad.gy()[i].atan2(grad.gx()[i]).to_degrees();
                let angle = if angle < 0.0 { angle + 180.0 } else { angle };
                let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                    (1, 0)
                } else if angle < 67.5 {
                    (1, 1)
                } else if angle < 112.5 {
                    (0, 1)
                } else {
                    (-1, 1)
                };
                let fwd = mag[(y as isize + dy) as usize * width + (x as isize + dx) as usize];
                let bwd = mag[(y as isize - dy) as usize * width + (x as isize - dx) as usize];
                if m > bwd && m >= fwd {
                    thinned[i] = m;
                }
            }
        }
    }

    // Hysteresis: seed from strong pixels, flood through weak ones.
    let mut edges = BinaryMap::new(width, height)?;
    let mut stack = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if thinned[i] >= params.high_threshold && !edges.get(x, y) {
                edges.set(x, y, true);
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for ny in cy.saturating_sub(1)..=(cy + 1).min(height - 1) {
                        for nx in cx.saturating_sub(1)..=(cx + 1).min(width - 1) {
                            let ni = ny * width + nx;
                            if !edges.get(nx, ny) && thinned[ni] >= params.low_threshold {
                                edges.set(nx, ny, true);
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sobel_of_unit_ramp_is_eight_inside() {
        let (w, h) = (6, 5);
        let data: Vec<f64> = (0..h).flat_map(|_| (0..w).map(|x| x as f64)).collect();
        let g = sobel(w, h, &data).unwrap();
        for y in 0..h {
            for x in 1..w - 1 {
                let i = y * w + x;
                assert_abs_diff_eq!(g.gx()[i], 8.0, epsilon = 1e-12);
                assert_abs_diff_eq!(g.gy()[i], 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(g.magnitude()[i], 8.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sobel_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (w, h) = (9, 7);
        let a: Vec<f64> = (0..w * h).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..w * h).map(|_| rng.random_range(-3.0..3.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x + y).collect();
        let ga = sobel(w, h, &a).unwrap();
        let gb = sobel(w, h, &b).unwrap();
        let gs = sobel(w, h, &sum).unwrap();
        for i in 0..w * h {
            assert_abs_diff_eq!(gs.gx()[i], 2.0 * ga.gx()[i] + gb.gx()[i], epsilon = 1e-9);
            assert_abs_diff_eq!(gs.gy()[i], 2.0 * ga.gy()[i] + gb.gy()[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn sobel_adjoint_satisfies_inner_product_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (w, h) = (8, 6);
        for _ in 0..20 {
            let x: Vec<f64> = (0..w * h).map(|_| rng.random_range(-2.0..2.0)).collect();
            let u: Vec<f64> = (0..w * h).map(|_| rng.random_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..w * h).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = sobel(w, h, &x).unwrap();
            let lhs: f64 = g
                .gx()
                .iter()
                .zip(&u)
                .chain(g.gy().iter().zip(&v))
                .map(|(a, b)| a * b)
                .sum();
            let adj = sobel_adjoint(w, h, &u, &v).unwrap();
            let rhs: f64 = x.iter().zip(&adj).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn gaussian_taps_default_sigma_is_five_wide_and_normalized() {
        let taps = gaussian_taps(1.4);
        assert_eq!(taps.len(), 5);
        assert_abs_diff_eq!(taps.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(taps[2] > taps[1] && taps[1] > taps[0]);
        assert_abs_diff_eq!(taps[0], taps[4], epsilon = 1e-15);
    }

    #[test]
    fn blur_preserves_constant_plane() {
        let data = vec![41.5; 30];
        let out = gaussian_blur(6, 5, &data, 1.4).unwrap();
        for v in out {
            assert_abs_diff_eq!(v, 41.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn canny_step_edge_thins_to_single_pixel_line() {
        let (w, h) = (24, 16);
        let img = GrayImage::from_fn(w, h, |x, _| if x < w / 2 { 0.0 } else { 255.0 }).unwrap();
        let edges = canny(&img, &CannyParams::default()).unwrap();
        for y in 1..h - 1 {
            let marked: Vec<usize> = (0..w).filter(|&x| edges.get(x, y)).collect();
            assert_eq!(marked.len(), 1, "row {y} should hold exactly one edge pixel");
            assert!(
                marked[0] == w / 2 - 1 || marked[0] == w / 2,
                "edge pixel at column {} is off the step boundary",
                marked[0]
            );
        }
        for x in 0..w {
            assert!(!edges.get(x, 0));
            assert!(!edges.get(x, h - 1));
        }
    }

    #[test]
    fn canny_flat_image_has_no_edges() {
        let img = GrayImage::from_fn(12, 9, |_, _| 180.0).unwrap();
        let edges = canny(&img, &CannyParams::default()).unwrap();
        assert_eq!(edges.count_ones(), 0);
    }

    #[test]
    fn canny_rejects_inverted_thresholds() {
        let img = GrayImage::new(8, 8).unwrap();
        let params = CannyParams {
            low_threshold: 100.0,
            high_threshold: 50.0,
            gaussian_sigma: 1.4,
        };
        assert!(canny(&img, &params).is_err());
    }

    #[test]
    fn canny_tiny_image_is_all_clear() {
        let img = GrayImage::from_fn(2, 2, |x, y| ((x + y) * 120) as f64).unwrap();
        let edges = canny(&img, &CannyParams::default()).unwrap();
        assert_eq!(edges.count_ones(), 0);
    }

    #[test]
    fn hysteresis_extends_strong_edges_through_weak_pixels() {
        // A vertical contrast seam whose contrast decays geometrically down
        // the image: the head of the seam responds above the high threshold,
        // the tail settles between the two thresholds. The gradual decay
        // keeps the gradient direction horizontal along the whole seam, so
        // every row retains its non-maximum-suppression peak and the weak
        // tail stays 8-connected to the strong head. With hysteresis the
        // tail must be kept; with low == high it must vanish.
        let (w, h) = (20, 32);
        let img = GrayImage::from_fn(w, h, |x, y| {
            let contrast = (200.0 * 0.9f64.powi((y as i32 - 6).max(0))).max(52.0);
            if x < w / 2 {
                0.0
            } else {
                contrast
            }
        })
        .unwrap();
        let with_hysteresis = canny(&img, &CannyParams::default()).unwrap();
        let strong_only = canny(
            &img,
            &CannyParams {
                low_threshold: 150.0,
                high_threshold: 150.0,
                gaussian_sigma: 1.4,
            },
        )
        .unwrap();
        // The strong head must be present in both runs; the weak tail only
        // in the hysteresis run.
        assert!(strong_only.count_ones() >= 10);
        assert!(with_hysteresis.count_ones() >= strong_only.count_ones() + 10);
    }
}
