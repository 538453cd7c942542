//! Image-quality and stereo-consistency metrics, plus the rank correlations
//! used to compare metric scores against human preference.
//!
//! The stereo score combines two intersection-over-union terms: one over
//! Canny edge maps of the generated and ground-truth right views, and one
//! over thresholded absolute-difference maps taken against the shared left
//! view. An output that simply repeats the left view reproduces none of the
//! view difference, so its difference term is exactly zero no matter how
//! good its pixel statistics look.

use serde::{Deserialize, Serialize};

use crate::edges::{canny, CannyParams};
use crate::error::{Error, Result};
use crate::raster::{BinaryMap, GrayImage, Image};

/// Configuration for [`siou`]. `alpha` weights the edge term against the
/// difference term; `diff_threshold` binarizes absolute difference maps with
/// `>=`. The embedded Canny parameters travel with every report so scores
/// stay comparable across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiouConfig {
    pub alpha: f64,
    pub diff_threshold: f64,
    pub canny: CannyParams,
}

impl Default for SiouConfig {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            diff_threshold: 5.0,
            canny: CannyParams::default(),
        }
    }
}

/// A stereo score together with its two components;
/// `value == alpha * edge_iou + (1 - alpha) * diff_iou`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiouScore {
    pub value: f64,
    pub edge_iou: f64,
    pub diff_iou: f64,
}

fn check_same_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected_width: a.0,
            expected_height: a.1,
            width: b.0,
            height: b.1,
        });
    }
    Ok(())
}

/// Intersection over union of two masks. An empty union (both masks empty)
/// counts as perfect agreement and returns 1.0; if exactly one mask is empty
/// the intersection is empty and the result is 0.0.
pub fn binary_iou(a: &BinaryMap, b: &BinaryMap) -> Result<f64> {
    check_same_dims((a.width(), a.height()), (b.width(), b.height()))?;
    let mut inter = 0usize;
    let mut union = 0usize;
    for (x, y) in a.data().iter().zip(b.data()) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Mask of pixels whose absolute difference is at least `threshold`.
pub fn diff_mask(a: &GrayImage, b: &GrayImage, threshold: f64) -> Result<BinaryMap> {
    check_same_dims((a.width(), a.height()), (b.width(), b.height()))?;
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::NonPositiveParam {
            name: "threshold",
            value: threshold,
        });
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs() >= threshold)
        .collect();
    BinaryMap::from_data(a.width(), a.height(), data)
}

/// Stereo intersection-over-union of a generated right view against the
/// ground-truth right view, both taken relative to the shared left view.
///
/// `siou = alpha * IoU(E_gen, E_right) + (1 - alpha) * IoU(D_gen, D_right)`
/// where `E_*` are Canny edge maps and `D_*` are difference masks against
/// the left view at `cfg.diff_threshold`. Perfect reproduction scores 1.0;
/// copying the left view zeroes the difference term.
pub fn siou(
    left: &GrayImage,
    right: &GrayImage,
    generated: &GrayImage,
    cfg: &SiouConfig,
) -> Result<SiouScore> {
    check_same_dims((left.width(), left.height()), (right.width(), right.height()))?;
    check_same_dims(
        (left.width(), left.height()),
        (generated.width(), generated.height()),
    )?;
    if !cfg.alpha.is_finite() || !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::invalid(format!(
            "alpha must lie in [0, 1], got {}",
            cfg.alpha
        )));
    }
    let edge_gen = canny(generated, &cfg.canny)?;
    let edge_right = canny(right, &cfg.canny)?;
    let edge_iou = binary_iou(&edge_gen, &edge_right)?;
    let mask_gen = diff_mask(generated, left, cfg.diff_threshold)?;
    let mask_right = diff_mask(right, left, cfg.diff_threshold)?;
    let diff_iou = binary_iou(&mask_gen, &mask_right)?;
    Ok(SiouScore {
        value: cfg.alpha * edge_iou + (1.0 - cfg.alpha) * diff_iou,
        edge_iou,
        diff_iou,
    })
}

/// Root-mean-square error over all pixels and channels on the `[0, 255]`
/// scale.
pub fn rmse(a: &Image, b: &Image) -> Result<f64> {
    check_same_dims((a.width(), a.height()), (b.width(), b.height()))?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sum / a.data().len() as f64).sqrt())
}

/// Peak signal-to-noise ratio in dB for a given RMSE on the `[0, 255]`
/// scale: `20 log10(255 / rmse)`, `+inf` when the error is zero.
pub fn psnr_from_rmse(rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (255.0 / rmse).log10()
    }
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_rmse(rmse(a, b)?))
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn ssim_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as isize;
    for (k, tap) in taps.iter_mut().enumerate() {
        let j = k as isize - r;
        *tap = (-((j * j) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    for tap in &mut taps {
        *tap /= sum;
    }
    taps
}

/// Separable weighted convolution keeping only fully covered (valid)
/// windows. Output dims are `(w - 10) x (h - 10)`.
fn valid_gauss_filter(width: usize, height: usize, data: &[f64], taps: &[f64]) -> Vec<f64> {
    let vw = width - (SSIM_WINDOW - 1);
    let mut horizontal = vec![0.0; vw * height];
    for y in 0..height {
        for x in 0..vw {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                acc += tap * data[y * width + x + k];
            }
            horizontal[y * vw + x] = acc;
        }
    }
    let vh = height - (SSIM_WINDOW - 1);
    let mut out = vec![0.0; vw * vh];
    for y in 0..vh {
        for x in 0..vw {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                acc += tap * horizontal[(y + k) * vw + x];
            }
            out[y * vw + x] = acc;
        }
    }
    out
}

/// Mean structural similarity over all valid 11x11 windows, with the
/// standard Gaussian window (`sigma = 1.5`) and stabilizers
/// `C1 = (0.01 * 255)^2`, `C2 = (0.03 * 255)^2`. Identical images score 1.0.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_same_dims((a.width(), a.height()), (b.width(), b.height()))?;
    if a.width() < SSIM_WINDOW || a.height() < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width: a.width(),
            height: a.height(),
            min: SSIM_WINDOW,
        });
    }
    let taps = ssim_taps();
    let (w, h) = (a.width(), a.height());
    let xx: Vec<f64> = a.data().iter().map(|v| v * v).collect();
    let yy: Vec<f64> = b.data().iter().map(|v| v * v).collect();
    let xy: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    let mu_x = valid_gauss_filter(w, h, a.data(), &taps);
    let mu_y = valid_gauss_filter(w, h, b.data(), &taps);
    let e_xx = valid_gauss_filter(w, h, &xx, &taps);
    let e_yy = valid_gauss_filter(w, h, &yy, &taps);
    let e_xy = valid_gauss_filter(w, h, &xy, &taps);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let score = ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((mx * mx + my * my + SSIM_C1) * (var_x + var_y + SSIM_C2));
        total += score;
    }
    Ok(total / mu_x.len() as f64)
}

fn check_rank_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.len() < 2 {
        return Err(Error::DegenerateInput {
            reason: "fewer than two observations".into(),
        });
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN is not rankable"));
    }
    Ok(())
}

/// Ranks with ties averaged: `[10, 20, 20, 30]` ranks as `[1, 2.5, 2.5, 4]`.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den_x = 0.0;
    let mut den_y = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        num += dx * dy;
        den_x += dx * dx;
        den_y += dy * dy;
    }
    if den_x == 0.0 || den_y == 0.0 {
        return Err(Error::DegenerateInput {
            reason: "an input has no rank variation".into(),
        });
    }
    // A single square root of the product keeps perfect agreement exact:
    // when the rank vectors coincide, num == den_x == den_y and
    // sqrt(d * d) == d in IEEE-754, so the quotient is exactly 1.
    Ok(num / (den_x * den_y).sqrt())
}

/// Spearman rank correlation: Pearson correlation of average ranks.
/// `+inf` values are rankable; NaN is rejected, constant input is
/// degenerate.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_rank_inputs(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall rank correlation with tie correction (tau-b):
/// `(C - D) / sqrt((n0 - T_x) (n0 - T_y))` where `n0 = n(n-1)/2` and `T_*`
/// count pairs tied in each input. Discordant pairs are counted by merge
/// sort, so large inputs stay `O(n log n)`.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64> {
    check_rank_inputs(x, y)?;
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    fn tie_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
        let mut pairs = 0u64;
        let mut run = 1u64;
        for i in 1..sorted.len() {
            if sorted[i] == sorted[i - 1] {
                run += 1;
            } else {
                pairs += run * (run - 1) / 2;
                run = 1;
            }
        }
        pairs + run * (run - 1) / 2
    }

    let sorted_x: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let sorted_joint: Vec<(f64, f64)> = idx.iter().map(|&i| (x[i], y[i])).collect();
    let t_x = tie_pairs(&sorted_x);
    let t_xy = tie_pairs(&sorted_joint);

    // Count discordant pairs as merge-sort swaps over y (x-tied pairs were
    // pre-sorted by y above, so they never register as swaps).
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let discordant = merge_count(&mut ys);
    let t_y = tie_pairs(&ys);

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let denom_x = n0 - t_x;
    let denom_y = n0 - t_y;
    if denom_x == 0 || denom_y == 0 {
        return Err(Error::DegenerateInput {
            reason: "an input has no rank variation".into(),
        });
    }
    // tot - xtie - ytie + ntie counts the pairs distinct in both inputs,
    // i.e. concordant plus discordant. Add before subtracting: with heavy
    // overlapping ties t_x + t_y can exceed n0 on its own.
    let con_plus_dis = n0 + t_xy - t_x - t_y;
    let num = con_plus_dis as f64 - 2.0 * discordant as f64;
    Ok(num / ((denom_x as f64) * (denom_y as f64)).sqrt())
}

fn merge_count(ys: &mut [f64]) -> u64 {
    let n = ys.len();
    if n < 2 {
        return 0;
    }
    let mut buf = ys.to_vec();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            if mid < hi {
                let (mut i, mut j, mut k) = (lo, mid, lo);
                while i < mid && j < hi {
                    if ys[j] < ys[i] {
                        swaps += (mid - i) as u64;
                        buf[k] = ys[j];
                        j += 1;
                    } else {
                        buf[k] = ys[i];
                        i += 1;
                    }
                    k += 1;
                }
                while i < mid {
                    buf[k] = ys[i];
                    i += 1;
                    k += 1;
                }
                while j < hi {
                    buf[k] = ys[j];
                    j += 1;
                    k += 1;
                }
                ys[lo..hi].copy_from_slice(&buf[lo..hi]);
            }
            lo += 2 * width;
        }
        width *= 2;
    }
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mask(width: usize, height: usize, bits: &[u8]) -> BinaryMap {
        BinaryMap::from_data(width, height, bits.iter().map(|b| *b != 0).collect()).unwrap()
    }

    #[test]
    fn binary_iou_counts_overlap() {
        let a = mask(2, 2, &[1, 1, 0, 1]);
        let b = mask(2, 2, &[1, 0, 1, 1]);
        assert_abs_diff_eq!(binary_iou(&a, &b).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn binary_iou_empty_conventions() {
        let empty = mask(2, 2, &[0, 0, 0, 0]);
        let some = mask(2, 2, &[0, 1, 0, 0]);
        assert_eq!(binary_iou(&empty, &empty).unwrap(), 1.0);
        assert_eq!(binary_iou(&empty, &some).unwrap(), 0.0);
        assert_eq!(binary_iou(&some, &empty).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_difference_masks_score_zero() {
        let left = GrayImage::from_data(2, 1, vec![0.0, 0.0]).unwrap();
        let right = GrayImage::from_data(2, 1, vec![10.0, 0.0]).unwrap();
        let gen = GrayImage::from_data(2, 1, vec![0.0, 10.0]).unwrap();
        let m_gen = diff_mask(&gen, &left, 5.0).unwrap();
        let m_right = diff_mask(&right, &left, 5.0).unwrap();
        assert_eq!(binary_iou(&m_gen, &m_right).unwrap(), 0.0);
    }

    #[test]
    fn diff_mask_threshold_is_inclusive() {
        let a = GrayImage::from_data(3, 1, vec![0.0, 4.9, 5.0]).unwrap();
        let b = GrayImage::from_data(3, 1, vec![0.0, 0.0, 0.0]).unwrap();
        let m = diff_mask(&a, &b, 5.0).unwrap();
        assert_eq!(m.data(), &[false, false, true]);
    }

    fn textured(width: usize, height: usize, shift: usize) -> GrayImage {
        GrayImage::from_fn(width, height, |x, y| {
            let s = x + shift;
            if (s / 8 + y / 8).is_multiple_of(2) {
                40.0
            } else {
                210.0
            }
        })
        .unwrap()
    }

    #[test]
    fn siou_of_ground_truth_is_one() {
        let left = textured(48, 32, 0);
        let right = textured(48, 32, 3);
        let score = siou(&left, &right, &right, &SiouConfig::default()).unwrap();
        assert_abs_diff_eq!(score.value, 1.0, epsilon = 1e-9);
        assert_eq!(score.edge_iou, 1.0);
        assert_eq!(score.diff_iou, 1.0);
    }

    #[test]
    fn copying_the_left_view_zeroes_the_difference_term() {
        let left = textured(48, 32, 0);
        let right = textured(48, 32, 3);
        let score = siou(&left, &right, &left, &SiouConfig::default()).unwrap();
        assert_eq!(score.diff_iou, 0.0);
        assert!(score.value < 1.0);
    }

    #[test]
    fn siou_is_the_stated_blend_of_its_components() {
        let left = textured(48, 32, 0);
        let right = textured(48, 32, 3);
        let gen = textured(48, 32, 1);
        for alpha in [0.0, 0.25, 0.75, 1.0] {
            let cfg = SiouConfig {
                alpha,
                ..SiouConfig::default()
            };
            let s = siou(&left, &right, &gen, &cfg).unwrap();
            assert_abs_diff_eq!(
                s.value,
                alpha * s.edge_iou + (1.0 - alpha) * s.diff_iou,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rmse_matches_hand_computation() {
        let a = Image::from_data(1, 2, vec![0.0; 3].into_iter().chain(vec![10.0; 3]).collect()).unwrap();
        let b = Image::from_data(1, 2, vec![6.0; 3].into_iter().chain(vec![2.0; 3]).collect()).unwrap();
        assert_abs_diff_eq!(rmse(&a, &b).unwrap(), 50.0_f64.sqrt(), epsilon = 1e-12);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn psnr_of_identical_images_is_infinite() {
        assert_eq!(psnr_from_rmse(0.0), f64::INFINITY);
        // Closed form 20 log10(255 / rmse), spot-checked at rmse = 5.07.
        assert_abs_diff_eq!(
            psnr_from_rmse(5.07),
            20.0 * (255.0_f64 / 5.07).log10(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(psnr_from_rmse(5.07), 34.0306, epsilon = 1e-3);
        assert_abs_diff_eq!(psnr_from_rmse(255.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_constant_images_match_the_closed_form() {
        let a = GrayImage::from_fn(16, 16, |_, _| 100.0).unwrap();
        let b = GrayImage::from_fn(16, 16, |_, _| 150.0).unwrap();
        let expected = (2.0 * 100.0 * 150.0 + SSIM_C1) / (100.0 * 100.0 + 150.0 * 150.0 + SSIM_C1);
        assert_abs_diff_eq!(ssim(&a, &b).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(ssim(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_rejects_images_below_the_window() {
        let a = GrayImage::new(10, 32).unwrap();
        assert!(matches!(ssim(&a, &a), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 30.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
    }

    #[test]
    fn spearman_matches_hand_example() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        assert_abs_diff_eq!(spearman(&x, &y).unwrap(), 0.8, epsilon = 1e-12);
        let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_abs_diff_eq!(spearman(&x, &rev).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spearman(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kendall_matches_hand_example() {
        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0];
        assert_abs_diff_eq!(kendall(&x, &y).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn kendall_survives_overlapping_heavy_ties() {
        // Tie pairs on each side exceed the total pair count combined
        // (t_x = t_y = 6 > n0 = 10); only the four cross pairs are
        // informative and all are concordant.
        let x = [1.0, 1.0, 1.0, 1.0, 2.0];
        let y = [3.0, 3.0, 3.0, 3.0, 4.0];
        assert_eq!(kendall(&x, &y).unwrap(), 1.0);
    }

    #[test]
    fn rank_correlations_reject_bad_input() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            spearman(&x, &[1.0, 2.0]),
            Err(Error::LengthMismatch { left: 3, right: 2 })
        ));
        assert!(matches!(
            spearman(&[2.0, 2.0, 2.0], &x),
            Err(Error::DegenerateInput { .. })
        ));
        assert!(matches!(
            kendall(&[2.0, 2.0, 2.0], &x),
            Err(Error::DegenerateInput { .. })
        ));
        let empty: [f64; 0] = [];
        assert!(matches!(spearman(&empty, &empty), Err(Error::EmptyInput)));
        assert!(spearman(&[1.0, f64::NAN, 2.0], &x).is_err());
    }

    #[test]
    fn rank_correlations_accept_infinite_scores() {
        let x = [1.0, 2.0, f64::INFINITY];
        let y = [10.0, 20.0, 30.0];
        assert_abs_diff_eq!(spearman(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kendall(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
    }
}
