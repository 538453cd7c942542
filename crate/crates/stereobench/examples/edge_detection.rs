//! Edge detection: Gaussian blur, Sobel gradients, and the full Canny
//! pipeline with non-maximum suppression and hysteresis.
//!
//! Writes `edges_default.png` and `edges_strict.png` to
//! `target/example_out/edge_detection/` (or the directory given as the
//! first argument).
//!
//! Run with: `cargo run --example edge_detection`

use stereobench::edges::{canny, gaussian_blur, sobel, CannyParams};
use stereobench::raster::{save_binary, GrayImage};
use stereobench::Result;

fn main() -> Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/example_out/edge_detection".to_string());
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    // A square whose brightness fades toward the bottom: its upper outline
    // is a strong boundary, the lower part of the same outline responds
    // between the two thresholds. The gradual fade keeps the weak section
    // connected to the strong one.
    let img = GrayImage::from_fn(96, 72, |x, y| {
        let in_square = (24..64).contains(&x) && (12..60).contains(&y);
        if in_square {
            (200.0 * 0.9f64.powi(y as i32 - 12)).max(62.0)
        } else {
            30.0
        }
    })?;

    // Raw gradient response after the standard blur.
    let blurred = gaussian_blur(img.width(), img.height(), img.data(), 1.4)?;
    let grad = sobel(img.width(), img.height(), &blurred)?;
    let peak = grad.magnitude().iter().cloned().fold(0.0f64, f64::max);
    println!("peak blurred-gradient magnitude: {peak:.1}");

    // With hysteresis (default 50/150) the weak lower outline is kept
    // because it connects to the strong upper outline; with low == high
    // only the strong section survives.
    let default_map = canny(&img, &CannyParams::default())?;
    let strict = CannyParams {
        low_threshold: 150.0,
        high_threshold: 150.0,
        gaussian_sigma: 1.4,
    };
    let strict_map = canny(&img, &strict)?;
    println!(
        "edge pixels: with hysteresis {} / strong-only {}",
        default_map.count_ones(),
        strict_map.count_ones()
    );
    assert!(default_map.count_ones() > strict_map.count_ones());

    save_binary(format!("{out_dir}/edges_default.png"), &default_map)?;
    save_binary(format!("{out_dir}/edges_strict.png"), &strict_map)?;
    println!("wrote edges_default.png and edges_strict.png to {out_dir}");
    Ok(())
}
