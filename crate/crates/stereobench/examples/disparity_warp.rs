//! Geometry stage: depth to disparity, z-buffered forward warping, and
//! nearest-neighbor occlusion filling.
//!
//! Writes `warped.png`, `occlusion.png`, and `filled.png` to
//! `target/example_out/disparity_warp/` (or the directory given as the
//! first argument).
//!
//! Run with: `cargo run --example disparity_warp`

use stereobench::geometry::{
    depth_to_disparity, fill_occlusions_nearest, forward_warp, DepthMap, DisparityMap,
};
use stereobench::raster::{save_binary, save_image, Image};
use stereobench::Result;

fn main() -> Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/example_out/disparity_warp".to_string());
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    let (w, h) = (96usize, 64usize);
    // Foreground disk floating in front of a distant wall.
    let in_disk = |x: usize, y: usize| {
        let (dx, dy) = (x as f64 - 44.0, y as f64 - 32.0);
        dx * dx + dy * dy < 18.0 * 18.0
    };
    let left = Image::from_fn(w, h, |x, y| {
        if in_disk(x, y) {
            [220.0, 120.0, 60.0]
        } else {
            let g = 60.0 + 30.0 * ((x + y) % 17 < 8) as u8 as f64;
            [g, g, 140.0]
        }
    })?;
    let depth = DepthMap::from_data(
        w,
        h,
        (0..w * h)
            .map(|i| if in_disk(i % w, i / w) { 2.0 } else { 12.0 })
            .collect(),
    )?;

    // d = focal*baseline / depth, clamped below to keep zero depth finite.
    let disparity = depth_to_disparity(&depth, 16.0, 0.1)?;
    println!(
        "disparity: disk {:.2} px, wall {:.2} px",
        disparity.get(44, 32),
        disparity.get(0, 0)
    );

    let warped = forward_warp(&left, &disparity)?;
    println!(
        "forward warp left {} occluded pixel(s) behind the disk's trailing edge",
        warped.occlusion.count_ones()
    );

    let filled = fill_occlusions_nearest(&warped.image, &warped.occlusion)?;

    // Zero disparity must reproduce the input bit-exactly with no holes.
    let identity = forward_warp(&left, &DisparityMap::constant(w, h, 0.0)?)?;
    assert_eq!(identity.image.data(), left.data());
    assert_eq!(identity.occlusion.count_ones(), 0);
    println!("zero-disparity warp reproduces the source bit-exactly");

    save_image(format!("{out_dir}/warped.png"), &warped.image)?;
    save_binary(format!("{out_dir}/occlusion.png"), &warped.occlusion)?;
    save_image(format!("{out_dir}/filled.png"), &filled)?;
    println!("wrote warped.png, occlusion.png, filled.png to {out_dir}");
    Ok(())
}
