//! Image plumbing: side-by-side splitting, grayscale conversion, red/cyan
//! anaglyph composition, and difference heatmaps.
//!
//! Writes its PNGs to `target/example_out/grayscale_and_anaglyph/` (or the
//! directory given as the first argument).
//!
//! Run with: `cargo run --example grayscale_and_anaglyph`

use stereobench::raster::{
    diff_heatmap, hconcat, render_anaglyph, save_gray, save_image, split_side_by_side,
    to_grayscale, Image,
};
use stereobench::Result;

fn main() -> Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/example_out/grayscale_and_anaglyph".to_string());
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    // A toy stereo pair: a bright square over a graded background, shifted
    // four columns to the left in the right view (i.e. disparity 4).
    let square = |x: usize, y: usize, sx: usize| -> [f64; 3] {
        let inside = x >= sx && x < sx + 24 && (20..44).contains(&y);
        if inside {
            [230.0, 200.0, 60.0]
        } else {
            let g = 40.0 + 0.8 * x as f64 + 0.3 * y as f64;
            [g * 0.4, g * 0.7, g]
        }
    };
    let left = Image::from_fn(96, 64, |x, y| square(x, y, 40))?;
    let right = Image::from_fn(96, 64, |x, y| square(x, y, 36))?;

    // Round-trip through the side-by-side frame format used for ingest.
    let sbs = hconcat(&left, &right)?;
    let (l2, r2) = split_side_by_side(&sbs)?;
    assert_eq!(l2.data(), left.data());
    assert_eq!(r2.data(), right.data());
    println!("side-by-side concat + split round-trips bit-exactly");

    let gray = to_grayscale(&left);
    println!(
        "grayscale: {}x{}, first pixel {:.3}",
        gray.width(),
        gray.height(),
        gray.get(0, 0)
    );

    let anaglyph = render_anaglyph(&left, &right)?;
    let heat = diff_heatmap(&left, &right)?;

    save_image(format!("{out_dir}/sbs.png"), &sbs)?;
    save_gray(format!("{out_dir}/left_gray.png"), &gray)?;
    save_image(format!("{out_dir}/anaglyph.png"), &anaglyph)?;
    save_gray(format!("{out_dir}/heatmap.png"), &heat)?;
    println!("wrote sbs.png, left_gray.png, anaglyph.png, heatmap.png to {out_dir}");
    Ok(())
}
