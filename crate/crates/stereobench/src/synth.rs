//! Self-contained synthetic stereo benchmark: procedurally textured scenes
//! with flat-colored sprites at known integer disparities, rendered as true
//! left/right pairs, plus a family of candidate "reconstructions" with
//! controlled defects. The generated tree is a desk-scale stand-in for a
//! real stereo dataset: it exercises the full manifest/eval pipeline and
//! gives the directional and monotonicity checks something deterministic to
//! bite on.
//!
//! Candidate sets written per pair:
//! - `idm`: the left view itself (the do-nothing baseline).
//! - `warped`: disparity warp + nearest fill, plus a smooth low-frequency
//!   luminance drift. The drift models the global photometric error of a
//!   generative second stage: it spends reconstruction error everywhere
//!   (denting peak signal-to-noise) while leaving edges and stereo geometry
//!   intact — which is exactly the regime where pixel metrics and stereo
//!   metrics disagree.
//! - `ladder_100` … `ladder_000`: pure warp + nearest fill with the
//!   disparity scaled by 1.0, 0.75, 0.5, 0.25, 0.0 — a quality ladder from
//!   full stereo effect down to none (`ladder_000` pixel-equals `idm`).

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{pair_id, Category, DatasetManifest, PairRecord, Split};
use crate::error::{Error, Result};
use crate::geometry::{self, DisparityMap};
use crate::raster::{self, Image};

/// Disparity multipliers of the degradation ladder, best first.
pub const LADDER_SCALES: [f64; 5] = [1.0, 0.75, 0.5, 0.25, 0.0];

/// Canvas size of every generated pair.
pub const SCENE_WIDTH: usize = 128;
/// Canvas size of every generated pair.
pub const SCENE_HEIGHT: usize = 96;

/// Directory name of a ladder rung: `ladder_100`, `ladder_075`, ….
pub fn ladder_name(scale: f64) -> String {
    format!("ladder_{:03}", (scale * 100.0).round() as u32)
}

/// Where a generated benchmark lives on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkLayout {
    pub root: PathBuf,
    pub manifest_path: PathBuf,
    pub disparity_dir: PathBuf,
    /// `(set name, directory)` in fixed order: `idm`, `warped`, then the
    /// ladder rungs best-first.
    pub candidate_sets: Vec<(String, PathBuf)>,
}

impl BenchmarkLayout {
    pub fn candidate_dir(&self, name: &str) -> Option<&Path> {
        self.candidate_sets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p.as_path())
    }
}

#[derive(Debug, Clone, Copy)]
enum SpriteShape {
    Ellipse,
    Rectangle,
}

#[derive(Debug, Clone, Copy)]
struct Sprite {
    shape: SpriteShape,
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: f64,
    disparity: f64,
}

impl Sprite {
    fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        match self.shape {
            SpriteShape::Ellipse => {
                (dx / self.rx).powi(2) + (dy / self.ry).powi(2) <= 1.0
            }
            SpriteShape::Rectangle => dx.abs() <= self.rx && dy.abs() <= self.ry,
        }
    }
}

/// Smooth low-frequency field: a base level plus two sinusoidal octaves.
/// Per-pixel gradients stay far below edge-detection thresholds.
#[derive(Debug, Clone, Copy)]
struct SmoothField {
    base: f64,
    amp1: f64,
    fx1: f64,
    fy1: f64,
    px1: f64,
    py1: f64,
    amp2: f64,
    fx2: f64,
    fy2: f64,
    px2: f64,
    py2: f64,
}

impl SmoothField {
    fn sample(&self, x: f64, y: f64) -> f64 {
        self.base
            + self.amp1 * (self.fx1 * x + self.px1).sin() * (self.fy1 * y + self.py1).sin()
            + self.amp2 * (self.fx2 * x + self.px2).sin() * (self.fy2 * y + self.py2).sin()
    }
}

struct Scene {
    background: SmoothField,
    /// Sorted by ascending disparity; painted far-to-near so painter order
    /// agrees with the warp's larger-disparity-wins z-buffer.
    sprites: Vec<Sprite>,
    drift: SmoothField,
}

fn random_background(rng: &mut ChaCha8Rng) -> SmoothField {
    SmoothField {
        base: rng.random_range(115.0..130.0),
        amp1: rng.random_range(6.0..10.0),
        fx1: TAU / rng.random_range(36.0..64.0),
        fy1: TAU / rng.random_range(36.0..64.0),
        px1: rng.random_range(0.0..TAU),
        py1: rng.random_range(0.0..TAU),
        amp2: rng.random_range(2.0..4.0),
        fx2: TAU / rng.random_range(18.0..30.0),
        fy2: TAU / rng.random_range(18.0..30.0),
        px2: rng.random_range(0.0..TAU),
        py2: rng.random_range(0.0..TAU),
    }
}

fn random_drift(rng: &mut ChaCha8Rng) -> SmoothField {
    SmoothField {
        base: 0.0,
        amp1: rng.random_range(52.0..60.0),
        fx1: TAU / rng.random_range(88.0..104.0),
        fy1: TAU / rng.random_range(72.0..88.0),
        px1: rng.random_range(0.0..TAU),
        py1: rng.random_range(0.0..TAU),
        amp2: 0.0,
        fx2: 1.0,
        fy2: 1.0,
        px2: 0.0,
        py2: 0.0,
    }
}

fn random_scene(rng: &mut ChaCha8Rng) -> Scene {
    let background = random_background(rng);
    let sprite_count = rng.random_range(3..=5usize);
    // Distinct disparities keep sprite layering unambiguous: the painter
    // order below and the warp's z-buffer then make identical decisions.
    let mut disparities: Vec<f64> = vec![4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
    disparities.shuffle(rng);
    disparities.truncate(sprite_count);
    let mut sprites: Vec<Sprite> = disparities
        .into_iter()
        .map(|disparity| {
            let shape = if rng.random_range(0..2) == 0 {
                SpriteShape::Ellipse
            } else {
                SpriteShape::Rectangle
            };
            let color = if rng.random_range(0..2) == 0 {
                rng.random_range(40.0..52.0)
            } else {
                rng.random_range(193.0..205.0)
            };
            Sprite {
                shape,
                cx: rng.random_range(18.0..(SCENE_WIDTH as f64 - 19.0)),
                cy: rng.random_range(16.0..(SCENE_HEIGHT as f64 - 17.0)),
                rx: rng.random_range(8.0..14.0),
                ry: rng.random_range(8.0..14.0),
                color,
                disparity,
            }
        })
        .collect();
    sprites.sort_by(|a, b| a.disparity.total_cmp(&b.disparity));
    let drift = random_drift(rng);
    Scene {
        background,
        sprites,
        drift,
    }
}

impl Scene {
    /// Renders a view. `view_shift = 0` gives the left view; `view_shift =
    /// d` per sprite gives the right view, where each sprite slides left by
    /// its own disparity and reveals true background behind it.
    fn render(&self, right_view: bool) -> Image {
        Image::from_fn(SCENE_WIDTH, SCENE_HEIGHT, |x, y| {
            let xf = x as f64;
            let yf = y as f64;
            let mut v = self.background.sample(xf, yf);
            for sprite in &self.sprites {
                let shift = if right_view { sprite.disparity } else { 0.0 };
                if sprite.contains(xf + shift, yf) {
                    v = sprite.color;
                }
            }
            let v = v.clamp(0.0, 255.0);
            [v, v, v]
        })
        .expect("scene dimensions are fixed and nonzero")
    }

    /// Left-view disparity: 0 on background, the sprite's disparity inside
    /// it, nearest sprite winning overlaps.
    fn disparity_map(&self) -> DisparityMap {
        let mut data = vec![0.0; SCENE_WIDTH * SCENE_HEIGHT];
        for y in 0..SCENE_HEIGHT {
            for x in 0..SCENE_WIDTH {
                for sprite in &self.sprites {
                    if sprite.contains(x as f64, y as f64) {
                        data[y * SCENE_WIDTH + x] = sprite.disparity;
                    }
                }
            }
        }
        DisparityMap::from_data(SCENE_WIDTH, SCENE_HEIGHT, data)
            .expect("disparities are finite and non-negative")
    }

    fn apply_drift(&self, img: &Image) -> Image {
        Image::from_fn(img.width(), img.height(), |x, y| {
            let d = self.drift.sample(x as f64, y as f64);
            let p = img.pixel(x, y);
            [
                (p[0] + d).clamp(0.0, 255.0),
                (p[1] + d).clamp(0.0, 255.0),
                (p[2] + d).clamp(0.0, 255.0),
            ]
        })
        .expect("dimensions preserved")
    }
}

/// Warp the left view by the scaled disparity and fill the disocclusions
/// from their nearest valid neighbors.
fn warp_and_fill(left: &Image, disparity: &DisparityMap, scale: f64) -> Result<Image> {
    let scaled = disparity.scaled(scale)?;
    let warped = geometry::forward_warp(left, &scaled)?;
    if warped.occlusion.count_ones() == 0 {
        return Ok(warped.image);
    }
    geometry::fill_occlusions_nearest(&warped.image, &warped.occlusion)
}

/// Generates `pairs` scenes under `root` and writes ground truth
/// (`left/`, `right/`, `disparity/`, `manifest.jsonl`) plus every candidate
/// set under `candidates/`. All records land in the test split; scenes with
/// three sprites are labeled `simple`, the rest `complex`. Identical
/// `(pairs, seed)` regenerate byte-identical trees (timestamps aside).
pub fn generate_benchmark(
    root: impl AsRef<Path>,
    pairs: usize,
    seed: u64,
) -> Result<BenchmarkLayout> {
    let root = root.as_ref();
    if pairs == 0 {
        return Err(Error::invalid("benchmark needs at least one pair"));
    }
    let mut set_names = vec!["idm".to_string(), "warped".to_string()];
    set_names.extend(LADDER_SCALES.iter().map(|s| ladder_name(*s)));

    let left_dir = root.join("left");
    let right_dir = root.join("right");
    let disparity_dir = root.join("disparity");
    std::fs::create_dir_all(&left_dir).map_err(|e| Error::io(&left_dir, e))?;
    std::fs::create_dir_all(&right_dir).map_err(|e| Error::io(&right_dir, e))?;
    std::fs::create_dir_all(&disparity_dir).map_err(|e| Error::io(&disparity_dir, e))?;
    let mut candidate_sets = Vec::new();
    for name in &set_names {
        let dir = root.join("candidates").join(name);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        candidate_sets.push((name.clone(), dir));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(pairs);
    for index in 0..pairs {
        let scene = random_scene(&mut rng);
        let source_id = format!("scene{index:02}");
        let id = pair_id(&source_id, 0);

        let left = scene.render(false);
        let right = scene.render(true);
        let disparity = scene.disparity_map();
        raster::save_image(left_dir.join(format!("{id}.png")), &left)?;
        raster::save_image(right_dir.join(format!("{id}.png")), &right)?;
        geometry::save_disparity_raw(disparity_dir.join(format!("{id}.raw")), &disparity)?;

        for (name, dir) in &candidate_sets {
            let candidate = match name.as_str() {
                "idm" => left.clone(),
                "warped" => scene.apply_drift(&warp_and_fill(&left, &disparity, 1.0)?),
                _ => {
                    let scale = LADDER_SCALES
                        .iter()
                        .copied()
                        .find(|s| ladder_name(*s) == *name)
                        .expect("set names beyond idm/warped are ladder rungs");
                    warp_and_fill(&left, &disparity, scale)?
                }
            };
            raster::save_image(dir.join(format!("{id}.png")), &candidate)?;
        }

        let category = if scene.sprites.len() == 3 {
            Category::Simple
        } else {
            Category::Complex
        };
        records.push(PairRecord {
            pair_id: id.clone(),
            left_path: format!("left/{id}.png"),
            right_path: format!("right/{id}.png"),
            category,
            split: Split::Test,
            source_id,
            frame_index: 0,
        });
    }

    let manifest = DatasetManifest::from_records(records, root)?;
    let manifest_path = root.join("manifest.jsonl");
    manifest.save(&manifest_path)?;
    Ok(BenchmarkLayout {
        root: root.to_path_buf(),
        manifest_path,
        disparity_dir,
        candidate_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{run_eval, MetricReport};
    use crate::metrics::SiouConfig;

    fn file_bytes(path: &Path) -> Vec<u8> {
        std::fs::read(path).unwrap()
    }

    #[test]
    fn ladder_names_are_zero_padded() {
        assert_eq!(ladder_name(1.0), "ladder_100");
        assert_eq!(ladder_name(0.75), "ladder_075");
        assert_eq!(ladder_name(0.0), "ladder_000");
    }

    #[test]
    fn generated_tree_is_complete_and_seed_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = generate_benchmark(dir.path().join("a"), 3, 42).unwrap();
        let b = generate_benchmark(dir.path().join("b"), 3, 42).unwrap();

        assert_eq!(a.candidate_sets.len(), 7);
        let manifest_a = DatasetManifest::load(&a.manifest_path).unwrap();
        let manifest_b = DatasetManifest::load(&b.manifest_path).unwrap();
        assert_eq!(manifest_a.records(), manifest_b.records());
        assert_eq!(manifest_a.records().len(), 3);
        assert!(manifest_a.records().iter().all(|r| r.split == Split::Test));
        manifest_a.validate_files().unwrap();

        for record in manifest_a.records() {
            let id = &record.pair_id;
            assert_eq!(
                file_bytes(&a.root.join(&record.left_path)),
                file_bytes(&b.root.join(&record.left_path)),
                "left views must be seed-deterministic"
            );
            for (name, dir) in &a.candidate_sets {
                let mine = dir.join(format!("{id}.png"));
                assert!(mine.is_file(), "missing {name}/{id}.png");
                let theirs = b.candidate_dir(name).unwrap().join(format!("{id}.png"));
                assert_eq!(file_bytes(&mine), file_bytes(&theirs));
            }
            let disparity =
                geometry::load_disparity(a.disparity_dir.join(format!("{id}.raw"))).unwrap();
            assert_eq!((disparity.width(), disparity.height()), (SCENE_WIDTH, SCENE_HEIGHT));
            assert!(disparity
                .data()
                .iter()
                .all(|&d| d == 0.0 || (4.0..=9.0).contains(&d)));
        }
    }

    #[test]
    fn do_nothing_candidate_equals_left_view_and_zero_rung() {
        let dir = tempfile::tempdir().unwrap();
        let layout = generate_benchmark(dir.path(), 2, 7).unwrap();
        let manifest = DatasetManifest::load(&layout.manifest_path).unwrap();
        for record in manifest.records() {
            let id = &record.pair_id;
            let left = file_bytes(&layout.root.join(&record.left_path));
            let idm = file_bytes(&layout.candidate_dir("idm").unwrap().join(format!("{id}.png")));
            let zero = file_bytes(
                &layout
                    .candidate_dir("ladder_000")
                    .unwrap()
                    .join(format!("{id}.png")),
            );
            assert_eq!(left, idm);
            assert_eq!(idm, zero);
        }
    }

    #[test]
    fn candidate_defects_separate_pixel_and_stereo_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let layout = generate_benchmark(dir.path(), 5, 11).unwrap();
        let manifest = DatasetManifest::load(&layout.manifest_path).unwrap();
        let cfg = SiouConfig::default();
        let eval = |name: &str| -> MetricReport {
            run_eval(&manifest, layout.candidate_dir(name).unwrap(), &cfg).unwrap()
        };
        let idm = eval("idm");
        let warped = eval("warped");
        assert!(
            idm.aggregates.overall.psnr > warped.aggregates.overall.psnr,
            "do-nothing candidate must win on peak signal-to-noise: {} vs {}",
            idm.aggregates.overall.psnr,
            warped.aggregates.overall.psnr
        );
        assert!(
            idm.aggregates.overall.siou < warped.aggregates.overall.siou,
            "do-nothing candidate must lose on stereo agreement: {} vs {}",
            idm.aggregates.overall.siou,
            warped.aggregates.overall.siou
        );

        let ladder: Vec<f64> = LADDER_SCALES
            .iter()
            .map(|s| eval(&ladder_name(*s)).aggregates.overall.siou)
            .collect();
        for pair in ladder.windows(2) {
            assert!(
                pair[0] > pair[1],
                "stereo score must fall strictly along the ladder: {ladder:?}"
            );
        }
    }
}
