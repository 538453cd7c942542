//! Thin command-line front end for the `stereobench` library.
//!
//! Every subcommand is a direct call into a library entry point; all logic,
//! validation, and file formats live in the library so the same behavior is
//! available programmatically and through the `examples/` directory.
//!
//! Exit codes: 0 on success, 1 on a domain error (message on stderr),
//! 2 on a usage error (clap's default).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stereobench::dataset::{
    correlate_with_humans, ingest_frames, partition, run_eval, AnnotationSet, Category,
    DatasetManifest, MetricReport,
};
use stereobench::diffusion::self_check;
use stereobench::edges::{canny, CannyParams};
use stereobench::geometry::{
    fill_occlusions_nearest, forward_warp, load_disparity,
};
use stereobench::metrics::SiouConfig;
use stereobench::raster::{
    diff_heatmap, load_binary, load_image, render_anaglyph, save_binary, save_gray, save_image,
    to_grayscale,
};
use stereobench::synth::generate_benchmark;

#[derive(Parser)]
#[command(
    name = "stereobench",
    version,
    about = "Stereo-conversion evaluation toolkit",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for parallel scoring (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for the seeded subcommands (partition, synth, losscheck).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Print per-item progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

/// Stereo-score knobs shared by the scoring subcommands.
#[derive(Args, Debug, Clone, Copy)]
struct SiouFlags {
    /// Weight of the edge-overlap term; the difference term gets 1 - alpha.
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,

    /// Absolute-difference threshold (inclusive) for the disparity-proxy
    /// masks, on the 0-255 intensity scale.
    #[arg(long, default_value_t = 5.0)]
    diff_threshold: f64,

    /// Low hysteresis threshold for the edge detector.
    #[arg(long, default_value_t = 50.0)]
    canny_low: f64,

    /// High hysteresis threshold for the edge detector.
    #[arg(long, default_value_t = 150.0)]
    canny_high: f64,

    /// Gaussian blur sigma applied before the gradient.
    #[arg(long, default_value_t = 1.4)]
    canny_sigma: f64,
}

impl SiouFlags {
    fn to_config(self) -> SiouConfig {
        SiouConfig {
            alpha: self.alpha,
            diff_threshold: self.diff_threshold,
            canny: CannyParams {
                low_threshold: self.canny_low,
                high_threshold: self.canny_high,
                gaussian_sigma: self.canny_sigma,
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Slice a directory of side-by-side frames into left/right pairs and
    /// write a dataset manifest.
    Ingest {
        /// Directory of side-by-side frames (png/jpg), lexicographic order.
        #[arg(long)]
        frames: PathBuf,
        /// Output dataset root; receives left/ and right/ subdirectories.
        #[arg(long)]
        out: PathBuf,
        /// Source identifier for every pair ([A-Za-z0-9_-]).
        #[arg(long)]
        source_id: String,
        /// Scene category label for every pair.
        #[arg(long, default_value = "unlabeled")]
        category: Category,
        /// Keep every stride-th frame, starting at index 0.
        #[arg(long, default_value_t = 8)]
        stride: usize,
        /// Per-eye output width in pixels.
        #[arg(long, default_value_t = 480)]
        width: usize,
        /// Per-eye output height in pixels.
        #[arg(long, default_value_t = 540)]
        height: usize,
        /// Manifest path to write (default: <out>/manifest.jsonl).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },

    /// Split a manifest into train/test, keeping each source on one side.
    Partition {
        /// Input manifest (JSONL).
        #[arg(long)]
        manifest: PathBuf,
        /// Target number of test pairs per category.
        #[arg(long)]
        per_category: usize,
        /// Output manifest path.
        #[arg(long)]
        out: PathBuf,
    },

    /// Forward-warp a left view by a disparity map.
    Warp {
        /// Left view (PNG/JPEG).
        #[arg(long)]
        left: PathBuf,
        /// Disparity file; its .json sidecar declares the format.
        #[arg(long)]
        disparity: PathBuf,
        /// Multiply the disparity by this factor before warping.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Output path for the warped view (PNG).
        #[arg(long)]
        out: PathBuf,
        /// Output path for the occlusion mask (PNG, white = hole).
        #[arg(long)]
        occlusion: PathBuf,
    },

    /// Fill occlusion holes in a warped view from the nearest non-hole
    /// pixel in the same row.
    Fill {
        /// Warped view with zero-filled holes (PNG).
        #[arg(long)]
        warped: PathBuf,
        /// Occlusion mask (PNG, nonzero = hole).
        #[arg(long)]
        occlusion: PathBuf,
        /// Output path for the filled view (PNG).
        #[arg(long)]
        out: PathBuf,
    },

    /// Score candidate right views against a manifest's test pairs.
    Eval {
        /// Dataset manifest (JSONL).
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding one <pair_id>.png per test pair.
        #[arg(long)]
        candidates: PathBuf,
        /// Output path for the metric report (JSON).
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        siou: SiouFlags,
    },

    /// Rank-correlate a metric report against human annotation scores.
    Correlate {
        /// Metric report produced by `eval` (JSON).
        #[arg(long)]
        report: PathBuf,
        /// Annotation CSV with header pair_id,annotator_id,score.
        #[arg(long)]
        annotations: PathBuf,
        /// Output path for the correlation report (JSON).
        #[arg(long)]
        out: PathBuf,
    },

    /// Compose a red/cyan anaglyph from a stereo pair.
    Anaglyph {
        /// Left view (red channel).
        #[arg(long)]
        left: PathBuf,
        /// Right view (green and blue channels).
        #[arg(long)]
        right: PathBuf,
        /// Output path (PNG).
        #[arg(long)]
        out: PathBuf,
    },

    /// Render the per-pixel absolute difference of two images as a
    /// grayscale heatmap.
    Heatmap {
        /// Reference image.
        #[arg(long)]
        reference: PathBuf,
        /// Image to compare against the reference.
        #[arg(long)]
        candidate: PathBuf,
        /// Output path (PNG).
        #[arg(long)]
        out: PathBuf,
    },

    /// Detect edges in an image and write the binary edge map.
    Edges {
        /// Input image.
        #[arg(long)]
        input: PathBuf,
        /// Output path for the edge map (PNG, white = edge).
        #[arg(long)]
        out: PathBuf,
        /// Low hysteresis threshold.
        #[arg(long, default_value_t = 50.0)]
        canny_low: f64,
        /// High hysteresis threshold.
        #[arg(long, default_value_t = 150.0)]
        canny_high: f64,
        /// Gaussian blur sigma applied before the gradient.
        #[arg(long, default_value_t = 1.4)]
        canny_sigma: f64,
    },

    /// Run the loss-gradient and sampling round-trip self checks.
    Losscheck,

    /// Generate the synthetic stereo benchmark with graded candidate sets.
    Synth {
        /// Output directory for the benchmark tree.
        #[arg(long)]
        out: PathBuf,
        /// Number of stereo pairs (scenes) to generate.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
    },
}

fn main() -> ExitCode {
    // Rust ignores SIGPIPE by default, so `stereobench ... | head` would
    // panic mid-print once the reader closes. Restore the conventional
    // die-quietly behavior of shell tools.
    #[cfg(unix)]
    // SAFETY: resetting a signal disposition before any other work or
    // threads; SIG_DFL is always a valid handler.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Configure the global worker pool before any parallel section runs.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> stereobench::Result<()> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Ingest {
            frames,
            out,
            source_id,
            category,
            stride,
            width,
            height,
            manifest,
        } => {
            let records = ingest_frames(&frames, &out, &source_id, category, stride, width, height)?;
            let count = records.len();
            if verbose {
                for r in &records {
                    eprintln!("ingested {}", r.pair_id);
                }
            }
            let manifest_path = manifest.unwrap_or_else(|| out.join("manifest.jsonl"));
            let manifest = DatasetManifest::from_records(records, &out)?;
            manifest.save(&manifest_path)?;
            println!(
                "ingested {count} pair(s) from {} into {}",
                frames.display(),
                manifest_path.display()
            );
        }
        Command::Partition {
            manifest,
            per_category,
            out,
        } => {
            let input = DatasetManifest::load(&manifest)?;
            let split = partition(&input, per_category, cli.seed)?;
            let test = split.test_records().count();
            let train = split.records().len() - test;
            split.save(&out)?;
            println!(
                "partitioned {} record(s): {train} train / {test} test -> {}",
                split.records().len(),
                out.display()
            );
        }
        Command::Warp {
            left,
            disparity,
            scale,
            out,
            occlusion,
        } => {
            let src = load_image(&left)?;
            let mut disp = load_disparity(&disparity)?;
            if scale != 1.0 {
                disp = disp.scaled(scale)?;
            }
            let warped = forward_warp(&src, &disp)?;
            save_image(&out, &warped.image)?;
            save_binary(&occlusion, &warped.occlusion)?;
            println!(
                "warped {} ({} occluded pixel(s)) -> {}",
                left.display(),
                warped.occlusion.count_ones(),
                out.display()
            );
        }
        Command::Fill {
            warped,
            occlusion,
            out,
        } => {
            let img = load_image(&warped)?;
            let mask = load_binary(&occlusion)?;
            let filled = fill_occlusions_nearest(&img, &mask)?;
            save_image(&out, &filled)?;
            println!(
                "filled {} hole pixel(s) -> {}",
                mask.count_ones(),
                out.display()
            );
        }
        Command::Eval {
            manifest,
            candidates,
            report,
            siou,
        } => {
            let manifest = DatasetManifest::load(&manifest)?;
            let result = run_eval(&manifest, &candidates, &siou.to_config())?;
            if verbose {
                for row in &result.per_pair {
                    eprintln!(
                        "{}: siou={:.4} rmse={:.3} ssim={:.4}",
                        row.pair_id, row.siou, row.rmse, row.ssim
                    );
                }
            }
            result.save(&report)?;
            let overall = &result.aggregates.overall;
            println!(
                "scored {} pair(s): mean siou={:.4} rmse={:.3} psnr={:.2} ssim={:.4} -> {}",
                overall.count,
                overall.siou,
                overall.rmse,
                overall.psnr,
                overall.ssim,
                report.display()
            );
        }
        Command::Correlate {
            report,
            annotations,
            out,
        } => {
            let report = MetricReport::load(&report)?;
            let annotations = AnnotationSet::load_csv(&annotations)?;
            let corr = correlate_with_humans(&report, &annotations)?;
            corr.save(&out)?;
            println!("correlated {} annotated pair(s) -> {}", corr.pairs_used, out.display());
            for (metric, rho) in &corr.spearman {
                println!(
                    "  {metric}: spearman={rho:+.4} kendall={:+.4}",
                    corr.kendall[metric]
                );
            }
        }
        Command::Anaglyph { left, right, out } => {
            let l = load_image(&left)?;
            let r = load_image(&right)?;
            let composite = render_anaglyph(&l, &r)?;
            save_image(&out, &composite)?;
            println!("wrote anaglyph {}", out.display());
        }
        Command::Heatmap {
            reference,
            candidate,
            out,
        } => {
            let a = load_image(&reference)?;
            let b = load_image(&candidate)?;
            let heat = diff_heatmap(&a, &b)?;
            save_gray(&out, &heat)?;
            println!("wrote difference heatmap {}", out.display());
        }
        Command::Edges {
            input,
            out,
            canny_low,
            canny_high,
            canny_sigma,
        } => {
            let img = load_image(&input)?;
            let gray = to_grayscale(&img);
            let params = CannyParams {
                low_threshold: canny_low,
                high_threshold: canny_high,
                gaussian_sigma: canny_sigma,
            };
            let map = canny(&gray, &params)?;
            save_binary(&out, &map)?;
            println!("wrote edge map {} ({} edge pixel(s))", out.display(), map.count_ones());
        }
        Command::Losscheck => {
            let outcomes = self_check(cli.seed);
            let mut failures = 0usize;
            for o in &outcomes {
                let status = if o.passed { "PASS" } else { "FAIL" };
                println!("{status} {} — {}", o.name, o.detail);
                if !o.passed {
                    failures += 1;
                }
            }
            if failures > 0 {
                return Err(stereobench::Error::InvalidParams {
                    reason: format!("{failures} of {} self checks failed", outcomes.len()),
                });
            }
            println!("all {} self checks passed", outcomes.len());
        }
        Command::Synth { out, pairs } => {
            let layout = generate_benchmark(&out, pairs, cli.seed)?;
            println!(
                "generated {pairs} pair(s) under {} with {} candidate set(s):",
                out.display(),
                layout.candidate_sets.len()
            );
            for (name, dir) in &layout.candidate_sets {
                println!("  {name}: {}", dir.display());
            }
            println!("manifest: {}", layout.manifest_path.display());
        }
    }
    Ok(())
}
