//! Evaluation stack for mono-to-stereo conversion.
//!
//! The crate scores generated right-eye views against ground truth with a
//! stereo-structure metric (edge overlap plus disparity-proxy overlap)
//! alongside classical image metrics, correlates metric rankings with human
//! annotations, implements the disparity-warp stage of a two-stage
//! conversion pipeline, provides the pure-math diffusion kernels (noise
//! schedule, velocity parameterization, deterministic sampling, and an
//! edge-aware training loss with analytic gradient), and curates datasets
//! of side-by-side stereo frames into reproducible train/test manifests.
//! A synthetic benchmark generator ties the pieces together with graded
//! candidate sets whose quality ordering is known by construction.
//!
//! # Examples
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! | Example | Demonstrates |
//! |---|---|
//! | `grayscale_and_anaglyph` | side-by-side split/concat, grayscale, anaglyph, heatmap |
//! | `edge_detection` | blur, Sobel gradients, thinning and hysteresis |
//! | `siou_metric` | the stereo score and its failure-mode separation |
//! | `disparity_warp` | depth to disparity, forward warping, occlusion fill |
//! | `diffusion_roundtrip` | noising, velocity targets, exact inversion |
//! | `ddim_sampling` | timestep ladders and deterministic sampling |
//! | `ec_loss_gradcheck` | edge-aware loss against a finite-difference oracle |
//! | `synthetic_benchmark` | generating and scoring the graded benchmark |
//! | `rank_correlation` | annotation averaging and rank correlation |
//!
//! Run one with `cargo run --example <name>`. The `stereobench` binary
//! exposes the same capabilities as subcommands for shell pipelines.

pub mod dataset;
pub mod diffusion;
pub mod edges;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
