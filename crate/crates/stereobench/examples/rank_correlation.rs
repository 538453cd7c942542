//! Metric-vs-human agreement: averaging annotator scores and rank-
//! correlating every metric column against them with Spearman's rho and
//! Kendall's tau-b.
//!
//! Run with: `cargo run --example rank_correlation`

use stereobench::dataset::{
    correlate_with_humans, AnnotationEntry, AnnotationSet, MetricReport, PairMetrics,
};
use stereobench::dataset::Category;
use stereobench::metrics::SiouConfig;
use stereobench::Result;

fn main() -> Result<()> {
    // Six scored pairs: the stereo score and pixel metrics improve together
    // here, while rmse (an error) falls as quality rises.
    let per_pair: Vec<PairMetrics> = (0..6)
        .map(|i| {
            let q = i as f64 / 5.0;
            PairMetrics {
                pair_id: format!("pair_{i:06}"),
                category: Category::Unlabeled,
                siou: 0.2 + 0.7 * q,
                edge_iou: 0.3 + 0.6 * q,
                diff_iou: 0.1 + 0.8 * q,
                rmse: 30.0 - 25.0 * q,
                psnr: 18.0 + 14.0 * q,
                ssim: 0.6 + 0.35 * q,
            }
        })
        .collect();
    let report = MetricReport::aggregate(SiouConfig::default(), per_pair)?;

    // Two annotators, 1-10 integer scores, higher = better; their averages
    // rank the pairs in the same order the metrics do.
    let mut entries = Vec::new();
    for i in 0..6 {
        for (annotator, offset) in [("alice", 0.0), ("bob", 2.0)] {
            entries.push(AnnotationEntry {
                pair_id: format!("pair_{i:06}"),
                annotator_id: annotator.to_string(),
                score: 1.0 + i as f64 + offset,
            });
        }
    }
    let annotations = AnnotationSet::from_entries(entries)?;

    let corr = correlate_with_humans(&report, &annotations)?;
    println!("pairs used: {}", corr.pairs_used);
    println!("{:<10} {:>9} {:>9}", "metric", "spearman", "kendall");
    for (metric, rho) in &corr.spearman {
        println!("{metric:<10} {rho:>+9.4} {:>+9.4}", corr.kendall[metric]);
    }

    assert_eq!(corr.spearman["siou"], 1.0);
    assert_eq!(corr.kendall["siou"], 1.0);
    assert_eq!(corr.spearman["rmse"], -1.0);
    println!();
    println!("quality metrics correlate at +1, the error metric at -1, as built.");
    Ok(())
}
