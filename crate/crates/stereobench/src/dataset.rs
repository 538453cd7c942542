//! Dataset curation and benchmark execution: frame ingestion, manifest
//! persistence, seeded source-disjoint partitioning, the evaluation runner,
//! and correlation of metric columns against human annotations.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, SiouConfig};
use crate::raster;

/// Scene category of a stereo pair. Labels are inputs assigned at ingest
/// time; nothing in the toolkit infers them from pixels.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Indoor,
    Outdoor,
    Animation,
    Simple,
    Complex,
    Unlabeled,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Indoor,
        Category::Outdoor,
        Category::Animation,
        Category::Simple,
        Category::Complex,
        Category::Unlabeled,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Indoor => "indoor",
            Category::Outdoor => "outdoor",
            Category::Animation => "animation",
            Category::Simple => "simple",
            Category::Complex => "complex",
            Category::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .iter()
            .find(|c| c.as_str() == s)
            .copied()
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown category {s:?}; expected one of indoor, outdoor, animation, simple, complex, unlabeled"
                ))
            })
    }
}

/// Which half of the dataset a pair belongs to.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!(
                "unknown split {other:?}; expected train or test"
            ))),
        }
    }
}

/// Canonical pair identifier: the source id with a zero-padded frame index.
pub fn pair_id(source_id: &str, frame_index: u64) -> String {
    format!("{source_id}_{frame_index:06}")
}

/// One stereo pair: image paths (relative to the manifest's directory),
/// provenance, and split assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub left_path: String,
    pub right_path: String,
    pub category: Category,
    pub split: Split,
    pub source_id: String,
    pub frame_index: u64,
}

/// Manifest schema understood by this build.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestHeader {
    schema_version: u32,
    created_at: String,
    tool_version: String,
}

/// Ordered collection of pair records with unique ids. Persisted as JSON
/// Lines: a header line carrying the schema version, then one record per
/// line. Relative paths inside records resolve against `base_dir`, the
/// directory holding the manifest file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    records: Vec<PairRecord>,
    base_dir: PathBuf,
}

fn check_unique_ids(records: &[PairRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.pair_id.as_str()) {
            return Err(Error::invalid(format!("duplicate pair_id {:?}", r.pair_id)));
        }
    }
    Ok(())
}

/// Writes bytes to `path` atomically (temp file in the same directory, then
/// rename) so readers never observe a half-written manifest or report.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl DatasetManifest {
    /// Builds an in-memory manifest; `base_dir` anchors the records'
    /// relative paths.
    pub fn from_records(records: Vec<PairRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        check_unique_ids(&records)?;
        Ok(Self {
            records,
            base_dir: base_dir.into(),
        })
    }

    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Resolves a record path against the manifest directory.
    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn test_records(&self) -> impl Iterator<Item = &PairRecord> {
        self.records.iter().filter(|r| r.split == Split::Test)
    }

    /// Checks that every referenced image file exists.
    pub fn validate_files(&self) -> Result<()> {
        for r in &self.records {
            for rel in [&r.left_path, &r.right_path] {
                let path = self.resolve(rel);
                if !path.is_file() {
                    return Err(Error::io(
                        &path,
                        std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            format!("file referenced by pair {} does not exist", r.pair_id),
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Writes the manifest as JSON Lines with a schema header, atomically.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let header = ManifestHeader {
            schema_version: MANIFEST_SCHEMA_VERSION,
            created_at: chrono::Utc::now().to_rfc3339(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let mut out = serde_json::to_string(&header).map_err(|e| Error::json(path, e))?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).map_err(|e| Error::json(path, e))?);
            out.push('\n');
        }
        write_atomic(path, out.as_bytes())
    }

    /// Reads a manifest written by [`DatasetManifest::save`]; the file's
    /// directory becomes the base for relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header_line) = lines.next().ok_or(Error::ManifestSchema {
            line: 1,
            reason: "manifest is empty, expected a schema header".into(),
        })?;
        let header: ManifestHeader =
            serde_json::from_str(header_line).map_err(|e| Error::ManifestSchema {
                line: 1,
                reason: format!("cannot parse schema header: {e}"),
            })?;
        if header.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::ManifestSchema {
                line: 1,
                reason: format!(
                    "schema version {} is not supported (this build reads version {})",
                    header.schema_version, MANIFEST_SCHEMA_VERSION
                ),
            });
        }
        let mut records = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let record: PairRecord =
                serde_json::from_str(line).map_err(|e| Error::ManifestSchema {
                    line: idx + 1,
                    reason: format!("cannot parse pair record: {e}"),
                })?;
            if !seen.insert(record.pair_id.clone()) {
                return Err(Error::ManifestSchema {
                    line: idx + 1,
                    reason: format!("duplicate pair_id {:?}", record.pair_id),
                });
            }
            records.push(record);
        }
        let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok(Self { records, base_dir })
    }
}

fn valid_source_id(source_id: &str) -> bool {
    !source_id.is_empty()
        && source_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Samples every `sample_stride`-th frame (lexicographic filename order,
/// starting at index 0) from `frame_dir`, resizes each kept side-by-side
/// frame to `(2 * target_w) x target_h`, splits it at the midline, and
/// writes `left/<pair_id>.png` and `right/<pair_id>.png` under `out_dir`.
/// Returned records carry paths relative to `out_dir` and start in the
/// train split.
pub fn ingest_frames(
    frame_dir: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    source_id: &str,
    category: Category,
    sample_stride: usize,
    target_w: usize,
    target_h: usize,
) -> Result<Vec<PairRecord>> {
    let frame_dir = frame_dir.as_ref();
    let out_dir = out_dir.as_ref();
    if sample_stride == 0 {
        return Err(Error::invalid("sample_stride must be at least 1"));
    }
    if target_w == 0 || target_h == 0 {
        return Err(Error::ZeroDimension {
            width: target_w,
            height: target_h,
        });
    }
    if !valid_source_id(source_id) {
        return Err(Error::invalid(format!(
            "source_id {source_id:?} must be non-empty and use only [A-Za-z0-9_-]"
        )));
    }
    let mut frames: Vec<PathBuf> = std::fs::read_dir(frame_dir)
        .map_err(|e| Error::io(frame_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| {
                        matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg")
                    })
        })
        .collect();
    if frames.is_empty() {
        return Err(Error::EmptyDirectory {
            path: frame_dir.to_path_buf(),
        });
    }
    frames.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let left_dir = out_dir.join("left");
    let right_dir = out_dir.join("right");
    std::fs::create_dir_all(&left_dir).map_err(|e| Error::io(&left_dir, e))?;
    std::fs::create_dir_all(&right_dir).map_err(|e| Error::io(&right_dir, e))?;

    let mut records = Vec::new();
    for index in (0..frames.len()).step_by(sample_stride) {
        let frame = raster::load_image(&frames[index])?;
        let resized = raster::resize_bilinear(&frame, 2 * target_w, target_h)?;
        let (left, right) = raster::split_side_by_side(&resized)?;
        let id = pair_id(source_id, index as u64);
        let left_rel = format!("left/{id}.png");
        let right_rel = format!("right/{id}.png");
        raster::save_image(out_dir.join(&left_rel), &left)?;
        raster::save_image(out_dir.join(&right_rel), &right)?;
        records.push(PairRecord {
            pair_id: id,
            left_path: left_rel,
            right_path: right_rel,
            category,
            split: Split::Train,
            source_id: source_id.to_string(),
            frame_index: index as u64,
        });
    }
    Ok(records)
}

/// Reassigns splits so each category carries at least `per_category_test`
/// test records, sampling whole sources (seeded, deterministic) so no
/// source_id ever appears in both splits — even when a source spans
/// categories. `per_category_test = 0` sends everything to train. Because
/// whole sources are taken, a category may overshoot its target by at most
/// one source.
pub fn partition(
    manifest: &DatasetManifest,
    per_category_test: usize,
    seed: u64,
) -> Result<DatasetManifest> {
    let mut records = manifest.records().to_vec();
    if per_category_test == 0 {
        for r in &mut records {
            r.split = Split::Train;
        }
        return DatasetManifest::from_records(records, manifest.base_dir());
    }

    let mut by_category: BTreeMap<Category, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_category.entry(r.category).or_default().push(i);
    }
    for (category, indices) in &by_category {
        if indices.len() < per_category_test {
            return Err(Error::InsufficientRecords {
                category: category.to_string(),
                available: indices.len(),
                requested: per_category_test,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_sources: BTreeSet<String> = BTreeSet::new();
    for (category, indices) in &by_category {
        let mut per_source: BTreeMap<&str, usize> = BTreeMap::new();
        for &i in indices {
            *per_source.entry(records[i].source_id.as_str()).or_default() += 1;
        }
        // Records already pulled into test by a source shared with an
        // earlier category count toward this category's quota.
        let mut have: usize = per_source
            .iter()
            .filter(|(s, _)| test_sources.contains(**s))
            .map(|(_, n)| n)
            .sum();
        let mut candidates: Vec<&str> = per_source
            .keys()
            .copied()
            .filter(|s| !test_sources.contains(*s))
            .collect();
        candidates.shuffle(&mut rng);
        let mut picked = Vec::new();
        let mut pool = candidates.into_iter();
        while have < per_category_test {
            let Some(source) = pool.next() else {
                return Err(Error::InsufficientRecords {
                    category: category.to_string(),
                    available: have,
                    requested: per_category_test,
                });
            };
            have += per_source[source];
            picked.push(source.to_string());
        }
        test_sources.extend(picked);
    }

    for r in &mut records {
        r.split = if test_sources.contains(&r.source_id) {
            Split::Test
        } else {
            Split::Train
        };
    }
    DatasetManifest::from_records(records, manifest.base_dir())
}

/// Serializes non-finite quality ratios (a perfect reconstruction has
/// unbounded peak signal-to-noise) as JSON null and reads null back as
/// positive infinity.
mod psnr_as_nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else {
            serializer.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::INFINITY))
    }
}

/// Scores for one evaluated pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub pair_id: String,
    pub category: Category,
    pub siou: f64,
    pub edge_iou: f64,
    pub diff_iou: f64,
    pub rmse: f64,
    #[serde(with = "psnr_as_nullable")]
    pub psnr: f64,
    pub ssim: f64,
}

/// Arithmetic means of each metric column over some group of pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub count: usize,
    pub siou: f64,
    pub edge_iou: f64,
    pub diff_iou: f64,
    pub rmse: f64,
    #[serde(with = "psnr_as_nullable")]
    pub psnr: f64,
    pub ssim: f64,
}

fn metric_means(rows: &[&PairMetrics]) -> MetricMeans {
    let n = rows.len() as f64;
    MetricMeans {
        count: rows.len(),
        siou: rows.iter().map(|r| r.siou).sum::<f64>() / n,
        edge_iou: rows.iter().map(|r| r.edge_iou).sum::<f64>() / n,
        diff_iou: rows.iter().map(|r| r.diff_iou).sum::<f64>() / n,
        rmse: rows.iter().map(|r| r.rmse).sum::<f64>() / n,
        psnr: rows.iter().map(|r| r.psnr).sum::<f64>() / n,
        ssim: rows.iter().map(|r| r.ssim).sum::<f64>() / n,
    }
}

/// Overall and per-category aggregates of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportAggregates {
    pub overall: MetricMeans,
    pub per_category: BTreeMap<Category, MetricMeans>,
}

/// Full evaluation output: the scoring configuration, one row per test
/// pair, and aggregate means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: SiouConfig,
    pub per_pair: Vec<PairMetrics>,
    pub aggregates: ReportAggregates,
}

impl MetricReport {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        write_atomic(path, text.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// Recomputes aggregates from the per-pair rows.
    pub fn aggregate(config: SiouConfig, per_pair: Vec<PairMetrics>) -> Result<Self> {
        if per_pair.is_empty() {
            return Err(Error::EmptyInput);
        }
        let all: Vec<&PairMetrics> = per_pair.iter().collect();
        let overall = metric_means(&all);
        let mut per_category = BTreeMap::new();
        for category in Category::ALL {
            let rows: Vec<&PairMetrics> = per_pair
                .iter()
                .filter(|r| r.category == category)
                .collect();
            if !rows.is_empty() {
                per_category.insert(category, metric_means(&rows));
            }
        }
        Ok(Self {
            config,
            per_pair,
            aggregates: ReportAggregates {
                overall,
                per_category,
            },
        })
    }
}

/// Scores every test pair in the manifest against generated right views in
/// `candidates_dir` (one `<pair_id>.png` per pair; all must exist up
/// front). Candidates whose size differs from the ground truth are
/// bilinearly resampled to it before scoring. Pairs are scored in parallel;
/// row order follows the manifest.
pub fn run_eval(
    manifest: &DatasetManifest,
    candidates_dir: impl AsRef<Path>,
    cfg: &SiouConfig,
) -> Result<MetricReport> {
    let candidates_dir = candidates_dir.as_ref();
    let test: Vec<&PairRecord> = manifest.test_records().collect();
    if test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut missing: Vec<String> = test
        .iter()
        .filter(|r| !candidates_dir.join(format!("{}.png", r.pair_id)).is_file())
        .map(|r| r.pair_id.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingCandidate { pair_ids: missing });
    }

    let per_pair: Vec<PairMetrics> = test
        .par_iter()
        .map(|record| -> Result<PairMetrics> {
            let left = raster::load_image(manifest.resolve(&record.left_path))?;
            let right = raster::load_image(manifest.resolve(&record.right_path))?;
            let candidate_path = candidates_dir.join(format!("{}.png", record.pair_id));
            let mut generated = raster::load_image(&candidate_path)?;
            if (generated.width(), generated.height()) != (right.width(), right.height()) {
                generated = raster::resize_bilinear(&generated, right.width(), right.height())?;
            }
            let left_gray = raster::to_grayscale(&left);
            let right_gray = raster::to_grayscale(&right);
            let generated_gray = raster::to_grayscale(&generated);
            let stereo = metrics::siou(&left_gray, &right_gray, &generated_gray, cfg)?;
            let rmse = metrics::rmse(&right, &generated)?;
            let psnr = metrics::psnr_from_rmse(rmse);
            let ssim = metrics::ssim(&right_gray, &generated_gray)?;
            Ok(PairMetrics {
                pair_id: record.pair_id.clone(),
                category: record.category,
                siou: stereo.value,
                edge_iou: stereo.edge_iou,
                diff_iou: stereo.diff_iou,
                rmse,
                psnr,
                ssim,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MetricReport::aggregate(*cfg, per_pair)
}

/// One human rating of one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub pair_id: String,
    pub annotator_id: String,
    pub score: f64,
}

/// Collection of human ratings; scores are integers 1..=10.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    entries: Vec<AnnotationEntry>,
}

fn check_score(pair_id: &str, score: f64) -> Result<()> {
    if !(score.is_finite() && score.fract() == 0.0 && (1.0..=10.0).contains(&score)) {
        return Err(Error::ScoreOutOfRange {
            pair_id: pair_id.to_string(),
            score,
        });
    }
    Ok(())
}

impl AnnotationSet {
    pub fn from_entries(entries: Vec<AnnotationEntry>) -> Result<Self> {
        for e in &entries {
            check_score(&e.pair_id, e.score)?;
        }
        Ok(Self { entries })
    }

    /// Reads a CSV with header `pair_id,annotator_id,score`.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut entries = Vec::new();
        for row in reader.deserialize::<AnnotationEntry>() {
            let entry = row.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                source: e,
            })?;
            entries.push(entry);
        }
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[AnnotationEntry] {
        &self.entries
    }

    /// Mean score per pair, requiring at least two distinct annotators
    /// each. Keys come back sorted.
    pub fn averaged(&self) -> Result<BTreeMap<String, f64>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut grouped: BTreeMap<&str, (BTreeSet<&str>, Vec<f64>)> = BTreeMap::new();
        for e in &self.entries {
            check_score(&e.pair_id, e.score)?;
            let slot = grouped.entry(&e.pair_id).or_default();
            slot.0.insert(&e.annotator_id);
            slot.1.push(e.score);
        }
        let mut averaged = BTreeMap::new();
        for (pid, (annotators, scores)) in grouped {
            if annotators.len() < 2 {
                return Err(Error::TooFewAnnotators {
                    pair_id: pid.to_string(),
                    count: annotators.len(),
                });
            }
            averaged.insert(
                pid.to_string(),
                scores.iter().sum::<f64>() / scores.len() as f64,
            );
        }
        Ok(averaged)
    }
}

/// Rank correlations of each metric column against averaged human scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pairs_used: usize,
    pub spearman: BTreeMap<String, f64>,
    pub kendall: BTreeMap<String, f64>,
}

impl CorrelationReport {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        write_atomic(path, text.as_bytes())
    }
}

/// Metric column names reported by [`correlate_with_humans`], in report
/// order.
pub const METRIC_COLUMNS: [&str; 6] = ["siou", "edge_iou", "diff_iou", "rmse", "psnr", "ssim"];

/// Averages annotator scores per pair, then rank-correlates every metric
/// column in the report against them. Every annotated pair must appear in
/// the report; report pairs without annotations are ignored. Error-type
/// columns (rmse) keep their natural sign — anticorrelation with human
/// preference shows up as a negative coefficient.
pub fn correlate_with_humans(
    report: &MetricReport,
    annotations: &AnnotationSet,
) -> Result<CorrelationReport> {
    let averaged = annotations.averaged()?;
    let by_id: HashMap<&str, &PairMetrics> = report
        .per_pair
        .iter()
        .map(|r| (r.pair_id.as_str(), r))
        .collect();
    let mut rows: Vec<(&PairMetrics, f64)> = Vec::with_capacity(averaged.len());
    for (pid, human) in &averaged {
        let row = by_id.get(pid.as_str()).ok_or_else(|| Error::UnknownPairId {
            pair_id: pid.clone(),
        })?;
        rows.push((row, *human));
    }
    let human: Vec<f64> = rows.iter().map(|(_, h)| *h).collect();
    let column = |f: fn(&PairMetrics) -> f64| -> Vec<f64> {
        rows.iter().map(|(r, _)| f(r)).collect()
    };
    let columns: [(&str, Vec<f64>); 6] = [
        ("siou", column(|r| r.siou)),
        ("edge_iou", column(|r| r.edge_iou)),
        ("diff_iou", column(|r| r.diff_iou)),
        ("rmse", column(|r| r.rmse)),
        ("psnr", column(|r| r.psnr)),
        ("ssim", column(|r| r.ssim)),
    ];
    let mut spearman = BTreeMap::new();
    let mut kendall = BTreeMap::new();
    for (name, values) in &columns {
        spearman.insert(name.to_string(), metrics::spearman(values, &human)?);
        kendall.insert(name.to_string(), metrics::kendall(values, &human)?);
    }
    Ok(CorrelationReport {
        pairs_used: rows.len(),
        spearman,
        kendall,
    })
}
