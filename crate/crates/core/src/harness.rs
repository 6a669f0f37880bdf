//! Manifest loading, batch evaluation and report emission.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dom::{parse_html_bytes, DomTree, ParseError};
use crate::metrics::{evaluate, rank_correlation, EvalConfig, EvalReport, MetricError};
use crate::simplify::{classify, Level};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("missing files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingFile(Vec<PathBuf>),
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("no samples")]
    NoSamples,
    #[error("threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("{path}: {message}")]
    Ranks { path: PathBuf, message: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// One manifest entry with paths resolved against the manifest directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchSample {
    pub id: String,
    pub level: Level,
    /// Whether `level` came from the manifest rather than [`classify`].
    pub level_given: bool,
    pub reference_html: PathBuf,
    pub candidate_html: Option<PathBuf>,
    pub image: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    id: String,
    #[serde(default)]
    level: Option<Level>,
    reference_html: PathBuf,
    #[serde(default)]
    candidate_html: Option<PathBuf>,
    #[serde(default)]
    image: Option<PathBuf>,
}

fn read_file(path: &Path) -> Result<Vec<u8>, HarnessError> {
    std::fs::read(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

/// Reads and parses an HTML file.
pub fn read_document(path: &Path) -> Result<DomTree, HarnessError> {
    let bytes = read_file(path)?;
    parse_html_bytes(&bytes).map_err(|source| HarnessError::Parse { path: path.to_path_buf(), source })
}

pub fn load_manifest(path: &Path) -> Result<Vec<BenchSample>, HarnessError> {
    let bytes = read_file(path)?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    let entries: Vec<ManifestEntry> = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| HarnessError::Schema { path: e.path().to_string(), message: e.inner().to_string() })?;

    let mut seen = HashSet::new();
    if let Some(dup) = entries.iter().find(|e| !seen.insert(e.id.as_str())) {
        return Err(HarnessError::DuplicateId(dup.id.clone()));
    }

    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &Path| base.join(p);
    let missing: Vec<PathBuf> = entries
        .iter()
        .flat_map(|e| std::iter::once(&e.reference_html).chain(&e.candidate_html).chain(&e.image))
        .map(|p| resolve(p))
        .filter(|p| !p.is_file())
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::MissingFile(missing));
    }

    entries
        .into_iter()
        .map(|e| {
            let reference_html = resolve(&e.reference_html);
            let (level, level_given) = match e.level {
                Some(level) => (level, true),
                None => (classify(&read_document(&reference_html)?).level, false),
            };
            Ok(BenchSample {
                id: e.id,
                level,
                level_given,
                reference_html,
                candidate_html: e.candidate_html.map(|p| resolve(&p)),
                image: e.image.map(|p| resolve(&p)),
            })
        })
        .collect()
}

/// Parses both files and compares them.
pub fn eval_pair(
    reference: &Path,
    candidate: &Path,
    config: &EvalConfig<f64>,
) -> Result<EvalReport<f64>, HarnessError> {
    if !config.is_valid() {
        return Err(HarnessError::InvalidThreshold(config.threshold));
    }
    let reference = read_document(reference)?;
    let candidate = read_document(candidate)?;
    Ok(evaluate(&reference, &candidate, config))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleResult {
    pub id: String,
    pub level: Level,
    pub ea: Option<f64>,
    pub la: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelAggregate {
    pub ea: f64,
    pub la: f64,
    /// Samples scored without error.
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Average {
    /// Mean over all scored samples.
    pub ea: Option<f64>,
    pub la: Option<f64>,
    /// Mean of the per-level means.
    pub ea_level_mean: Option<f64>,
    pub la_level_mean: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportConfig {
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub per_sample: Vec<SampleResult>,
    pub per_level: BTreeMap<Level, LevelAggregate>,
    pub average: Average,
    pub config: ReportConfig,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl AggregateReport {
    /// Aggregates per-sample results, which must already be sorted by id.
    pub fn from_results(per_sample: Vec<SampleResult>, threshold: f64) -> AggregateReport {
        let scored = || per_sample.iter().filter_map(|s| Some((s.level, s.ea?, s.la?)));
        let mut per_level = BTreeMap::new();
        for level in Level::ALL {
            let rows: Vec<_> = scored().filter(|r| r.0 == level).collect();
            if let (Some(ea), Some(la)) = (mean(rows.iter().map(|r| r.1)), mean(rows.iter().map(|r| r.2))) {
                per_level.insert(level, LevelAggregate { ea, la, count: rows.len() });
            }
        }
        let average = Average {
            ea: mean(scored().map(|r| r.1)),
            la: mean(scored().map(|r| r.2)),
            ea_level_mean: mean(per_level.values().map(|a: &LevelAggregate| a.ea)),
            la_level_mean: mean(per_level.values().map(|a: &LevelAggregate| a.la)),
        };
        AggregateReport { per_sample, per_level, average, config: ReportConfig { threshold } }
    }

    pub fn failed(&self) -> usize {
        self.per_sample.iter().filter(|s| !s.errors.is_empty()).count()
    }

    /// Pretty JSON with object keys sorted.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = serde_json::to_string_pretty(&canonical(value)).expect("value serializes");
        out.push('\n');
        out
    }

    /// Per-level table followed by the overall average row.
    pub fn to_csv(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6}"));
        let mut out = String::from("level,count,ea,la\n");
        for (level, agg) in &self.per_level {
            out.push_str(&format!("{level},{},{},{}\n", agg.count, fmt(Some(agg.ea)), fmt(Some(agg.la))));
        }
        let scored: usize = self.per_level.values().map(|a| a.count).sum();
        out.push_str(&format!("average,{scored},{},{}\n", fmt(self.average.ea), fmt(self.average.la)));
        out
    }
}

fn canonical(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonical(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        other => other,
    }
}

fn eval_sample(sample: &BenchSample, config: &EvalConfig<f64>) -> SampleResult {
    let outcome = match &sample.candidate_html {
        Some(candidate) => eval_pair(&sample.reference_html, candidate, config).map_err(|e| e.to_string()),
        None => Err("sample has no candidate_html".to_string()),
    };
    let (ea, la, errors) = match outcome {
        Ok(r) => (Some(r.element_accuracy), Some(r.layout_accuracy), Vec::new()),
        Err(e) => (None, None, vec![e]),
    };
    SampleResult { id: sample.id.clone(), level: sample.level, ea, la, errors }
}

/// Scores every sample on a pool of `jobs` threads. Failed samples are kept
/// in the report with their errors and left out of the means.
pub fn eval_manifest(
    samples: &[BenchSample],
    config: &EvalConfig<f64>,
    jobs: usize,
) -> Result<AggregateReport, HarnessError> {
    if samples.is_empty() {
        return Err(HarnessError::NoSamples);
    }
    if !config.is_valid() {
        return Err(HarnessError::InvalidThreshold(config.threshold));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    let mut results: Vec<SampleResult> = pool.install(|| samples.par_iter().map(|s| eval_sample(s, config)).collect());
    results.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(AggregateReport::from_results(results, config.threshold))
}

/// Reads a JSON array of ranks.
pub fn read_ranks(path: &Path) -> Result<Vec<usize>, HarnessError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| HarnessError::Ranks { path: path.to_path_buf(), message: e.to_string() })
}

pub fn corr(a: &Path, b: &Path) -> Result<f64, HarnessError> {
    Ok(rank_correlation(&read_ranks(a)?, &read_ranks(b)?)?)
}
