//! Face-image quality gating against OFIQ-style measure scores.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("quality report CSV: {0}")]
    Csv(String),
    #[error("threshold profile: {0}")]
    Profile(String),
    #[error("face supply exhausted: {} of {requested} accepted", accepted.len())]
    Exhausted { requested: usize, accepted: Vec<String> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub image_id: String,
    pub measures: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdProfile {
    pub minimums: BTreeMap<String, f64>,
}

impl ThresholdProfile {
    pub fn new(minimums: BTreeMap<String, f64>) -> Result<Self, QualityError> {
        for (k, v) in &minimums {
            if !(0.0..=100.0).contains(v) {
                return Err(QualityError::Profile(format!(
                    "minimum for {k} is {v}, outside [0, 100]"
                )));
            }
        }
        Ok(Self { minimums })
    }

    /// Profile that accepts every report.
    pub fn permissive() -> Self {
        Self {
            minimums: BTreeMap::new(),
        }
    }

    /// JSON object mapping measure name to minimum score.
    pub fn from_json(bytes: &[u8]) -> Result<Self, QualityError> {
        let minimums: BTreeMap<String, f64> =
            serde_json::from_slice(bytes).map_err(|e| QualityError::Profile(e.to_string()))?;
        Self::new(minimums)
    }

    pub fn load(path: &Path) -> Result<Self, QualityError> {
        Self::from_json(&std::fs::read(path)?)
    }
}

/// Minimum OFIQ scalar scores for accepting a generated face.
pub const DEFAULT_THRESHOLDS: [(&str, f64); 8] = [
    ("UnifiedQualityScore.scalar", 75.0),
    ("BackgroundUniformity.scalar", 70.0),
    ("IlluminationUniformity.scalar", 65.0),
    ("LuminanceVariance.scalar", 65.0),
    ("OverExposurePrevention.scalar", 80.0),
    ("InterEyeDistance.scalar", 80.0),
    ("HeadSize.scalar", 30.0),
    ("MarginAboveOfTheFaceImage.scalar", 35.0),
];

pub fn default_profile() -> ThresholdProfile {
    ThresholdProfile {
        minimums: DEFAULT_THRESHOLDS.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Pass,
    /// Failing measure names; absent measures read `<name>: missing`.
    Fail(Vec<String>),
}

impl Decision {
    pub fn is_pass(&self) -> bool {
        matches!(self, Decision::Pass)
    }
}

/// Inclusive gate: every profile measure must be present and `>=` its minimum.
/// Measures outside the profile are ignored.
pub fn evaluate(report: &QualityReport, profile: &ThresholdProfile) -> Decision {
    let failing: Vec<String> = profile
        .minimums
        .iter()
        .filter_map(|(name, &min)| match report.measures.get(name) {
            None => Some(format!("{name}: missing")),
            Some(&score) if score < min => Some(name.clone()),
            Some(_) => None,
        })
        .collect();
    if failing.is_empty() {
        Decision::Pass
    } else {
        Decision::Fail(failing)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchOutcome {
    pub passed: Vec<String>,
    pub failed: Vec<(String, Vec<String>)>,
}

/// Order-preserving partition of `reports` by [`evaluate`].
pub fn filter_batch(reports: &[QualityReport], profile: &ThresholdProfile) -> BatchOutcome {
    let decisions: Vec<Decision> = reports.par_iter().map(|r| evaluate(r, profile)).collect();
    let mut out = BatchOutcome::default();
    for (r, d) in reports.iter().zip(decisions) {
        match d {
            Decision::Pass => out.passed.push(r.image_id.clone()),
            Decision::Fail(reasons) => out.failed.push((r.image_id.clone(), reasons)),
        }
    }
    out
}

/// A CSV row dropped during ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    /// 1-based line number in the file.
    pub line: u64,
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportTable {
    pub reports: Vec<QualityReport>,
    pub rejected: Vec<RejectedRow>,
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains(';') && !header.contains(',') {
        b';'
    } else {
        b','
    }
}

/// Reads an OFIQ result table: header row, image id in the first column,
/// `*.scalar` columns as measures (others ignored). Rows with scores outside
/// [0, 100] or unparsable numbers are rejected. `delimiter = None` picks `;`
/// when the header uses it and `,` otherwise.
pub fn read_reports(mut reader: impl Read, delimiter: Option<u8>) -> Result<ReportTable, QualityError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let delimiter = delimiter.unwrap_or_else(|| sniff_delimiter(&text));
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| QualityError::Csv(e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(QualityError::Csv("missing header row".into()));
    }
    let measure_cols: Vec<(usize, &str)> = headers
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, h)| h.ends_with(".scalar"))
        .collect();

    let mut table = ReportTable::default();
    for record in rdr.records() {
        let record = record.map_err(|e| QualityError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let image_id = record.get(0).unwrap_or("").to_string();
        let mut measures = BTreeMap::new();
        let mut problem = None;
        for &(i, name) in &measure_cols {
            let cell = record.get(i).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if (0.0..=100.0).contains(&v) => {
                    measures.insert(name.to_string(), v);
                }
                Ok(v) => problem = Some(format!("{name} = {v} outside [0, 100]")),
                Err(_) => problem = Some(format!("{name} = {cell:?} is not a number")),
            }
            if problem.is_some() {
                break;
            }
        }
        if image_id.is_empty() && problem.is_none() {
            problem = Some("empty image id".into());
        }
        match problem {
            Some(reason) => table.rejected.push(RejectedRow { line, image_id, reason }),
            None => table.reports.push(QualityReport { image_id, measures }),
        }
    }
    Ok(table)
}

pub fn load_reports(path: &Path, delimiter: Option<u8>) -> Result<ReportTable, QualityError> {
    read_reports(std::fs::File::open(path)?, delimiter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceCandidate {
    pub id: String,
    pub report: QualityReport,
}

/// Supplier of candidate faces, one batch per acquisition round.
pub trait FaceSource {
    /// `None` once the supply is exhausted.
    fn next_batch(&mut self) -> Option<Vec<FaceCandidate>>;
}

/// Runs acquisition rounds until at least `n` candidates pass `profile`.
///
/// May return more than `n` ids when the final round over-delivers.
pub fn acquire_until(
    n: usize,
    source: &mut dyn FaceSource,
    profile: &ThresholdProfile,
    max_rounds: usize,
) -> Result<Vec<String>, QualityError> {
    let mut accepted = Vec::new();
    if n == 0 {
        return Ok(accepted);
    }
    for round in 0..max_rounds {
        let Some(batch) = source.next_batch() else {
            break;
        };
        let reports: Vec<QualityReport> = batch.into_iter().map(|c| c.report).collect();
        let outcome = filter_batch(&reports, profile);
        log::debug!(
            "round {round}: {} passed, {} failed",
            outcome.passed.len(),
            outcome.failed.len()
        );
        accepted.extend(outcome.passed);
        if accepted.len() >= n {
            return Ok(accepted);
        }
    }
    Err(QualityError::Exhausted { requested: n, accepted })
}

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

/// Image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, std::io::Error> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Faces read from a directory. Candidate ids are file names; reports are
/// matched on file name or file stem, and images with no report get an
/// empty one.
pub struct DirFaceSource {
    candidates: Vec<FaceCandidate>,
    paths: HashMap<String, PathBuf>,
    batch_size: usize,
    cursor: usize,
}

impl DirFaceSource {
    pub fn new(dir: &Path, reports: &[QualityReport], batch_size: usize) -> Result<Self, QualityError> {
        let by_id: HashMap<&str, &QualityReport> = reports.iter().map(|r| (r.image_id.as_str(), r)).collect();
        let mut candidates = Vec::new();
        let mut paths = HashMap::new();
        for path in list_images(dir)? {
            let name = path
                .file_name()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let measures = by_id
                .get(name.as_str())
                .or_else(|| by_id.get(stem))
                .map(|r| r.measures.clone())
                .unwrap_or_default();
            candidates.push(FaceCandidate {
                id: name.clone(),
                report: QualityReport {
                    image_id: name.clone(),
                    measures,
                },
            });
            paths.insert(name, path);
        }
        Ok(Self {
            candidates,
            paths,
            batch_size: batch_size.max(1),
            cursor: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn path_of(&self, id: &str) -> Option<&Path> {
        self.paths.get(id).map(PathBuf::as_path)
    }
}

impl FaceSource for DirFaceSource {
    fn next_batch(&mut self) -> Option<Vec<FaceCandidate>> {
        if self.cursor >= self.candidates.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.candidates.len());
        let batch = self.candidates[self.cursor..end].to_vec();
        self.cursor = end;
        Some(batch)
    }
}
