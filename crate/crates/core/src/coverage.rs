// SPDX-License-Identifier: Apache-2.0

//! Function hit-count records, commit coverage reports, and the report store.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wildmatch::WildMatch;

use crate::sic::SelectiveInstrumentationContext;

/// Store key for one build. Also a file name, so path separators and the
/// `.`/`..` names are refused.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BuildId(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid build id `{0}`")]
pub struct InvalidBuildId(pub String);

impl BuildId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidBuildId> {
        let id = id.into();
        let bad = id.is_empty()
            || id == "."
            || id == ".."
            || id.starts_with('.')
            || id.contains(|c: char| c.is_whitespace() || c == '/' || c == '\\' || c.is_control());
        if bad {
            Err(InvalidBuildId(id))
        } else {
            Ok(BuildId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for BuildId {
    type Error = InvalidBuildId;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        BuildId::new(value)
    }
}

impl From<BuildId> for String {
    fn from(value: BuildId) -> Self {
        value.0
    }
}

impl fmt::Display for BuildId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub symbol: String,
    pub hit_count: u64,
}

impl CoverageRecord {
    pub fn new(symbol: impl Into<String>, hit_count: u64) -> Self {
        CoverageRecord {
            symbol: symbol.into(),
            hit_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("line {line}: expected `<symbol> <count>`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: negative hit count {count}")]
    NegativeCount { line: usize, count: String },
    #[error("line {line}: hit count overflows")]
    Overflow { line: usize },
}

/// Parses a record document; duplicate symbols are summed and keep the
/// position of their first line.
pub fn ingest_records(text: &str) -> Result<Vec<CoverageRecord>, RecordError> {
    let mut order: Vec<CoverageRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.strip_suffix('\r').unwrap_or(raw);
        if body.trim().is_empty() || body.trim_start().starts_with('#') {
            continue;
        }
        let malformed = || RecordError::Malformed {
            line,
            text: raw.to_string(),
        };
        let (symbol, count) = body.split_once(' ').ok_or_else(malformed)?;
        if symbol.is_empty() || symbol.contains(char::is_whitespace) {
            return Err(malformed());
        }
        if let Some(digits) = count.strip_prefix('-') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(RecordError::NegativeCount {
                    line,
                    count: count.to_string(),
                });
            }
        }
        if count.is_empty() || !count.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        let hits: u64 = count.parse().map_err(|_| RecordError::Overflow { line })?;
        match index.get(symbol) {
            Some(&i) => {
                order[i].hit_count = order[i]
                    .hit_count
                    .checked_add(hits)
                    .ok_or(RecordError::Overflow { line })?;
            }
            None => {
                index.insert(symbol.to_string(), order.len());
                order.push(CoverageRecord::new(symbol, hits));
            }
        }
    }
    Ok(order)
}

/// Renders records in the document format [`ingest_records`] reads.
pub fn render_records(records: &[CoverageRecord]) -> String {
    records
        .iter()
        .map(|r| format!("{} {}\n", r.symbol, r.hit_count))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCoverage {
    pub pattern: String,
    /// Matched by glob rather than exact symbol.
    pub fallback: bool,
    pub matched_symbols: u64,
    pub total_hits: u64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub build_id: BuildId,
    pub commit_id: String,
    pub per_target: Vec<TargetCoverage>,
    pub commit_coverage: f64,
    pub unmatched_symbols: u64,
    /// Summed input records, sorted by symbol; kept so reports can be
    /// merged exactly.
    pub records: Vec<CoverageRecord>,
}

impl CoverageReport {
    pub fn covered_targets(&self) -> usize {
        self.per_target.iter().filter(|t| t.covered).count()
    }

    /// Sums this report's records with `other`'s. Both must cover the same
    /// commit and target patterns.
    pub fn merge(&self, other: &CoverageReport) -> Result<CoverageReport, StoreError> {
        let key = |r: &CoverageReport| {
            r.per_target
                .iter()
                .map(|t| (t.pattern.clone(), t.fallback))
                .collect::<Vec<_>>()
        };
        if self.commit_id != other.commit_id || key(self) != key(other) {
            return Err(StoreError::Incompatible {
                build_id: self.build_id.clone(),
            });
        }
        let mut sums: BTreeMap<&str, u64> = BTreeMap::new();
        for r in self.records.iter().chain(&other.records) {
            let slot = sums.entry(&r.symbol).or_default();
            *slot = slot
                .checked_add(r.hit_count)
                .ok_or(StoreError::Incompatible {
                    build_id: self.build_id.clone(),
                })?;
        }
        let records: Vec<CoverageRecord> = sums
            .into_iter()
            .map(|(s, n)| CoverageRecord::new(s, n))
            .collect();
        let targets: Vec<(String, bool)> = key(self);
        Ok(evaluate(
            self.build_id.clone(),
            self.commit_id.clone(),
            &targets,
            &records,
        ))
    }
}

/// Joins `records` against the SIC's targets, one row per distinct pattern.
pub fn build_report(
    sic: &SelectiveInstrumentationContext,
    records: &[CoverageRecord],
    build_id: BuildId,
) -> CoverageReport {
    let mut seen = HashSet::new();
    let targets: Vec<(String, bool)> = sic
        .targets()
        .iter()
        .filter(|t| seen.insert(t.pattern().to_string()))
        .map(|t| (t.pattern().to_string(), t.mangled().is_none()))
        .collect();
    evaluate(build_id, sic.commit_id.clone(), &targets, records)
}

fn evaluate(
    build_id: BuildId,
    commit_id: String,
    targets: &[(String, bool)],
    records: &[CoverageRecord],
) -> CoverageReport {
    let mut summed: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records {
        let slot = summed.entry(&r.symbol).or_default();
        *slot = slot.saturating_add(r.hit_count);
    }
    let mut matched_any: HashSet<&str> = HashSet::new();
    let per_target: Vec<TargetCoverage> = targets
        .iter()
        .map(|(pattern, fallback)| {
            let glob = fallback.then(|| WildMatch::new(pattern));
            let mut matched_symbols = 0;
            let mut total_hits: u64 = 0;
            for (&symbol, &hits) in &summed {
                let hit = match &glob {
                    Some(g) => g.matches(symbol),
                    None => symbol == pattern,
                };
                if hit {
                    matched_any.insert(symbol);
                    matched_symbols += 1;
                    total_hits = total_hits.saturating_add(hits);
                }
            }
            TargetCoverage {
                pattern: pattern.clone(),
                fallback: *fallback,
                matched_symbols,
                total_hits,
                covered: total_hits > 0,
            }
        })
        .collect();
    let covered = per_target.iter().filter(|t| t.covered).count();
    let commit_coverage = if per_target.is_empty() {
        0.0
    } else {
        covered as f64 / per_target.len() as f64
    };
    let unmatched_symbols = summed.keys().filter(|s| !matched_any.contains(*s)).count() as u64;
    CoverageReport {
        build_id,
        commit_id,
        per_target,
        commit_coverage,
        unmatched_symbols,
        records: summed
            .into_iter()
            .map(|(s, n)| CoverageRecord::new(s, n))
            .collect(),
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("report for build `{build_id}` already exists")]
    Conflict { build_id: BuildId },
    #[error("no report for build `{build_id}`")]
    NotFound { build_id: BuildId },
    #[error("report for build `{build_id}` covers a different commit or target set")]
    Incompatible { build_id: BuildId },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// One JSON document per build id under a root directory.
#[derive(Debug, Clone)]
pub struct ReportStore {
    root: PathBuf,
}

impl ReportStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ReportStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, build_id: &BuildId) -> PathBuf {
        self.root.join(format!("{build_id}.json"))
    }

    /// Writes atomically via a temp file in the store root. Without
    /// `force`, an existing report is a conflict, checked at rename.
    pub fn store(&self, report: &CoverageReport, force: bool) -> Result<PathBuf, StoreError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| StoreError::Io { path, source }
        };
        fs::create_dir_all(&self.root).map_err(io_err(&self.root))?;
        let path = self.path_for(&report.build_id);
        let mut text =
            serde_json::to_string_pretty(report).map_err(|source| StoreError::Format {
                path: path.clone(),
                source,
            })?;
        text.push('\n');
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(io_err(&self.root))?;
        tmp.write_all(text.as_bytes())
            .and_then(|()| tmp.as_file().sync_all())
            .map_err(io_err(tmp.path()))?;
        let persisted = if force {
            tmp.persist(&path).map_err(|e| e.error)
        } else {
            tmp.persist_noclobber(&path).map_err(|e| e.error)
        };
        match persisted {
            Ok(_) => Ok(path),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::Conflict {
                build_id: report.build_id.clone(),
            }),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    pub fn load(&self, build_id: &BuildId) -> Result<CoverageReport, StoreError> {
        let path = self.path_for(build_id);
        let text = fs::read_to_string(&path).map_err(|source| {
            if source.kind() == io::ErrorKind::NotFound {
                StoreError::NotFound {
                    build_id: build_id.clone(),
                }
            } else {
                StoreError::Io {
                    path: path.clone(),
                    source,
                }
            }
        })?;
        serde_json::from_str(&text).map_err(|source| StoreError::Format { path, source })
    }

    /// Stores `report`, first summing it into any existing report for the
    /// same build.
    pub fn store_merged(&self, report: &CoverageReport) -> Result<CoverageReport, StoreError> {
        let merged = match self.load(&report.build_id) {
            Ok(existing) => existing.merge(report)?,
            Err(StoreError::NotFound { .. }) => report.clone(),
            Err(e) => return Err(e),
        };
        self.store(&merged, true)?;
        Ok(merged)
    }
}
