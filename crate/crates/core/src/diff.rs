// SPDX-License-Identifier: Apache-2.0

//! Unified-diff parsing into post-image changed line ranges.
//!
//! Only the post-image side of each hunk matters downstream: function spans
//! are scanned from the post-image file, so that is the only coordinate
//! system in which a span and a hunk can be compared.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Closed, 1-based line interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRange")]
pub struct LineRange {
    start: u32,
    end: u32,
}

#[derive(Deserialize)]
struct RawRange {
    start: u32,
    end: u32,
}

impl TryFrom<RawRange> for LineRange {
    type Error = InvalidRange;

    fn try_from(raw: RawRange) -> Result<Self, Self::Error> {
        LineRange::new(raw.start, raw.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid line range {start}..={end}")]
pub struct InvalidRange {
    pub start: u32,
    pub end: u32,
}

impl LineRange {
    pub fn new(start: u32, end: u32) -> Result<Self, InvalidRange> {
        if start == 0 || end < start {
            return Err(InvalidRange { start, end });
        }
        Ok(LineRange { start, end })
    }

    pub fn single(line: u32) -> Result<Self, InvalidRange> {
        Self::new(line, line)
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn end(&self) -> u32 {
        self.end
    }

    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }

    /// Closed-interval intersection test.
    pub fn intersects(&self, other: &LineRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn lines(&self) -> impl Iterator<Item = u32> {
        self.start..=self.end
    }
}

impl fmt::Display for LineRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Added,
    Modified,
}

/// One changed file. Hunks are post-image ranges, sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub kind: ChangeKind,
    hunks: Vec<LineRange>,
}

impl FileChange {
    /// Sorts `hunks` and rejects overlapping ones.
    pub fn new(
        path: impl Into<String>,
        kind: ChangeKind,
        mut hunks: Vec<LineRange>,
    ) -> Result<Self, DiffError> {
        let path = path.into();
        hunks.sort();
        if let Some(w) = hunks.windows(2).find(|w| w[0].end >= w[1].start) {
            return Err(DiffError::OverlappingHunks {
                path,
                first: w[0],
                second: w[1],
            });
        }
        Ok(FileChange { path, kind, hunks })
    }

    pub fn hunks(&self) -> &[LineRange] {
        &self.hunks
    }

    /// Hunks with adjacent ranges (`end + 1 == next.start`) merged.
    pub fn changed_ranges(&self) -> Vec<LineRange> {
        let mut merged: Vec<LineRange> = Vec::with_capacity(self.hunks.len());
        for range in &self.hunks {
            match merged.last_mut() {
                Some(last) if last.end.saturating_add(1) >= range.start => {
                    last.end = last.end.max(range.end);
                }
                _ => merged.push(*range),
            }
        }
        merged
    }
}

pub fn changed_ranges(change: &FileChange) -> Vec<LineRange> {
    change.changed_ranges()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitDiff {
    pub commit_id: String,
    changes: Vec<FileChange>,
}

impl CommitDiff {
    pub fn new(commit_id: impl Into<String>, changes: Vec<FileChange>) -> Result<Self, DiffError> {
        let mut seen = std::collections::HashSet::new();
        for change in &changes {
            if !seen.insert(change.path.as_str()) {
                return Err(DiffError::DuplicateFile {
                    path: change.path.clone(),
                });
            }
        }
        Ok(CommitDiff {
            commit_id: commit_id.into(),
            changes,
        })
    }

    pub fn changes(&self) -> &[FileChange] {
        &self.changes
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    /// Keeps changes whose path ends with one of `extensions` (case-sensitive).
    pub fn filter_source_files<S: AsRef<str>>(&self, extensions: &[S]) -> CommitDiff {
        CommitDiff {
            commit_id: self.commit_id.clone(),
            changes: self
                .changes
                .iter()
                .filter(|c| extensions.iter().any(|ext| c.path.ends_with(ext.as_ref())))
                .cloned()
                .collect(),
        }
    }
}

pub fn filter_source_files<S: AsRef<str>>(diff: &CommitDiff, extensions: &[S]) -> CommitDiff {
    diff.filter_source_files(extensions)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("line {line}: malformed hunk header `{text}`")]
    MalformedHunkHeader { line: usize, text: String },
    #[error("line {line}: hunk header outside of a file section")]
    OrphanHunk { line: usize },
    #[error("line {line}: expected `+++ ` header after `--- `")]
    MissingNewHeader { line: usize },
    #[error("line {line}: hunk body ended early ({old} old / {new} new lines missing)")]
    TruncatedHunk { line: usize, old: u32, new: u32 },
    #[error("hunks {first} and {second} of {path} overlap")]
    OverlappingHunks {
        path: String,
        first: LineRange,
        second: LineRange,
    },
    #[error("file {path} appears twice in one diff")]
    DuplicateFile { path: String },
}

impl DiffError {
    /// 1-based line of the diff text the error refers to, when there is one.
    pub fn line(&self) -> Option<usize> {
        match self {
            DiffError::MalformedHunkHeader { line, .. }
            | DiffError::OrphanHunk { line }
            | DiffError::MissingNewHeader { line }
            | DiffError::TruncatedHunk { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDiff {
    pub diff: CommitDiff,
    pub warnings: Vec<DiffWarning>,
}

/// Parses a unified diff, logging skipped files at warn level.
pub fn parse_unified_diff(text: &str) -> Result<CommitDiff, DiffError> {
    let parsed = parse_unified_diff_with_warnings(text)?;
    for w in &parsed.warnings {
        log::warn!("diff line {}: {}", w.line, w.message);
    }
    Ok(parsed.diff)
}

const DEV_NULL: &str = "/dev/null";

#[derive(Default)]
struct FileSection {
    start_line: usize,
    git_new_path: Option<String>,
    old_path: Option<String>,
    new_path: Option<String>,
    saw_new_header: bool,
    new_file: bool,
    deleted: bool,
    renamed: bool,
    binary: bool,
    hunks: Vec<LineRange>,
}

struct HunkBody {
    old_left: u32,
    new_left: u32,
}

pub fn parse_unified_diff_with_warnings(text: &str) -> Result<ParsedDiff, DiffError> {
    let mut commit_id: Option<String> = None;
    let mut warnings = Vec::new();
    let mut changes: Vec<FileChange> = Vec::new();
    let mut current: Option<FileSection> = None;
    let mut body: Option<HunkBody> = None;
    let mut lines = text.split('\n').enumerate().peekable();

    while let Some((idx, raw)) = lines.next() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        if let Some(hunk) = body.as_mut() {
            let consumed = match line.as_bytes().first() {
                Some(b' ') | None => {
                    // Some tools drop the single space of blank context lines.
                    if line.is_empty() && lines.peek().is_none() {
                        false
                    } else {
                        hunk.old_left = hunk.old_left.saturating_sub(1);
                        hunk.new_left = hunk.new_left.saturating_sub(1);
                        true
                    }
                }
                Some(b'-') if hunk.old_left > 0 => {
                    hunk.old_left -= 1;
                    true
                }
                Some(b'+') if hunk.new_left > 0 => {
                    hunk.new_left -= 1;
                    true
                }
                Some(b'\\') => true,
                _ => false,
            };
            if !consumed {
                return Err(DiffError::TruncatedHunk {
                    line: lineno,
                    old: hunk.old_left,
                    new: hunk.new_left,
                });
            }
            if hunk.old_left == 0 && hunk.new_left == 0 {
                body = None;
                // A trailing "\ No newline" marker belongs to this hunk.
                while let Some((_, next)) = lines.peek() {
                    if next.starts_with('\\') {
                        lines.next();
                    } else {
                        break;
                    }
                }
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix("diff --git ") {
            finish_section(current.take(), &mut changes, &mut warnings)?;
            current = Some(FileSection {
                start_line: lineno,
                git_new_path: git_header_new_path(rest),
                ..FileSection::default()
            });
        } else if let Some(rest) = line.strip_prefix("--- ") {
            let starts_new = match &current {
                Some(section) => section.saw_new_header,
                None => true,
            };
            if starts_new {
                finish_section(current.take(), &mut changes, &mut warnings)?;
                current = Some(FileSection {
                    start_line: lineno,
                    ..FileSection::default()
                });
            }
            let section = current.as_mut().expect("section present");
            section.old_path = Some(header_path(rest));
            match lines.peek() {
                Some((_, next)) if next.starts_with("+++ ") => {}
                _ => return Err(DiffError::MissingNewHeader { line: lineno + 1 }),
            }
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            let Some(section) = current.as_mut() else {
                return Err(DiffError::MissingNewHeader { line: lineno });
            };
            section.new_path = Some(header_path(rest));
            section.saw_new_header = true;
        } else if line.starts_with("@@") {
            let Some(section) = current.as_mut().filter(|s| s.saw_new_header) else {
                return Err(DiffError::OrphanHunk { line: lineno });
            };
            let header = parse_hunk_header(line).ok_or_else(|| DiffError::MalformedHunkHeader {
                line: lineno,
                text: line.to_string(),
            })?;
            if header.new_len > 0 {
                let range = LineRange::new(header.new_start, header.new_start + header.new_len - 1)
                    .map_err(|_| DiffError::MalformedHunkHeader {
                        line: lineno,
                        text: line.to_string(),
                    })?;
                section.hunks.push(range);
            }
            if header.old_len > 0 || header.new_len > 0 {
                body = Some(HunkBody {
                    old_left: header.old_len,
                    new_left: header.new_len,
                });
            }
        } else if let Some(section) = current.as_mut() {
            if line.starts_with("new file mode") {
                section.new_file = true;
            } else if line.starts_with("deleted file mode") {
                section.deleted = true;
            } else if let Some(to) = line
                .strip_prefix("rename to ")
                .or_else(|| line.strip_prefix("copy to "))
            {
                section.renamed = true;
                section.git_new_path = Some(unquote(to));
            } else if line.starts_with("Binary files ") || line == "GIT binary patch" {
                section.binary = true;
            }
        } else if commit_id.is_none() && changes.is_empty() {
            commit_id = preamble_commit_id(line);
        }
    }

    if let Some(hunk) = body {
        return Err(DiffError::TruncatedHunk {
            line: text.split('\n').count(),
            old: hunk.old_left,
            new: hunk.new_left,
        });
    }
    finish_section(current.take(), &mut changes, &mut warnings)?;

    let commit_id = commit_id.unwrap_or_else(|| content_id(text));
    Ok(ParsedDiff {
        diff: CommitDiff::new(commit_id, changes)?,
        warnings,
    })
}

fn finish_section(
    section: Option<FileSection>,
    changes: &mut Vec<FileChange>,
    warnings: &mut Vec<DiffWarning>,
) -> Result<(), DiffError> {
    let Some(section) = section else {
        return Ok(());
    };
    let new_path = section
        .new_path
        .as_deref()
        .filter(|p| *p != DEV_NULL)
        .map(strip_prefix_component)
        .or(section.git_new_path.clone());
    let Some(path) = new_path else {
        return Ok(());
    };
    if section.binary {
        warnings.push(DiffWarning {
            line: section.start_line,
            message: format!("skipping binary file {path}"),
        });
        return Ok(());
    }
    if section.deleted || section.new_path.as_deref() == Some(DEV_NULL) {
        return Ok(());
    }
    let added = section.new_file || section.old_path.as_deref() == Some(DEV_NULL);
    let (kind, hunks) = if section.renamed {
        // Renamed or copied files count as wholly new at the new path.
        (ChangeKind::Added, Vec::new())
    } else if added {
        (ChangeKind::Added, section.hunks)
    } else {
        (ChangeKind::Modified, section.hunks)
    };
    changes.push(FileChange::new(path, kind, hunks)?);
    Ok(())
}

struct HunkHeader {
    old_len: u32,
    new_start: u32,
    new_len: u32,
}

fn parse_hunk_header(line: &str) -> Option<HunkHeader> {
    let rest = line.strip_prefix("@@ -")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    let (_, old_len) = parse_header_range(old)?;
    let (new_start, new_len) = parse_header_range(new)?;
    Some(HunkHeader {
        old_len,
        new_start,
        new_len,
    })
}

fn parse_header_range(text: &str) -> Option<(u32, u32)> {
    let (start, len) = match text.split_once(',') {
        Some((s, l)) => (s, l),
        None => (text, "1"),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(start) || !digits(len) {
        return None;
    }
    Some((start.parse().ok()?, len.parse().ok()?))
}

/// Path from a `---`/`+++` header: trailing timestamp dropped, quotes removed.
fn header_path(rest: &str) -> String {
    let path = rest.split('\t').next().unwrap_or(rest);
    unquote(path.trim_end())
}

fn strip_prefix_component(path: &str) -> String {
    path.strip_prefix("b/").unwrap_or(path).to_string()
}

fn git_header_new_path(rest: &str) -> Option<String> {
    if let Some(idx) = rest.rfind(" \"b/") {
        return Some(strip_prefix_component(&unquote(&rest[idx + 1..])));
    }
    rest.rfind(" b/")
        .map(|idx| strip_prefix_component(&rest[idx + 1..]))
}

fn unquote(text: &str) -> String {
    let Some(inner) = text.strip_prefix('"').and_then(|t| t.strip_suffix('"')) else {
        return text.to_string();
    };
    let mut bytes = Vec::with_capacity(inner.len());
    let mut iter = inner.bytes().peekable();
    while let Some(b) = iter.next() {
        if b != b'\\' {
            bytes.push(b);
            continue;
        }
        match iter.next() {
            Some(b'n') => bytes.push(b'\n'),
            Some(b't') => bytes.push(b'\t'),
            Some(d @ b'0'..=b'7') => {
                let mut value = u32::from(d - b'0');
                for _ in 0..2 {
                    match iter.peek() {
                        Some(&o @ b'0'..=b'7') => {
                            value = value * 8 + u32::from(o - b'0');
                            iter.next();
                        }
                        _ => break,
                    }
                }
                bytes.push(value as u8);
            }
            Some(other) => bytes.push(other),
            None => bytes.push(b'\\'),
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

fn preamble_commit_id(line: &str) -> Option<String> {
    let candidate = line
        .strip_prefix("commit ")
        .or_else(|| line.strip_prefix("From "))?
        .split_whitespace()
        .next()?;
    let is_hex = candidate.len() >= 7 && candidate.bytes().all(|b| b.is_ascii_hexdigit());
    is_hex.then(|| candidate.to_string())
}

/// Stable identifier for diffs that carry no commit header.
fn content_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("diff-{hex}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range(start: u32, end: u32) -> LineRange {
        LineRange::new(start, end).unwrap()
    }

    #[test]
    fn hunk_header_maps_to_post_image_range() {
        let text = "\
--- a/src/a.cpp
+++ b/src/a.cpp
@@ -5,3 +7,4 @@ void f()
 ctx
-old
+new1
+new2
 ctx
";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.changes().len(), 1);
        let change = &diff.changes()[0];
        assert_eq!(change.path, "src/a.cpp");
        assert_eq!(change.kind, ChangeKind::Modified);
        assert_eq!(change.hunks(), &[range(7, 10)]);
    }

    #[test]
    fn empty_text_has_no_changes() {
        let diff = parse_unified_diff("").unwrap();
        assert!(diff.is_empty());
        assert!(diff.commit_id.starts_with("diff-"));
    }

    #[test]
    fn new_file_is_added_whole() {
        let mut text = String::from(
            "diff --git a/n.cpp b/n.cpp\nnew file mode 100644\nindex 0000000..1111111\n--- /dev/null\n+++ b/n.cpp\n@@ -0,0 +1,12 @@\n",
        );
        for i in 0..12 {
            text.push_str(&format!("+line {i}\n"));
        }
        let diff = parse_unified_diff(&text).unwrap();
        let change = &diff.changes()[0];
        assert_eq!(change.kind, ChangeKind::Added);
        assert_eq!(change.hunks(), &[range(1, 12)]);
        assert_eq!(change.changed_ranges(), vec![range(1, 12)]);
    }

    #[test]
    fn pure_deletion_contributes_no_range() {
        let text = "--- a/x.cpp\n+++ b/x.cpp\n@@ -4,2 +3,0 @@\n-a\n-b\n@@ -10 +9 @@\n-c\n+d\n";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.changes()[0].hunks(), &[range(9, 9)]);
    }

    #[test]
    fn malformed_header_reports_line() {
        let text = "--- a/x.cpp\n+++ b/x.cpp\n@@ -4,2 +x @@\n";
        let err = parse_unified_diff(text).unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(matches!(err, DiffError::MalformedHunkHeader { .. }));
    }

    #[test]
    fn truncated_hunk_is_an_error() {
        let text = "--- a/x.cpp\n+++ b/x.cpp\n@@ -1,3 +1,3 @@\n a\n";
        assert!(matches!(
            parse_unified_diff(text),
            Err(DiffError::TruncatedHunk { .. })
        ));
    }

    #[test]
    fn removed_line_resembling_header_stays_in_hunk() {
        let text = "--- a/x.cpp\n+++ b/x.cpp\n@@ -1,2 +1,1 @@\n--- looks like a header\n keep\n";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.changes().len(), 1);
        assert_eq!(diff.changes()[0].hunks(), &[range(1, 1)]);
    }

    #[test]
    fn binary_files_are_skipped_with_warning() {
        let text = "\
diff --git a/img.png b/img.png
index 1..2 100644
Binary files a/img.png and b/img.png differ
diff --git a/k.cpp b/k.cpp
--- a/k.cpp
+++ b/k.cpp
@@ -1 +1 @@
-x
+y
";
        let parsed = parse_unified_diff_with_warnings(text).unwrap();
        assert_eq!(parsed.diff.changes().len(), 1);
        assert_eq!(parsed.diff.changes()[0].path, "k.cpp");
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].message.contains("img.png"));
    }

    #[test]
    fn deleted_files_are_dropped_and_renames_become_added() {
        let text = "\
commit 0123456789abcdef0123456789abcdef01234567
Author: someone

    message line

diff --git a/gone.cpp b/gone.cpp
deleted file mode 100644
--- a/gone.cpp
+++ /dev/null
@@ -1,2 +0,0 @@
-a
-b
diff --git a/old.cpp b/new.cpp
similarity index 100%
rename from old.cpp
rename to new.cpp
";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.commit_id, "0123456789abcdef0123456789abcdef01234567");
        assert_eq!(diff.changes().len(), 1);
        assert_eq!(diff.changes()[0].path, "new.cpp");
        assert_eq!(diff.changes()[0].kind, ChangeKind::Added);
    }

    #[test]
    fn crlf_and_timestamps_are_tolerated() {
        let text = "--- a/w.cc\t2024-01-01 00:00:00\r\n+++ b/w.cc\t2024-01-02 00:00:00\r\n@@ -1,1 +1,2 @@\r\n a\r\n+b\r\n";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.changes()[0].path, "w.cc");
        assert_eq!(diff.changes()[0].hunks(), &[range(1, 2)]);
    }

    #[test]
    fn quoted_paths_are_unescaped() {
        let text = "--- \"a/with space.cpp\"\n+++ \"b/with space.cpp\"\n@@ -1 +1 @@\n-a\n+b\n";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.changes()[0].path, "with space.cpp");
    }

    #[test]
    fn filter_keeps_matching_suffixes_in_order() {
        let change = |p: &str| FileChange::new(p, ChangeKind::Modified, vec![]).unwrap();
        let diff = CommitDiff::new(
            "c1",
            vec![
                change("a.cpp"),
                change("b.txt"),
                change("c.cpp"),
                change("d.CPP"),
            ],
        )
        .unwrap();
        let kept = diff.filter_source_files(&[".cpp"]);
        let paths: Vec<_> = kept.changes().iter().map(|c| c.path.as_str()).collect();
        assert_eq!(paths, ["a.cpp", "c.cpp"]);
        assert!(diff.filter_source_files::<&str>(&[]).is_empty());
        assert_eq!(kept.filter_source_files(&[".cpp"]), kept);
    }

    #[test]
    fn changed_ranges_merges_adjacent() {
        let c = FileChange::new("a", ChangeKind::Modified, vec![range(6, 9), range(3, 5)]).unwrap();
        assert_eq!(c.changed_ranges(), vec![range(3, 9)]);
        let c = FileChange::new("a", ChangeKind::Modified, vec![range(3, 5), range(8, 9)]).unwrap();
        assert_eq!(c.changed_ranges(), vec![range(3, 5), range(8, 9)]);
    }

    #[test]
    fn overlapping_hunks_and_duplicate_paths_are_rejected() {
        assert!(
            FileChange::new("a", ChangeKind::Modified, vec![range(1, 5), range(5, 6)]).is_err()
        );
        let a = FileChange::new("a", ChangeKind::Modified, vec![]).unwrap();
        assert!(CommitDiff::new("c", vec![a.clone(), a]).is_err());
    }

    #[test]
    fn line_range_invariants() {
        assert!(LineRange::new(0, 3).is_err());
        assert!(LineRange::new(4, 3).is_err());
        assert!(serde_json::from_str::<LineRange>(r#"{"start":5,"end":2}"#).is_err());
        let r = range(10, 20);
        assert!(r.intersects(&range(20, 25)));
        assert!(!r.intersects(&range(21, 30)));
    }
}
