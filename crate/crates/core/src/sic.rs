// SPDX-License-Identifier: Apache-2.0

//! Target selection by span/hunk overlap, and the profile-list format.
//!
//! ```text
//! # sicov profile list commit=<commit_id>
//! default:skip
//! function:<pattern>=allow
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{ChangeKind, CommitDiff, FileChange, LineRange};
use crate::mangle::{mangle_span, MangledName};
use crate::scan::{FunctionSignature, FunctionSpan};

/// How a target is named in the profile list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSymbol {
    Mangled(MangledName),
    /// Wildcard `*<name>*`, with the reason exact mangling was not possible.
    Fallback {
        pattern: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionTarget {
    pub signature: FunctionSignature,
    pub span: LineRange,
    pub file: String,
    pub symbol: TargetSymbol,
}

impl FunctionTarget {
    pub fn from_span(span: &FunctionSpan) -> Self {
        let symbol = match mangle_span(span) {
            Ok(name) => TargetSymbol::Mangled(name),
            Err(e) => TargetSymbol::Fallback {
                pattern: fallback_pattern(&span.signature),
                reason: e.reason().to_string(),
            },
        };
        FunctionTarget {
            signature: span.signature.clone(),
            span: span.span,
            file: span.file.clone(),
            symbol,
        }
    }

    pub fn mangled(&self) -> Option<&MangledName> {
        match &self.symbol {
            TargetSymbol::Mangled(name) => Some(name),
            TargetSymbol::Fallback { .. } => None,
        }
    }

    pub fn fallback_pattern(&self) -> Option<&str> {
        match &self.symbol {
            TargetSymbol::Fallback { pattern, .. } => Some(pattern),
            TargetSymbol::Mangled(_) => None,
        }
    }

    /// The profile-list pattern: the symbol itself or the wildcard.
    pub fn pattern(&self) -> &str {
        match &self.symbol {
            TargetSymbol::Mangled(name) => name.as_str(),
            TargetSymbol::Fallback { pattern, .. } => pattern,
        }
    }
}

/// `*<terminal name>*`. Operators use their spelled form, which never
/// appears in a symbol, so they fall back to the `operator` keyword alone.
pub fn fallback_pattern(sig: &FunctionSignature) -> String {
    use crate::scan::UnqualifiedName;
    let name = match &sig.qualified_name.name {
        UnqualifiedName::Identifier(s) => s.clone(),
        UnqualifiedName::Constructor(class) | UnqualifiedName::Destructor(class) => class.clone(),
        UnqualifiedName::Operator(_) | UnqualifiedName::Conversion(_) => {
            // Itanium operator codes are two letters; the enclosing scope is
            // the most specific stable fragment available.
            sig.qualified_name.scope.last().cloned().unwrap_or_default()
        }
    };
    if name.is_empty() {
        "*".to_string()
    } else {
        format!("*{name}*")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SicError {
    #[error("no scan for changed file(s): {}", .0.join(", "))]
    MissingScan(Vec<String>),
    #[error("duplicate target {file}:{span}")]
    DuplicateTarget { file: String, span: LineRange },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectiveInstrumentationContext {
    pub commit_id: String,
    targets: Vec<FunctionTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_functions_hint: Option<u64>,
}

impl SelectiveInstrumentationContext {
    /// Sorts targets by (file, span start) and rejects duplicate spans.
    pub fn new(
        commit_id: impl Into<String>,
        mut targets: Vec<FunctionTarget>,
    ) -> Result<Self, SicError> {
        targets.sort_by(|a, b| {
            (a.file.as_str(), a.span.start(), a.span.end()).cmp(&(
                b.file.as_str(),
                b.span.start(),
                b.span.end(),
            ))
        });
        for pair in targets.windows(2) {
            if pair[0].file == pair[1].file && pair[0].span == pair[1].span {
                return Err(SicError::DuplicateTarget {
                    file: pair[1].file.clone(),
                    span: pair[1].span,
                });
            }
        }
        Ok(SelectiveInstrumentationContext {
            commit_id: commit_id.into(),
            targets,
            total_functions_hint: None,
        })
    }

    pub fn empty(commit_id: impl Into<String>) -> Self {
        SelectiveInstrumentationContext {
            commit_id: commit_id.into(),
            targets: Vec::new(),
            total_functions_hint: None,
        }
    }

    pub fn with_total_functions(mut self, total: u64) -> Self {
        self.total_functions_hint = Some(total);
        self
    }

    pub fn targets(&self) -> &[FunctionTarget] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn fallback_count(&self) -> usize {
        self.targets
            .iter()
            .filter(|t| t.mangled().is_none())
            .count()
    }

    /// Folds several commit SICs into one batch SIC. Targets are kept once
    /// per profile-list pattern, first occurrence wins.
    pub fn batch(batch_id: impl Into<String>, sics: &[SelectiveInstrumentationContext]) -> Self {
        let mut seen = HashSet::new();
        let mut targets: Vec<FunctionTarget> = sics
            .iter()
            .flat_map(|s| s.targets.iter())
            .filter(|t| seen.insert(t.pattern().to_string()))
            .cloned()
            .collect();
        targets.sort_by(|a, b| {
            (a.file.as_str(), a.span.start(), a.span.end()).cmp(&(
                b.file.as_str(),
                b.span.start(),
                b.span.end(),
            ))
        });
        targets.dedup_by(|b, a| a.file == b.file && a.span == b.span);
        SelectiveInstrumentationContext {
            commit_id: batch_id.into(),
            targets,
            total_functions_hint: sics.iter().find_map(|s| s.total_functions_hint),
        }
    }
}

/// Spans of one file that the change touches. Added files select all.
pub fn select_targets(spans: &[FunctionSpan], change: &FileChange) -> Vec<FunctionTarget> {
    selected_spans(spans, change)
        .map(FunctionTarget::from_span)
        .collect()
}

fn selected_spans<'a>(
    spans: &'a [FunctionSpan],
    change: &'a FileChange,
) -> impl Iterator<Item = &'a FunctionSpan> + 'a {
    let ranges = change.hunks();
    spans.iter().filter(move |s| {
        change.kind == ChangeKind::Added || ranges.iter().any(|h| s.span.intersects(h))
    })
}

/// Builds the commit SIC. `scans` must hold an entry (possibly empty) for
/// every file in `diff`; pass a diff already filtered to source files.
///
/// Overlap selection is widened by name within each file: every scanned
/// function sharing a terminal name with a selected one is selected too.
pub fn build_sic(
    diff: &CommitDiff,
    scans: &BTreeMap<String, Vec<FunctionSpan>>,
) -> Result<SelectiveInstrumentationContext, SicError> {
    let missing: Vec<String> = diff
        .changes()
        .iter()
        .filter(|c| !scans.contains_key(&c.path))
        .map(|c| c.path.clone())
        .collect();
    if !missing.is_empty() {
        return Err(SicError::MissingScan(missing));
    }
    let mut targets = Vec::new();
    for change in diff.changes() {
        let spans = &scans[&change.path];
        let names: HashSet<String> = selected_spans(spans, change)
            .map(|s| s.signature.terminal_name())
            .collect();
        targets.extend(
            spans
                .iter()
                .filter(|s| names.contains(&s.signature.terminal_name()))
                .map(FunctionTarget::from_span),
        );
    }
    SelectiveInstrumentationContext::new(diff.commit_id.clone(), targets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Allow,
    Skip,
    Forbid,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Allow => "allow",
            Action::Skip => "skip",
            Action::Forbid => "forbid",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allow" => Ok(Action::Allow),
            "skip" => Ok(Action::Skip),
            "forbid" => Ok(Action::Forbid),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Function,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub kind: EntryKind,
    pub pattern: String,
    pub action: Action,
}

impl ProfileEntry {
    pub fn function(pattern: impl Into<String>, action: Action) -> Self {
        ProfileEntry {
            kind: EntryKind::Function,
            pattern: pattern.into(),
            action,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileListError {
    #[error("line {line}: unrecognized line `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown action `{action}`")]
    UnknownAction { line: usize, action: String },
    #[error("line {line}: duplicate entry for `{pattern}`")]
    Duplicate { line: usize, pattern: String },
    #[error("line {line}: invalid pattern `{pattern}`")]
    InvalidPattern { line: usize, pattern: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileList {
    pub default_action: Action,
    entries: Vec<ProfileEntry>,
}

impl ProfileList {
    /// Rejects a repeated (kind, pattern); the error's line is the 1-based
    /// entry index.
    pub fn new(
        default_action: Action,
        entries: Vec<ProfileEntry>,
    ) -> Result<Self, ProfileListError> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            check_pattern(&e.pattern).map_err(|()| ProfileListError::InvalidPattern {
                line: i + 1,
                pattern: e.pattern.clone(),
            })?;
            if !seen.insert((e.kind, e.pattern.as_str())) {
                return Err(ProfileListError::Duplicate {
                    line: i + 1,
                    pattern: e.pattern.clone(),
                });
            }
        }
        Ok(ProfileList {
            default_action,
            entries,
        })
    }

    pub fn entries(&self) -> &[ProfileEntry] {
        &self.entries
    }
}

fn check_pattern(pattern: &str) -> Result<(), ()> {
    if pattern.is_empty() || pattern.contains(|c: char| c.is_whitespace() || c == '=') {
        Err(())
    } else {
        Ok(())
    }
}

/// Renders the list for `sic`. Targets sharing a pattern yield one line.
pub fn emit_profile_list(sic: &SelectiveInstrumentationContext) -> String {
    let mut out = format!(
        "# sicov profile list commit={}\ndefault:skip\n",
        sic.commit_id
    );
    let mut seen = HashSet::new();
    for target in sic.targets() {
        let pattern = target.pattern();
        if seen.insert(pattern) {
            out.push_str("function:");
            out.push_str(pattern);
            out.push_str("=allow\n");
        }
    }
    out
}

/// Accepts blank lines, `#` comments and `[section]` headers anywhere.
/// Without a `default:` line the default action is `allow`.
pub fn parse_profile_list(text: &str) -> Result<ProfileList, ProfileListError> {
    let mut default_action = Action::Allow;
    let mut entries: Vec<ProfileEntry> = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        if body.starts_with('[') && body.ends_with(']') {
            continue;
        }
        let syntax = || ProfileListError::Syntax {
            line,
            text: raw.to_string(),
        };
        if let Some(action) = body.strip_prefix("default:") {
            default_action = action
                .parse()
                .map_err(|action| ProfileListError::UnknownAction { line, action })?;
            continue;
        }
        let Some(rest) = body.strip_prefix("function:") else {
            return Err(syntax());
        };
        let Some((pattern, action)) = rest.rsplit_once('=') else {
            return Err(syntax());
        };
        let action: Action = action
            .parse()
            .map_err(|action| ProfileListError::UnknownAction { line, action })?;
        if check_pattern(pattern).is_err() {
            return Err(ProfileListError::InvalidPattern {
                line,
                pattern: pattern.to_string(),
            });
        }
        if !seen.insert(pattern.to_string()) {
            return Err(ProfileListError::Duplicate {
                line,
                pattern: pattern.to_string(),
            });
        }
        entries.push(ProfileEntry::function(pattern, action));
    }
    Ok(ProfileList {
        default_action,
        entries,
    })
}

/// The list [`emit_profile_list`] denotes, as a value.
pub fn profile_list_of(sic: &SelectiveInstrumentationContext) -> ProfileList {
    let mut seen = HashSet::new();
    let entries = sic
        .targets()
        .iter()
        .filter(|t| seen.insert(t.pattern()))
        .map(|t| ProfileEntry::function(t.pattern(), Action::Allow))
        .collect();
    ProfileList {
        default_action: Action::Skip,
        entries,
    }
}
