// SPDX-License-Identifier: Apache-2.0

//! Instrumentation metrics and fitted overhead models.
//!
//! * IFR: instrumented functions over all functions.
//! * PER: profile-list extraction time over baseline compile time, modeled
//!   per changed file.
//! * t_CPU: instrumented over baseline build CPU time, linear in IFR.
//! * FPS ratio: instrumented over baseline frame rate, reference values only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// t_CPU of a build instrumenting every function with no profile list.
/// Measured directly; outside the list-size model.
pub const FULL_INSTRUMENTATION_TCPU_FE: f64 = 1.75;
pub const FULL_INSTRUMENTATION_TCPU_IR: f64 = 1.00;

/// Largest IFR the overhead numbers were quoted for (1% of the codebase).
pub const REFERENCE_IFR_CAP: f64 = 0.01;

/// Median per-commit IFR over the 100 most recent commits.
pub const MEDIAN_COMMIT_IFR: f64 = 2.78e-6;
/// IFR of the largest recent commit.
pub const LARGEST_COMMIT_IFR: f64 = 5.56e-4;
/// IFR of the batch of the 100 most recent commits.
pub const BATCH_100_IFR: f64 = 1.11e-3;
/// Per-commit IFR implied by the 100-commit batch.
pub const BATCH_PER_COMMIT_IFR: f64 = BATCH_100_IFR / 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InstrumentationMode {
    /// Frontend counters with source-region mapping.
    #[serde(rename = "fe")]
    Fe,
    /// Counters inserted on the optimizer IR.
    #[serde(rename = "ir")]
    Ir,
}

impl InstrumentationMode {
    pub const ALL: [InstrumentationMode; 2] = [InstrumentationMode::Fe, InstrumentationMode::Ir];
}

impl fmt::Display for InstrumentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstrumentationMode::Fe => "fe",
            InstrumentationMode::Ir => "ir",
        })
    }
}

impl FromStr for InstrumentationMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fe" => Ok(InstrumentationMode::Fe),
            "ir" => Ok(InstrumentationMode::Ir),
            _ => Err(ModelError::UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown instrumentation mode `{0}`")]
    UnknownMode(String),
    #[error("unknown context kind `{0}`")]
    UnknownContext(String),
    #[error("no FPS reference for ({mode}, {context})")]
    NoReference {
        mode: InstrumentationMode,
        context: ContextKind,
    },
    #[error("line {line}: {message}")]
    Config { line: usize, message: String },
}

fn domain(message: impl Into<String>) -> ModelError {
    ModelError::Domain(message.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub slope_fe: f64,
    pub slope_ir: f64,
    pub intercept: f64,
    pub per_file_coefficient: f64,
}

impl Default for OverheadModel {
    fn default() -> Self {
        OverheadModel {
            slope_fe: 128.08,
            slope_ir: 139.84,
            intercept: 1.0,
            per_file_coefficient: 0.0833,
        }
    }
}

impl OverheadModel {
    pub fn new(
        slope_fe: f64,
        slope_ir: f64,
        intercept: f64,
        per_file_coefficient: f64,
    ) -> Result<Self, ModelError> {
        let model = OverheadModel {
            slope_fe,
            slope_ir,
            intercept,
            per_file_coefficient,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("slope_fe", self.slope_fe),
            ("slope_ir", self.slope_ir),
            ("intercept", self.intercept),
            ("per_file_coefficient", self.per_file_coefficient),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn slope(&self, mode: InstrumentationMode) -> f64 {
        match mode {
            InstrumentationMode::Fe => self.slope_fe,
            InstrumentationMode::Ir => self.slope_ir,
        }
    }

    /// Sets one coefficient by config key. Returns `Ok(false)` for keys
    /// this model does not own.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let slot = match key {
            "slope_fe" => &mut self.slope_fe,
            "slope_ir" => &mut self.slope_ir,
            "intercept" => &mut self.intercept,
            "per_file_coefficient" => &mut self.per_file_coefficient,
            _ => return Ok(false),
        };
        *slot = parse_number(value)?;
        Ok(true)
    }

    /// Defaults overridden by a `key = value` document.
    pub fn from_config(text: &str) -> Result<Self, ModelError> {
        let mut model = OverheadModel::default();
        for_each_setting(text, |key, value| {
            match model.apply_setting(key, value)? {
                true => Ok(()),
                false => Err(format!("unknown key `{key}`")),
            }
        })?;
        model.validate().map_err(|e| ModelError::Config {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(model)
    }
}

fn parse_number(value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{value}` is not a finite number"))
}

/// Calls `f` for each `key = value` line; blank lines and `#` comments are
/// skipped. Errors are tagged with the 1-based line.
pub fn for_each_setting(
    text: &str,
    mut f: impl FnMut(&str, &str) -> Result<(), String>,
) -> Result<(), ModelError> {
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ModelError::Config {
                line,
                message: format!("expected `key = value`, got `{body}`"),
            });
        };
        f(key.trim(), value.trim()).map_err(|message| ModelError::Config { line, message })?;
    }
    Ok(())
}

/// |SIC| / |F|.
pub fn compute_ifr(sic_size: u64, total_functions: u64) -> Result<f64, ModelError> {
    if total_functions == 0 {
        return Err(domain("total function count must be at least 1"));
    }
    if sic_size > total_functions {
        return Err(domain(format!(
            "SIC size {sic_size} exceeds total function count {total_functions}"
        )));
    }
    Ok(sic_size as f64 / total_functions as f64)
}

pub fn estimate_per(files_changed: u64, model: &OverheadModel) -> f64 {
    files_changed as f64 * model.per_file_coefficient
}

/// `intercept + slope * ifr`. IFRs outside [0, 1] are extrapolated as is.
pub fn estimate_tcpu(model: &OverheadModel, mode: InstrumentationMode, ifr: f64) -> f64 {
    model.intercept + model.slope(mode) * ifr
}

pub fn max_ifr_within_budget(
    model: &OverheadModel,
    mode: InstrumentationMode,
    budget: f64,
) -> Result<f64, ModelError> {
    if !(budget.is_finite() && budget > model.intercept) {
        return Err(domain(format!(
            "budget {budget} leaves no headroom over intercept {}",
            model.intercept
        )));
    }
    Ok((budget - model.intercept) / model.slope(mode))
}

/// The IFR ceiling a commit budget is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetLimit {
    /// Maximum t_CPU ratio; converted through the fitted slope.
    TcpuRatio(f64),
    /// IFR ceiling given directly.
    IfrCap(f64),
}

/// Whole commits of `per_commit_ifr` each that fit under `limit`.
pub fn estimate_commit_budget(
    model: &OverheadModel,
    mode: InstrumentationMode,
    per_commit_ifr: f64,
    limit: BudgetLimit,
) -> Result<u64, ModelError> {
    if !(per_commit_ifr.is_finite() && per_commit_ifr > 0.0) {
        return Err(domain(format!(
            "per-commit IFR must be positive, got {per_commit_ifr}"
        )));
    }
    let cap = match limit {
        BudgetLimit::TcpuRatio(budget) => max_ifr_within_budget(model, mode, budget)?,
        BudgetLimit::IfrCap(cap) if cap.is_finite() && cap > 0.0 && cap <= 1.0 => cap,
        BudgetLimit::IfrCap(cap) => {
            return Err(domain(format!("IFR cap must lie in (0, 1], got {cap}")))
        }
    };
    Ok(tolerant_floor(cap / per_commit_ifr))
}

/// Floor that treats quotients within a few ulps of an integer as that
/// integer, so 0.01 / 5e-6 counts 2000 commits rather than 1999.
fn tolerant_floor(q: f64) -> u64 {
    let nearest = q.round();
    if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        q.floor() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextKind {
    MedianCommit,
    LargestCommit,
    Batch100,
    WorstCase,
    Full,
}

impl ContextKind {
    pub const ALL: [ContextKind; 5] = [
        ContextKind::MedianCommit,
        ContextKind::LargestCommit,
        ContextKind::Batch100,
        ContextKind::WorstCase,
        ContextKind::Full,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextKind::MedianCommit => "median-commit",
            ContextKind::LargestCommit => "largest-commit",
            ContextKind::Batch100 => "batch-100",
            ContextKind::WorstCase => "worst-case",
            ContextKind::Full => "full",
        }
    }
}

impl fmt::Display for ContextKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContextKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ContextKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownContext(s.to_string()))
    }
}

/// How a stored FPS ratio relates to the measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Point,
    LowerBound,
    Approximate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpsEntry {
    pub mode: InstrumentationMode,
    pub context: ContextKind,
    pub ratio: f64,
    pub bound: Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpsReference {
    entries: Vec<FpsEntry>,
}

impl Default for FpsReference {
    fn default() -> Self {
        let mut entries = Vec::new();
        for mode in InstrumentationMode::ALL {
            for context in [
                ContextKind::MedianCommit,
                ContextKind::LargestCommit,
                ContextKind::Batch100,
            ] {
                entries.push(FpsEntry {
                    mode,
                    context,
                    ratio: 0.9,
                    bound: Bound::LowerBound,
                });
            }
            entries.push(FpsEntry {
                mode,
                context: ContextKind::WorstCase,
                ratio: 0.5,
                bound: Bound::Approximate,
            });
        }
        entries.push(FpsEntry {
            mode: InstrumentationMode::Fe,
            context: ContextKind::Full,
            ratio: 0.297,
            bound: Bound::Point,
        });
        entries.push(FpsEntry {
            mode: InstrumentationMode::Ir,
            context: ContextKind::Full,
            ratio: 0.369,
            bound: Bound::Point,
        });
        FpsReference { entries }
    }
}

impl FpsReference {
    pub fn entries(&self) -> &[FpsEntry] {
        &self.entries
    }

    pub fn get(
        &self,
        mode: InstrumentationMode,
        context: ContextKind,
    ) -> Result<&FpsEntry, ModelError> {
        self.entries
            .iter()
            .find(|e| e.mode == mode && e.context == context)
            .ok_or(ModelError::NoReference { mode, context })
    }

    /// Replaces or adds an entry, keeping the ratio in (0, 1].
    pub fn set(&mut self, entry: FpsEntry) -> Result<(), ModelError> {
        if !(entry.ratio > 0.0 && entry.ratio <= 1.0) {
            return Err(domain(format!(
                "FPS ratio must lie in (0, 1], got {}",
                entry.ratio
            )));
        }
        match self
            .entries
            .iter_mut()
            .find(|e| e.mode == entry.mode && e.context == entry.context)
        {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
        Ok(())
    }

    /// Handles `fps.<mode>.<context> = <ratio>`; an override is a point
    /// value. Returns `Ok(false)` for other keys.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let Some(rest) = key.strip_prefix("fps.") else {
            return Ok(false);
        };
        let (mode, context) = rest
            .split_once('.')
            .ok_or_else(|| format!("expected fps.<mode>.<context>, got `{key}`"))?;
        let mode: InstrumentationMode = mode.parse().map_err(|e: ModelError| e.to_string())?;
        let context: ContextKind = context.parse().map_err(|e: ModelError| e.to_string())?;
        let ratio = parse_number(value)?;
        self.set(FpsEntry {
            mode,
            context,
            ratio,
            bound: Bound::Point,
        })
        .map_err(|e| e.to_string())?;
        Ok(true)
    }
}

pub fn fps_reference(
    table: &FpsReference,
    mode: InstrumentationMode,
    context: ContextKind,
) -> Result<f64, ModelError> {
    table.get(mode, context).map(|e| e.ratio)
}
