// SPDX-License-Identifier: Apache-2.0

//! Commit-scoped selective coverage instrumentation.
//!
//! The pipeline turns a unified diff into the set of changed functions,
//! resolves each one to its Itanium-mangled symbol, and emits a profile list
//! that enables coverage counters only for those symbols. Function-level hit
//! counts from an instrumented run are then joined back against that set to
//! produce a per-build coverage report. The [`model`] module carries the
//! fitted compile-time and runtime overhead models used to budget how much
//! code can be instrumented.

pub mod cli;
pub mod compdb;
pub mod coverage;
pub mod diff;
pub mod mangle;
pub mod model;
pub mod scan;
pub mod sic;

pub use compdb::{CompilationDatabase, CompileCommand, FrontendConfig};
pub use coverage::{BuildId, CoverageRecord, CoverageReport, ReportStore};
pub use diff::{ChangeKind, CommitDiff, FileChange, LineRange};
pub use mangle::{mangle, MangledName};
pub use model::{InstrumentationMode, OverheadModel};
pub use scan::{scan_file, FunctionSignature, FunctionSpan, TypeExpr};
pub use sic::{ProfileList, SelectiveInstrumentationContext};
