// SPDX-License-Identifier: Apache-2.0

//! The `sicov` command line.
//!
//! Exit codes: 0 success, 2 diff or scan parse failure, 3 pipeline
//! precondition failure (missing file, missing scan, bad input document),
//! 4 store conflict, 5 not found, 64 usage.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compdb::{extract_frontend_args, CompdbError, CompilationDatabase, FrontendConfig};
use crate::coverage::{
    build_report, ingest_records, BuildId, CoverageReport, ReportStore, StoreError,
};
use crate::diff::{parse_unified_diff_with_warnings, CommitDiff};
use crate::mangle::mangle_span;
use crate::model::{
    compute_ifr, estimate_commit_budget, estimate_per, estimate_tcpu, for_each_setting,
    BudgetLimit, ContextKind, FpsReference, InstrumentationMode, OverheadModel,
    BATCH_PER_COMMIT_IFR,
};
use crate::scan::{FunctionSpan, Scanner};
use crate::sic::{build_sic, emit_profile_list, SelectiveInstrumentationContext, SicError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_CONFLICT: i32 = 4;
pub const EXIT_NOT_FOUND: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

pub const DEFAULT_EXTENSIONS: [&str; 3] = [".cpp", ".cc", ".cxx"];
pub const DEFAULT_STORE: &str = ".sicov/reports";

#[derive(Debug, Parser)]
#[command(
    name = "sicov",
    version,
    about = "Commit-scoped selective coverage instrumentation"
)]
struct Cli {
    /// key=value config file (repo, compdb, extensions, store, vcs_command,
    /// model coefficients, fps.<mode>.<context>)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Stable key=value output
    #[arg(long, global = true)]
    porcelain: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// List function definitions found in source files
    Scan(ScanArgs),
    /// Build the SIC and profile list for a commit diff
    Extract(ExtractArgs),
    /// Evaluate the overhead models
    Estimate(EstimateArgs),
    /// Ingest or show coverage reports
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Repository root the diff paths are relative to
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Unified diff file, `-` for stdin (the default without --commit)
    #[arg(long, conflicts_with = "commit")]
    diff: Option<PathBuf>,
    /// Produce the diff by running the configured vcs_command
    #[arg(long)]
    commit: Option<String>,
    /// compile_commands.json; flags are recorded per file in the SIC document
    #[arg(long)]
    compdb: Option<PathBuf>,
    /// Output directory for <commit>.list and <commit>.sic.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// |F|, enables the IFR in the summary
    #[arg(long)]
    total_functions: Option<u64>,
    /// Source suffix, repeatable [default: .cpp .cc .cxx]
    #[arg(long = "ext")]
    extensions: Vec<String>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Instrumentation mode; both when omitted
    #[arg(long, value_parser = parse_mode)]
    mode: Option<InstrumentationMode>,
    /// t_CPU at this IFR
    #[arg(long)]
    ifr: Option<f64>,
    /// PER for this many changed files
    #[arg(long)]
    files: Option<u64>,
    /// t_CPU for a batch of this many commits, and the commit budget
    #[arg(long)]
    commits: Option<u64>,
    /// FPS ratio reference for a context kind
    #[arg(long, value_parser = parse_context)]
    fps: Option<ContextKind>,
    /// IFR one commit adds to a batch [default: 1.11e-5]
    #[arg(long, requires = "commits")]
    per_commit_ifr: Option<f64>,
    /// t_CPU ratio budget [default: 2.0]
    #[arg(long, requires = "commits", conflicts_with = "ifr_cap")]
    budget: Option<f64>,
    /// IFR ceiling used instead of a t_CPU budget
    #[arg(long, requires = "commits")]
    ifr_cap: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum ReportCmd {
    /// Join coverage records against a SIC and store the report
    Ingest(IngestArgs),
    /// Render a stored report
    Show(ShowArgs),
}

#[derive(Debug, Args)]
struct StoreArgs {
    /// Report store directory
    #[arg(long, env = "SICOV_STORE")]
    store: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// SIC document written by `extract`
    #[arg(long)]
    sic: PathBuf,
    /// Record document, `<symbol> <count>` per line
    #[arg(long)]
    records: PathBuf,
    /// Key the report is stored under
    #[arg(long)]
    build_id: String,
    /// Overwrite an existing report
    #[arg(long, conflicts_with = "merge")]
    force: bool,
    /// Sum into an existing report for the same build
    #[arg(long)]
    merge: bool,
    #[command(flatten)]
    store: StoreArgs,
}

#[derive(Debug, Args)]
struct ShowArgs {
    #[arg(long)]
    build_id: String,
    #[command(flatten)]
    store: StoreArgs,
}

fn parse_mode(s: &str) -> Result<InstrumentationMode, String> {
    s.parse()
        .map_err(|e: crate::model::ModelError| e.to_string())
}

fn parse_context(s: &str) -> Result<ContextKind, String> {
    s.parse()
        .map_err(|e: crate::model::ModelError| e.to_string())
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

/// Settings from `--config`.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub repo_root: Option<PathBuf>,
    pub compdb_path: Option<PathBuf>,
    pub extensions: Option<Vec<String>>,
    pub store_root: Option<PathBuf>,
    pub vcs_command: Option<String>,
    pub model: OverheadModel,
    pub fps: FpsReference,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, crate::model::ModelError> {
        let mut config = RunConfig::default();
        for_each_setting(text, |key, value| {
            match key {
                "repo" => config.repo_root = Some(value.into()),
                "compdb" => config.compdb_path = Some(value.into()),
                "store" => config.store_root = Some(value.into()),
                "vcs_command" => config.vcs_command = Some(value.into()),
                "extensions" => {
                    let exts: Vec<String> = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect();
                    if exts.is_empty() {
                        return Err("extensions must not be empty".into());
                    }
                    config.extensions = Some(exts);
                }
                _ => {
                    if !config.model.apply_setting(key, value)?
                        && !config.fps.apply_setting(key, value)?
                    {
                        return Err(format!("unknown key `{key}`"));
                    }
                }
            }
            Ok(())
        })?;
        config
            .model
            .validate()
            .map_err(|e| crate::model::ModelError::Config {
                line: 0,
                message: e.to_string(),
            })?;
        Ok(config)
    }
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    porcelain: bool,
}

impl Io<'_> {
    fn line(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", text.as_ref());
    }

    fn warn(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.err, "sicov: warning: {}", text.as_ref());
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io {
        stdin,
        out,
        err,
        porcelain: cli.porcelain,
    };
    match dispatch(cli, &mut io) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(io.err, "sicov: error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> Outcome {
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| fail(EXIT_PRECONDITION, format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)
                .map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    match cli.command {
        Cmd::Scan(args) => cmd_scan(args, io),
        Cmd::Extract(args) => cmd_extract(args, &config, io),
        Cmd::Estimate(args) => cmd_estimate(args, &config, io),
        Cmd::Report(ReportCmd::Ingest(args)) => cmd_ingest(args, &config, io),
        Cmd::Report(ReportCmd::Show(args)) => cmd_show(args, &config, io),
    }
}

fn read_source(path: &Path, display: &str) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| fail(EXIT_PRECONDITION, format!("cannot scan {display}: {e}")))
}

fn scan_one(bytes: &[u8], display: &str) -> Result<(Vec<FunctionSpan>, bool), Failure> {
    let lossy = std::str::from_utf8(bytes).is_err();
    Scanner::default()
        .scan_bytes(bytes, display)
        .map(|spans| (spans, lossy))
        .map_err(|e| fail(EXIT_PARSE, format!("{display}: {e}")))
}

fn cmd_scan(args: ScanArgs, io: &mut Io<'_>) -> Outcome {
    let results: Vec<Result<(Vec<FunctionSpan>, bool), Failure>> = args
        .files
        .par_iter()
        .map(|path| {
            let display = path.display().to_string();
            scan_one(&read_source(path, &display)?, &display)
        })
        .collect();
    for (path, result) in args.files.iter().zip(results) {
        let (spans, lossy) = result?;
        if lossy {
            io.warn(format!("{}: invalid UTF-8 replaced", path.display()));
        }
        for span in spans {
            let symbol = match mangle_span(&span) {
                Ok(name) => name.to_string(),
                Err(e) => format!("-({})", e.reason()),
            };
            if io.porcelain {
                io.line(format!(
                    "span={}:{} symbol={} signature={}",
                    span.file, span.span, symbol, span.signature
                ));
            } else {
                io.line(format!(
                    "{}:{}\t{}\t{}",
                    span.file, span.span, span.signature, symbol
                ));
            }
        }
    }
    Ok(())
}

/// The `<commit>.sic.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SicDocument {
    pub commit_id: String,
    pub files_changed: usize,
    pub target_count: usize,
    pub unmangleable_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_functions: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ifr: Option<f64>,
    /// Per-file frontend settings from the compilation database, recorded
    /// for traceability only.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub frontend: BTreeMap<String, FrontendConfig>,
    pub sic: SelectiveInstrumentationContext,
}

fn is_file_safe(id: &str) -> bool {
    BuildId::new(id).is_ok()
}

fn fetch_diff(
    args: &ExtractArgs,
    config: &RunConfig,
    repo: &Path,
    io: &mut Io<'_>,
) -> Result<String, Failure> {
    if let Some(commit) = &args.commit {
        let template = config.vcs_command.as_deref().ok_or_else(|| {
            fail(
                EXIT_USAGE,
                "--commit needs `vcs_command` in the config file",
            )
        })?;
        let words = shlex::split(template)
            .filter(|w| !w.is_empty())
            .ok_or_else(|| fail(EXIT_USAGE, "vcs_command does not split into words"))?;
        let words: Vec<String> = words
            .iter()
            .map(|w| {
                w.replace("{repo}", &repo.to_string_lossy())
                    .replace("{commit}", commit)
            })
            .collect();
        let output = Command::new(&words[0])
            .args(&words[1..])
            .current_dir(repo)
            .output()
            .map_err(|e| fail(EXIT_PRECONDITION, format!("running {}: {e}", words[0])))?;
        if !output.status.success() {
            return Err(fail(
                EXIT_PRECONDITION,
                format!(
                    "vcs_command failed ({}): {}",
                    output.status,
                    String::from_utf8_lossy(&output.stderr).trim()
                ),
            ));
        }
        return String::from_utf8(output.stdout)
            .map_err(|_| fail(EXIT_PARSE, "vcs_command output is not UTF-8"));
    }
    let mut text = String::new();
    match args.diff.as_deref() {
        Some(p) if p != Path::new("-") => {
            text = fs::read_to_string(p)
                .map_err(|e| fail(EXIT_PRECONDITION, format!("{}: {e}", p.display())))?;
        }
        _ => {
            io.stdin
                .read_to_string(&mut text)
                .map_err(|e| fail(EXIT_PRECONDITION, format!("reading stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn cmd_extract(args: ExtractArgs, config: &RunConfig, io: &mut Io<'_>) -> Outcome {
    let repo = args
        .repo
        .clone()
        .or_else(|| config.repo_root.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    if !repo.is_dir() {
        return Err(fail(
            EXIT_PRECONDITION,
            format!("repository {} is not a directory", repo.display()),
        ));
    }
    let extensions: Vec<String> = if !args.extensions.is_empty() {
        args.extensions.clone()
    } else {
        config
            .extensions
            .clone()
            .unwrap_or_else(|| DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect())
    };

    let text = fetch_diff(&args, config, &repo, io)?;
    let parsed = parse_unified_diff_with_warnings(&text)
        .map_err(|e| fail(EXIT_PARSE, format!("diff: {e}")))?;
    for w in &parsed.warnings {
        io.warn(format!("diff line {}: {}", w.line, w.message));
    }
    let diff: CommitDiff = parsed.diff.filter_source_files(&extensions);
    if !is_file_safe(&diff.commit_id) {
        return Err(fail(
            EXIT_PRECONDITION,
            format!("commit id `{}` cannot name an output file", diff.commit_id),
        ));
    }

    let mut frontend = BTreeMap::new();
    if let Some(path) = args.compdb.clone().or_else(|| config.compdb_path.clone()) {
        let db = CompilationDatabase::load(&path).map_err(|e| match e {
            CompdbError::NotFound { .. } => fail(EXIT_PRECONDITION, e.to_string()),
            other => fail(EXIT_PARSE, other.to_string()),
        })?;
        let repo_abs = fs::canonicalize(&repo).unwrap_or_else(|_| repo.clone());
        for change in diff.changes() {
            match db.lookup(&repo_abs.join(&change.path)) {
                Ok(cmd) => {
                    frontend.insert(change.path.clone(), extract_frontend_args(cmd));
                }
                Err(_) => io.warn(format!(
                    "{}: no compile command; scanning without one",
                    change.path
                )),
            }
        }
    }

    type Scanned = (String, Vec<FunctionSpan>, bool);
    let scanned: Vec<Result<Scanned, Failure>> = diff
        .changes()
        .par_iter()
        .map(|change| {
            let bytes = read_source(&repo.join(&change.path), &change.path)?;
            let (spans, lossy) = scan_one(&bytes, &change.path)?;
            Ok((change.path.clone(), spans, lossy))
        })
        .collect();
    let mut scans = BTreeMap::new();
    for result in scanned {
        let (path, spans, lossy) = result?;
        if lossy {
            io.warn(format!("{path}: invalid UTF-8 replaced"));
        }
        scans.insert(path, spans);
    }

    let mut sic = build_sic(&diff, &scans).map_err(|e| match e {
        SicError::MissingScan(_) => fail(EXIT_PRECONDITION, e.to_string()),
        other => fail(EXIT_PRECONDITION, other.to_string()),
    })?;
    let ifr = match args.total_functions {
        Some(total) => {
            sic = sic.with_total_functions(total);
            Some(
                compute_ifr(sic.len() as u64, total)
                    .map_err(|e| fail(EXIT_PRECONDITION, e.to_string()))?,
            )
        }
        None => None,
    };

    fs::create_dir_all(&args.out)
        .map_err(|e| fail(EXIT_PRECONDITION, format!("{}: {e}", args.out.display())))?;
    let list_path = args.out.join(format!("{}.list", sic.commit_id));
    let doc_path = args.out.join(format!("{}.sic.json", sic.commit_id));
    let doc = SicDocument {
        commit_id: sic.commit_id.clone(),
        files_changed: diff.changes().len(),
        target_count: sic.len(),
        unmangleable_count: sic.fallback_count(),
        total_functions: args.total_functions,
        ifr,
        frontend,
        sic,
    };
    write_file(&list_path, &emit_profile_list(&doc.sic))?;
    let mut json = serde_json::to_string_pretty(&doc).expect("SIC document serializes");
    json.push('\n');
    write_file(&doc_path, &json)?;

    let per = estimate_per(doc.files_changed as u64, &config.model);
    if io.porcelain {
        io.line(format!("commit={}", doc.commit_id));
        io.line(format!("files={}", doc.files_changed));
        io.line(format!("targets={}", doc.target_count));
        io.line(format!("unmangleable={}", doc.unmangleable_count));
        if let Some(ifr) = doc.ifr {
            io.line(format!("ifr={ifr}"));
        }
        io.line(format!("per={per}"));
        io.line(format!("list={}", list_path.display()));
        io.line(format!("sic={}", doc_path.display()));
    } else {
        io.line(format!(
            "commit {}: {} target(s) in {} file(s), {} by wildcard",
            doc.commit_id, doc.target_count, doc.files_changed, doc.unmangleable_count
        ));
        if let Some(ifr) = doc.ifr {
            io.line(format!("IFR {ifr:.3e}"));
        }
        io.line(format!("estimated PER {per:.4}"));
        io.line(format!("wrote {}", list_path.display()));
        io.line(format!("wrote {}", doc_path.display()));
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| fail(EXIT_PRECONDITION, format!("{}: {e}", path.display())))
}

fn cmd_estimate(args: EstimateArgs, config: &RunConfig, io: &mut Io<'_>) -> Outcome {
    let groups = [
        args.ifr.is_some(),
        args.files.is_some(),
        args.commits.is_some(),
        args.fps.is_some(),
    ];
    if groups.iter().filter(|g| **g).count() != 1 {
        return Err(fail(
            EXIT_USAGE,
            "give exactly one of --ifr, --files, --commits, --fps",
        ));
    }
    let model = &config.model;
    let modes: Vec<InstrumentationMode> = match args.mode {
        Some(m) => vec![m],
        None => InstrumentationMode::ALL.to_vec(),
    };
    let mut kv: Vec<(String, String)> = Vec::new();
    let mut human: Vec<String> = Vec::new();

    if let Some(ifr) = args.ifr {
        if !(0.0..=1.0).contains(&ifr) {
            return Err(fail(
                EXIT_USAGE,
                format!("--ifr must lie in [0, 1], got {ifr}"),
            ));
        }
        kv.push(("ifr".into(), ifr.to_string()));
        kv.push(("intercept".into(), model.intercept.to_string()));
        for mode in &modes {
            let t = estimate_tcpu(model, *mode, ifr);
            kv.push((format!("slope_{mode}"), model.slope(*mode).to_string()));
            kv.push((format!("t_cpu_{mode}"), t.to_string()));
            human.push(format!(
                "{}: t_CPU {t:.4} at IFR {ifr} (intercept {}, slope {})",
                mode_label(*mode),
                model.intercept,
                model.slope(*mode)
            ));
        }
    } else if let Some(files) = args.files {
        let per = estimate_per(files, model);
        kv.push(("files".into(), files.to_string()));
        kv.push((
            "per_file_coefficient".into(),
            model.per_file_coefficient.to_string(),
        ));
        kv.push(("per".into(), per.to_string()));
        human.push(format!(
            "PER {per:.4} for {files} file(s) (coefficient {})",
            model.per_file_coefficient
        ));
    } else if let Some(commits) = args.commits {
        let per_commit = args.per_commit_ifr.unwrap_or(BATCH_PER_COMMIT_IFR);
        let limit = match (args.ifr_cap, args.budget) {
            (Some(cap), _) => BudgetLimit::IfrCap(cap),
            (None, budget) => BudgetLimit::TcpuRatio(budget.unwrap_or(2.0)),
        };
        let batch_ifr = (commits as f64 * per_commit).min(1.0);
        kv.push(("commits".into(), commits.to_string()));
        kv.push(("per_commit_ifr".into(), per_commit.to_string()));
        kv.push(("batch_ifr".into(), batch_ifr.to_string()));
        match limit {
            BudgetLimit::IfrCap(c) => kv.push(("ifr_cap".into(), c.to_string())),
            BudgetLimit::TcpuRatio(b) => kv.push(("budget".into(), b.to_string())),
        }
        for mode in &modes {
            let t = estimate_tcpu(model, *mode, batch_ifr);
            let max = estimate_commit_budget(model, *mode, per_commit, limit)
                .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            kv.push((format!("t_cpu_{mode}"), t.to_string()));
            kv.push((format!("commit_budget_{mode}"), max.to_string()));
            kv.push((
                format!("within_budget_{mode}"),
                (commits <= max).to_string(),
            ));
            human.push(format!(
                "{}: {commits} commit(s) -> IFR {batch_ifr:.3e}, t_CPU {t:.4}; budget allows {max} commit(s)",
                mode_label(*mode)
            ));
        }
    } else if let Some(context) = args.fps {
        for mode in &modes {
            let entry = config
                .fps
                .get(*mode, context)
                .map_err(|e| fail(EXIT_NOT_FOUND, e.to_string()))?;
            kv.push((format!("fps_{mode}"), entry.ratio.to_string()));
            let bound = match entry.bound {
                crate::model::Bound::Point => "point",
                crate::model::Bound::LowerBound => "lower_bound",
                crate::model::Bound::Approximate => "approximate",
            };
            kv.push((format!("fps_{mode}_bound"), bound.into()));
            let prefix = match entry.bound {
                crate::model::Bound::Point => "",
                crate::model::Bound::LowerBound => "at least ",
                crate::model::Bound::Approximate => "about ",
            };
            human.push(format!(
                "{}: FPS ratio {prefix}{} ({context})",
                mode_label(*mode),
                entry.ratio
            ));
        }
    }

    if io.porcelain {
        for (k, v) in kv {
            io.line(format!("{k}={v}"));
        }
    } else {
        for line in human {
            io.line(line);
        }
    }
    Ok(())
}

fn mode_label(mode: InstrumentationMode) -> &'static str {
    match mode {
        InstrumentationMode::Fe => "FE",
        InstrumentationMode::Ir => "IR",
    }
}

fn store_for(args: &StoreArgs, config: &RunConfig) -> ReportStore {
    let root = args
        .store
        .clone()
        .or_else(|| config.store_root.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE));
    ReportStore::new(root)
}

fn build_id(text: &str) -> Result<BuildId, Failure> {
    BuildId::new(text).map_err(|e| fail(EXIT_USAGE, e.to_string()))
}

fn store_failure(e: StoreError) -> Failure {
    let code = match &e {
        StoreError::Conflict { .. } | StoreError::Incompatible { .. } => EXIT_CONFLICT,
        StoreError::NotFound { .. } => EXIT_NOT_FOUND,
        StoreError::Io { .. } | StoreError::Format { .. } => EXIT_PRECONDITION,
    };
    fail(code, e.to_string())
}

fn cmd_ingest(args: IngestArgs, config: &RunConfig, io: &mut Io<'_>) -> Outcome {
    let id = build_id(&args.build_id)?;
    let doc_text = fs::read_to_string(&args.sic)
        .map_err(|e| fail(EXIT_PRECONDITION, format!("{}: {e}", args.sic.display())))?;
    let doc: SicDocument = serde_json::from_str(&doc_text)
        .map_err(|e| fail(EXIT_PRECONDITION, format!("{}: {e}", args.sic.display())))?;
    let records_text = fs::read_to_string(&args.records).map_err(|e| {
        fail(
            EXIT_PRECONDITION,
            format!("{}: {e}", args.records.display()),
        )
    })?;
    let records = ingest_records(&records_text)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", args.records.display())))?;
    let report = build_report(&doc.sic, &records, id);
    let store = store_for(&args.store, config);
    let report = if args.merge {
        store.store_merged(&report).map_err(store_failure)?
    } else {
        store.store(&report, args.force).map_err(store_failure)?;
        report
    };
    render_report(&report, io);
    Ok(())
}

fn cmd_show(args: ShowArgs, config: &RunConfig, io: &mut Io<'_>) -> Outcome {
    let id = build_id(&args.build_id)?;
    let report = store_for(&args.store, config)
        .load(&id)
        .map_err(store_failure)?;
    render_report(&report, io);
    Ok(())
}

fn render_report(report: &CoverageReport, io: &mut Io<'_>) {
    if io.porcelain {
        io.line(format!("build_id={}", report.build_id));
        io.line(format!("commit={}", report.commit_id));
        io.line(format!("targets={}", report.per_target.len()));
        io.line(format!("covered={}", report.covered_targets()));
        io.line(format!("commit_coverage={}", report.commit_coverage));
        io.line(format!("unmatched_symbols={}", report.unmatched_symbols));
        for t in &report.per_target {
            io.line(format!(
                "target={} matched={} hits={} covered={}",
                t.pattern, t.matched_symbols, t.total_hits, t.covered
            ));
        }
        return;
    }
    let mut text = format!(
        "build {} (commit {}): {}/{} target(s) covered, commit coverage {:.1}%\n",
        report.build_id,
        report.commit_id,
        report.covered_targets(),
        report.per_target.len(),
        report.commit_coverage * 100.0
    );
    for t in &report.per_target {
        let _ = writeln!(
            text,
            "  [{}] {}  hits={}{}",
            if t.covered { "x" } else { " " },
            t.pattern,
            t.total_hits,
            if t.fallback {
                format!(" (wildcard, {} symbol(s))", t.matched_symbols)
            } else {
                String::new()
            }
        );
    }
    if report.unmatched_symbols > 0 {
        let _ = writeln!(
            text,
            "  {} record symbol(s) outside the SIC",
            report.unmatched_symbols
        );
    }
    let _ = write!(io.out, "{text}");
}
