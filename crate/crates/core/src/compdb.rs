// SPDX-License-Identifier: Apache-2.0

//! `compile_commands.json` loading and frontend flag recovery.

use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileCommand {
    pub file: PathBuf,
    pub directory: PathBuf,
    pub arguments: Vec<String>,
}

impl CompileCommand {
    /// `file` resolved against `directory` and lexically normalized.
    pub fn absolute_file(&self) -> PathBuf {
        normalize(&self.directory.join(&self.file))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontendConfig {
    pub include_dirs: Vec<String>,
    pub defines: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_level: Option<String>,
}

impl FrontendConfig {
    pub fn is_empty(&self) -> bool {
        self.include_dirs.is_empty() && self.defines.is_empty() && self.language_level.is_none()
    }
}

#[derive(Debug, Error)]
pub enum CompdbError {
    #[error("compilation database not found: {}", path.display())]
    NotFound { path: PathBuf },
    #[error("reading {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("compilation database is not a JSON array: {0}")]
    NotAnArray(String),
    #[error("entry {index}: {reason}")]
    MalformedEntry { index: usize, reason: String },
    #[error("no compile command for {}", path.display())]
    NoEntry { path: PathBuf },
}

#[derive(Deserialize)]
struct RawEntry {
    directory: PathBuf,
    file: PathBuf,
    #[serde(default)]
    arguments: Option<Vec<String>>,
    #[serde(default)]
    command: Option<String>,
}

/// An ordered compilation database.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompilationDatabase {
    entries: Vec<CompileCommand>,
}

impl CompilationDatabase {
    pub fn new(entries: Vec<CompileCommand>) -> Self {
        CompilationDatabase { entries }
    }

    pub fn load(path: &Path) -> Result<Self, CompdbError> {
        load_compdb(path).map(Self::new)
    }

    pub fn parse(text: &str) -> Result<Self, CompdbError> {
        parse_compdb(text).map(Self::new)
    }

    pub fn entries(&self) -> &[CompileCommand] {
        &self.entries
    }

    pub fn lookup(&self, file: &Path) -> Result<&CompileCommand, CompdbError> {
        lookup(&self.entries, file)
    }
}

pub fn load_compdb(path: &Path) -> Result<Vec<CompileCommand>, CompdbError> {
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            CompdbError::NotFound {
                path: path.to_path_buf(),
            }
        } else {
            CompdbError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    parse_compdb(&text)
}

pub fn parse_compdb(text: &str) -> Result<Vec<CompileCommand>, CompdbError> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CompdbError::NotAnArray(e.to_string()))?;
    let serde_json::Value::Array(items) = doc else {
        return Err(CompdbError::NotAnArray(
            "top-level value is not an array".into(),
        ));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(index, item)| entry(index, item))
        .collect()
}

fn entry(index: usize, item: serde_json::Value) -> Result<CompileCommand, CompdbError> {
    let malformed = |reason: String| CompdbError::MalformedEntry { index, reason };
    let raw: RawEntry = serde_json::from_value(item).map_err(|e| malformed(e.to_string()))?;
    let arguments = match (raw.arguments, raw.command) {
        (Some(args), _) => args,
        (None, Some(command)) => shlex::split(&command)
            .ok_or_else(|| malformed("unbalanced quotes in `command`".into()))?,
        (None, None) => return Err(malformed("neither `arguments` nor `command`".into())),
    };
    if arguments.is_empty() {
        return Err(malformed("empty argument list".into()));
    }
    if raw.file.as_os_str().is_empty() {
        return Err(malformed("empty `file`".into()));
    }
    Ok(CompileCommand {
        file: raw.file,
        directory: raw.directory,
        arguments,
    })
}

/// Lexical normalization: drops `.`, folds `..` onto its parent. Symlinks
/// are not consulted.
pub fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for component in path.components() {
        match component {
            Component::CurDir => {}
            Component::ParentDir => {
                let popped =
                    matches!(out.components().next_back(), Some(Component::Normal(_))) && out.pop();
                if !popped && !out.has_root() {
                    out.push("..");
                }
            }
            other => out.push(other),
        }
    }
    out
}

/// First entry whose resolved file equals `file`. A relative query is
/// resolved against each entry's own directory.
pub fn lookup<'a>(
    db: &'a [CompileCommand],
    file: &Path,
) -> Result<&'a CompileCommand, CompdbError> {
    let absolute_query = file.is_absolute().then(|| normalize(file));
    db.iter()
        .find(|cmd| {
            let query = match &absolute_query {
                Some(q) => q.clone(),
                None => normalize(&cmd.directory.join(file)),
            };
            cmd.absolute_file() == query
        })
        .ok_or_else(|| CompdbError::NoEntry {
            path: file.to_path_buf(),
        })
}

pub fn extract_frontend_args(cmd: &CompileCommand) -> FrontendConfig {
    let mut config = FrontendConfig::default();
    let mut args = cmd.arguments.iter().skip(1);
    while let Some(arg) = args.next() {
        if arg == "-I" || arg == "-D" {
            let Some(value) = args.next() else { break };
            if arg == "-I" {
                config.include_dirs.push(value.clone());
            } else {
                config.defines.push(value.clone());
            }
        } else if let Some(dir) = arg.strip_prefix("-I") {
            config.include_dirs.push(dir.to_string());
        } else if let Some(define) = arg.strip_prefix("-D") {
            config.defines.push(define.to_string());
        } else if let Some(level) = arg
            .strip_prefix("-std=")
            .or_else(|| arg.strip_prefix("/std:"))
        {
            config.language_level = Some(level.to_string());
        }
    }
    config
}
