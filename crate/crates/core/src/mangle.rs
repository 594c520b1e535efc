// SPDX-License-Identifier: Apache-2.0

//! Itanium C++ ABI name mangling for the scanner's signature subset, and
//! name-only matching of changed functions to scanned signatures.
//!
//! Substitution candidates follow the ABI: every nested-name prefix, every
//! named class/enum type, and every pointer, reference or cv-qualified type
//! is recorded in order of first appearance and back-referenced as
//! `S_`, `S0_`, `S1_`, ... on repeat. Unqualified builtins are never
//! candidates. The function's own name is not a candidate.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scan::{
    Builtin, FunctionSignature, FunctionSpan, TypeExpr, UnqualifiedName, ANONYMOUS_NAMESPACE,
};

/// A linker-level symbol: either `_Z`-prefixed or a plain C name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MangledName(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid symbol `{0}`")]
pub struct InvalidSymbol(pub String);

impl MangledName {
    /// Accepts any non-empty symbol without whitespace or `*`.
    pub fn new(text: impl Into<String>) -> Result<Self, InvalidSymbol> {
        let text = text.into();
        if text.is_empty() || text.contains(|c: char| c.is_whitespace() || c == '*') {
            return Err(InvalidSymbol(text));
        }
        Ok(MangledName(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_itanium(&self) -> bool {
        self.0.starts_with("_Z")
    }
}

impl TryFrom<String> for MangledName {
    type Error = InvalidSymbol;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        MangledName::new(value)
    }
}

impl From<MangledName> for String {
    fn from(value: MangledName) -> Self {
        value.0
    }
}

impl fmt::Display for MangledName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MangleError {
    #[error("unmangleable: {0}")]
    Unmangleable(String),
}

impl MangleError {
    pub fn reason(&self) -> &str {
        match self {
            MangleError::Unmangleable(reason) => reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mangleability {
    Mangleable,
    NotMangleable { reason: String },
}

impl Mangleability {
    pub fn is_mangleable(&self) -> bool {
        matches!(self, Mangleability::Mangleable)
    }
}

/// Whether `span` falls inside the subset [`mangle`] encodes exactly.
pub fn is_mangleable(span: &FunctionSpan) -> Mangleability {
    if span.is_template {
        return Mangleability::NotMangleable {
            reason: "template".into(),
        };
    }
    if let Some(reason) = span.unsupported_reason() {
        return Mangleability::NotMangleable { reason };
    }
    match check_signature(&span.signature) {
        Ok(()) => Mangleability::Mangleable,
        Err(e) => Mangleability::NotMangleable {
            reason: e.reason().to_string(),
        },
    }
}

/// Mangles a scanned span, refusing templates and unsupported signatures.
pub fn mangle_span(span: &FunctionSpan) -> Result<MangledName, MangleError> {
    match is_mangleable(span) {
        Mangleability::Mangleable => mangle(&span.signature),
        Mangleability::NotMangleable { reason } => Err(MangleError::Unmangleable(reason)),
    }
}

fn unmangleable(reason: impl Into<String>) -> MangleError {
    MangleError::Unmangleable(reason.into())
}

const PLATFORM_TYPEDEFS: [&str; 14] = [
    "size_t",
    "ssize_t",
    "ptrdiff_t",
    "intptr_t",
    "uintptr_t",
    "intmax_t",
    "uintmax_t",
    "off_t",
    "time_t",
    "wint_t",
    "max_align_t",
    "nullptr_t",
    "FILE",
    "va_list",
];

/// Typedefs whose underlying type depends on the platform headers.
pub(crate) fn is_platform_typedef(name: &str) -> bool {
    if PLATFORM_TYPEDEFS.contains(&name) {
        return true;
    }
    let Some(core) = name.strip_suffix("_t") else {
        return false;
    };
    let core = core.strip_prefix('u').unwrap_or(core);
    let Some(rest) = core.strip_prefix("int") else {
        return false;
    };
    let rest = rest
        .strip_prefix("_least")
        .or_else(|| rest.strip_prefix("_fast"))
        .unwrap_or(rest);
    matches!(rest, "8" | "16" | "32" | "64")
}

fn check_type(ty: &TypeExpr) -> Result<(), MangleError> {
    if let Some(what) = ty.unsupported() {
        return Err(unmangleable(what));
    }
    let mut problem = None;
    ty.visit_named(&mut |path| {
        if problem.is_some() {
            return;
        }
        if path.is_empty() || path.iter().any(String::is_empty) {
            problem = Some("empty type name".to_string());
        } else if path[0] == "std" {
            problem = Some(format!("standard library type `{}`", path.join("::")));
        } else if path.len() == 1 && is_platform_typedef(&path[0]) {
            problem = Some(format!("platform typedef `{}`", path[0]));
        }
    });
    match problem {
        Some(reason) => Err(unmangleable(reason)),
        None => Ok(()),
    }
}

fn check_signature(sig: &FunctionSignature) -> Result<(), MangleError> {
    let name = &sig.qualified_name;
    if !name.is_valid() {
        return Err(unmangleable("empty name component"));
    }
    if is_plain_symbol(sig) {
        return Ok(());
    }
    match &name.name {
        UnqualifiedName::Constructor(_) => return Err(unmangleable("constructor")),
        UnqualifiedName::Destructor(_) => return Err(unmangleable("destructor")),
        UnqualifiedName::Conversion(_) => return Err(unmangleable("conversion operator")),
        UnqualifiedName::Operator(op) => {
            operator_code(op, sig)?;
        }
        UnqualifiedName::Identifier(_) => {}
    }
    if sig.is_internal_linkage && name.scope.iter().any(|c| c == ANONYMOUS_NAMESPACE) {
        // GCC and Clang encode this case differently.
        return Err(unmangleable("static function in an anonymous namespace"));
    }
    if sig.is_const_member && name.scope.is_empty() {
        return Err(unmangleable("const qualifier on a non-member function"));
    }
    for p in &sig.parameters {
        check_type(p)?;
    }
    if sig.parameters.iter().any(|p| {
        matches!(
            p.without_top_level_const(),
            TypeExpr::Builtin(Builtin::Void)
        )
    }) {
        return Err(unmangleable("void parameter"));
    }
    Ok(())
}

fn is_plain_symbol(sig: &FunctionSignature) -> bool {
    sig.is_extern_c
        || (sig.qualified_name.scope.is_empty()
            && sig.qualified_name.name == UnqualifiedName::Identifier("main".into()))
}

fn operator_code(op: &str, sig: &FunctionSignature) -> Result<&'static str, MangleError> {
    // Unary and binary forms of these share a spelling; the parameter count
    // only decides between them when membership is evident.
    let arity = || -> Result<bool, MangleError> {
        match (sig.parameters.len(), sig.is_const_member) {
            (0, _) => Ok(true),
            (1, true) => Ok(false),
            (2, _) => Ok(false),
            _ => Err(unmangleable(format!("operator{op} arity is ambiguous"))),
        }
    };
    let code = match op {
        "+" => {
            if arity()? {
                "ps"
            } else {
                "pl"
            }
        }
        "-" => {
            if arity()? {
                "ng"
            } else {
                "mi"
            }
        }
        "*" => {
            if arity()? {
                "de"
            } else {
                "ml"
            }
        }
        "&" => {
            if arity()? {
                "ad"
            } else {
                "an"
            }
        }
        "/" => "dv",
        "%" => "rm",
        "^" => "eo",
        "|" => "or",
        "~" => "co",
        "!" => "nt",
        "=" => "aS",
        "<" => "lt",
        ">" => "gt",
        "+=" => "pL",
        "-=" => "mI",
        "*=" => "mL",
        "/=" => "dV",
        "%=" => "rM",
        "^=" => "eO",
        "&=" => "aN",
        "|=" => "oR",
        "<<" => "ls",
        ">>" => "rs",
        "<<=" => "lS",
        ">>=" => "rS",
        "==" => "eq",
        "!=" => "ne",
        "<=" => "le",
        ">=" => "ge",
        "&&" => "aa",
        "||" => "oo",
        "++" => "pp",
        "--" => "mm",
        "," => "cm",
        "->*" => "pm",
        "->" => "pt",
        "()" => "cl",
        "[]" => "ix",
        other => return Err(unmangleable(format!("operator{other}"))),
    };
    Ok(code)
}

fn builtin_code(b: Builtin) -> &'static str {
    match b {
        Builtin::Void => "v",
        Builtin::Bool => "b",
        Builtin::Char => "c",
        Builtin::SignedChar => "a",
        Builtin::UnsignedChar => "h",
        Builtin::WChar => "w",
        Builtin::Short => "s",
        Builtin::UnsignedShort => "t",
        Builtin::Int => "i",
        Builtin::UnsignedInt => "j",
        Builtin::Long => "l",
        Builtin::UnsignedLong => "m",
        Builtin::LongLong => "x",
        Builtin::UnsignedLongLong => "y",
        Builtin::Float => "f",
        Builtin::Double => "d",
    }
}

/// Itanium encoding of `sig`; `main` and `extern "C"` functions keep their
/// plain name.
pub fn mangle(sig: &FunctionSignature) -> Result<MangledName, MangleError> {
    check_signature(sig)?;
    if is_plain_symbol(sig) {
        return MangledName::new(sig.qualified_name.terminal())
            .map_err(|e| unmangleable(e.to_string()));
    }
    let mut m = Mangler::default();
    m.out.push_str("_Z");
    m.function_name(sig)?;
    if sig.parameters.is_empty() {
        m.out.push('v');
    } else {
        for p in &sig.parameters {
            m.ty(p.without_top_level_const());
        }
    }
    MangledName::new(m.out).map_err(|e| unmangleable(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Candidate {
    Path(Vec<String>),
    Type(TypeExpr),
}

#[derive(Default)]
struct Mangler {
    out: String,
    candidates: Vec<Candidate>,
}

fn source_name(component: &str) -> String {
    if component == ANONYMOUS_NAMESPACE {
        return "12_GLOBAL__N_1".to_string();
    }
    format!("{}{}", component.len(), component)
}

fn substitution(index: usize) -> String {
    if index == 0 {
        return "S_".to_string();
    }
    let mut n = index - 1;
    let mut digits = Vec::new();
    loop {
        let d = (n % 36) as u8;
        digits.push(if d < 10 { b'0' + d } else { b'A' + d - 10 });
        n /= 36;
        if n == 0 {
            break;
        }
    }
    digits.reverse();
    format!("S{}_", String::from_utf8(digits).expect("ascii"))
}

impl Mangler {
    fn lookup(&self, candidate: &Candidate) -> Option<usize> {
        self.candidates.iter().position(|c| c == candidate)
    }

    fn function_name(&mut self, sig: &FunctionSignature) -> Result<(), MangleError> {
        let name = &sig.qualified_name;
        let terminal = match &name.name {
            UnqualifiedName::Identifier(id) => source_name(id),
            UnqualifiedName::Operator(op) => operator_code(op, sig)?.to_string(),
            other => return Err(unmangleable(format!("`{other}`"))),
        };
        let terminal = if sig.is_internal_linkage {
            format!("L{terminal}")
        } else {
            terminal
        };
        let std_only = name.scope.len() == 1 && name.scope[0] == "std";
        if name.scope.is_empty() {
            self.out.push_str(&terminal);
        } else if std_only && !sig.is_const_member {
            self.out.push_str("St");
            self.out.push_str(&terminal);
        } else {
            self.out.push('N');
            if sig.is_const_member {
                self.out.push('K');
            }
            self.prefix(&name.scope);
            self.out.push_str(&terminal);
            self.out.push('E');
        }
        Ok(())
    }

    /// Emits the nested-name components of `path`, reusing the longest
    /// already-seen prefix and recording each new one.
    fn prefix(&mut self, path: &[String]) {
        let mut start = 0;
        for len in (1..=path.len()).rev() {
            if let Some(idx) = self.lookup(&Candidate::Path(path[..len].to_vec())) {
                self.out.push_str(&substitution(idx));
                start = len;
                break;
            }
        }
        for i in start..path.len() {
            if i == 0 && path[0] == "std" {
                self.out.push_str("St");
                continue;
            }
            self.out.push_str(&source_name(&path[i]));
            self.candidates.push(Candidate::Path(path[..=i].to_vec()));
        }
    }

    fn ty(&mut self, ty: &TypeExpr) {
        match ty {
            TypeExpr::Builtin(b) => self.out.push_str(builtin_code(*b)),
            TypeExpr::Named(path) => {
                let key = Candidate::Path(path.clone());
                if let Some(idx) = self.lookup(&key) {
                    self.out.push_str(&substitution(idx));
                } else if path.len() == 1 || (path.len() == 2 && path[0] == "std") {
                    self.prefix(path);
                } else {
                    self.out.push('N');
                    self.prefix(path);
                    self.out.push('E');
                }
            }
            TypeExpr::Pointer(inner)
            | TypeExpr::LValueRef(inner)
            | TypeExpr::RValueRef(inner)
            | TypeExpr::Const(inner) => {
                let key = Candidate::Type(ty.clone());
                if let Some(idx) = self.lookup(&key) {
                    self.out.push_str(&substitution(idx));
                    return;
                }
                self.out.push(match ty {
                    TypeExpr::Pointer(_) => 'P',
                    TypeExpr::LValueRef(_) => 'R',
                    TypeExpr::RValueRef(_) => 'O',
                    _ => 'K',
                });
                self.ty(inner);
                self.candidates.push(key);
            }
            TypeExpr::Unsupported(_) => unreachable!("rejected by check_signature"),
        }
    }
}

/// Every signature whose terminal name is one of `target_names`. All
/// overloads of a matched name are returned.
pub fn match_targets_by_name<S: AsRef<str>>(
    target_names: &[S],
    signatures: &[FunctionSignature],
) -> Vec<FunctionSignature> {
    let names: HashSet<&str> = target_names.iter().map(AsRef::as_ref).collect();
    signatures
        .iter()
        .filter(|s| names.contains(s.terminal_name().as_str()))
        .cloned()
        .collect()
}
