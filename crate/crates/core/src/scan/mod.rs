// SPDX-License-Identifier: Apache-2.0

//! Lightweight function-definition scanner.
//!
//! Finds every function definition with a body in a C++ source file and
//! reports its qualified name, parameter types and line span without running
//! a preprocessor or compiler. The walk is a brace-depth state machine over
//! the token stream from [`strip_noncode`]: at namespace, class and linkage
//! scope the tokens since the last `;`/`{`/`}` are classified when a `{`
//! arrives; inside function bodies only braces are counted, so lambdas and
//! local classes fold into the enclosing function.
//!
//! Unqualified parameter type names are resolved against classes, enums,
//! namespaces and aliases declared in the same file, and against the
//! function's own enclosing scopes.

mod decl;
pub mod lexer;
mod types;

use std::borrow::Cow;
use std::collections::HashMap;

use thiserror::Error;

use crate::diff::LineRange;
use crate::mangle::is_platform_typedef;
pub use lexer::{strip_noncode, Directive, Token, TokenKind, TokenStream};
pub use types::{
    Builtin, FunctionSignature, FunctionSpan, QualifiedName, TypeExpr, UnqualifiedName,
    ANONYMOUS_NAMESPACE,
};

use decl::{classify, parse_declaration, FunctionDecl, Head};

pub const DEFAULT_MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("line {line}: unterminated block comment")]
    UnterminatedComment { line: u32 },
    #[error("line {line}: unterminated raw string literal")]
    UnterminatedRawString { line: u32 },
    #[error("unbalanced braces: `{{` opened on line {line} is never closed")]
    UnbalancedBraces { line: u32 },
    #[error("line {line}: `}}` without a matching `{{`")]
    UnexpectedClose { line: u32 },
    #[error("line {line}: brace nesting exceeds the limit of {limit}")]
    DepthExceeded { line: u32, limit: usize },
}

impl ScanError {
    pub fn line(&self) -> u32 {
        match self {
            ScanError::UnterminatedComment { line }
            | ScanError::UnterminatedRawString { line }
            | ScanError::UnbalancedBraces { line }
            | ScanError::UnexpectedClose { line }
            | ScanError::DepthExceeded { line, .. } => *line,
        }
    }
}

/// Scans `text` with the default depth limit.
pub fn scan_file(text: &str, path: &str) -> Result<Vec<FunctionSpan>, ScanError> {
    Scanner::default().scan(text, path)
}

#[derive(Debug, Clone, Copy)]
pub struct Scanner {
    max_depth: usize,
}

impl Default for Scanner {
    fn default() -> Self {
        Scanner {
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl Scanner {
    pub fn with_max_depth(max_depth: usize) -> Self {
        Scanner { max_depth }
    }

    /// Decodes lossily; invalid UTF-8 is replaced and logged.
    pub fn scan_bytes(&self, bytes: &[u8], path: &str) -> Result<Vec<FunctionSpan>, ScanError> {
        let text = String::from_utf8_lossy(bytes);
        if let Cow::Owned(_) = text {
            log::warn!("{path}: invalid UTF-8 replaced before scanning");
        }
        self.scan(&text, path)
    }

    pub fn scan(&self, text: &str, path: &str) -> Result<Vec<FunctionSpan>, ScanError> {
        let stream = strip_noncode(text)?;
        let mut walker = Walker::new(self.max_depth);
        walker.walk(&stream.tokens)?;
        Ok(walker.finish(path))
    }
}

#[derive(Debug, Clone)]
enum Frame {
    Namespace(Vec<String>),
    Linkage {
        c: bool,
    },
    Class {
        components: Vec<String>,
        is_template: bool,
    },
    Function(usize),
    Block,
}

#[derive(Debug, Clone)]
struct Open {
    frame: Frame,
    line: u32,
}

#[derive(Debug, Clone)]
enum Entity {
    Namespace,
    Class,
    Alias {
        target: TypeExpr,
        scope: Vec<String>,
    },
}

struct Draft {
    decl: FunctionDecl,
    /// Lexical scope components, each flagged true for classes.
    lexical: Vec<(String, bool)>,
    in_class_template: bool,
    in_extern_c: bool,
    directly_in_class: bool,
    end: Option<u32>,
}

struct Walker {
    max_depth: usize,
    stack: Vec<Open>,
    pending: Vec<Token>,
    pending_parens: usize,
    entities: HashMap<Vec<String>, Entity>,
    drafts: Vec<Draft>,
    using_directive: bool,
}

const ACCESS_LABELS: [&str; 6] = [
    "public",
    "private",
    "protected",
    "signals",
    "slots",
    "Q_SLOTS",
];

impl Walker {
    fn new(max_depth: usize) -> Self {
        Walker {
            max_depth,
            stack: Vec::new(),
            pending: Vec::new(),
            pending_parens: 0,
            entities: HashMap::new(),
            drafts: Vec::new(),
            using_directive: false,
        }
    }

    fn in_body(&self) -> bool {
        matches!(
            self.stack.last().map(|o| &o.frame),
            Some(Frame::Function(_) | Frame::Block)
        )
    }

    fn lexical_scope(&self) -> Vec<(String, bool)> {
        let mut scope = Vec::new();
        for open in &self.stack {
            match &open.frame {
                Frame::Namespace(components) if components.is_empty() => {
                    scope.push((ANONYMOUS_NAMESPACE.to_string(), false))
                }
                Frame::Namespace(components) => {
                    scope.extend(components.iter().map(|c| (c.clone(), false)))
                }
                Frame::Class { components, .. } => {
                    scope.extend(components.iter().map(|c| (c.clone(), true)))
                }
                _ => {}
            }
        }
        scope
    }

    fn scope_path(&self) -> Vec<String> {
        self.lexical_scope().into_iter().map(|(c, _)| c).collect()
    }

    fn push(&mut self, frame: Frame, line: u32) -> Result<(), ScanError> {
        if self.stack.len() >= self.max_depth {
            return Err(ScanError::DepthExceeded {
                line,
                limit: self.max_depth,
            });
        }
        self.stack.push(Open { frame, line });
        Ok(())
    }

    fn walk(&mut self, tokens: &[Token]) -> Result<(), ScanError> {
        let mut i = 0;
        while i < tokens.len() {
            let tok = &tokens[i];
            if self.in_body() {
                if tok.is("{") {
                    self.push(Frame::Block, tok.line)?;
                } else if tok.is("}") {
                    self.close(tok.line)?;
                }
                i += 1;
                continue;
            }
            match tok.text.as_str() {
                "{" if self.pending_parens > 0 => {
                    i = self.absorb_group(tokens, i)?;
                    continue;
                }
                "{" => {
                    let enclosing_class = match self.stack.last().map(|o| &o.frame) {
                        Some(Frame::Class { components, .. }) => components.last().cloned(),
                        _ => None,
                    };
                    match classify(&self.pending, enclosing_class.as_deref()) {
                        Head::BraceInit => {
                            i = self.absorb_group(tokens, i)?;
                            continue;
                        }
                        Head::Namespace(components) => {
                            let mut path = self.scope_path();
                            for c in &components {
                                path.push(c.clone());
                                self.entities.insert(path.clone(), Entity::Namespace);
                            }
                            self.push(Frame::Namespace(components), tok.line)?;
                        }
                        Head::Linkage { c } => self.push(Frame::Linkage { c }, tok.line)?,
                        Head::Class(head) => {
                            if !head.components.is_empty() {
                                let mut path = self.scope_path();
                                path.extend(head.components.iter().cloned());
                                self.entities.insert(path, Entity::Class);
                            }
                            if head.is_enum {
                                self.push(Frame::Block, tok.line)?;
                            } else {
                                self.push(
                                    Frame::Class {
                                        components: head.components,
                                        is_template: head.is_template,
                                    },
                                    tok.line,
                                )?;
                            }
                        }
                        Head::Function(decl) => {
                            let draft = self.draft(decl);
                            self.drafts.push(draft);
                            self.push(Frame::Function(self.drafts.len() - 1), tok.line)?;
                        }
                        Head::Other => self.push(Frame::Block, tok.line)?,
                    }
                    self.clear_pending();
                }
                "}" => {
                    self.close(tok.line)?;
                    self.clear_pending();
                }
                ";" => {
                    self.declaration();
                    self.clear_pending();
                }
                ":" if self.pending.len() <= 2
                    && self
                        .pending
                        .first()
                        .is_some_and(|t| ACCESS_LABELS.contains(&t.text.as_str())) =>
                {
                    self.clear_pending();
                }
                _ => {
                    if tok.is("(") {
                        self.pending_parens += 1;
                    } else if tok.is(")") {
                        self.pending_parens = self.pending_parens.saturating_sub(1);
                    }
                    self.pending.push(tok.clone());
                }
            }
            i += 1;
        }
        if let Some(open) = self.stack.last() {
            return Err(ScanError::UnbalancedBraces { line: open.line });
        }
        Ok(())
    }

    fn clear_pending(&mut self) {
        self.pending.clear();
        self.pending_parens = 0;
    }

    /// Appends the brace group opened at `open` to the pending declaration.
    fn absorb_group(&mut self, tokens: &[Token], open: usize) -> Result<usize, ScanError> {
        let mut lines: Vec<u32> = Vec::new();
        for (i, tok) in tokens.iter().enumerate().skip(open) {
            if tok.is("{") {
                if self.stack.len() + lines.len() >= self.max_depth {
                    return Err(ScanError::DepthExceeded {
                        line: tok.line,
                        limit: self.max_depth,
                    });
                }
                lines.push(tok.line);
            } else if tok.is("}") {
                lines.pop();
            }
            self.pending.push(tok.clone());
            if lines.is_empty() {
                return Ok(i + 1);
            }
        }
        Err(ScanError::UnbalancedBraces {
            line: *lines.last().expect("open group"),
        })
    }

    fn close(&mut self, line: u32) -> Result<(), ScanError> {
        let open = self
            .stack
            .pop()
            .ok_or(ScanError::UnexpectedClose { line })?;
        if let Frame::Function(idx) = open.frame {
            self.drafts[idx].end = Some(line);
        }
        Ok(())
    }

    fn draft(&self, decl: FunctionDecl) -> Draft {
        let mut in_class_template = false;
        let mut in_extern_c = false;
        for open in &self.stack {
            match open.frame {
                Frame::Class { is_template, .. } => in_class_template |= is_template,
                Frame::Linkage { c } => in_extern_c = c,
                _ => {}
            }
        }
        Draft {
            decl,
            lexical: self.lexical_scope(),
            in_class_template,
            in_extern_c,
            directly_in_class: matches!(
                self.stack.last().map(|o| &o.frame),
                Some(Frame::Class { .. })
            ),
            end: None,
        }
    }

    /// Records type names introduced by a `;`-terminated declaration.
    fn declaration(&mut self) {
        let tokens = &self.pending;
        let mut start = 0;
        if tokens.first().is_some_and(|t| t.is("template")) {
            let mut depth = 0usize;
            for (i, t) in tokens.iter().enumerate().skip(1) {
                if t.is("<") {
                    depth += 1;
                } else if t.is(">") {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        start = i + 1;
                        break;
                    }
                }
            }
        }
        let body = &tokens[start..];
        let scope = self.scope_path();
        match body.first().map(|t| t.text.as_str()) {
            Some("class" | "struct" | "union" | "enum") => {
                let mut names = body[1..]
                    .iter()
                    .filter(|t| !t.is("class") && !t.is("struct"));
                let mut path = scope;
                let mut expect_name = true;
                for t in names.by_ref() {
                    if expect_name && t.is_ident() {
                        path.push(t.text.clone());
                        expect_name = false;
                    } else if !expect_name && t.is("::") {
                        expect_name = true;
                    } else if !expect_name && t.is(":") {
                        break;
                    } else {
                        return;
                    }
                }
                if !expect_name {
                    self.entities.insert(path, Entity::Class);
                }
            }
            Some("using") if body.get(1).is_some_and(|t| t.is("namespace")) => {
                self.using_directive = true;
            }
            Some("using") => {
                let Some(eq) = body.iter().position(|t| t.is("=")) else {
                    return;
                };
                if eq != 2 || !body[1].is_ident() {
                    return;
                }
                let (target, _) = parse_declaration(&body[eq + 1..]);
                let mut path = scope.clone();
                path.push(body[1].text.clone());
                self.entities.insert(path, Entity::Alias { target, scope });
            }
            Some("typedef") => {
                if body.iter().any(|t| t.is("(")) {
                    return;
                }
                let (target, name) = parse_declaration(&body[1..]);
                if let Some(name) = name {
                    let mut path = scope.clone();
                    path.push(name);
                    self.entities.insert(path, Entity::Alias { target, scope });
                }
            }
            _ => {}
        }
    }

    fn finish(self, path: &str) -> Vec<FunctionSpan> {
        let resolver = Resolver {
            entities: &self.entities,
        };
        self.drafts
            .iter()
            .filter_map(|draft| {
                let end = draft.end?;
                let decl = &draft.decl;
                let mut scope: Vec<String> = if decl.global_qualified {
                    Vec::new()
                } else if decl.is_friend && draft.directly_in_class {
                    draft
                        .lexical
                        .iter()
                        .take_while(|(_, is_class)| !is_class)
                        .map(|(c, _)| c.clone())
                        .collect()
                } else {
                    draft.lexical.iter().map(|(c, _)| c.clone()).collect()
                };
                scope.extend(decl.written_scope.iter().cloned());
                let is_member =
                    draft.directly_in_class && !decl.is_friend || !decl.written_scope.is_empty();
                let mut unresolved = Vec::new();
                let parameters = decl
                    .params
                    .iter()
                    .map(|p| resolver.resolve(p, &scope, 0, &mut unresolved))
                    .collect();
                // A type declared outside this file may live in any enclosing
                // scope; only a global-scope lookup with no using-directive
                // in effect is unambiguous.
                let ambiguous = (!scope.is_empty() || self.using_directive)
                    .then(|| {
                        unresolved.into_iter().find(|p: &Vec<String>| {
                            p[0] != "std" && !(p.len() == 1 && is_platform_typedef(&p[0]))
                        })
                    })
                    .flatten();
                let unsupported = decl
                    .unsupported
                    .clone()
                    .or_else(|| ambiguous.map(|p| format!("unresolved type `{}`", p.join("::"))));
                let signature = FunctionSignature {
                    qualified_name: QualifiedName {
                        scope,
                        name: decl.name.clone(),
                    },
                    parameters,
                    is_const_member: decl.is_const_member,
                    is_extern_c: decl.is_extern_c || (draft.in_extern_c && !is_member),
                    is_internal_linkage: decl.is_static && !is_member,
                };
                let span = LineRange::new(decl.name_line, end.max(decl.name_line)).ok()?;
                Some(FunctionSpan {
                    signature,
                    span,
                    file: path.to_string(),
                    is_template: decl.is_template || draft.in_class_template,
                    unsupported,
                })
            })
            .collect()
    }
}

struct Resolver<'a> {
    entities: &'a HashMap<Vec<String>, Entity>,
}

const MAX_ALIAS_DEPTH: usize = 16;

impl Resolver<'_> {
    /// Qualifies `ty` as seen from `scope`. Names not declared in this file
    /// are returned as written and appended to `unresolved`.
    fn resolve(
        &self,
        ty: &TypeExpr,
        scope: &[String],
        depth: usize,
        unresolved: &mut Vec<Vec<String>>,
    ) -> TypeExpr {
        match ty {
            TypeExpr::Named(path) => self.resolve_name(path, scope, depth, unresolved),
            TypeExpr::Pointer(t) => TypeExpr::pointer(self.resolve(t, scope, depth, unresolved)),
            TypeExpr::LValueRef(t) => {
                TypeExpr::lvalue_ref(self.resolve(t, scope, depth, unresolved))
            }
            TypeExpr::RValueRef(t) => {
                TypeExpr::rvalue_ref(self.resolve(t, scope, depth, unresolved))
            }
            TypeExpr::Const(t) => TypeExpr::constant(self.resolve(t, scope, depth, unresolved)),
            other => other.clone(),
        }
    }

    fn resolve_name(
        &self,
        path: &[String],
        scope: &[String],
        depth: usize,
        unresolved: &mut Vec<Vec<String>>,
    ) -> TypeExpr {
        if path.first().is_some_and(String::is_empty) {
            return self.expand(path[1..].to_vec(), depth, unresolved);
        }
        let Some(first) = path.first() else {
            return TypeExpr::Named(Vec::new());
        };
        for k in (0..=scope.len()).rev() {
            let base = &scope[..k];
            let encloses = k < scope.len() && &scope[k] == first;
            let mut candidate = base.to_vec();
            candidate.push(first.clone());
            if encloses || self.entities.contains_key(&candidate) {
                let mut full = base.to_vec();
                full.extend(path.iter().cloned());
                return self.expand(full, depth, unresolved);
            }
            let mut hidden = base.to_vec();
            hidden.push(ANONYMOUS_NAMESPACE.to_string());
            hidden.push(first.clone());
            if self.entities.contains_key(&hidden) {
                hidden.pop();
                hidden.extend(path.iter().cloned());
                return self.expand(hidden, depth, unresolved);
            }
        }
        unresolved.push(path.to_vec());
        TypeExpr::Named(path.to_vec())
    }

    fn expand(
        &self,
        full: Vec<String>,
        depth: usize,
        unresolved: &mut Vec<Vec<String>>,
    ) -> TypeExpr {
        match self.entities.get(&full) {
            Some(Entity::Alias { target, scope }) if depth < MAX_ALIAS_DEPTH => {
                self.resolve(target, scope, depth + 1, unresolved)
            }
            _ => TypeExpr::Named(full),
        }
    }
}
