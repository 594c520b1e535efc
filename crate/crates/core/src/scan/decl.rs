// SPDX-License-Identifier: Apache-2.0

//! Classification of the declaration text that precedes an opening brace,
//! and parsing of parameter declarations into [`TypeExpr`] trees.

use super::lexer::{Token, TokenKind};
use super::types::{Builtin, TypeExpr, UnqualifiedName};

/// What an opening brace at declaration level belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Head {
    /// Empty components for an anonymous namespace.
    Namespace(Vec<String>),
    Linkage {
        c: bool,
    },
    Class(ClassHead),
    Function(FunctionDecl),
    /// A brace initializer inside a constructor's mem-initializer list.
    BraceInit,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) struct ClassHead {
    pub components: Vec<String>,
    pub is_template: bool,
    pub is_enum: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) struct FunctionDecl {
    /// Scope components written in the declarator (`ns::C` of `ns::C::f`).
    pub written_scope: Vec<String>,
    pub global_qualified: bool,
    pub name: UnqualifiedName,
    pub params: Vec<TypeExpr>,
    pub is_const_member: bool,
    pub is_template: bool,
    pub is_extern_c: bool,
    pub is_friend: bool,
    pub is_static: bool,
    pub unsupported: Option<String>,
    pub name_line: u32,
}

const CLASS_KEYS: [&str; 3] = ["class", "struct", "union"];

const ATTRIBUTE_CALLS: [&str; 5] = [
    "alignas",
    "__declspec",
    "__attribute__",
    "__attribute",
    "__pragma",
];

const NOT_A_NAME: [&str; 22] = [
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "return",
    "sizeof",
    "alignof",
    "decltype",
    "typeid",
    "noexcept",
    "throw",
    "static_assert",
    "new",
    "delete",
    "case",
    "do",
    "else",
    "using",
    "namespace",
    "template",
    "requires",
];

/// Operators the mangler knows an encoding for.
pub(super) const SUPPORTED_OPERATORS: [&str; 38] = [
    "+", "-", "*", "/", "%", "^", "&", "|", "~", "!", "=", "<", ">", "+=", "-=", "*=", "/=", "%=",
    "^=", "&=", "|=", "<<", ">>", "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    ",", "->*", "->", "()", "[]",
];

fn is(tokens: &[Token], idx: usize, text: &str) -> bool {
    tokens.get(idx).is_some_and(|t| t.is(text))
}

/// Index of the token closing the group opened at `open` (`(`, `[`, `{`).
pub(super) fn matching_close(tokens: &[Token], open: usize) -> Option<usize> {
    let (o, c) = match tokens[open].text.as_str() {
        "(" => ("(", ")"),
        "[" => ("[", "]"),
        "{" => ("{", "}"),
        _ => return None,
    };
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.is(o) {
            depth += 1;
        } else if t.is(c) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn matching_open(tokens: &[Token], close: usize) -> Option<usize> {
    let (o, c) = match tokens[close].text.as_str() {
        ")" => ("(", ")"),
        "]" => ("[", "]"),
        "}" => ("{", "}"),
        ">" => ("<", ">"),
        _ => return None,
    };
    let mut depth = 0usize;
    for i in (0..=close).rev() {
        let t = &tokens[i];
        if t.is(c) {
            depth += 1;
        } else if t.is(o) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Closing `>` of a template argument list opened at `open`.
fn matching_angle(tokens: &[Token], open: usize) -> Option<usize> {
    let mut angle = 0usize;
    let mut nest = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        match t.text.as_str() {
            "(" | "[" | "{" => nest += 1,
            ")" | "]" | "}" => nest = nest.saturating_sub(1),
            "<" if nest == 0 => angle += 1,
            ">" if nest == 0 => {
                angle -= 1;
                if angle == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Positions of tokens at bracket depth zero (angles not counted).
fn top_level(tokens: &[Token]) -> Vec<usize> {
    let mut depth = 0usize;
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" => {
                if depth == 0 {
                    out.push(i);
                }
                depth += 1;
            }
            ")" | "]" | "}" => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    out.push(i);
                }
            }
            _ if depth == 0 => out.push(i),
            _ => {}
        }
    }
    out
}

/// True when `=` at `idx` spells part of an operator name.
fn is_operator_part(tokens: &[Token], idx: usize) -> bool {
    (1..=3).any(|back| {
        idx >= back
            && tokens[idx - back].is("operator")
            && tokens[idx - back + 1..idx]
                .iter()
                .all(|t| t.kind == TokenKind::Punct)
    })
}

/// Skips leading `template<...>` prefixes and attribute groups.
fn strip_prefixes(tokens: &[Token]) -> (usize, bool) {
    let mut i = 0;
    let mut is_template = false;
    loop {
        if is(tokens, i, "template") && is(tokens, i + 1, "<") {
            match matching_angle(tokens, i + 1) {
                Some(close) => {
                    is_template = true;
                    i = close + 1;
                }
                None => return (i, is_template),
            }
        } else if is(tokens, i, "[") && is(tokens, i + 1, "[") {
            match matching_close(tokens, i) {
                Some(close) => i = close + 1,
                None => return (i, is_template),
            }
        } else if is(tokens, i, "export") {
            i += 1;
        } else {
            return (i, is_template);
        }
    }
}

pub(super) fn classify(tokens: &[Token], enclosing_class: Option<&str>) -> Head {
    if tokens.is_empty() {
        return Head::Other;
    }
    let (start, is_template) = strip_prefixes(tokens);
    let body = &tokens[start..];
    if body.is_empty() {
        return Head::Other;
    }

    if let Some(head) = namespace_head(body) {
        return head;
    }
    if body.len() == 2 && body[0].is("extern") && body[1].kind == TokenKind::Literal {
        return Head::Linkage {
            c: body[1].text == "\"C\"",
        };
    }
    if let Some(class) = class_head(body, is_template) {
        return Head::Class(class);
    }

    let top = top_level(body);
    if top
        .iter()
        .any(|&i| body[i].is("=") && !is_operator_part(body, i))
    {
        return Head::Other;
    }

    match function_head(body, enclosing_class, is_template) {
        Some(FunctionShape::Decl(decl)) => Head::Function(decl),
        Some(FunctionShape::InitializerBrace) => Head::BraceInit,
        None => Head::Other,
    }
}

fn namespace_head(body: &[Token]) -> Option<Head> {
    let mut i = 0;
    if is(body, i, "inline") {
        i += 1;
    }
    if !is(body, i, "namespace") {
        return None;
    }
    i += 1;
    let mut components = Vec::new();
    while i < body.len() {
        let t = &body[i];
        if t.is("[") {
            i = matching_close(body, i)? + 1;
            continue;
        }
        if t.is_ident() && !t.is("inline") {
            components.push(t.text.clone());
        } else if !t.is("::") && !t.is("inline") {
            return Some(Head::Other);
        }
        i += 1;
    }
    Some(Head::Namespace(components))
}

fn class_head(body: &[Token], is_template: bool) -> Option<ClassHead> {
    let mut i = 0;
    if is(body, i, "typedef") {
        i += 1;
    }
    let key = body.get(i)?;
    let is_enum = key.is("enum");
    if !is_enum && !CLASS_KEYS.contains(&key.text.as_str()) {
        return None;
    }
    i += 1;
    if is_enum && (is(body, i, "class") || is(body, i, "struct")) {
        i += 1;
    }

    // A parenthesized group other than an attribute call means a function
    // returning an elaborated type.
    for &idx in &top_level(body) {
        if body[idx].is("(") {
            let callee = idx.checked_sub(1).map(|p| body[p].text.as_str());
            if !callee.is_some_and(|c| ATTRIBUTE_CALLS.contains(&c)) {
                return None;
            }
        }
    }

    let mut name: Vec<String> = Vec::new();
    let mut specialization = false;
    while i < body.len() {
        let t = &body[i];
        match t.text.as_str() {
            ":" => break,
            "[" | "(" => {
                i = matching_close(body, i)? + 1;
                continue;
            }
            "<" => {
                specialization = true;
                i = matching_angle(body, i)? + 1;
                continue;
            }
            "::" => {}
            "final" => {}
            _ if t.is_ident() => {
                if ATTRIBUTE_CALLS.contains(&t.text.as_str()) {
                    // followed by its argument group, skipped above
                } else if i > 0 && body[i - 1].is("::") {
                    name.push(t.text.clone());
                } else {
                    name = vec![t.text.clone()];
                }
            }
            _ => {}
        }
        i += 1;
    }
    Some(ClassHead {
        components: name,
        is_template: is_template || specialization,
        is_enum,
    })
}

enum FunctionShape {
    Decl(FunctionDecl),
    InitializerBrace,
}

fn function_head(
    body: &[Token],
    enclosing_class: Option<&str>,
    mut is_template: bool,
) -> Option<FunctionShape> {
    let top = top_level(body);

    // Mem-initializer list: a lone `:` after a top-level `)`.
    let mut head_end = body.len();
    let mut in_init_list = false;
    let mut trailing_return = false;
    let mut seen_close = false;
    for &i in &top {
        let t = &body[i];
        if t.is(")") {
            seen_close = true;
        } else if seen_close && t.is(":") {
            head_end = i;
            in_init_list = true;
            break;
        } else if seen_close && t.is("->") {
            head_end = i;
            trailing_return = true;
            break;
        }
    }
    if in_init_list {
        // `member{...}`: the brace continues the initializer list.
        if let Some(last) = body.last() {
            if last.is_ident() || last.is(">") {
                return Some(FunctionShape::InitializerBrace);
            }
        }
    }
    let head = &body[..head_end];

    // Walk back over trailing qualifiers to the parameter list.
    let mut idx = head.len();
    let mut is_const_member = false;
    let mut unsupported: Option<String> = None;
    let params_close = loop {
        let pos = idx.checked_sub(1)?;
        let t = &head[pos];
        match t.text.as_str() {
            ")" => {
                let open = matching_open(head, pos)?;
                let callee = open.checked_sub(1).map(|p| head[p].text.as_str());
                if matches!(callee, Some("noexcept" | "throw"))
                    || callee.is_some_and(|c| ATTRIBUTE_CALLS.contains(&c))
                {
                    idx = open - 1;
                    continue;
                }
                break pos;
            }
            "]" => {
                idx = matching_open(head, pos)?;
            }
            "const" => {
                is_const_member = true;
                idx = pos;
            }
            "volatile" => {
                unsupported.get_or_insert_with(|| "volatile member function".into());
                idx = pos;
            }
            "&" | "&&" => {
                unsupported.get_or_insert_with(|| "ref-qualified member function".into());
                idx = pos;
            }
            "override" | "final" | "noexcept" | "try" => idx = pos,
            _ => return None,
        }
    };
    let params_open = matching_open(head, params_close)?;
    if params_open == 0 {
        return None;
    }

    // Declarator name, read backwards from the parameter list.
    let mut name_start;
    let name: UnqualifiedName;
    if let Some(op_idx) = operator_keyword(head, params_open) {
        name_start = op_idx;
        let spelled = &head[op_idx + 1..params_open];
        let text: String = spelled.iter().map(|t| t.text.as_str()).collect();
        let all_punct = spelled.iter().all(|t| t.kind == TokenKind::Punct);
        name = if all_punct && !text.is_empty() {
            UnqualifiedName::Operator(text)
        } else if spelled
            .first()
            .is_some_and(|t| t.is("new") || t.is("delete"))
        {
            UnqualifiedName::Operator(
                spelled
                    .iter()
                    .map(|t| t.text.as_str())
                    .collect::<Vec<_>>()
                    .join(""),
            )
        } else if spelled
            .first()
            .is_some_and(|t| t.kind == TokenKind::Literal)
        {
            UnqualifiedName::Operator(format!("\"\"{}", spelled.last()?.text))
        } else {
            UnqualifiedName::Conversion(
                spelled
                    .iter()
                    .map(|t| t.text.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            )
        };
    } else {
        let mut pos = params_open - 1;
        if head[pos].is(">") {
            // Explicit specialization `f<int>(...)`.
            pos = matching_open(head, pos)?.checked_sub(1)?;
            is_template = true;
        }
        let ident = &head[pos];
        if !ident.is_ident() || NOT_A_NAME.contains(&ident.text.as_str()) {
            return None;
        }
        name_start = pos;
        if pos > 0 && head[pos - 1].is("~") {
            name_start = pos - 1;
            name = UnqualifiedName::Destructor(ident.text.clone());
        } else {
            name = UnqualifiedName::Identifier(ident.text.clone());
        }
    }

    // Qualifying scope components.
    let mut written_scope: Vec<String> = Vec::new();
    let mut global_qualified = false;
    while name_start >= 1 && head[name_start - 1].is("::") {
        let sep = name_start - 1;
        if sep == 0 {
            global_qualified = true;
            name_start = 0;
            break;
        }
        let mut comp = sep - 1;
        if head[comp].is(">") {
            comp = matching_open(head, comp)?.checked_sub(1)?;
            is_template = true;
        }
        if !head[comp].is_ident() || NOT_A_NAME.contains(&head[comp].text.as_str()) {
            global_qualified = true;
            name_start = sep;
            break;
        }
        written_scope.insert(0, head[comp].text.clone());
        name_start = comp;
    }

    // Decl-specifiers: everything after the last non-attribute group.
    let mut spec_start = 0;
    let mut i = 0;
    while i < name_start {
        let t = &head[i];
        if t.is("(") || t.is("[") || t.is("{") {
            let close = matching_close(head, i)?;
            let callee = i.checked_sub(1).map(|p| head[p].text.as_str());
            let attribute = t.is("[") || callee.is_some_and(|c| ATTRIBUTE_CALLS.contains(&c));
            if !attribute && close < name_start {
                spec_start = close + 1;
            }
            i = close + 1;
            continue;
        }
        i += 1;
    }
    let specs = &head[spec_start..name_start];

    // Constructors and destructors carry no return type.
    let class_name = written_scope
        .last()
        .map(String::as_str)
        .or(if written_scope.is_empty() {
            enclosing_class
        } else {
            None
        });
    let name = match name {
        UnqualifiedName::Identifier(id) if class_name == Some(id.as_str()) => {
            UnqualifiedName::Constructor(id)
        }
        other => other,
    };
    let needs_return_type = matches!(
        name,
        UnqualifiedName::Identifier(_) | UnqualifiedName::Operator(_)
    );
    let has_type = specs.iter().any(|t| {
        t.is_ident()
            && !matches!(
                t.text.as_str(),
                "static"
                    | "inline"
                    | "virtual"
                    | "extern"
                    | "friend"
                    | "explicit"
                    | "constexpr"
                    | "consteval"
                    | "register"
            )
    });
    if needs_return_type && !has_type {
        return None;
    }
    if specs.iter().any(|t| t.is(";")) {
        return None;
    }

    let is_friend = specs.iter().any(|t| t.is("friend"));
    let is_static = specs.iter().any(|t| t.is("static"));
    let is_extern_c = specs
        .windows(2)
        .any(|w| w[0].is("extern") && w[1].is("\"C\""));
    if trailing_return {
        unsupported.get_or_insert_with(|| "trailing return type".into());
    }
    match &name {
        UnqualifiedName::Operator(op) if !SUPPORTED_OPERATORS.contains(&op.as_str()) => {
            unsupported.get_or_insert_with(|| format!("operator{op}"));
        }
        UnqualifiedName::Conversion(_) => {
            unsupported.get_or_insert_with(|| "conversion operator".into());
        }
        _ => {}
    }

    let params = split_params(&head[params_open + 1..params_close])
        .into_iter()
        .map(|p| parse_declaration(p).0)
        .collect::<Vec<_>>();
    let params = match params.as_slice() {
        [TypeExpr::Builtin(Builtin::Void)] => Vec::new(),
        _ => params,
    };

    Some(FunctionShape::Decl(FunctionDecl {
        written_scope,
        global_qualified,
        name,
        params,
        is_const_member,
        is_template,
        is_extern_c,
        is_friend,
        is_static,
        unsupported,
        name_line: head[name_start].line,
    }))
}

/// Position of an `operator` keyword naming the function whose parameter
/// list opens at `params_open`.
fn operator_keyword(head: &[Token], params_open: usize) -> Option<usize> {
    let lower = params_open.saturating_sub(6);
    (lower..params_open).rev().find(|&i| {
        head[i].is("operator")
            && head[i + 1..params_open]
                .iter()
                .all(|t| !t.is("(") || (params_open >= 2 && i + 1 == params_open - 2))
    })
}

/// Splits a parameter list on top-level commas.
pub(super) fn split_params(tokens: &[Token]) -> Vec<&[Token]> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut angle = 0i32;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "<" if depth == 0 && i > 0 && tokens[i - 1].is_ident() => angle += 1,
            ">" if depth == 0 && angle > 0 => angle -= 1,
            "," if depth == 0 && angle == 0 => {
                out.push(&tokens[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&tokens[start..]);
    out
}

const BUILTIN_WORDS: [&str; 11] = [
    "void", "bool", "char", "wchar_t", "short", "int", "long", "float", "double", "signed",
    "unsigned",
];

const OUT_OF_SUBSET_BUILTINS: [&str; 7] = [
    "char8_t",
    "char16_t",
    "char32_t",
    "__int128",
    "auto",
    "decltype",
    "nullptr_t",
];

/// Parses one declaration (`const Foo* p = nullptr`) into its type and the
/// declared name, if any.
pub(super) fn parse_declaration(tokens: &[Token]) -> (TypeExpr, Option<String>) {
    let mut end = tokens.len();
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth = depth.saturating_sub(1),
            "=" if depth == 0 => {
                end = i;
                break;
            }
            _ => {}
        }
    }
    let tokens = &tokens[..end];
    if tokens.is_empty() {
        return (TypeExpr::Unsupported("empty parameter".into()), None);
    }
    if tokens.iter().any(|t| t.is("...")) {
        return (TypeExpr::Unsupported("variadic parameter".into()), None);
    }

    let mut i = 0;
    let mut is_const = false;
    let mut global = false;
    let mut builtin_words: Vec<&str> = Vec::new();
    let mut named: Option<Vec<String>> = None;
    let unsupported = |what: &str| (TypeExpr::Unsupported(what.to_string()), None);

    // Decl-specifier sequence.
    while i < tokens.len() {
        let t = &tokens[i];
        let text = t.text.as_str();
        if t.is("[") && is(tokens, i + 1, "[") {
            match matching_close(tokens, i) {
                Some(close) => {
                    i = close + 1;
                    continue;
                }
                None => return unsupported("malformed attribute"),
            }
        }
        match text {
            "const" => is_const = true,
            "volatile" => return unsupported("volatile parameter"),
            "struct" | "class" | "enum" | "union" | "typename" | "register" => {}
            _ if OUT_OF_SUBSET_BUILTINS.contains(&text) => return unsupported(text),
            _ if BUILTIN_WORDS.contains(&text) => {
                if named.is_some() || global {
                    return unsupported("mixed type specifiers");
                }
                builtin_words.push(text);
            }
            "::" if named.is_none() && builtin_words.is_empty() && !global => global = true,
            _ if t.is_ident() && named.is_none() && builtin_words.is_empty() => {
                let mut path = Vec::new();
                if global {
                    path.push(String::new());
                }
                path.push(text.to_string());
                while is(tokens, i + 1, "::") && tokens.get(i + 2).is_some_and(|n| n.is_ident()) {
                    path.push(tokens[i + 2].text.clone());
                    i += 2;
                }
                if is(tokens, i + 1, "<") {
                    return unsupported("template-argument type");
                }
                if is(tokens, i + 1, "::") {
                    return unsupported("dependent or template-qualified type");
                }
                named = Some(path);
            }
            _ => break,
        }
        i += 1;
    }

    let mut ty = match (named, builtin_words.is_empty()) {
        (Some(path), true) => TypeExpr::Named(path),
        (None, false) => match builtin_from_words(&builtin_words) {
            Some(b) => TypeExpr::Builtin(b),
            None if builtin_words == ["long", "double"] || builtin_words == ["double", "long"] => {
                return unsupported("long double")
            }
            None => return unsupported("builtin combination"),
        },
        _ => return unsupported("missing type specifier"),
    };
    if is_const {
        ty = TypeExpr::constant(ty);
    }

    // Ptr-operators, declarator-id and array bounds.
    let mut name = None;
    while i < tokens.len() {
        let t = &tokens[i];
        match t.text.as_str() {
            "*" => ty = TypeExpr::pointer(ty),
            "&" => ty = TypeExpr::lvalue_ref(ty),
            "&&" => ty = TypeExpr::rvalue_ref(ty),
            "const" => ty = TypeExpr::constant(ty),
            "volatile" => return unsupported("volatile parameter"),
            "(" => return unsupported("function pointer parameter"),
            "[" if is(tokens, i + 1, "[") => match matching_close(tokens, i) {
                Some(close) => {
                    i = close + 1;
                    continue;
                }
                None => return unsupported("malformed attribute"),
            },
            "[" => {
                let Some(close) = matching_close(tokens, i) else {
                    return unsupported("malformed array bound");
                };
                if is(tokens, close + 1, "[") {
                    return unsupported("multi-dimensional array");
                }
                ty = TypeExpr::pointer(ty);
                i = close + 1;
                continue;
            }
            _ if t.is_ident() && name.is_none() => name = Some(t.text.clone()),
            other => return unsupported(&format!("declarator token `{other}`")),
        }
        i += 1;
    }
    (ty, name)
}

fn builtin_from_words(words: &[&str]) -> Option<Builtin> {
    let count = |w: &str| words.iter().filter(|x| **x == w).count();
    let signed = count("signed");
    let unsigned = count("unsigned");
    let short = count("short");
    let long = count("long");
    let int = count("int");
    let char_ = count("char");
    if signed + unsigned > 1 || int > 1 || char_ > 1 || short > 1 || long > 2 {
        return None;
    }
    let others: Vec<&str> = words
        .iter()
        .copied()
        .filter(|w| {
            !matches!(
                *w,
                "signed" | "unsigned" | "short" | "long" | "int" | "char"
            )
        })
        .collect();
    if !others.is_empty() {
        if words.len() != 1 {
            return None;
        }
        return match others[0] {
            "void" => Some(Builtin::Void),
            "bool" => Some(Builtin::Bool),
            "wchar_t" => Some(Builtin::WChar),
            "float" => Some(Builtin::Float),
            "double" => Some(Builtin::Double),
            _ => None,
        };
    }
    if char_ == 1 {
        if short + long + int > 0 {
            return None;
        }
        return Some(match (signed, unsigned) {
            (1, _) => Builtin::SignedChar,
            (_, 1) => Builtin::UnsignedChar,
            _ => Builtin::Char,
        });
    }
    if short == 1 && long > 0 {
        return None;
    }
    Some(match (short, long, unsigned == 1) {
        (1, _, false) => Builtin::Short,
        (1, _, true) => Builtin::UnsignedShort,
        (_, 1, false) => Builtin::Long,
        (_, 1, true) => Builtin::UnsignedLong,
        (_, 2, false) => Builtin::LongLong,
        (_, 2, true) => Builtin::UnsignedLongLong,
        (_, _, false) => Builtin::Int,
        (_, _, true) => Builtin::UnsignedInt,
    })
}
