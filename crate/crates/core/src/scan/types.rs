// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diff::LineRange;

/// Printed form of an anonymous namespace scope component.
pub const ANONYMOUS_NAMESPACE: &str = "(anonymous namespace)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Void,
    Bool,
    Char,
    SignedChar,
    UnsignedChar,
    WChar,
    Short,
    UnsignedShort,
    Int,
    UnsignedInt,
    Long,
    UnsignedLong,
    LongLong,
    UnsignedLongLong,
    Float,
    Double,
}

impl Builtin {
    pub const ALL: [Builtin; 16] = [
        Builtin::Void,
        Builtin::Bool,
        Builtin::Char,
        Builtin::SignedChar,
        Builtin::UnsignedChar,
        Builtin::WChar,
        Builtin::Short,
        Builtin::UnsignedShort,
        Builtin::Int,
        Builtin::UnsignedInt,
        Builtin::Long,
        Builtin::UnsignedLong,
        Builtin::LongLong,
        Builtin::UnsignedLongLong,
        Builtin::Float,
        Builtin::Double,
    ];

    pub fn spelling(self) -> &'static str {
        match self {
            Builtin::Void => "void",
            Builtin::Bool => "bool",
            Builtin::Char => "char",
            Builtin::SignedChar => "signed char",
            Builtin::UnsignedChar => "unsigned char",
            Builtin::WChar => "wchar_t",
            Builtin::Short => "short",
            Builtin::UnsignedShort => "unsigned short",
            Builtin::Int => "int",
            Builtin::UnsignedInt => "unsigned int",
            Builtin::Long => "long",
            Builtin::UnsignedLong => "unsigned long",
            Builtin::LongLong => "long long",
            Builtin::UnsignedLongLong => "unsigned long long",
            Builtin::Float => "float",
            Builtin::Double => "double",
        }
    }
}

/// Parameter type at scanner fidelity.
///
/// `Unsupported` marks a parameter the scanner recognized but cannot express
/// (function pointers, template arguments, variadics); it carries the name
/// of the construct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeExpr {
    Builtin(Builtin),
    Named(Vec<String>),
    Pointer(Box<TypeExpr>),
    LValueRef(Box<TypeExpr>),
    RValueRef(Box<TypeExpr>),
    Const(Box<TypeExpr>),
    Unsupported(String),
}

impl TypeExpr {
    pub fn named<S: Into<String>>(path: impl IntoIterator<Item = S>) -> Self {
        TypeExpr::Named(path.into_iter().map(Into::into).collect())
    }

    pub fn pointer(inner: TypeExpr) -> Self {
        TypeExpr::Pointer(Box::new(inner))
    }

    pub fn lvalue_ref(inner: TypeExpr) -> Self {
        TypeExpr::LValueRef(Box::new(inner))
    }

    pub fn rvalue_ref(inner: TypeExpr) -> Self {
        TypeExpr::RValueRef(Box::new(inner))
    }

    /// Adds a const qualifier unless the node already carries one.
    pub fn constant(inner: TypeExpr) -> Self {
        match inner {
            c @ TypeExpr::Const(_) => c,
            other => TypeExpr::Const(Box::new(other)),
        }
    }

    /// First unsupported construct anywhere in the tree.
    pub fn unsupported(&self) -> Option<&str> {
        match self {
            TypeExpr::Unsupported(what) => Some(what),
            TypeExpr::Builtin(_) | TypeExpr::Named(_) => None,
            TypeExpr::Pointer(t)
            | TypeExpr::LValueRef(t)
            | TypeExpr::RValueRef(t)
            | TypeExpr::Const(t) => t.unsupported(),
        }
    }

    /// Strips a top-level const, which is not part of a function's type.
    pub fn without_top_level_const(&self) -> &TypeExpr {
        match self {
            TypeExpr::Const(inner) => inner,
            other => other,
        }
    }

    pub fn visit_named(&self, f: &mut impl FnMut(&[String])) {
        match self {
            TypeExpr::Named(path) => f(path),
            TypeExpr::Builtin(_) | TypeExpr::Unsupported(_) => {}
            TypeExpr::Pointer(t)
            | TypeExpr::LValueRef(t)
            | TypeExpr::RValueRef(t)
            | TypeExpr::Const(t) => t.visit_named(f),
        }
    }
}

/// Renders in the east-const style reference demanglers print.
impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Builtin(b) => f.write_str(b.spelling()),
            TypeExpr::Named(path) => f.write_str(&path.join("::")),
            TypeExpr::Pointer(t) => write!(f, "{t}*"),
            TypeExpr::LValueRef(t) => write!(f, "{t}&"),
            TypeExpr::RValueRef(t) => write!(f, "{t}&&"),
            TypeExpr::Const(t) => write!(f, "{t} const"),
            TypeExpr::Unsupported(what) => write!(f, "<{what}>"),
        }
    }
}

/// Terminal component of a function's qualified name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnqualifiedName {
    Identifier(String),
    /// Operator symbol without the `operator` keyword, e.g. `+=`, `()`.
    Operator(String),
    /// Class name.
    Constructor(String),
    /// Class name, without the tilde.
    Destructor(String),
    /// Target type as written.
    Conversion(String),
}

impl UnqualifiedName {
    /// The name as it appears in source, used for name-only matching.
    pub fn source_text(&self) -> String {
        match self {
            UnqualifiedName::Identifier(s) | UnqualifiedName::Constructor(s) => s.clone(),
            UnqualifiedName::Operator(op) => {
                if op.starts_with(|c: char| c.is_alphabetic()) {
                    format!("operator {op}")
                } else {
                    format!("operator{op}")
                }
            }
            UnqualifiedName::Destructor(class) => format!("~{class}"),
            UnqualifiedName::Conversion(ty) => format!("operator {ty}"),
        }
    }
}

impl fmt::Display for UnqualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QualifiedName {
    /// Enclosing namespaces and classes, outermost first.
    pub scope: Vec<String>,
    pub name: UnqualifiedName,
}

impl QualifiedName {
    pub fn new<S: Into<String>>(scope: impl IntoIterator<Item = S>, name: UnqualifiedName) -> Self {
        QualifiedName {
            scope: scope.into_iter().map(Into::into).collect(),
            name,
        }
    }

    pub fn identifier(path: &[&str]) -> Self {
        let (last, scope) = path.split_last().expect("non-empty path");
        QualifiedName::new(
            scope.iter().copied(),
            UnqualifiedName::Identifier(last.to_string()),
        )
    }

    pub fn terminal(&self) -> String {
        self.name.source_text()
    }

    pub fn is_valid(&self) -> bool {
        let terminal_ok = match &self.name {
            UnqualifiedName::Identifier(s)
            | UnqualifiedName::Operator(s)
            | UnqualifiedName::Constructor(s)
            | UnqualifiedName::Destructor(s)
            | UnqualifiedName::Conversion(s) => !s.is_empty(),
        };
        terminal_ok && self.scope.iter().all(|c| !c.is_empty())
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for component in &self.scope {
            write!(f, "{component}::")?;
        }
        write!(f, "{}", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FunctionSignature {
    pub qualified_name: QualifiedName,
    pub parameters: Vec<TypeExpr>,
    #[serde(default)]
    pub is_const_member: bool,
    #[serde(default)]
    pub is_extern_c: bool,
    /// `static` at namespace scope.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_internal_linkage: bool,
}

impl FunctionSignature {
    pub fn new(qualified_name: QualifiedName, parameters: Vec<TypeExpr>) -> Self {
        FunctionSignature {
            qualified_name,
            parameters,
            is_const_member: false,
            is_extern_c: false,
            is_internal_linkage: false,
        }
    }

    pub fn terminal_name(&self) -> String {
        self.qualified_name.terminal()
    }
}

/// `ns::C::f(int, char const*) const`, parameters without top-level const.
impl fmt::Display for FunctionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.qualified_name)?;
        for (i, p) in self.parameters.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", p.without_top_level_const())?;
        }
        f.write_str(")")?;
        if self.is_const_member {
            f.write_str(" const")?;
        }
        Ok(())
    }
}

/// A function definition found in a source file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionSpan {
    pub signature: FunctionSignature,
    pub span: LineRange,
    pub file: String,
    #[serde(default)]
    pub is_template: bool,
    /// Set when the declarator uses a construct outside the supported
    /// subset; the name and span stay valid but the signature is partial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unsupported: Option<String>,
}

impl FunctionSpan {
    /// Reason the signature cannot be fully expressed, if any.
    pub fn unsupported_reason(&self) -> Option<String> {
        if let Some(reason) = &self.unsupported {
            return Some(reason.clone());
        }
        self.signature
            .parameters
            .iter()
            .find_map(|p| p.unsupported().map(str::to_string))
    }
}
