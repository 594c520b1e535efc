// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

pub mod cppgen;
pub mod gen;

use std::path::PathBuf;

use sicov::FunctionSpan;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Scanner output in the generator's terms: templates compare by name only.
pub fn observed(spans: &[FunctionSpan]) -> Vec<cppgen::ExpectedSpan> {
    let mut out: Vec<_> = spans
        .iter()
        .map(|s| cppgen::ExpectedSpan {
            signature: if s.is_template {
                s.signature.qualified_name.to_string()
            } else {
                s.signature.to_string()
            },
            start: s.span.start(),
            end: s.span.end(),
            is_template: s.is_template,
        })
        .collect();
    out.sort();
    out
}

/// `(line, symbol)` pairs of a toolchain symbol export.
pub fn load_symbols(text: &str) -> Vec<(u32, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (line, sym) = l.split_once(' ').expect("`<line> <symbol>`");
            (line.parse().expect("line number"), sym.to_string())
        })
        .collect()
}
