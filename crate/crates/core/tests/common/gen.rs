// SPDX-License-Identifier: Apache-2.0

//! Random spans, hunks, SICs and record sets, plus brute-force oracles.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use sicov::coverage::CoverageRecord;
use sicov::scan::{Builtin, QualifiedName, UnqualifiedName};
use sicov::sic::FunctionTarget;
use sicov::{
    ChangeKind, FileChange, FunctionSignature, FunctionSpan, LineRange,
    SelectiveInstrumentationContext, TypeExpr,
};

const IDENTS: [&str; 12] = [
    "alpha", "beta", "gamma", "delta", "update", "draw", "tick", "load", "save", "mix", "go", "run",
];
const SCOPES: [&str; 6] = ["ns", "game", "util", "Widget", "Mesh", "detail"];

fn range(start: u32, end: u32) -> LineRange {
    LineRange::new(start, end).expect("start <= end")
}

pub fn span(file: &str, name: &str, start: u32, end: u32) -> FunctionSpan {
    FunctionSpan {
        signature: FunctionSignature::new(QualifiedName::identifier(&[name]), vec![]),
        span: range(start, end),
        file: file.to_string(),
        is_template: false,
        unsupported: None,
    }
}

/// Spans (possibly nested or overlapping) and a change to one file.
pub fn overlap_instance(rng: &mut impl Rng) -> (Vec<FunctionSpan>, FileChange) {
    let len: u32 = rng.gen_range(1..=120);
    let spans = (0..rng.gen_range(0..12))
        .map(|i| {
            let a = rng.gen_range(1..=len);
            let reach = rng.gen_range(0..20);
            let b = rng.gen_range(a..=(a + reach).min(len));
            span("f.cpp", &format!("f{i}"), a, b)
        })
        .collect();
    let kind = if rng.gen_bool(0.1) {
        ChangeKind::Added
    } else {
        ChangeKind::Modified
    };
    // Disjoint, non-adjacent hunks from a random walk.
    let mut hunks = Vec::new();
    let mut at = 1;
    while at <= len && hunks.len() < 6 {
        at += rng.gen_range(0..25);
        if at > len {
            break;
        }
        let width = rng.gen_range(0..4);
        let end = (at + width).min(len);
        hunks.push(range(at, end));
        at = end + 2;
    }
    if kind == ChangeKind::Added {
        hunks = vec![range(1, len)];
    }
    let change = FileChange::new("f.cpp", kind, hunks).expect("disjoint hunks");
    (spans, change)
}

/// Per-line membership: a span is selected when some line lies in both it
/// and a hunk, or when the file is new.
pub fn overlap_oracle(spans: &[FunctionSpan], change: &FileChange) -> Vec<(u32, u32)> {
    let changed: BTreeSet<u32> = change
        .hunks()
        .iter()
        .flat_map(|h| h.start()..=h.end())
        .collect();
    spans
        .iter()
        .filter(|s| {
            change.kind == ChangeKind::Added
                || (s.span.start()..=s.span.end()).any(|l| changed.contains(&l))
        })
        .map(|s| (s.span.start(), s.span.end()))
        .collect()
}

fn param(rng: &mut impl Rng) -> TypeExpr {
    let leaf = match rng.gen_range(0..4) {
        0 => TypeExpr::named(["Widget"]),
        _ => loop {
            let b = *Builtin::ALL.choose(rng).unwrap();
            if b != Builtin::Void {
                break TypeExpr::Builtin(b);
            }
        },
    };
    match rng.gen_range(0..5) {
        0 => TypeExpr::pointer(leaf),
        1 => TypeExpr::lvalue_ref(TypeExpr::constant(leaf)),
        _ => leaf,
    }
}

fn signature(rng: &mut impl Rng) -> FunctionSignature {
    let scope: Vec<&str> = (0..rng.gen_range(0..3))
        .map(|_| *SCOPES.choose(rng).unwrap())
        .collect();
    let name = UnqualifiedName::Identifier(IDENTS.choose(rng).unwrap().to_string());
    let params = (0..rng.gen_range(0..4)).map(|_| param(rng)).collect();
    let mut sig = FunctionSignature::new(QualifiedName::new(scope, name), params);
    sig.is_const_member = !sig.qualified_name.scope.is_empty() && rng.gen_bool(0.2);
    sig
}

/// A SIC over up to three files, some targets falling back to wildcards.
pub fn sic(rng: &mut impl Rng) -> SelectiveInstrumentationContext {
    let mut targets = Vec::new();
    for file in ["a.cpp", "b.cc", "src/c.cxx"] {
        let mut line = 1;
        for _ in 0..rng.gen_range(0..8) {
            line += rng.gen_range(0..5);
            let end = line + rng.gen_range(0..10);
            let s = FunctionSpan {
                signature: signature(rng),
                span: range(line, end),
                file: file.to_string(),
                is_template: rng.gen_bool(0.15),
                unsupported: None,
            };
            targets.push(FunctionTarget::from_span(&s));
            line = end + 1;
        }
    }
    let id = format!("{:08x}", rng.gen::<u32>());
    SelectiveInstrumentationContext::new(id, targets).expect("distinct spans")
}

/// Records naming SIC symbols, wildcard matches and unrelated symbols.
pub fn records(rng: &mut impl Rng, sic: &SelectiveInstrumentationContext) -> Vec<CoverageRecord> {
    let mut out = Vec::new();
    for t in sic.targets() {
        if rng.gen_bool(0.3) {
            continue;
        }
        let symbol = match t.fallback_pattern() {
            Some(p) => format!("_Z{}IiEvT_", p.trim_matches('*')),
            None => t.pattern().to_string(),
        };
        out.push(CoverageRecord::new(symbol, rng.gen_range(0..4)));
    }
    for i in 0..rng.gen_range(0..5) {
        out.push(CoverageRecord::new(
            format!("_ZN5other{i}fEv"),
            rng.gen_range(0..100),
        ));
    }
    out.shuffle(rng);
    out
}

/// Splits every record into one to three records with the same total.
pub fn split(rng: &mut impl Rng, records: &[CoverageRecord]) -> Vec<CoverageRecord> {
    let mut out = Vec::new();
    for r in records {
        let mut left = r.hit_count;
        for _ in 0..rng.gen_range(0..3) {
            let part = rng.gen_range(0..=left);
            out.push(CoverageRecord::new(r.symbol.clone(), part));
            left -= part;
        }
        out.push(CoverageRecord::new(r.symbol.clone(), left));
    }
    out.shuffle(rng);
    out
}

/// Covered distinct patterns over distinct patterns, computed directly.
/// Wildcards here are always `*text*`, so matching is substring search.
pub fn coverage_oracle(
    sic: &SelectiveInstrumentationContext,
    records: &[CoverageRecord],
) -> (usize, usize) {
    let mut seen = HashSet::new();
    let mut covered = 0;
    for t in sic.targets() {
        if !seen.insert(t.pattern()) {
            continue;
        }
        let hit = records.iter().any(|r| {
            r.hit_count > 0
                && match t.fallback_pattern() {
                    Some(p) => r.symbol.contains(p.trim_matches('*')),
                    None => r.symbol == t.pattern(),
                }
        });
        covered += hit as usize;
    }
    (covered, seen.len())
}
