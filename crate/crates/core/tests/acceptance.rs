// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria 1 to 7. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::HashMap;
use std::fs;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sicov::coverage::build_report;
use sicov::mangle::mangle_span;
use sicov::model::{
    estimate_commit_budget, estimate_per, estimate_tcpu, fps_reference, BudgetLimit, ContextKind,
    FpsReference,
};
use sicov::scan::scan_file;
use sicov::sic::{emit_profile_list, parse_profile_list, profile_list_of, select_targets};
use sicov::{BuildId, ChangeKind, FileChange, InstrumentationMode, LineRange, OverheadModel};

use common::{cppgen, gen, observed};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn mangling_corpus() -> Outcome {
    let dir = common::fixtures().join("mangle");
    let source = fs::read_to_string(dir.join("corpus.cpp")).map_err(|e| e.to_string())?;
    let symbols = fs::read_to_string(dir.join("corpus.symbols")).map_err(|e| e.to_string())?;
    let symbols = common::load_symbols(&symbols);
    check(symbols.len() >= 50, || {
        format!("corpus has {} symbols", symbols.len())
    })?;
    let start = Instant::now();
    let spans = scan_file(&source, "corpus.cpp").map_err(|e| e.to_string())?;
    let mut by_line: HashMap<u32, Vec<String>> = HashMap::new();
    for s in &spans {
        if let Ok(m) = mangle_span(s) {
            by_line
                .entry(s.span.start())
                .or_default()
                .push(m.to_string());
        }
    }
    let misses: Vec<_> = symbols
        .iter()
        .filter(|(line, sym)| !by_line.get(line).is_some_and(|v| v.contains(sym)))
        .collect();
    let elapsed = start.elapsed();
    check(misses.is_empty(), || format!("mismatches: {misses:?}"))?;
    check(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{0}/{0} symbols exact in {elapsed:?}",
        symbols.len()
    ))
}

fn overlap_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e1a);
    let pick = |spans: &[sicov::FunctionSpan], change: &FileChange| -> Vec<(u32, u32)> {
        select_targets(spans, change)
            .iter()
            .map(|t| (t.span.start(), t.span.end()))
            .collect()
    };
    for i in 0..1000 {
        let (spans, change) = gen::overlap_instance(&mut rng);
        let want = gen::overlap_oracle(&spans, &change);
        check(pick(&spans, &change) == want, || {
            format!("instance {i} differs: {change:?}")
        })?;
    }
    let spans = vec![
        gen::span("f.cpp", "a", 10, 20),
        gen::span("f.cpp", "b", 22, 30),
    ];
    let change =
        |kind, s, e| FileChange::new("f.cpp", kind, vec![LineRange::new(s, e).unwrap()]).unwrap();
    let touching = pick(&spans, &change(ChangeKind::Modified, 20, 20));
    check(touching == [(10, 20)], || {
        format!("touching endpoint: {touching:?}")
    })?;
    let disjoint = pick(&spans, &change(ChangeKind::Modified, 21, 21));
    check(disjoint.is_empty(), || format!("disjoint: {disjoint:?}"))?;
    let added = pick(&spans, &change(ChangeKind::Added, 1, 30));
    check(added == [(10, 20), (22, 30)], || {
        format!("added file: {added:?}")
    })?;
    Ok("1000 random instances and 3 boundary fixtures agree".into())
}

fn profile_format() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11);
    for i in 0..200 {
        let sic = gen::sic(&mut rng);
        let parsed =
            parse_profile_list(&emit_profile_list(&sic)).map_err(|e| format!("sic {i}: {e}"))?;
        check(parsed == profile_list_of(&sic), || {
            format!("sic {i} does not round-trip")
        })?;
    }
    let golden =
        fs::read(common::fixtures().join("profile/two_targets.list")).map_err(|e| e.to_string())?;
    let emitted = emit_profile_list(&two_target_sic());
    check(emitted.as_bytes() == golden.as_slice(), || {
        format!("golden mismatch:\n{emitted}")
    })?;
    Ok("200 round trips, golden bytes identical".into())
}

fn two_target_sic() -> sicov::SelectiveInstrumentationContext {
    use sicov::scan::{Builtin, QualifiedName, UnqualifiedName};
    use sicov::{FunctionSignature, FunctionSpan, TypeExpr};
    let resize = FunctionSpan {
        signature: FunctionSignature::new(
            QualifiedName::new(
                ["ns", "Widget"],
                UnqualifiedName::Identifier("resize".into()),
            ),
            vec![
                TypeExpr::Builtin(Builtin::UnsignedLong),
                TypeExpr::Builtin(Builtin::Bool),
            ],
        ),
        ..gen::span("src/widget.cpp", "resize", 12, 18)
    };
    let go = FunctionSpan {
        is_template: true,
        ..gen::span("src/widget.cpp", "go", 20, 24)
    };
    let targets = [resize, go]
        .iter()
        .map(sicov::sic::FunctionTarget::from_span)
        .collect();
    sicov::SelectiveInstrumentationContext::new("3f2a9c1", targets).unwrap()
}

fn model_numbers() -> Outcome {
    use InstrumentationMode::{Fe, Ir};
    let m = OverheadModel::default();
    let fe = estimate_tcpu(&m, Fe, 0.0078);
    let ir = estimate_tcpu(&m, Ir, 0.00715);
    check((fe - 2.0).abs() <= 0.01, || format!("t_CPU FE {fe}"))?;
    check((ir - 2.0).abs() <= 0.01, || format!("t_CPU IR {ir}"))?;
    let per = estimate_per(1, &m);
    check(per == 0.0833, || format!("PER(1) {per}"))?;
    let budget = estimate_commit_budget(&m, Fe, 5.0e-6, BudgetLimit::IfrCap(0.01))
        .map_err(|e| e.to_string())?;
    check(budget == 2000, || format!("commit budget {budget}"))?;
    let table = FpsReference::default();
    let fps_fe = fps_reference(&table, Fe, ContextKind::Full).map_err(|e| e.to_string())?;
    let fps_ir = fps_reference(&table, Ir, ContextKind::Full).map_err(|e| e.to_string())?;
    check(fps_fe == 0.297 && fps_ir == 0.369, || {
        format!("fps {fps_fe} {fps_ir}")
    })?;
    Ok(format!(
        "t_CPU {fe:.4}/{ir:.4}, PER {per}, budget {budget}, fps {fps_fe}/{fps_ir}"
    ))
}

fn run_cli(args: &[&str], stdin: &[u8]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut input = stdin;
    let code = sicov::cli::run(
        std::iter::once("sicov").chain(args.iter().copied()),
        &mut input,
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8_lossy(&out).into(),
        String::from_utf8_lossy(&err).into(),
    )
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let fx = common::fixtures();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let repo = fx.join("repo");
    let sources = walk(&repo.join("src"));
    let functions: usize = sources
        .iter()
        .map(|f| scan_file(&fs::read_to_string(f).unwrap(), "x.cpp").map_or(0, |s| s.len()))
        .sum();
    check(sources.len() >= 10 && functions >= 40, || {
        format!("fixture has {} files, {functions} functions", sources.len())
    })?;
    let diff = fs::read(fx.join("commit.diff")).map_err(|e| e.to_string())?;
    let out_dir = dir.path().to_str().unwrap();
    let (code, _, err) = run_cli(
        &[
            "extract",
            "--repo",
            repo.to_str().unwrap(),
            "--out",
            out_dir,
        ],
        &diff,
    );
    check(code == 0, || format!("extract exited {code}: {err}"))?;
    let commit = "dd4f444abdf54121586a824536f56275d8838db8";
    let list =
        fs::read_to_string(dir.path().join(format!("{commit}.list"))).map_err(|e| e.to_string())?;
    let expected = fs::read_to_string(fx.join("expected.list")).map_err(|e| e.to_string())?;
    check(list == expected, || format!("list differs:\n{list}"))?;

    let sic = dir.path().join(format!("{commit}.sic.json"));
    let store = dir.path().join("store");
    let (code, out, err) = run_cli(
        &[
            "--porcelain",
            "report",
            "ingest",
            "--sic",
            sic.to_str().unwrap(),
            "--records",
            fx.join("records.txt").to_str().unwrap(),
            "--build-id",
            "acceptance",
            "--store",
            store.to_str().unwrap(),
        ],
        b"",
    );
    check(code == 0, || format!("ingest exited {code}: {err}"))?;
    let want = (4.0f64 / 6.0).to_string();
    check(out.contains(&format!("commit_coverage={want}\n")), || {
        format!("report:\n{out}")
    })?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} files/{functions} functions, list matches, coverage 4/6, {elapsed:?}",
        sources.len()
    ))
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap().flatten() {
        let path = entry.path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else if path.extension().is_some_and(|e| e == "cpp") {
            out.push(path);
        }
    }
    out
}

fn scanner_ground_truth() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a11);
    let units: Vec<_> = (0..500).map(|_| cppgen::generate(&mut rng)).collect();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let mut bytes = Vec::new();
        for (i, unit) in units.iter().enumerate() {
            let spans = scan_file(&unit.text, "gen.cpp").map_err(|e| format!("unit {i}: {e}"))?;
            check(observed(&spans) == unit.expected, || {
                format!("unit {i} differs from ground truth")
            })?;
            bytes.extend(serde_json::to_vec(&spans).unwrap());
        }
        runs.push(bytes);
    }
    check(runs[0] == runs[1], || "runs differ".into())?;
    let spans: usize = units.iter().map(|u| u.expected.len()).sum();
    Ok(format!(
        "500 files, {spans} spans exact, double run identical"
    ))
}

fn coverage_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let id = BuildId::new("acceptance").unwrap();
    for i in 0..1000 {
        let sic = gen::sic(&mut rng);
        let records = gen::records(&mut rng, &sic);
        let report = build_report(&sic, &records, id.clone());
        let c = report.commit_coverage;
        check((0.0..=1.0).contains(&c), || {
            format!("set {i}: coverage {c}")
        })?;
        let (covered, total) = gen::coverage_oracle(&sic, &records);
        let want = if total == 0 {
            0.0
        } else {
            covered as f64 / total as f64
        };
        check(c == want, || {
            format!("set {i}: coverage {c}, oracle {want}")
        })?;
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut rng);
        check(build_report(&sic, &shuffled, id.clone()) == report, || {
            format!("set {i}: permutation")
        })?;
        let split = gen::split(&mut rng, &records);
        check(build_report(&sic, &split, id.clone()) == report, || {
            format!("set {i}: splitting")
        })?;
    }
    Ok("1000 record sets: bound, permutation, splitting".into())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("mangling oracle equivalence", mangling_corpus),
        ("overlap-rule oracle", overlap_rule),
        ("profile-list format", profile_format),
        ("model reproduction", model_numbers),
        ("end-to-end pipeline", end_to_end),
        ("scanner ground truth", scanner_ground_truth),
        ("coverage arithmetic invariants", coverage_invariants),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", n + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
