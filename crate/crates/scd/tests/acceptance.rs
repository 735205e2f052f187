//! Acceptance gate: one test per shipping criterion, each printing a
//! `PASS:` line (run with `--nocapture` to see them). These are the
//! checks the toolchain must keep green to be considered working.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use regex::Regex;
use scdl::analyze::{evaluate_aggregates, Valuation};
use scdl::ast::{structural_eq, ExplodeRef};
use scdl::corpus::parse_manifest;
use scdl::export::{export_dot, export_json};
use scdl::format::format as render;
use scdl::resolve::{resolve, FsLoader, MapLoader};
use scdl::span::SourceSpan;
use scdl::testgen;
use scdl::validate::{brute_force_bipartition_check, check_bww_system, classify_boundary};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn scd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scd"))
        .args(args)
        .stdin(Stdio::null())
        .output()
        .expect("binary runs")
}

fn scd_files(dir: &Path, out: &mut Vec<PathBuf>) {
    for item in fs::read_dir(dir).expect("corpus dir readable") {
        let path = item.expect("dir entry").path();
        if path.is_dir() {
            scd_files(&path, out);
        } else if path.extension().is_some_and(|e| e == "scd") {
            out.push(path);
        }
    }
}

#[test]
fn criterion_1_corpus_conformance() {
    let dir = corpus_dir();
    let manifest = fs::read_to_string(dir.join("manifest.txt")).expect("manifest readable");
    let entries = parse_manifest(&manifest).expect("manifest parses");
    assert!(entries.len() >= 5);

    let started = Instant::now();
    for entry in &entries {
        let root = dir.join(&entry.root).to_string_lossy().to_string();
        let output = scd(&["check", "--json-diagnostics", &root]);
        let stderr = String::from_utf8(output.stderr).expect("stderr is UTF-8");
        let mut codes = Vec::new();
        let mut any_error = false;
        for line in stderr.lines() {
            let value: serde_json::Value = serde_json::from_str(line).expect("JSON line");
            codes.push(value["code"].as_str().expect("code").to_string());
            any_error |= value["severity"] == "error";
        }
        codes.sort();
        assert_eq!(codes, entry.expected_codes, "model `{}`", entry.name);
        let expected_status = if any_error { 1 } else { 0 };
        assert_eq!(output.status.code(), Some(expected_status), "model `{}`", entry.name);
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "conformance took {elapsed:?}");
    println!("PASS: criterion 1 — corpus conformance, {} models in {elapsed:?}", entries.len());
}

#[test]
fn criterion_2_connectivity_routes_agree() {
    let mut rng = StdRng::seed_from_u64(0x5cd_0002);
    let started = Instant::now();
    let (mut connected, mut split) = (0u32, 0u32);
    for case in 0..1000 {
        let (components, edges) = testgen::random_connectivity_instance(&mut rng);
        let union_find_says = check_bww_system(&components, &edges).is_none();
        let brute_force_says = brute_force_bipartition_check(components.len(), &edges);
        assert_eq!(
            union_find_says, brute_force_says,
            "case {case}: routes disagree for n={} edges={edges:?}",
            components.len()
        );
        if union_find_says {
            connected += 1;
        } else {
            split += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "equivalence took {elapsed:?}");
    assert!(connected >= 200 && split >= 200, "one-sided sample: {connected}/{split}");
    println!(
        "PASS: criterion 2 — both connectivity routes agree on 1000 systems \
         ({connected} connected, {split} split) in {elapsed:?}"
    );
}

#[test]
fn criterion_3_boundary_partition_law() {
    let mut rng = StdRng::seed_from_u64(0x5cd_0003);
    for case in 0..1000 {
        let sys = testgen::random_boundary_system(&mut rng);
        let (boundary, internal) = classify_boundary(&sys);
        let boundary_set: BTreeSet<&String> = boundary.iter().collect();
        let internal_set: BTreeSet<&String> = internal.iter().collect();
        assert!(boundary_set.is_disjoint(&internal_set), "case {case}: halves overlap");
        let mut union: Vec<String> = boundary.iter().chain(&internal).cloned().collect();
        union.sort();
        let mut composition = sys.composition.clone();
        composition.sort();
        assert_eq!(union, composition, "case {case}: halves do not cover the composition");
    }

    let root = corpus_dir().join("cell/root.scd");
    let model = resolve(&root.to_string_lossy(), &FsLoader).expect("cell resolves");
    let cell = model.root().unit.system("Cell").expect("Cell declared");
    let (boundary, internal) = classify_boundary(cell);
    assert_eq!(boundary, vec!["membrane".to_string()]);
    assert_eq!(internal, vec!["cytoplasm".to_string()]);
    println!(
        "PASS: criterion 3 — boundary/internal partition law on 1000 systems; \
         cell corpus splits into {{membrane}} / {{cytoplasm}}"
    );
}

#[test]
fn criterion_4_formatter_round_trip() {
    let mut files = Vec::new();
    scd_files(&corpus_dir(), &mut files);
    assert!(files.len() >= 8);
    for path in &files {
        let source = fs::read_to_string(path).expect("file readable");
        let unit = scdl::parse(&source, &path.to_string_lossy()).expect("corpus file parses");
        let printed = render(&unit);
        assert_eq!(printed, source, "{} is not canonical", path.display());
        let reparsed = scdl::parse(&printed, "roundtrip.scd").expect("formatted output parses");
        assert!(structural_eq(&unit, &reparsed), "{} round trip changed", path.display());
        assert_eq!(render(&reparsed), printed, "{} format not idempotent", path.display());
    }

    let mut rng = StdRng::seed_from_u64(0x5cd_0004);
    for case in 0..500 {
        let unit = testgen::random_unit(&mut rng);
        let printed = render(&unit);
        let reparsed = scdl::parse(&printed, "gen.scd")
            .unwrap_or_else(|d| panic!("case {case}: formatted output fails to parse: {d:?}\n{printed}"));
        assert!(structural_eq(&unit, &reparsed), "case {case}: structure changed:\n{printed}");
        assert_eq!(render(&reparsed), printed, "case {case}: format not idempotent");
    }
    println!(
        "PASS: criterion 4 — parse∘format is identity and format is idempotent \
         on {} corpus files and 500 generated models",
        files.len()
    );
}

#[test]
fn criterion_5_export_determinism() {
    let dir = corpus_dir();
    let manifest = fs::read_to_string(dir.join("manifest.txt")).expect("manifest readable");
    let entries = parse_manifest(&manifest).expect("manifest parses");
    let mut documents = 0usize;
    for entry in &entries {
        let root = dir.join(&entry.root).to_string_lossy().to_string();
        let first = resolve(&root, &FsLoader).expect("corpus roots resolve");
        let second = resolve(&root, &FsLoader).expect("corpus roots resolve");
        assert_eq!(export_json(&first), export_json(&second), "JSON differs for `{}`", entry.name);
        for unit_index in 0..first.units.len() {
            assert_eq!(
                export_dot(&first, unit_index),
                export_dot(&second, unit_index),
                "DOT differs for `{}` level {unit_index}",
                entry.name
            );
            documents += 1;
        }
        documents += 1;
    }
    println!("PASS: criterion 5 — {documents} exported documents byte-identical across runs");
}

#[test]
fn criterion_6_level_resolution_and_failure_modes() {
    let dir = corpus_dir().join("body-location");
    let read = |name: &str| fs::read_to_string(dir.join(name)).expect("corpus file readable");
    let (root_src, tissue_src, cell_src) = (read("root.scd"), read("tissue.scd"), read("cell.scd"));

    // The intact corpus resolves to a three-deep chain.
    let model = resolve(&dir.join("root.scd").to_string_lossy(), &FsLoader).expect("resolves");
    assert_eq!(model.units.len(), 3);
    assert_eq!(model.units[0].parent, None);
    assert_eq!(model.units[1].prefix, "Thorax.");
    assert_eq!(model.units[2].prefix, "Thorax.Lung.");
    assert!(model.symbols.contains_key("Thorax.Lung.Epithelium"));

    // A back-reference from the deepest unit makes exactly one cycle error.
    let mut cycled_unit = scdl::parse(&cell_src, "cell.scd").expect("parses");
    cycled_unit.systems[0].explode =
        Some(ExplodeRef { path: "root.scd".to_string(), span: SourceSpan::dummy() });
    let loader = MapLoader::new()
        .with("root.scd", &root_src)
        .with("tissue.scd", &tissue_src)
        .with("cell.scd", &render(&cycled_unit));
    let diags = resolve("root.scd", &loader).expect_err("cycle must not resolve");
    let codes: Vec<&str> = diags.iter().map(|d| d.code.as_str()).collect();
    assert_eq!(codes, ["E-LVL-002"], "{diags:?}");

    // Deleting a child system leaves exactly one unmatched component.
    let mut shrunk_unit = scdl::parse(&tissue_src, "tissue.scd").expect("parses");
    shrunk_unit.systems.retain(|s| s.name != "Pleura");
    let loader = MapLoader::new()
        .with("root.scd", &root_src)
        .with("tissue.scd", &render(&shrunk_unit))
        .with("cell.scd", &cell_src);
    let diags = resolve("root.scd", &loader).expect_err("missing system must not resolve");
    let codes: Vec<&str> = diags.iter().map(|d| d.code.as_str()).collect();
    assert_eq!(codes, ["E-LVL-003"], "{diags:?}");
    assert!(diags[0].message.contains("Pleura"), "{}", diags[0].message);

    println!(
        "PASS: criterion 6 — three-deep level tree; injected cycle → one E-LVL-002; \
         deleted child system → one E-LVL-003 naming Pleura"
    );
}

#[test]
fn criterion_7_aggregate_evaluation() {
    // Four leaves fold pairwise into two mid systems, then into the root:
    // 1,2 → 3 and 3,4 → 7, so the root total is 10.
    let tree = |systems: &str| format!("scd g {{ {systems} }}");
    let forward = tree(
        "conceptual system Root { composition { MidA; MidB; } structure { MidA -- MidB; } \
           properties { aggregate total: number = sum(components.total); } } \
         conceptual system MidA { composition { LeafOne; LeafTwo; } structure { LeafOne -- LeafTwo; } \
           properties { aggregate total: number = sum(components.w); } } \
         conceptual system MidB { composition { LeafThree; LeafFour; } structure { LeafThree -- LeafFour; } \
           properties { aggregate total: number = sum(components.w); } } \
         conceptual system LeafOne { properties { intrinsic w: number; } } \
         conceptual system LeafTwo { properties { intrinsic w: number; } } \
         conceptual system LeafThree { properties { intrinsic w: number; } } \
         conceptual system LeafFour { properties { intrinsic w: number; } }",
    );
    // The same model with every declaration and composition list reversed.
    let reversed = tree(
        "conceptual system LeafFour { properties { intrinsic w: number; } } \
         conceptual system LeafThree { properties { intrinsic w: number; } } \
         conceptual system LeafTwo { properties { intrinsic w: number; } } \
         conceptual system LeafOne { properties { intrinsic w: number; } } \
         conceptual system MidB { composition { LeafFour; LeafThree; } structure { LeafFour -- LeafThree; } \
           properties { aggregate total: number = sum(components.w); } } \
         conceptual system MidA { composition { LeafTwo; LeafOne; } structure { LeafTwo -- LeafOne; } \
           properties { aggregate total: number = sum(components.w); } } \
         conceptual system Root { composition { MidB; MidA; } structure { MidB -- MidA; } \
           properties { aggregate total: number = sum(components.total); } }",
    );

    let mut values = Valuation::new();
    values.set("LeafOne.w", 1.0);
    values.set("LeafTwo.w", 2.0);
    values.set("LeafThree.w", 3.0);
    values.set("LeafFour.w", 4.0);
    let mut results = Vec::new();
    for source in [&forward, &reversed] {
        let loader = MapLoader::new().with("g.scd", source);
        let model = resolve("g.scd", &loader).expect("fixture resolves");
        let evaluated = evaluate_aggregates(&model, &values).expect("fixture evaluates");
        assert_eq!(evaluated.get("MidA.total"), Some(&3.0));
        assert_eq!(evaluated.get("MidB.total"), Some(&7.0));
        assert_eq!(evaluated.get("Root.total"), Some(&10.0));
        results.push(evaluated);
    }
    assert_eq!(results[0], results[1], "declaration order changed a result");

    // The healthcare corpus counts its three declared genome variants.
    let root = corpus_dir().join("healthcare/root.scd");
    let model = resolve(&root.to_string_lossy(), &FsLoader).expect("healthcare resolves");
    let mut values = Valuation::new();
    values.set("Person.Mind.fitness", 0.6);
    values.set("Person.Body.fitness", 0.8);
    values.set("Person.Body.Organs.load", 2.25);
    values.set("Person.Body.Genome.load", 1.5);
    let evaluated = evaluate_aggregates(&model, &values).expect("healthcare evaluates");
    assert_eq!(evaluated.get("Person.Body.Variome.variantCount"), Some(&3.0));
    assert_eq!(evaluated.get("Person.Body.burden"), Some(&3.75));
    assert_eq!(evaluated.get("Person.vitality"), Some(&0.7));

    println!(
        "PASS: criterion 7 — nested folds 1,2,3,4 → 3,7 → 10; variantCount = 3; \
         results invariant under declaration order"
    );
}

#[test]
fn criterion_8_dot_count_conservation() {
    let dir = corpus_dir();
    let manifest = fs::read_to_string(dir.join("manifest.txt")).expect("manifest readable");
    let entries = parse_manifest(&manifest).expect("manifest parses");
    let mut levels = 0usize;
    for entry in &entries {
        let root = dir.join(&entry.root).to_string_lossy().to_string();
        let model = resolve(&root, &FsLoader).expect("corpus roots resolve");
        for (unit_index, resolved) in model.units.iter().enumerate() {
            let dot = export_dot(&model, unit_index);
            let nodes = dot.matches("label=\"«system»").count();
            let edges = dot.matches(" -- ").count();
            assert_eq!(nodes, resolved.unit.systems.len(), "`{}` level {unit_index}", entry.name);
            assert_eq!(edges, resolved.unit.associations.len(), "`{}` level {unit_index}", entry.name);
            levels += 1;
        }
        if entry.name == "healthcare" {
            let person_level = model.level_tree["Person"];
            let dot = export_dot(&model, person_level);
            assert_eq!(dot.matches("label=\"«system»").count(), 2);
            assert_eq!(dot.matches(" -- ").count(), 1);
        }
    }
    println!(
        "PASS: criterion 8 — DOT nodes = systems and edges = associations across {levels} levels; \
         healthcare drill level has 2 nodes, 1 edge"
    );
}

#[test]
fn criterion_9_cli_exit_codes_and_diagnostic_format() {
    let dir = tempfile::tempdir().expect("tempdir");
    let write = |name: &str, content: &[u8]| {
        let path = dir.path().join(name);
        fs::write(&path, content).expect("write");
        path.to_string_lossy().to_string()
    };
    let clean = write(
        "clean.scd",
        fs::read(corpus_dir().join("cell/root.scd")).expect("readable").as_slice(),
    );
    let messy = write("messy.scd", b"scd m{concrete system S{composition{a;}}}");
    let broken = write("broken.scd", b"scd m { concrete system { composition } !!");
    let junk = write("junk.bin", &[0xff, 0xfe, 0x80, b'x']);
    let values = write("vals.txt", b"Cell.mass = 1\n");

    let mut rng = StdRng::seed_from_u64(0x5cd_0009);
    let subcommands = ["check", "fmt", "export", "query", "bogus", ""];
    let pool: Vec<String> = [
        clean.as_str(),
        messy.as_str(),
        broken.as_str(),
        junk.as_str(),
        values.as_str(),
        "no-such-file.scd",
        "--json-diagnostics",
        "--deny-warnings",
        "--check",
        "--format",
        "json",
        "dot",
        "yaml",
        "--level",
        "Cell",
        "Person",
        "boundary",
        "drill",
        "eval",
        "--values",
        "--bogus-flag",
        "-x",
        "--",
        "",
        "🦀",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let mut invocations = 0u32;
    for _ in 0..220 {
        let mut args = Vec::new();
        if !rng.gen_bool(0.05) {
            args.push(subcommands[rng.gen_range(0..subcommands.len())].to_string());
            for _ in 0..rng.gen_range(0..6) {
                args.push(pool[rng.gen_range(0..pool.len())].clone());
            }
        }
        let output = Command::new(env!("CARGO_BIN_EXE_scd"))
            .args(&args)
            .stdin(Stdio::null())
            .output()
            .expect("binary runs");
        let code = output.status.code().unwrap_or_else(|| panic!("signal death on {args:?}"));
        assert!((0..=2).contains(&code), "args {args:?} exited {code}");
        invocations += 1;
    }

    // Every plain-text diagnostic line has the fixed shape.
    let line_shape = Regex::new(r"^.+:\d+:\d+: (error|warning)\[[EW]-[A-Z]{3,4}-\d{3}\]: .+$")
        .expect("regex compiles");
    let warning_model = write(
        "warn.scd",
        b"scd m {\n  concrete system S {\n    composition {\n      a;\n    }\n  }\n}\n",
    );
    let broken_corpus = corpus_dir().join("coronavirus-broken/root.scd");
    let mut checked_lines = 0usize;
    for file in [broken_corpus.to_string_lossy().as_ref(), broken.as_str(), warning_model.as_str()] {
        let output = scd(&["check", file]);
        let stderr = String::from_utf8(output.stderr).expect("stderr is UTF-8");
        for line in stderr.lines() {
            assert!(line_shape.is_match(line), "malformed diagnostic line: {line}");
            checked_lines += 1;
        }
    }
    assert!(checked_lines >= 3, "expected several diagnostic lines, saw {checked_lines}");

    println!(
        "PASS: criterion 9 — {invocations} fuzzed invocations all exited 0, 1 or 2; \
         {checked_lines} diagnostic lines match the fixed format"
    );
}
