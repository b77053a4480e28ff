//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure or time-bound overrun.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use aoci::ablation::{apply_ablation, AblationVariant};
use aoci::filter::PathFilter;
use aoci::grammar::tag::{check_decoded, decode_tag, encode_tag};
use aoci::grammar::{format_code_entry, format_table_entry, parse_index_bytes};
use aoci::incremental::{apply_update, plan_update, StalenessStore};
use aoci::metrics::{index_stats, index_tokens, score_what, score_where, TokenEstimator};
use aoci::model::Dimension;
use aoci::reference::{
    reference_dictionary, sample_document, SAMPLE_AUTH, SAMPLE_CONFIG, SAMPLE_ORG_REPO, USERS_TABLE,
};
use aoci::scaffolder::{scaffold, ScaffoldRules};
use aoci::validator::{check_coverage, has_errors, validate_index, RefResolver};
use aoci::{parse_index, serialize_index, ChangeRecord, ChangeSet, CodeEntry, DecodedTag, EntryTag, Index};
use common::{
    random_decoded, random_dictionary, random_index, random_index_with, rng, write_synthetic_repo, IndexShape,
    SYNTHETIC_RULES,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn golden_sample() -> Outcome {
    let text = sample_document();
    let index = parse_index(&text).map_err(|e| e.to_string())?;
    let full = |layer: &str, module: &str, features: &[&str], scale: &str| {
        Some(EntryTag::Full(DecodedTag {
            layer: layer.into(),
            module: module.into(),
            importance: 9,
            features: features.iter().map(|s| s.to_string()).collect(),
            scale: Some(scale.into()),
        }))
    };
    let expected = [
        (
            "auth.go",
            full("W", "A", &["J"], "M"),
            "JWT authentication middleware",
            vec!["pkg/jwt", "model/user"],
        ),
        (
            "org_repo.go",
            full("P", "O", &["N", "T"], "M"),
            "organizational data access",
            vec!["model/org"],
        ),
        (
            "config.yaml",
            full("C", "C", &[], "T"),
            "main configuration",
            vec!["internal/config/config.go"],
        ),
    ];
    ensure!(index.code_entries().len() == 3, "expected 3 code entries");
    for (entry, (path, tag, function, relations)) in index.code_entries().iter().zip(&expected) {
        ensure!(
            entry.path == *path && entry.tag == *tag,
            "{path}: tag decomposition {:?}",
            entry.tag
        );
        ensure!(entry.function == *function, "{path}: F = {:?}", entry.function);
        ensure!(entry.relations == *relations, "{path}: R = {:?}", entry.relations);
        ensure!(entry.api.is_empty(), "{path}: A should be empty");
    }
    let users = &index.table_entries()[0];
    let tag = users.tag.as_ref().ok_or("users table lost its tag")?;
    ensure!(
        (
            tag.domain.as_str(),
            tag.ttype.as_str(),
            tag.scale.as_str(),
            tag.features.as_slice()
        ) == ("U", "M", "M", &["GUID".to_string()][..]),
        "users tag {tag:?}"
    );
    let lines: Vec<String> = index.code_entries().iter().map(format_code_entry).collect();
    ensure!(
        lines == [SAMPLE_AUTH, SAMPLE_ORG_REPO, SAMPLE_CONFIG],
        "entry lines differ"
    );
    ensure!(format_table_entry(users) == USERS_TABLE, "table line differs");
    ensure!(
        serialize_index(&index) == text,
        "document does not reserialize byte-identically"
    );
    ensure!(
        serialize_index(&parse_index(&fixture("sample.aoci")).unwrap()) == fixture("sample.aoci"),
        "clean fixture differs"
    );
    Ok("3 entries + users table exact, byte-identical".into())
}

fn tag_codec() -> Outcome {
    let dict = reference_dictionary();
    let d = decode_tag("WA9JM", &dict).map_err(|e| e.to_string())?;
    let labels = (
        dict.label(Dimension::A, &d.layer),
        dict.label(Dimension::B, &d.module),
        d.importance,
        d.features
            .iter()
            .map(|f| dict.label(Dimension::D, f).unwrap_or("?"))
            .collect::<Vec<_>>(),
        d.scale.as_deref().and_then(|s| dict.label(Dimension::E, s)),
    );
    ensure!(
        labels == (Some("Middleware"), Some("Auth"), 9, vec!["JWT"], Some("Medium")),
        "WA9JM decoded to {labels:?}"
    );

    let mut r = rng(0xAC2);
    let mut checked = 0;
    let mut ambiguous = 0;
    let mut random_dicts = 0;
    while checked < 10_000 {
        // alternate between generated dictionaries and the reference one
        let (dict, from_reference) = if checked % 2 == 0 {
            random_dicts += 1;
            (random_dictionary(&mut r), false)
        } else {
            (dict.clone(), true)
        };
        let decoded = random_decoded(&mut r, &dict, 0.2);
        if from_reference && check_decoded(&decoded, &dict).is_err() {
            ambiguous += 1;
            continue;
        }
        let raw = encode_tag(&decoded);
        let back = decode_tag(&raw, &dict).map_err(|e| format!("{raw}: {e}"))?;
        ensure!(back == decoded, "decode(encode({decoded:?})) = {back:?}");
        ensure!(encode_tag(&back) == raw, "encode(decode({raw})) differs");
        checked += 1;
    }
    Ok(format!(
        "WA9JM = (Middleware, Auth, 9, [JWT], Medium); 10000 tags round-trip ({random_dicts} generated dictionaries, {ambiguous} ambiguous reference draws skipped)"
    ))
}

fn touch_count() -> Outcome {
    let mut r = rng(0xAC3);
    let mut total_k = 0;
    for trial in 0..200 {
        let n = r.random_range(50..=500);
        let k = r.random_range(1..=10);
        let index = random_index(
            &mut r,
            IndexShape {
                entries: n,
                ..IndexShape::default()
            },
        );
        let mut paths: Vec<&str> = index.code_entries().iter().map(|e| e.path.as_str()).collect();
        paths.shuffle(&mut r);
        let changes = ChangeSet::new(paths[..k].iter().map(|p| ChangeRecord::modified(p)).collect()).unwrap();
        let plan = plan_update(&index, &changes);
        let drafts: BTreeMap<String, CodeEntry> = plan
            .regenerate
            .iter()
            .map(|p| {
                let mut e = index.entry(p).unwrap().clone();
                e.synopsis = format!("regenerated in trial {trial}");
                (p.clone(), e)
            })
            .collect();
        let out = apply_update(&index, &plan, Some(&drafts), &mut StalenessStore::new()).map_err(|e| e.to_string())?;
        let (before, after) = (serialize_index(&index), serialize_index(&out.index));
        let changed = before.lines().zip(after.lines()).filter(|(a, b)| a != b).count();
        ensure!(
            before.lines().count() == after.lines().count(),
            "trial {trial}: line count changed"
        );
        ensure!(changed == k, "trial {trial}: n={n} k={k} but {changed} lines changed");
        total_k += k;
    }
    Ok(format!(
        "200 trials, {total_k} modified entries, each trial touched exactly k lines"
    ))
}

fn footnote_rule() -> Outcome {
    let dict = reference_dictionary();
    let mut r = rng(0xAC4);
    let mut report = Vec::new();
    for (entries, e_less) in [(307, 8), (100, 0), (100, 25), (50, 50)] {
        let base = random_index_with(
            &mut r,
            dict.clone(),
            IndexShape {
                entries,
                scale_absent: 0.0,
                tagged: 1.0,
                ..IndexShape::default()
            },
        );
        let mut code: Vec<CodeEntry> = base.code_entries().to_vec();
        for e in &mut code {
            e.tag = None;
            loop {
                let d = random_decoded(&mut r, &dict, 0.0);
                let mut without = d.clone();
                without.scale = None;
                if check_decoded(&d, &dict).is_ok() && check_decoded(&without, &dict).is_ok() {
                    e.tag = Some(EntryTag::Full(d));
                    break;
                }
            }
        }
        let mut picks: Vec<usize> = (0..entries).collect();
        picks.shuffle(&mut r);
        let chosen: BTreeSet<usize> = picks[..e_less].iter().copied().collect();
        for &i in &chosen {
            if let Some(EntryTag::Full(d)) = &mut code[i].tag {
                d.scale = None;
            }
        }
        let index = base.with_code_entries(code).map_err(|e| e.to_string())?;
        let stats = index_stats(&index, None, TokenEstimator::Chars4);
        ensure!(
            stats.scale_absent == e_less,
            "stats count {} E-less, expected {e_less}",
            stats.scale_absent
        );
        let out = apply_ablation(&index, AblationVariant::WoAbcd, false);
        let removed: BTreeSet<usize> = out
            .code_entries()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.tag.is_none())
            .map(|(i, _)| i)
            .collect();
        ensure!(
            removed == chosen,
            "{entries} entries: bracket removed on {removed:?}, expected {chosen:?}"
        );
        let kept_scale_only = out
            .code_entries()
            .iter()
            .filter(|e| matches!(e.tag, Some(EntryTag::ScaleOnly(_))))
            .count();
        ensure!(kept_scale_only == entries - e_less, "scale-only tags {kept_scale_only}");
        report.push(format!("{entries}/{e_less}"));
    }
    Ok(format!(
        "bracket removals match E-less entries exactly (entries/E-less: {})",
        report.join(", ")
    ))
}

fn token_monotonicity() -> Outcome {
    let mut r = rng(0xAC5);
    for i in 0..100 {
        let entries = r.random_range(0..80);
        let index = random_index(
            &mut r,
            IndexShape {
                entries,
                dangling: true,
                ..IndexShape::default()
            },
        );
        for variant in AblationVariant::ALL {
            for tables in [false, true] {
                let ablated = apply_ablation(&index, variant, tables);
                for est in [TokenEstimator::Chars4, TokenEstimator::Words13] {
                    let (a, o) = (index_tokens(&ablated, est), index_tokens(&index, est));
                    ensure!(a <= o, "index {i} {variant} tables={tables} {est}: {a} > {o}");
                }
            }
        }
    }
    Ok("100 indexes x 5 variants x 2 estimators, never larger".into())
}

fn scoring_oracles() -> Outcome {
    let alphabet = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
    let mut r = rng(0xAC6);
    for i in 0..1000 {
        let pred: Vec<&str> = (0..r.random_range(0..8))
            .map(|_| *alphabet.choose(&mut r).unwrap())
            .collect();
        let truth: Vec<&str> = (0..r.random_range(0..8))
            .map(|_| *alphabet.choose(&mut r).unwrap())
            .collect();
        let p: BTreeSet<&str> = pred.iter().copied().collect();
        let t: BTreeSet<&str> = truth.iter().copied().collect();
        let expected = match (p.len(), t.len()) {
            (0, 0) => 1.0,
            (0, _) | (_, 0) => 0.0,
            (np, nt) => (2 * p.intersection(&t).count()) as f64 / (np + nt) as f64,
        };
        let got = score_what(&pred, &truth).f1;
        ensure!(
            got == expected,
            "pair {i}: {pred:?} vs {truth:?} scored {got}, oracle {expected}"
        );
    }

    let bases = [
        "src/auth.go",
        "middleware/auth.go",
        "pkg/jwt/jwt.go",
        "web/src/App.vue",
        "config.yaml",
    ];
    let mut cases: Vec<(String, String, u8)> = Vec::new();
    for base in bases {
        cases.push((base.to_string(), base.to_string(), 1));
        cases.push((format!("./{base}"), base.to_string(), 1));
        cases.push((base.replace('/', "\\"), base.to_string(), 1));
        cases.push((base.replace('/', "//"), format!("./{base}"), 1));
        cases.push((format!(".\\{}", base.replace('/', "\\\\")), base.to_string(), 1));

        cases.push((base.to_uppercase(), base.to_string(), 0));
        cases.push((format!("x/{base}"), base.to_string(), 0));
        cases.push((format!("{base}.bak"), base.to_string(), 0));
        cases.push((base[..1].to_uppercase() + &base[1..], base.to_string(), 0));
        cases.push((base.rsplit('/').next().unwrap().to_string() + "x", base.to_string(), 0));
    }
    ensure!(cases.len() == 50, "where table has {} cases", cases.len());
    for (pred, truth, want) in &cases {
        let got = score_where(pred, truth).map_err(|e| e.to_string())?;
        ensure!(
            got == *want,
            "score_where({pred:?}, {truth:?}) = {got}, expected {want}"
        );
    }
    Ok("1000 F1 pairs equal the counting oracle; 50 Where cases (25 equivalent, 25 differing) correct".into())
}

fn sole_targets(index: &Index) -> Vec<String> {
    let resolver = RefResolver::for_index(index);
    let mut out: Vec<String> = index
        .code_entries()
        .iter()
        .flat_map(|e| e.relations.iter().map(move |r| (e.path.as_str(), r)))
        .filter_map(|(host, r)| match resolver.resolve(r)[..] {
            [only] if only != host => Some(only.to_string()),
            _ => None,
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn validator_completeness() -> Outcome {
    let clean = parse_index(&fixture("sample.aoci")).map_err(|e| e.to_string())?;
    ensure!(validate_index(&clean).is_empty(), "fixture is not clean");
    let targets = sole_targets(&clean);
    let mut r = rng(0xAC7);
    let mut hit = BTreeSet::new();
    for trial in 0..100 {
        let victim = targets.choose(&mut r).unwrap();
        let kept = clean
            .code_entries()
            .iter()
            .filter(|e| e.path != *victim)
            .cloned()
            .collect();
        let issues = validate_index(&clean.with_code_entries(kept).unwrap());
        ensure!(
            issues.iter().any(|i| i.rule == "E2"),
            "trial {trial}: deleting {victim} raised no E2"
        );
        hit.insert(victim.clone());
    }
    for trial in 0..100 {
        let index = random_index(
            &mut r,
            IndexShape {
                entries: 40,
                ..IndexShape::default()
            },
        );
        ensure!(
            !has_errors(&validate_index(&index)),
            "generated index {trial} is not clean"
        );
        if let Some(victim) = sole_targets(&index).choose(&mut r) {
            let kept = index
                .code_entries()
                .iter()
                .filter(|e| e.path != *victim)
                .cloned()
                .collect();
            let issues = validate_index(&index.with_code_entries(kept).unwrap());
            ensure!(
                issues.iter().any(|i| i.rule == "E2"),
                "generated {trial}: deleting {victim} raised no E2"
            );
        }
    }
    Ok(format!(
        "100 fixture deletions over {} referenced entries + 100 generated indexes all raise E2",
        hit.len()
    ))
}

fn scale_smoke() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = write_synthetic_repo(dir.path(), 1000, 0xAC8);
    let started = Instant::now();
    let rules = ScaffoldRules::parse(SYNTHETIC_RULES).map_err(|e| e.to_string())?;
    let out = scaffold(dir.path(), &rules, &PathFilter::allow_all()).map_err(|e| e.to_string())?;
    let text = serialize_index(&out.index);
    let index = parse_index(&text).map_err(|e| e.to_string())?;
    let issues = validate_index(&index);
    let coverage = check_coverage(&index, &files, &[], &[]).map_err(|e| e.to_string())?;
    let stats = index_stats(&index, Some(out.repo_loc), TokenEstimator::Chars4);
    let elapsed = started.elapsed();
    let errors = issues
        .iter()
        .filter(|i| i.severity == aoci::validator::Severity::Error)
        .count();
    ensure!(
        errors == 0,
        "{errors} Error issues, first: {}",
        issues
            .iter()
            .find(|i| i.severity == aoci::validator::Severity::Error)
            .unwrap()
    );
    ensure!(
        coverage.is_complete() && coverage.indexed_files == 1000,
        "coverage {:?}",
        (
            coverage.indexed_files,
            coverage.unindexed.len(),
            coverage.orphan_entries.len()
        )
    );
    ensure!(stats.code_entries == 1000, "stats saw {} entries", stats.code_entries);
    ensure!(
        elapsed < Duration::from_secs(10),
        "scaffold + check + stats took {elapsed:?}"
    );
    Ok(format!(
        "1000 files scaffolded, checked and summarized in {:.2}s; coverage 1000/1000, 0 errors, {} warnings",
        elapsed.as_secs_f64(),
        issues.len()
    ))
}

fn fuzz() -> Outcome {
    let mut r = rng(0xAC9);
    let seeds: Vec<Vec<u8>> = vec![sample_document().into_bytes(), fixture("sample.aoci").into_bytes()];
    let mut rejected = 0;
    for i in 0..10_000 {
        let bytes: Vec<u8> = match i % 3 {
            0 => (0..r.random_range(0..300)).map(|_| r.random()).collect(),
            1 => {
                let mut b = seeds.choose(&mut r).unwrap().clone();
                for _ in 0..r.random_range(1..8) {
                    let at = r.random_range(0..b.len());
                    b[at] = r.random();
                }
                b
            }
            _ => {
                let alphabet = b"#@AOCIDMBT CODE[]:|-,=+9\n\r\tF:R:A:S:\xc3\xa9";
                (0..r.random_range(0..200))
                    .map(|_| *alphabet.choose(&mut r).unwrap())
                    .collect()
            }
        };
        let result = panic::catch_unwind(AssertUnwindSafe(|| parse_index_bytes(&bytes)));
        match result {
            Err(_) => return Err(format!("input {i} panicked: {bytes:?}")),
            Ok(Ok(_)) => {}
            Ok(Err(e)) => {
                rejected += 1;
                let lines = bytes.split(|b| *b == b'\n').count();
                ensure!(
                    e.line >= 1 && e.line <= lines.max(1) && e.column >= 1,
                    "input {i}: unlocated error {e:?}"
                );
            }
        }
    }
    Ok(format!("10000 inputs, no panics, {rejected} rejections all located"))
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    bound: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: "AC1",
            name: "golden parse/serialize",
            bound: Duration::from_secs(1),
            run: golden_sample,
        },
        Criterion {
            id: "AC2",
            name: "tag codec",
            bound: Duration::from_secs(5),
            run: tag_codec,
        },
        Criterion {
            id: "AC3",
            name: "incremental touch-count",
            bound: Duration::from_secs(30),
            run: touch_count,
        },
        Criterion {
            id: "AC4",
            name: "ablation footnote rule",
            bound: Duration::from_secs(5),
            run: footnote_rule,
        },
        Criterion {
            id: "AC5",
            name: "token monotonicity",
            bound: Duration::from_secs(10),
            run: token_monotonicity,
        },
        Criterion {
            id: "AC6",
            name: "scoring oracle equivalence",
            bound: Duration::from_secs(5),
            run: scoring_oracles,
        },
        Criterion {
            id: "AC7",
            name: "validator completeness",
            bound: Duration::from_secs(10),
            run: validator_completeness,
        },
        Criterion {
            id: "AC8",
            name: "scale smoke test",
            bound: Duration::from_secs(10),
            run: scale_smoke,
        },
        Criterion {
            id: "AC9",
            name: "fuzz robustness",
            bound: Duration::from_secs(60),
            run: fuzz,
        },
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for c in &criteria {
        let started = Instant::now();
        let outcome = panic::catch_unwind(c.run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.bound => Err(format!("{detail}; exceeded bound of {:?}", c.bound)),
            other => other,
        };
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{status} {} {} [{:.2}s / {}s]: {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.bound.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
