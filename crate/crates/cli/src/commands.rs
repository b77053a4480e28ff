use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use aoci::ablation::{ablation_report, apply_ablation};
use aoci::filter::PathFilter;
use aoci::grammar::tag::decode_entry_tag;
use aoci::grammar::{decode_table_tag, describe_tag, format_header, parse_document, ParseMode};
use aoci::incremental::{apply_update, detect_stale, parse_changeset, plan_update, StalenessStore};
use aoci::metrics::{index_stats, score_what, score_where, TokenEstimator};
use aoci::model::{canonical_path, Dimension};
use aoci::scaffolder::{emit_prompt_pack, scaffold, scan_repo, write_prompt_packs, ScaffoldError, ScaffoldRules};
use aoci::validator::{check_coverage, has_errors, validate_index_with, ValidateOptions};
use aoci::{parse_index, serialize_index, CodeEntry, Index};
use serde_json::json;

use crate::error::{CliError, Status};
use crate::io::{print, read_index, read_text, write_text, IndexLock, STDIO};
use crate::{
    AblateArgs, CheckArgs, Cli, Command, DecodeTagArgs, FmtArgs, Format, ScaffoldArgs, ScoreArgs, ScoreKind, StatsArgs,
    UpdateArgs,
};

pub fn run(cli: Cli) -> Result<Status, CliError> {
    let est = cli.estimator;
    match cli.command {
        Command::Check(args) => check(args, est),
        Command::Fmt(args) => fmt(args),
        Command::Scaffold(args) => scaffold_cmd(args),
        Command::Update(args) => update(args),
        Command::Ablate(args) => ablate(args, est),
        Command::Stats(args) => stats(args, est),
        Command::Score(args) => score(args),
        Command::DecodeTag(args) => decode(args),
    }
}

fn filter(include: &[String], exclude: &[String]) -> Result<PathFilter, CliError> {
    PathFilter::new(include, exclude).map_err(|e| CliError::usage(e.to_string()))
}

fn nonblank_lines(text: &str) -> Vec<&str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

fn check(args: CheckArgs, estimator: TokenEstimator) -> Result<Status, CliError> {
    let text = read_text(&args.index)?;
    let mode = if args.strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    };
    let doc = parse_document(&text, mode).map_err(|source| CliError::Parse {
        path: args.index.clone(),
        source,
    })?;

    let mut issues = validate_index_with(&doc.index, ValidateOptions { estimator });
    if let Some(list) = &args.files {
        let listing = read_text(list)?;
        let files: Vec<String> = nonblank_lines(&listing).into_iter().map(String::from).collect();
        let coverage = check_coverage(&doc.index, &files, &args.include, &args.exclude)
            .map_err(|e| CliError::usage(e.to_string()))?;
        issues.extend(coverage.issues());
    }

    let mut out = String::new();
    for err in &doc.errors {
        out += &match args.format {
            Format::Text => format!("error parse {}:{err}\n", args.index),
            Format::Json => json!({"severity": "error", "rule": "parse", "line": err.line, "column": err.column, "message": err.message}).to_string() + "\n",
        };
    }
    out += &match args.format {
        Format::Text => issues.iter().map(|i| format!("{i}\n")).collect(),
        Format::Json => aoci::validator::issues_to_jsonl(&issues),
    };
    print(&out)?;

    let failed = !doc.errors.is_empty() || has_errors(&issues) || (args.strict && !issues.is_empty());
    Ok(if failed { Status::Findings } else { Status::Success })
}

fn fmt(args: FmtArgs) -> Result<Status, CliError> {
    if args.write && args.index == STDIO {
        return Err(CliError::usage("--write needs a file, not stdin"));
    }
    let _lock = if args.write {
        Some(IndexLock::acquire(Path::new(&args.index))?)
    } else {
        None
    };
    let (text, index) = read_index(&args.index)?;
    let canonical = serialize_index(&index);
    if args.verify {
        if canonical == text {
            return Ok(Status::Success);
        }
        eprintln!("{}: not in canonical form", args.index);
        return Ok(Status::Findings);
    }
    if args.write {
        if canonical != text {
            write_text(&args.index, &canonical)?;
        }
    } else {
        print(&canonical)?;
    }
    Ok(Status::Success)
}

fn scaffold_error(err: ScaffoldError) -> CliError {
    match err {
        ScaffoldError::Io { path, source } => CliError::io(path, source),
        other => CliError::usage(other.to_string()),
    }
}

fn scaffold_cmd(args: ScaffoldArgs) -> Result<Status, CliError> {
    let rules =
        ScaffoldRules::parse(&read_text(&args.rules)?).map_err(|e| CliError::usage(format!("{}: {e}", args.rules)))?;
    let filter = filter(&args.include, &args.exclude)?;
    let result = scaffold(&args.root, &rules, &filter).map_err(scaffold_error)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let _lock = if args.out == STDIO {
        None
    } else {
        Some(IndexLock::acquire(Path::new(&args.out))?)
    };
    write_text(&args.out, &serialize_index(&result.index))?;

    if let Some(dir) = &args.prompts {
        let output = emit_prompt_pack(&result.index, &result.drafts, |path| {
            fs::read_to_string(args.root.join(path))
        });
        for (path, reason) in &output.skipped {
            eprintln!("warning: {path}: no prompt, {reason}");
        }
        write_prompt_packs(dir, &output.packs).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(Status::Success)
}

/// Every file in `dir` holds entry lines; they are read against the index's
/// header so tags decode with its dictionary.
fn load_drafts(dir: &Path, index: &Index) -> Result<BTreeMap<String, CodeEntry>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();

    let prefix = format!("{}@CODE\n", format_header(index.header()));
    let shift = prefix.lines().count();
    let mut drafts = BTreeMap::new();
    for file in files {
        let text = fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
        let parsed = parse_index(&format!("{prefix}{text}")).map_err(|mut source| {
            source.line = source.line.saturating_sub(shift).max(1);
            CliError::Parse {
                path: file.display().to_string(),
                source,
            }
        })?;
        for entry in parsed.code_entries() {
            if drafts.insert(entry.path.clone(), entry.clone()).is_some() {
                return Err(CliError::usage(format!(
                    "{}: second draft for {}",
                    file.display(),
                    entry.path
                )));
            }
        }
    }
    Ok(drafts)
}

fn load_store(path: &Path) -> Result<StalenessStore, CliError> {
    match fs::read_to_string(path) {
        Ok(text) => StalenessStore::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(StalenessStore::new()),
        Err(e) => Err(CliError::io(path, e)),
    }
}

fn update(args: UpdateArgs) -> Result<Status, CliError> {
    let index_arg = args.index.to_string_lossy().into_owned();
    let _lock = IndexLock::acquire(&args.index)?;
    let (text, index) = read_index(&index_arg)?;
    let mut store = match &args.store {
        Some(path) => load_store(path)?,
        None => StalenessStore::new(),
    };

    let mut snapshot = Vec::new();
    let changes = if args.detect {
        let root = match &args.root {
            Some(root) => root.clone(),
            None => match args.index.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            },
        };
        // the index and its bookkeeping files are not repository content
        let own: HashSet<PathBuf> = [
            Some(args.index.clone()),
            args.store.clone(),
            Some(format!("{index_arg}.lock").into()),
        ]
        .into_iter()
        .flatten()
        .filter_map(|p| fs::canonicalize(p).ok())
        .collect();
        let scan = scan_repo(&root, &filter(&args.include, &args.exclude)?).map_err(scaffold_error)?;
        snapshot = scan
            .files
            .into_iter()
            .filter(|f| fs::canonicalize(root.join(&f.path)).map_or(true, |abs| !own.contains(&abs)))
            .map(|f| (f.path, f.digest))
            .collect();
        detect_stale(&store, &snapshot, &index)
    } else {
        let source = args.changes.as_deref().unwrap_or(STDIO);
        parse_changeset(&read_text(source)?).map_err(|e| CliError::usage(format!("{source}: {e}")))?
    };

    let plan = plan_update(&index, &changes);
    for w in &plan.warnings {
        eprintln!("warning: {w}");
    }
    let drafts = match &args.drafts {
        Some(dir) => Some(load_drafts(dir, &index)?),
        None => None,
    };
    let outcome =
        apply_update(&index, &plan, drafts.as_ref(), &mut store).map_err(|e| CliError::usage(e.to_string()))?;
    for (host, reference) in &plan.dangling_after {
        eprintln!("warning: {host}: reference {reference:?} will not resolve");
    }
    for path in &outcome.pending {
        eprintln!("pending: {path}");
    }

    let updated = serialize_index(&outcome.index);
    if updated != text {
        write_text(&index_arg, &updated)?;
    }
    if let Some(path) = &args.store {
        let pending: HashSet<&str> = outcome.pending.iter().map(String::as_str).collect();
        for (file, digest) in &snapshot {
            if !pending.contains(file.as_str()) {
                store.set_content(file, *digest);
            }
        }
        write_text(&path.to_string_lossy(), &store.to_text())?;
    }
    Ok(Status::Success)
}

fn ablate(args: AblateArgs, estimator: TokenEstimator) -> Result<Status, CliError> {
    let (_, index) = read_index(&args.index)?;
    let ablated = apply_ablation(&index, args.variant, args.tables);
    if args.report {
        print(&ablation_report(&index, &ablated, estimator).to_table())?;
    } else {
        print(&serialize_index(&ablated))?;
    }
    Ok(Status::Success)
}

fn stats(args: StatsArgs, estimator: TokenEstimator) -> Result<Status, CliError> {
    let (_, index) = read_index(&args.index)?;
    let stats = index_stats(&index, args.loc, estimator);
    if args.json {
        print(&(serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n"))?;
    } else {
        print(&stats.to_table())?;
    }
    Ok(Status::Success)
}

fn score(args: ScoreArgs) -> Result<Status, CliError> {
    let pred = read_text(&args.pred)?;
    let truth = read_text(&args.truth)?;
    let out = match args.kind {
        ScoreKind::Where => {
            canonical_path(truth.trim()).map_err(|e| CliError::usage(format!("{}: {e}", args.truth)))?;
            // an unusable prediction is simply wrong
            let hit = score_where(&pred, &truth).unwrap_or(0);
            if args.json {
                json!({ "where": hit }).to_string() + "\n"
            } else {
                format!("{hit}\n")
            }
        }
        ScoreKind::What => {
            let s = score_what(nonblank_lines(&pred), nonblank_lines(&truth));
            if args.json {
                serde_json::to_string(&s).expect("score serializes") + "\n"
            } else {
                format!(
                    "precision {:.4}\nrecall    {:.4}\nf1        {:.4}\n",
                    s.precision, s.recall, s.f1
                )
            }
        }
    };
    print(&out)?;
    Ok(Status::Success)
}

fn decode(args: DecodeTagArgs) -> Result<Status, CliError> {
    let (_, index) = read_index(&args.index)?;
    let dict = index.dictionary();
    let tag = args.tag.trim();
    let lines = if tag.contains('-') {
        decode_table_tag(tag, dict).map(|t| {
            let label = |dim: Dimension, code: &str| format!("{dim} {code} {}", dict.label(dim, code).unwrap_or("?"));
            let mut lines = vec![
                label(Dimension::TableDomain, &t.domain),
                label(Dimension::TableType, &t.ttype),
                label(Dimension::TableScale, &t.scale),
            ];
            lines.extend(t.features.iter().map(|f| label(Dimension::TableFeature, f)));
            lines
        })
    } else {
        decode_entry_tag(tag, dict).map(|t| describe_tag(&t, dict))
    };
    match lines {
        Ok(lines) => {
            print(&lines.iter().map(|l| format!("{l}\n")).collect::<String>())?;
            Ok(Status::Success)
        }
        Err(e) => {
            eprintln!("{tag}: {e}");
            Ok(Status::Findings)
        }
    }
}
