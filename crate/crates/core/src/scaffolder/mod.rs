//! Drafts an index for a repository: tags from path rules, line counts and
//! import fan-in, R from import statements, and placeholder F/S text for an
//! external model to complete via prompt packs.

mod imports;
mod prompt;
mod rules;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::Serialize;
use thiserror::Error;
use walkdir::WalkDir;

pub use imports::{extension, extract_relations, imported_modules};
pub use prompt::{emit_prompt_pack, pack_file_name, write_prompt_packs, PromptPack, PromptPackOutput, PROMPT_SUFFIX};
pub use rules::{GlobRule, ImportExtractor, RulesError, ScaffoldRules, SizeLevel};

use crate::digest::Digest;
use crate::filter::PathFilter;
use crate::grammar::tag::check_decoded;
use crate::model::{entry_path, CodeEntry, DecodedTag, EntryTag, Header, Index, ModelError, TagDictionary};
use crate::validator::RefResolver;

pub const PLACEHOLDER: &str = "TODO";
const MAX_API_NAMES: usize = 8;

#[derive(Debug, Error)]
pub enum ScaffoldError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid rules: {0}")]
    Rules(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Non-fatal findings while scaffolding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ScaffoldWarning {
    /// No layer or module rule matched; the entry is emitted without a tag.
    Unclassified {
        path: String,
        missing: &'static str,
    },
    /// The assembled tag does not decode back to itself; emitted untagged.
    AmbiguousTag {
        path: String,
        tag: String,
    },
    Unreadable {
        path: String,
        message: String,
    },
    /// The file name cannot be written as an index path.
    UnsupportedPath {
        path: String,
    },
}

impl fmt::Display for ScaffoldWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Unclassified { path, missing } => write!(f, "{path}: unclassified file, no {missing} rule matches"),
            Self::AmbiguousTag { path, tag } => write!(f, "{path}: tag {tag} is ambiguous under the rules dictionary"),
            Self::Unreadable { path, message } => write!(f, "{path}: skipped, {message}"),
            Self::UnsupportedPath { path } => write!(f, "{path}: skipped, path cannot be indexed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScannedFile {
    pub path: String,
    pub loc: u64,
    pub digest: Digest,
}

#[derive(Debug, Clone, Default)]
pub struct ScanResult {
    pub files: Vec<ScannedFile>,
    pub warnings: Vec<ScaffoldWarning>,
}

/// Lines in a file; a trailing fragment without a newline counts as a line.
pub fn count_lines(bytes: &[u8]) -> u64 {
    let newlines = bytes.iter().filter(|&&b| b == b'\n').count() as u64;
    newlines + u64::from(bytes.last().is_some_and(|&b| b != b'\n'))
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> ScaffoldError + '_ {
    move |source| ScaffoldError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Lists the eligible files under `root`, sorted by path. `.git` is skipped
/// and symlinks are not followed.
pub fn scan_repo(root: &Path, filter: &PathFilter) -> Result<ScanResult, ScaffoldError> {
    fs::read_dir(root).map_err(io_error(root))?;
    let mut warnings = Vec::new();
    let mut candidates = Vec::new();
    let walker = WalkDir::new(root)
        .min_depth(1)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| !(e.file_type().is_dir() && e.file_name() == ".git"));
    for item in walker {
        let item = match item {
            Ok(i) => i,
            Err(e) => {
                let path = e.path().map(|p| p.display().to_string()).unwrap_or_default();
                warnings.push(ScaffoldWarning::Unreadable {
                    path,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if !item.file_type().is_file() {
            continue;
        }
        let rel = item.path().strip_prefix(root).unwrap_or(item.path());
        let Some(rel_str) = rel.to_str() else {
            warnings.push(ScaffoldWarning::UnsupportedPath {
                path: rel.display().to_string(),
            });
            continue;
        };
        match entry_path(rel_str) {
            Ok(path) if filter.matches(&path) => candidates.push((path, item.into_path())),
            Ok(_) => {}
            Err(_) => warnings.push(ScaffoldWarning::UnsupportedPath {
                path: rel_str.to_string(),
            }),
        }
    }

    let read: Vec<Result<ScannedFile, ScaffoldWarning>> = candidates
        .par_iter()
        .map(|(path, full)| {
            fs::read(full)
                .map(|bytes| ScannedFile {
                    path: path.clone(),
                    loc: count_lines(&bytes),
                    digest: Digest::of(&bytes),
                })
                .map_err(|e| ScaffoldWarning::Unreadable {
                    path: path.clone(),
                    message: e.to_string(),
                })
        })
        .collect();
    let mut files = Vec::with_capacity(read.len());
    for r in read {
        match r {
            Ok(f) => files.push(f),
            Err(w) => warnings.push(w),
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(ScanResult { files, warnings })
}

/// Import fan-in of a file and its rank quantile among all scanned files
/// (0 = most imported).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FanIn {
    pub count: usize,
    pub quantile: f64,
}

/// Fan-in quantiles: a file's rank is the number of files with strictly
/// larger fan-in, so ties share a rank.
pub fn fan_in_quantiles(counts: &[usize]) -> Vec<FanIn> {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let n = counts.len().max(1) as f64;
    counts
        .iter()
        .map(|&count| FanIn {
            count,
            quantile: sorted.partition_point(|&c| c > count) as f64 / n,
        })
        .collect()
}

/// Which rules shaped a draft.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub layer_pattern: Option<String>,
    pub module_pattern: Option<String>,
    pub fan_in: FanIn,
    pub loc: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DraftEntry {
    pub entry: CodeEntry,
    pub provenance: Provenance,
    pub warning: Option<ScaffoldWarning>,
}

/// Drafts one entry. `dict` must be the dictionary of `rules`.
pub fn draft_entry(
    path: &str,
    loc: u64,
    relations: Vec<String>,
    rules: &ScaffoldRules,
    dict: &TagDictionary,
    fan_in: FanIn,
) -> DraftEntry {
    let layer = rules.layer_for(path);
    let module = rules.module_for(path);
    let mut entry = CodeEntry::new(path);
    entry.function = PLACEHOLDER.to_string();
    entry.synopsis = PLACEHOLDER.to_string();
    entry.relations = relations;

    let warning = match (layer, module) {
        (None, _) => Some(ScaffoldWarning::Unclassified {
            path: path.to_string(),
            missing: "layer",
        }),
        (_, None) => Some(ScaffoldWarning::Unclassified {
            path: path.to_string(),
            missing: "module",
        }),
        (Some(layer), Some(module)) => {
            let decoded = DecodedTag {
                layer: layer.code.clone(),
                module: module.code.clone(),
                importance: rules.importance_for(fan_in.count, fan_in.quantile),
                features: Vec::new(),
                scale: Some(rules.scale_for(loc).to_string()),
            };
            let tag = EntryTag::Full(decoded.clone());
            if check_decoded(&decoded, dict).is_ok() {
                entry.tag = Some(tag);
                None
            } else {
                Some(ScaffoldWarning::AmbiguousTag {
                    path: path.to_string(),
                    tag: tag.raw(),
                })
            }
        }
    };

    DraftEntry {
        entry,
        provenance: Provenance {
            layer_pattern: layer.map(|r| r.pattern.clone()),
            module_pattern: module.map(|r| r.pattern.clone()),
            fan_in,
            loc,
        },
        warning,
    }
}

static API_PATTERNS: LazyLock<HashMap<&'static str, Vec<Regex>>> = LazyLock::new(|| {
    let compile = |ps: &[&str]| {
        ps.iter()
            .map(|p| Regex::new(p).expect("built-in pattern"))
            .collect::<Vec<_>>()
    };
    let go = compile(&[r"^func\s+(?:\([^)]*\)\s*)?([A-Z]\w*)", r"^type\s+([A-Z]\w*)"]);
    let js = compile(&[
        r"^export\s+(?:default\s+)?(?:async\s+)?(?:function\*?|class|const|let|var|interface|type|enum)\s+([A-Za-z_$][\w$]*)",
    ]);
    let py = compile(&[r"^(?:async\s+)?def\s+([A-Za-z]\w*)", r"^class\s+([A-Za-z]\w*)"]);
    let mut map = HashMap::new();
    map.insert("go", go);
    for ext in ["js", "jsx", "ts", "tsx", "mjs", "cjs"] {
        map.insert(ext, js.clone());
    }
    map.insert("py", py);
    map
});

/// Top-level exported names, in source order, capped at a handful.
pub fn detect_api(path: &str, text: &str) -> Vec<String> {
    let Some(patterns) = extension(path).and_then(|e| API_PATTERNS.get(e)) else {
        return Vec::new();
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in text.lines() {
        for re in patterns {
            if let Some(name) = re.captures(line).and_then(|c| c.get(1)) {
                if seen.insert(name.as_str()) {
                    out.push(name.as_str().to_string());
                }
            }
        }
        if out.len() >= MAX_API_NAMES {
            out.truncate(MAX_API_NAMES);
            break;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Scaffold {
    pub index: Index,
    pub drafts: Vec<DraftEntry>,
    pub warnings: Vec<ScaffoldWarning>,
    /// Total line count of the indexed files.
    pub repo_loc: u64,
}

/// Scans `root` and drafts one entry per eligible file, in path order.
pub fn scaffold(root: &Path, rules: &ScaffoldRules, filter: &PathFilter) -> Result<Scaffold, ScaffoldError> {
    rules.check().map_err(ScaffoldError::Rules)?;
    let dict = rules.dictionary()?;
    let ScanResult { files, mut warnings } = scan_repo(root, filter)?;
    let resolver = RefResolver::new(files.iter().map(|f| f.path.as_str()));

    let analyses: Vec<(Vec<String>, Vec<String>)> = files
        .par_iter()
        .map(|f| match fs::read(root.join(&f.path)) {
            Ok(bytes) => match String::from_utf8(bytes) {
                Ok(text) => (
                    extract_relations(&f.path, &text, &resolver, rules),
                    detect_api(&f.path, &text),
                ),
                Err(_) => Default::default(),
            },
            Err(_) => Default::default(),
        })
        .collect();

    let position: HashMap<&str, usize> = files.iter().enumerate().map(|(i, f)| (f.path.as_str(), i)).collect();
    let mut importers: Vec<HashSet<usize>> = vec![HashSet::new(); files.len()];
    for (i, (relations, _)) in analyses.iter().enumerate() {
        for r in relations {
            for target in resolver.resolve(r) {
                let t = position[target];
                if t != i {
                    importers[t].insert(i);
                }
            }
        }
    }
    let fan_ins = fan_in_quantiles(&importers.iter().map(HashSet::len).collect::<Vec<_>>());

    let mut drafts = Vec::with_capacity(files.len());
    for ((file, (relations, api)), fan_in) in files.iter().zip(analyses).zip(fan_ins) {
        let mut draft = draft_entry(&file.path, file.loc, relations, rules, &dict, fan_in);
        draft.entry.api = api.join(", ");
        if let Some(w) = &draft.warning {
            warnings.push(w.clone());
        }
        drafts.push(draft);
    }

    let header = Header {
        project: rules.project.clone(),
        stack: rules.stack.clone(),
        dictionary: dict,
        ..Header::default()
    };
    let index = Index::new(header, drafts.iter().map(|d| d.entry.clone()).collect(), Vec::new())?;
    Ok(Scaffold {
        index,
        drafts,
        warnings,
        repo_loc: files.iter().map(|f| f.loc).sum(),
    })
}
