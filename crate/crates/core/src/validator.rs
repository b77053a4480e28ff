//! Consistency checks over a parsed index, and coverage against a file list.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::filter::{GlobError, PathFilter};
use crate::grammar::tag;
use crate::metrics::{semantic_tokens, TokenEstimator};
use crate::model::{Dimension, EntryTag, Index, IMPORTANCE_LEVELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Error => "error",
            Self::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub id: &'static str,
    pub severity: Severity,
    pub summary: &'static str,
}

pub const E1: Rule = Rule {
    id: "E1",
    severity: Severity::Error,
    summary: "duplicate entry path or table name",
};
pub const E2: Rule = Rule {
    id: "E2",
    severity: Severity::Error,
    summary: "R reference does not resolve to any code entry",
};
pub const E3: Rule = Rule {
    id: "E3",
    severity: Severity::Error,
    summary: "tag code missing from the header dictionary",
};
pub const E4: Rule = Rule {
    id: "E4",
    severity: Severity::Error,
    summary: "importance outside 9/8/7/5/3/1",
};
pub const W1: Rule = Rule {
    id: "W1",
    severity: Severity::Warning,
    summary: "semantic layer outside the token budget for its importance",
};
pub const W2: Rule = Rule {
    id: "W2",
    severity: Severity::Warning,
    summary: "dictionary dimension is not prefix-free",
};
pub const W3: Rule = Rule {
    id: "W3",
    severity: Severity::Warning,
    summary: "empty F element on an entry with importance 7 or higher",
};
pub const W4: Rule = Rule {
    id: "W4",
    severity: Severity::Warning,
    summary: "R reference names a database table, not a code entry",
};
pub const C1: Rule = Rule {
    id: "C1",
    severity: Severity::Warning,
    summary: "eligible file has no index entry",
};
pub const C2: Rule = Rule {
    id: "C2",
    severity: Severity::Warning,
    summary: "index entry has no file in the repository",
};

pub const RULES: [Rule; 10] = [E1, E2, E3, E4, W1, W2, W3, W4, C1, C2];

pub fn rule(id: &str) -> Option<Rule> {
    RULES.into_iter().find(|r| r.id == id)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub rule: &'static str,
    /// Entry path, table name, or `header`.
    pub subject: String,
    pub message: String,
}

impl ValidationIssue {
    fn new(rule: Rule, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: rule.severity,
            rule: rule.id,
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.severity, self.rule, self.subject, self.message)
    }
}

/// One JSON object per line.
pub fn issues_to_jsonl(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| serde_json::to_string(i).expect("issue serializes") + "\n")
        .collect()
}

pub fn has_errors(issues: &[ValidationIssue]) -> bool {
    issues.iter().any(|i| i.severity == Severity::Error)
}

/// `model/user.go` -> `model/user`; dotfiles and extensionless names
/// yield `None`.
pub fn strip_extension(path: &str) -> Option<&str> {
    let name_start = path.rfind('/').map_or(0, |i| i + 1);
    let dot = path[name_start..].rfind('.')?;
    (dot > 0).then(|| &path[..name_start + dot])
}

/// Whether an R reference designates `path`: exact match, directory
/// prefix, or the path without its extension.
pub fn reference_matches(reference: &str, path: &str) -> bool {
    path == reference
        || (path.len() > reference.len() && path.starts_with(reference) && path.as_bytes()[reference.len()] == b'/')
        || strip_extension(path) == Some(reference)
}

/// Resolves R references against a set of entry paths.
#[derive(Debug, Clone, Default)]
pub struct RefResolver {
    paths: BTreeSet<String>,
    stems: HashMap<String, Vec<String>>,
}

impl RefResolver {
    pub fn new<I, S>(paths: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut resolver = Self::default();
        for p in paths {
            resolver.insert(p.into());
        }
        resolver
    }

    pub fn for_index(index: &Index) -> Self {
        Self::new(index.code_entries().iter().map(|e| e.path.as_str()))
    }

    pub fn insert(&mut self, path: String) {
        if let Some(stem) = strip_extension(&path) {
            self.stems.entry(stem.to_string()).or_default().push(path.clone());
        }
        self.paths.insert(path);
    }

    pub fn remove(&mut self, path: &str) {
        if self.paths.remove(path) {
            if let Some(stem) = strip_extension(path) {
                if let Some(list) = self.stems.get_mut(stem) {
                    list.retain(|p| p != path);
                    if list.is_empty() {
                        self.stems.remove(stem);
                    }
                }
            }
        }
    }

    pub fn contains(&self, path: &str) -> bool {
        self.paths.contains(path)
    }

    /// Every path the reference designates, sorted.
    pub fn resolve(&self, reference: &str) -> Vec<&str> {
        let mut out = BTreeSet::new();
        if let Some(p) = self.paths.get(reference) {
            out.insert(p.as_str());
        }
        let prefix = format!("{reference}/");
        out.extend(
            self.paths
                .range(prefix.clone()..)
                .take_while(|p| p.starts_with(&prefix))
                .map(String::as_str),
        );
        if let Some(list) = self.stems.get(reference) {
            out.extend(list.iter().map(String::as_str));
        }
        out.into_iter().collect()
    }

    pub fn resolves(&self, reference: &str) -> bool {
        !self.resolve(reference).is_empty()
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.paths.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    pub estimator: TokenEstimator,
}

/// Runs the rule catalog with the default estimator.
pub fn validate_index(index: &Index) -> Vec<ValidationIssue> {
    validate_index_with(index, ValidateOptions::default())
}

pub fn validate_index_with(index: &Index, options: ValidateOptions) -> Vec<ValidationIssue> {
    let dict = index.dictionary();
    let mut issues = Vec::new();

    let mut seen = HashSet::new();
    for e in index.code_entries() {
        if !seen.insert(e.path.as_str()) {
            issues.push(ValidationIssue::new(E1, &e.path, "duplicate entry path"));
        }
    }
    let mut seen = HashSet::new();
    for t in index.table_entries() {
        if !seen.insert(t.name.as_str()) {
            issues.push(ValidationIssue::new(E1, &t.name, "duplicate table name"));
        }
    }

    for dim in [Dimension::A, Dimension::B, Dimension::D, Dimension::E] {
        for (short, long) in dict.prefix_conflicts(dim) {
            issues.push(ValidationIssue::new(
                W2,
                "header",
                format!("dimension {dim}: code {short:?} is a prefix of {long:?}"),
            ));
        }
    }

    let resolver = RefResolver::for_index(index);
    let tables: HashSet<&str> = index.table_entries().iter().map(|t| t.name.as_str()).collect();

    for entry in index.code_entries() {
        for r in &entry.relations {
            if resolver.resolves(r) {
                continue;
            }
            if tables.contains(r.as_str()) {
                issues.push(ValidationIssue::new(
                    W4,
                    &entry.path,
                    format!("R reference {r:?} names a table"),
                ));
            } else {
                issues.push(ValidationIssue::new(
                    E2,
                    &entry.path,
                    format!("R reference {r:?} does not resolve to any entry"),
                ));
            }
        }

        match &entry.tag {
            None => {}
            Some(EntryTag::ScaleOnly(code)) => {
                if !dict.contains(Dimension::E, code) {
                    issues.push(ValidationIssue::new(
                        E3,
                        &entry.path,
                        format!("unknown E code {code:?}"),
                    ));
                }
            }
            Some(EntryTag::Full(decoded)) => {
                if !IMPORTANCE_LEVELS.contains(&decoded.importance) {
                    issues.push(ValidationIssue::new(
                        E4,
                        &entry.path,
                        format!("importance {} is not on the scale", decoded.importance),
                    ));
                }
                let raw = tag::encode_tag(decoded);
                if let Err(e) = tag::decode_tag(&raw, dict) {
                    if let tag::TagError::UnknownCode { .. } = e {
                        issues.push(ValidationIssue::new(E3, &entry.path, e.to_string()));
                    }
                }
                if decoded.importance >= 7 && entry.function.is_empty() {
                    issues.push(ValidationIssue::new(
                        W3,
                        &entry.path,
                        format!("importance {} entry has an empty F element", decoded.importance),
                    ));
                }
                if let Some(budget) = dict.budget_for(decoded.importance) {
                    let tokens = semantic_tokens(entry, options.estimator);
                    if !budget.contains(tokens) {
                        issues.push(ValidationIssue::new(
                            W1,
                            &entry.path,
                            format!(
                                "semantic layer is ~{tokens} tokens, budget for importance {} is {budget}",
                                decoded.importance
                            ),
                        ));
                    }
                }
            }
        }
    }

    issues.sort_by(|a, b| {
        (a.subject.as_str(), a.rule, a.message.as_str()).cmp(&(b.subject.as_str(), b.rule, b.message.as_str()))
    });
    issues
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub eligible_files: usize,
    pub indexed_files: usize,
    /// Eligible files with no entry.
    pub unindexed: Vec<String>,
    /// Entries whose file is not in the list.
    pub orphan_entries: Vec<String>,
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.unindexed.is_empty() && self.orphan_entries.is_empty()
    }

    pub fn issues(&self) -> Vec<ValidationIssue> {
        let unindexed = self
            .unindexed
            .iter()
            .map(|p| ValidationIssue::new(C1, p, "file has no index entry"));
        let orphans = self
            .orphan_entries
            .iter()
            .map(|p| ValidationIssue::new(C2, p, "entry has no file in the repository"));
        unindexed.chain(orphans).collect()
    }
}

/// Compares index entries with a repository file list.
pub fn check_coverage<S: AsRef<str>>(
    index: &Index,
    files: &[S],
    include: &[S],
    exclude: &[S],
) -> Result<CoverageReport, GlobError> {
    let filter = PathFilter::new(include, exclude)?;
    let entries: HashSet<&str> = index.code_entries().iter().map(|e| e.path.as_str()).collect();
    let file_set: HashSet<&str> = files.iter().map(AsRef::as_ref).collect();

    let mut report = CoverageReport::default();
    let mut eligible: Vec<&str> = file_set.iter().copied().filter(|f| filter.matches(f)).collect();
    eligible.sort_unstable();
    report.eligible_files = eligible.len();
    for f in eligible {
        if entries.contains(f) {
            report.indexed_files += 1;
        } else {
            report.unindexed.push(f.to_string());
        }
    }
    report.orphan_entries = index
        .code_entries()
        .iter()
        .filter(|e| !file_set.contains(e.path.as_str()))
        .map(|e| e.path.clone())
        .collect();
    Ok(report)
}
