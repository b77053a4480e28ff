//! Incremental maintenance: turn a change listing into the minimal set of
//! entry edits and apply it.
//!
//! Change listings use name-status lines, tab separated:
//!
//! ```text
//! M	middleware/auth.go
//! A	pkg/cache/cache.go
//! D	model/legacy.go
//! R087	model/org.go	model/organization.go
//! ```

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::digest::Digest;
use crate::grammar::format_code_entry;
use crate::model::{entry_path, ChangeRecord, ChangeSet, ChangeStatus, CodeEntry, Index, ModelError};
use crate::validator::{strip_extension, RefResolver};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ChangeParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_changeset(text: &str) -> Result<ChangeSet, ChangeParseError> {
    let mut records = Vec::new();
    let mut lines_of = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ChangeParseError { line, message };
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        let path = |s: &str| entry_path(s).map_err(|e| err(e.to_string()));
        let status = fields[0];
        let record = match (status, fields.len()) {
            ("A", 2) => ChangeRecord::added(&path(fields[1])?),
            ("M", 2) => ChangeRecord::modified(&path(fields[1])?),
            ("D", 2) => ChangeRecord::deleted(&path(fields[1])?),
            (s, 3) if s.starts_with('R') => {
                let score = &s[1..];
                let similarity = match score.parse::<u8>() {
                    Ok(n) if n <= 100 && score.bytes().all(|b| b.is_ascii_digit()) => n,
                    _ => return Err(err(format!("invalid rename score {s:?}"))),
                };
                ChangeRecord {
                    similarity: Some(similarity),
                    ..ChangeRecord::renamed(&path(fields[1])?, &path(fields[2])?)
                }
            }
            ("A" | "M" | "D", n) => return Err(err(format!("status {status} takes one path, got {}", n - 1))),
            (s, n) if s.starts_with('R') => return Err(err(format!("rename takes two paths, got {}", n - 1))),
            (s, _) => return Err(err(format!("unknown status {s:?}"))),
        };
        for p in std::iter::once(&record.path).chain(record.new_path.as_ref()) {
            if let Some(first) = lines_of.insert(p.clone(), line) {
                return Err(err(format!("path {p:?} already listed on line {first}")));
            }
        }
        records.push(record);
    }
    ChangeSet::new(records).map_err(|e| ChangeParseError {
        line: 0,
        message: e.to_string(),
    })
}

/// Renders a change set back to its listing form.
pub fn format_changeset(changes: &ChangeSet) -> String {
    let mut out = String::new();
    for r in changes.records() {
        match (r.status, &r.new_path) {
            (ChangeStatus::Renamed, Some(to)) => {
                out.push_str(&format!("R{:03}\t{}\t{}\n", r.similarity.unwrap_or(100), r.path, to));
            }
            (status, _) => {
                let letter = match status {
                    ChangeStatus::Added => 'A',
                    ChangeStatus::Modified => 'M',
                    _ => 'D',
                };
                out.push_str(&format!("{letter}\t{}\n", r.path));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefRewrite {
    /// Entry holding the reference, by its path before the update.
    pub host: String,
    pub old: String,
    pub new: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PlanWarning {
    /// A Modified, Deleted or Renamed path has no entry.
    MissingEntry { path: String, status: ChangeStatus },
    /// A rename lands on a path that already has an entry; that entry is
    /// regenerated and the old one removed.
    RenameCollision { from: String, to: String },
}

impl fmt::Display for PlanWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingEntry { path, status } => write!(f, "{path}: {status:?} but the index has no entry"),
            Self::RenameCollision { from, to } => write!(f, "{from}: renamed onto existing entry {to}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct UpdatePlan {
    /// Paths (after renames) whose semantic content must be regenerated.
    pub regenerate: Vec<String>,
    pub remove: Vec<String>,
    pub rename_map: BTreeMap<String, String>,
    pub ref_rewrites: Vec<RefRewrite>,
    /// `(host path after the update, reference)` pairs that will not resolve.
    pub dangling_after: Vec<(String, String)>,
    pub warnings: Vec<PlanWarning>,
}

impl UpdatePlan {
    /// True when the plan changes nothing.
    pub fn is_empty(&self) -> bool {
        self.regenerate.is_empty() && self.remove.is_empty() && self.rename_map.is_empty()
    }
}

/// New form of `reference` once `old` has moved to `new`, if the
/// reference designated `old` by one of the resolution rules.
fn rewrite_reference(reference: &str, old: &str, new: &str) -> Option<String> {
    if reference == old {
        return Some(new.to_string());
    }
    if strip_extension(old) == Some(reference) {
        return Some(strip_extension(new).unwrap_or(new).to_string());
    }
    let rest = old.strip_prefix(reference)?.strip_prefix('/')?;
    match new.strip_suffix(rest).and_then(|d| d.strip_suffix('/')) {
        Some(dir) if !dir.is_empty() => Some(dir.to_string()),
        _ => Some(new.to_string()),
    }
}

pub fn plan_update(index: &Index, changes: &ChangeSet) -> UpdatePlan {
    let mut plan = UpdatePlan::default();
    let has_entry = |p: &str| index.entry(p).is_some();
    let mut regenerate = BTreeSet::new();
    let mut remove = BTreeSet::new();

    for r in changes.records() {
        match (r.status, &r.new_path) {
            (ChangeStatus::Added, _) => {
                regenerate.insert(r.path.clone());
            }
            (ChangeStatus::Modified, _) => {
                if has_entry(&r.path) {
                    regenerate.insert(r.path.clone());
                } else {
                    plan.warnings.push(PlanWarning::MissingEntry {
                        path: r.path.clone(),
                        status: r.status,
                    });
                }
            }
            (ChangeStatus::Deleted, _) => {
                if has_entry(&r.path) {
                    remove.insert(r.path.clone());
                } else {
                    plan.warnings.push(PlanWarning::MissingEntry {
                        path: r.path.clone(),
                        status: r.status,
                    });
                }
            }
            (ChangeStatus::Renamed, Some(to)) => {
                if !has_entry(&r.path) {
                    plan.warnings.push(PlanWarning::MissingEntry {
                        path: r.path.clone(),
                        status: r.status,
                    });
                    regenerate.insert(to.clone());
                } else if has_entry(to) && !changes.records().iter().any(|o| o.path == *to) {
                    plan.warnings.push(PlanWarning::RenameCollision {
                        from: r.path.clone(),
                        to: to.clone(),
                    });
                    remove.insert(r.path.clone());
                    regenerate.insert(to.clone());
                } else {
                    plan.rename_map.insert(r.path.clone(), to.clone());
                    if r.similarity.unwrap_or(100) < 100 {
                        regenerate.insert(to.clone());
                    }
                }
            }
            (ChangeStatus::Renamed, None) => unreachable!("ChangeSet guarantees a rename target"),
        }
    }

    let final_path = |p: &str| plan.rename_map.get(p).cloned().unwrap_or_else(|| p.to_string());
    let mut after = RefResolver::default();
    for e in index.code_entries() {
        if !remove.contains(&e.path) {
            after.insert(final_path(&e.path));
        }
    }
    for p in &regenerate {
        if !after.contains(p) {
            after.insert(p.clone());
        }
    }
    let tables: HashSet<&str> = index.table_entries().iter().map(|t| t.name.as_str()).collect();

    for e in index.code_entries() {
        if remove.contains(&e.path) {
            continue;
        }
        let host = final_path(&e.path);
        for reference in &e.relations {
            let mut current = reference.clone();
            if !after.resolves(reference) {
                let rewritten = plan
                    .rename_map
                    .iter()
                    .filter_map(|(old, new)| rewrite_reference(reference, old, new))
                    .find(|candidate| after.resolves(candidate));
                if let Some(new) = rewritten {
                    plan.ref_rewrites.push(RefRewrite {
                        host: e.path.clone(),
                        old: reference.clone(),
                        new: new.clone(),
                    });
                    current = new;
                }
            }
            if !after.resolves(&current) && !tables.contains(current.as_str()) {
                plan.dangling_after.push((host.clone(), current));
            }
        }
    }
    plan.dangling_after.sort();
    plan.dangling_after.dedup();
    plan.regenerate = regenerate.into_iter().collect();
    plan.remove = remove.into_iter().collect();
    plan
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UpdateError {
    #[error("draft supplied for {0:?}, which the plan does not regenerate")]
    PlanMismatch(String),
    #[error("draft keyed {key:?} describes {path:?}")]
    DraftPath { key: String, path: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub index: Index,
    /// Regenerate paths for which no draft was supplied.
    pub pending: Vec<String>,
}

/// Applies `plan`. Entries the plan does not name keep their exact text.
/// Regenerate paths without a draft keep their current entry (or stay
/// absent when new) and are marked pending in `store`.
pub fn apply_update(
    index: &Index,
    plan: &UpdatePlan,
    drafts: Option<&BTreeMap<String, CodeEntry>>,
    store: &mut StalenessStore,
) -> Result<UpdateOutcome, UpdateError> {
    let empty = BTreeMap::new();
    let drafts = drafts.unwrap_or(&empty);
    let regenerate: BTreeSet<&str> = plan.regenerate.iter().map(String::as_str).collect();
    for (key, draft) in drafts {
        if !regenerate.contains(key.as_str()) {
            return Err(UpdateError::PlanMismatch(key.clone()));
        }
        if draft.path != *key {
            return Err(UpdateError::DraftPath {
                key: key.clone(),
                path: draft.path.clone(),
            });
        }
    }
    let remove: HashSet<&str> = plan.remove.iter().map(String::as_str).collect();
    let mut rewrites: HashMap<&str, Vec<&RefRewrite>> = HashMap::new();
    for rw in &plan.ref_rewrites {
        rewrites.entry(rw.host.as_str()).or_default().push(rw);
    }

    let mut pending = BTreeSet::new();
    let mut entries = Vec::with_capacity(index.code_entries().len() + plan.regenerate.len());
    let mut present = HashSet::new();
    for e in index.code_entries() {
        if remove.contains(e.path.as_str()) {
            store.remove(&e.path);
            continue;
        }
        let mut entry = e.clone();
        if let Some(to) = plan.rename_map.get(&e.path) {
            entry.path = to.clone();
            store.rename(&e.path, to);
        }
        if let Some(list) = rewrites.get(e.path.as_str()) {
            for rw in list {
                for r in entry.relations.iter_mut().filter(|r| **r == rw.old) {
                    *r = rw.new.clone();
                }
            }
            let mut seen = HashSet::new();
            entry.relations.retain(|r| seen.insert(r.clone()));
        }
        if regenerate.contains(entry.path.as_str()) {
            match drafts.get(&entry.path) {
                Some(draft) => entry = draft.clone(),
                None => {
                    pending.insert(entry.path.clone());
                }
            }
        }
        present.insert(entry.path.clone());
        entries.push(entry);
    }
    for path in &plan.regenerate {
        if present.contains(path) {
            continue;
        }
        match drafts.get(path) {
            Some(draft) => entries.push(draft.clone()),
            None => {
                pending.insert(path.clone());
            }
        }
    }

    let (header, _, tables) = index.clone().into_parts();
    let index = Index::new(header, entries, tables)?;
    for path in &plan.regenerate {
        if pending.contains(path) {
            store.mark_pending(path);
        } else if let Some(e) = index.entry(path) {
            store.record_entry(path, Digest::of(format_code_entry(e).as_bytes()));
        }
    }
    Ok(UpdateOutcome {
        index,
        pending: pending.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StalenessRecord {
    /// Digest of the file bytes the entry was last checked against.
    pub content: Option<Digest>,
    /// Digest of the canonical entry line; absent while regeneration is pending.
    pub entry: Option<Digest>,
}

/// Per-path digests persisted as `path<TAB>content<TAB>entry` lines, `-`
/// standing for an absent digest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StalenessStore {
    records: BTreeMap<String, StalenessRecord>,
}

impl StalenessStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, path: &str) -> Option<&StalenessRecord> {
        self.records.get(path)
    }

    pub fn records(&self) -> &BTreeMap<String, StalenessRecord> {
        &self.records
    }

    pub fn record(&mut self, path: &str, content: Digest, entry_line: &str) {
        self.records.insert(
            path.to_string(),
            StalenessRecord {
                content: Some(content),
                entry: Some(Digest::of(entry_line.as_bytes())),
            },
        );
    }

    pub fn set_content(&mut self, path: &str, content: Digest) {
        self.records.entry(path.to_string()).or_default().content = Some(content);
    }

    pub fn record_entry(&mut self, path: &str, entry: Digest) {
        self.records.entry(path.to_string()).or_default().entry = Some(entry);
    }

    pub fn mark_pending(&mut self, path: &str) {
        self.records.entry(path.to_string()).or_default().entry = None;
    }

    pub fn pending(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|(_, r)| r.entry.is_none())
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn remove(&mut self, path: &str) {
        self.records.remove(path);
    }

    pub fn rename(&mut self, from: &str, to: &str) {
        if let Some(r) = self.records.remove(from) {
            self.records.insert(to.to_string(), r);
        }
    }

    pub fn parse(text: &str) -> Result<Self, ChangeParseError> {
        let mut records = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| ChangeParseError { line: i + 1, message };
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let [path, content, entry] = fields[..] else {
                return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            };
            let digest = |s: &str| -> Result<Option<Digest>, ChangeParseError> {
                if s == "-" {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(err)
                }
            };
            let path = entry_path(path).map_err(|e| err(e.to_string()))?;
            let record = StalenessRecord {
                content: digest(content)?,
                entry: digest(entry)?,
            };
            if records.insert(path.clone(), record).is_some() {
                return Err(err(format!("duplicate path {path:?}")));
            }
        }
        Ok(Self { records })
    }

    pub fn to_text(&self) -> String {
        let hex = |d: &Option<Digest>| d.map_or_else(|| "-".to_string(), |d| d.to_hex());
        self.records
            .iter()
            .map(|(p, r)| format!("{p}\t{}\t{}\n", hex(&r.content), hex(&r.entry)))
            .collect()
    }
}

/// Changes implied by a file snapshot. Files unknown to the store are Added,
/// or Modified when the index already has an entry for them; store or index
/// paths missing from the snapshot are Deleted.
pub fn detect_stale(store: &StalenessStore, files: &[(String, Digest)], index: &Index) -> ChangeSet {
    let mut records = Vec::new();
    let listed: HashSet<&str> = files.iter().map(|(p, _)| p.as_str()).collect();
    for (path, digest) in files {
        match store.get(path) {
            Some(r) if r.content == Some(*digest) => {}
            Some(_) => records.push(ChangeRecord::modified(path)),
            None if index.entry(path).is_some() => records.push(ChangeRecord::modified(path)),
            None => records.push(ChangeRecord::added(path)),
        }
    }
    let gone: BTreeSet<&str> = store
        .records()
        .keys()
        .map(String::as_str)
        .chain(index.code_entries().iter().map(|e| e.path.as_str()))
        .filter(|p| !listed.contains(p))
        .collect();
    records.extend(gone.into_iter().map(ChangeRecord::deleted));
    records.sort_by(|a, b| a.path.cmp(&b.path));
    ChangeSet::new(records).expect("snapshot paths are unique")
}
