//! Domain model shared by every part of the toolkit.
//!
//! All types are plain values. An [`Index`] can only be obtained through
//! [`Index::new`] (or the parser, which calls it), so a value of that type
//! always satisfies the document invariants: unique entry paths and table
//! names, canonical paths, and tags that decode against the header
//! dictionary.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::grammar::tag::{self, TagError};

/// The fixed six-level importance scale, most important first.
pub const IMPORTANCE_LEVELS: [u8; 6] = [9, 8, 7, 5, 3, 1];

/// Dimension E (code scale) never has more than four levels.
pub const MAX_SCALE_CODES: usize = 4;

/// Rendering of an empty semantic element.
pub const EMPTY_SENTINEL: &str = "-";

/// Token budgets used when the header declares none for a level.
///
/// Rows 9 and 3/1 come from the published protocol; 8, 7 and 5 are
/// interpolated defaults.
pub const DEFAULT_BUDGETS: [(u8, Budget); 6] = [
    (9, Budget { min: 80, max: 150 }),
    (8, Budget { min: 70, max: 130 }),
    (7, Budget { min: 60, max: 110 }),
    (5, Budget { min: 40, max: 80 }),
    (3, Budget { min: 20, max: 40 }),
    (1, Budget { min: 20, max: 40 }),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid path {0:?}")]
    InvalidPath(String),
    #[error("invalid {dimension} code {code:?}: {reason}")]
    InvalidCode {
        dimension: Dimension,
        code: String,
        reason: &'static str,
    },
    #[error("duplicate {dimension} code {code:?}")]
    DuplicateCode { dimension: Dimension, code: String },
    #[error("invalid label {label:?} for code {code:?}")]
    InvalidLabel { code: String, label: String },
    #[error("importance {0} is not on the 9/8/7/5/3/1 scale")]
    InvalidImportance(u8),
    #[error("duplicate importance level {0}")]
    DuplicateImportance(u8),
    #[error("dimension E allows at most {MAX_SCALE_CODES} codes")]
    TooManyScaleCodes,
    #[error("budget for importance {importance} has min {min} greater than max {max}")]
    InvalidBudget { importance: u8, min: u32, max: u32 },
    #[error("protocol version must be at least 1, got {0}")]
    InvalidVersion(u32),
    #[error("invalid {field} text: {reason}")]
    InvalidText { field: &'static str, reason: &'static str },
    #[error("invalid relation reference {0:?}")]
    InvalidReference(String),
    #[error("invalid table name {0:?}")]
    InvalidTableName(String),
    #[error("duplicate entry path {0:?}")]
    DuplicatePath(String),
    #[error("duplicate table name {0:?}")]
    DuplicateTable(String),
    #[error("{subject}: {source}")]
    Tag {
        subject: String,
        #[source]
        source: TagError,
    },
    #[error("path {0:?} appears in more than one change record")]
    DuplicateChange(String),
    #[error("rename of {0:?} onto itself")]
    SelfRename(String),
}

/// A tag dimension, for both code tags and table tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Dimension {
    /// Architectural layer.
    A,
    /// Business module.
    B,
    /// Importance.
    C,
    /// Technical characteristics.
    D,
    /// Code scale.
    E,
    TableDomain,
    TableType,
    TableScale,
    TableFeature,
}

impl Dimension {
    pub const CODE: [Dimension; 5] = [Self::A, Self::B, Self::C, Self::D, Self::E];
    pub const TABLE: [Dimension; 4] = [Self::TableDomain, Self::TableType, Self::TableScale, Self::TableFeature];

    /// Keyword used for the dimension in header directives.
    pub fn keyword(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
            Self::D => "D",
            Self::E => "E",
            Self::TableDomain => "DOMAIN",
            Self::TableType => "TYPE",
            Self::TableScale => "SCALE",
            Self::TableFeature => "FEAT",
        }
    }

    pub fn from_code_keyword(s: &str) -> Option<Self> {
        Self::CODE.into_iter().find(|d| d.keyword() == s)
    }

    pub fn from_table_keyword(s: &str) -> Option<Self> {
        Self::TABLE.into_iter().find(|d| d.keyword() == s)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Normalizes a repository-relative path: `/` separators, no leading `./`,
/// no repeated `/`.
pub fn canonical_path(raw: &str) -> Result<String, ModelError> {
    if raw.is_empty() {
        return Err(ModelError::InvalidPath(raw.to_string()));
    }
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        let c = if c == '\\' { '/' } else { c };
        if c == '/' && out.ends_with('/') {
            continue;
        }
        out.push(c);
    }
    let mut rest = out.as_str();
    while let Some(stripped) = rest.strip_prefix("./") {
        rest = stripped;
    }
    if rest.is_empty() {
        return Err(ModelError::InvalidPath(raw.to_string()));
    }
    Ok(rest.to_string())
}

/// Characters that may not appear in an entry path or relation reference.
fn is_reserved_path_char(c: char) -> bool {
    c.is_whitespace() || c.is_control() || matches!(c, '[' | ']' | '|' | ':' | ',')
}

fn check_path(path: &str) -> Result<(), ModelError> {
    if path.is_empty() || path.chars().any(is_reserved_path_char) || path == EMPTY_SENTINEL {
        return Err(ModelError::InvalidPath(path.to_string()));
    }
    Ok(())
}

/// Canonicalizes `raw` and checks that it can be written on an entry line.
pub fn entry_path(raw: &str) -> Result<String, ModelError> {
    let path = canonical_path(raw)?;
    check_path(&path)?;
    Ok(path)
}

fn check_code(dimension: Dimension, code: &str) -> Result<(), ModelError> {
    let reason = if code.is_empty() {
        Some("empty code")
    } else if code.chars().any(char::is_numeric) {
        Some("codes may not contain digits")
    } else if code
        .chars()
        .any(|c| c.is_whitespace() || c.is_control() || matches!(c, '[' | ']' | '-' | '|' | ':' | ',' | '=' | '+'))
    {
        Some("codes may not contain whitespace or any of []-|:,=+")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(ModelError::InvalidCode {
            dimension,
            code: code.to_string(),
            reason,
        }),
        None => Ok(()),
    }
}

fn normalize_text(field: &'static str, text: &str) -> Result<String, ModelError> {
    if text.chars().any(|c| c == '\n' || c == '\r') {
        return Err(ModelError::InvalidText {
            field,
            reason: "line breaks are not allowed",
        });
    }
    Ok(text.trim().to_string())
}

/// Semantic element text: single line, trimmed, `-` means empty.
fn normalize_element(field: &'static str, text: &str, allow_bar: bool) -> Result<String, ModelError> {
    let text = normalize_text(field, text)?;
    if !allow_bar && text.contains('|') {
        return Err(ModelError::InvalidText {
            field,
            reason: "'|' is only allowed in the S element",
        });
    }
    if text == EMPTY_SENTINEL {
        return Ok(String::new());
    }
    Ok(text)
}

/// Min/max token allowance for an importance level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub min: u32,
    pub max: u32,
}

impl Budget {
    pub fn contains(&self, tokens: u64) -> bool {
        tokens >= u64::from(self.min) && tokens <= u64::from(self.max)
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.min, self.max)
    }
}

pub type CodeMap = IndexMap<String, String>;

/// Per-project tag vocabulary and budgets declared in the index header.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagDictionary {
    layers: CodeMap,
    modules: CodeMap,
    importance: Vec<u8>,
    features: CodeMap,
    scales: CodeMap,
    table_domains: CodeMap,
    table_types: CodeMap,
    table_scales: CodeMap,
    table_features: CodeMap,
    budgets: BTreeMap<u8, Budget>,
}

impl TagDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Codes of a labelled dimension. Dimension C has no labels and yields
    /// an empty map; see [`TagDictionary::importance_levels`].
    pub fn codes(&self, dimension: Dimension) -> &CodeMap {
        static EMPTY: std::sync::OnceLock<CodeMap> = std::sync::OnceLock::new();
        match dimension {
            Dimension::A => &self.layers,
            Dimension::B => &self.modules,
            Dimension::C => EMPTY.get_or_init(CodeMap::new),
            Dimension::D => &self.features,
            Dimension::E => &self.scales,
            Dimension::TableDomain => &self.table_domains,
            Dimension::TableType => &self.table_types,
            Dimension::TableScale => &self.table_scales,
            Dimension::TableFeature => &self.table_features,
        }
    }

    fn codes_mut(&mut self, dimension: Dimension) -> Option<&mut CodeMap> {
        Some(match dimension {
            Dimension::A => &mut self.layers,
            Dimension::B => &mut self.modules,
            Dimension::C => return None,
            Dimension::D => &mut self.features,
            Dimension::E => &mut self.scales,
            Dimension::TableDomain => &mut self.table_domains,
            Dimension::TableType => &mut self.table_types,
            Dimension::TableScale => &mut self.table_scales,
            Dimension::TableFeature => &mut self.table_features,
        })
    }

    pub fn label(&self, dimension: Dimension, code: &str) -> Option<&str> {
        self.codes(dimension).get(code).map(String::as_str)
    }

    pub fn contains(&self, dimension: Dimension, code: &str) -> bool {
        self.codes(dimension).contains_key(code)
    }

    pub fn add_code(&mut self, dimension: Dimension, code: &str, label: &str) -> Result<(), ModelError> {
        check_code(dimension, code)?;
        let label_ok = !label.trim().is_empty() && !label.chars().any(|c| c == ',' || c.is_control());
        if !label_ok {
            return Err(ModelError::InvalidLabel {
                code: code.to_string(),
                label: label.to_string(),
            });
        }
        let Some(map) = self.codes_mut(dimension) else {
            return Err(ModelError::InvalidCode {
                dimension,
                code: code.to_string(),
                reason: "dimension C takes importance digits, not codes",
            });
        };
        if map.contains_key(code) {
            return Err(ModelError::DuplicateCode {
                dimension,
                code: code.to_string(),
            });
        }
        if dimension == Dimension::E && map.len() >= MAX_SCALE_CODES {
            return Err(ModelError::TooManyScaleCodes);
        }
        map.insert(code.to_string(), label.trim().to_string());
        Ok(())
    }

    pub fn with_code(mut self, dimension: Dimension, code: &str, label: &str) -> Result<Self, ModelError> {
        self.add_code(dimension, code, label)?;
        Ok(self)
    }

    pub fn add_importance(&mut self, level: u8) -> Result<(), ModelError> {
        if !IMPORTANCE_LEVELS.contains(&level) {
            return Err(ModelError::InvalidImportance(level));
        }
        if self.importance.contains(&level) {
            return Err(ModelError::DuplicateImportance(level));
        }
        self.importance.push(level);
        Ok(())
    }

    /// Importance digits as declared in the header, possibly empty.
    pub fn declared_importance(&self) -> &[u8] {
        &self.importance
    }

    /// Effective importance scale: the declared digits, or the full
    /// six-level scale when the header declares none.
    pub fn importance_levels(&self) -> &[u8] {
        if self.importance.is_empty() {
            &IMPORTANCE_LEVELS
        } else {
            &self.importance
        }
    }

    pub fn set_budget(&mut self, importance: u8, budget: Budget) -> Result<(), ModelError> {
        if !IMPORTANCE_LEVELS.contains(&importance) {
            return Err(ModelError::InvalidImportance(importance));
        }
        if budget.min > budget.max {
            return Err(ModelError::InvalidBudget {
                importance,
                min: budget.min,
                max: budget.max,
            });
        }
        self.budgets.insert(importance, budget);
        Ok(())
    }

    pub fn declared_budgets(&self) -> &BTreeMap<u8, Budget> {
        &self.budgets
    }

    /// Budget for an importance level, falling back to [`DEFAULT_BUDGETS`].
    pub fn budget_for(&self, importance: u8) -> Option<Budget> {
        self.budgets.get(&importance).copied().or_else(|| {
            DEFAULT_BUDGETS
                .iter()
                .find(|(level, _)| *level == importance)
                .map(|(_, b)| *b)
        })
    }

    /// Pairs of codes within one dimension where one is a proper prefix of
    /// the other. Such dimensions can make concatenated tags ambiguous.
    pub fn prefix_conflicts(&self, dimension: Dimension) -> Vec<(String, String)> {
        let codes: Vec<&String> = self.codes(dimension).keys().collect();
        let mut out = Vec::new();
        for a in &codes {
            for b in &codes {
                if a.len() < b.len() && b.starts_with(a.as_str()) {
                    out.push(((*a).clone(), (*b).clone()));
                }
            }
        }
        out.sort();
        out
    }
}

/// Components of a decoded ABCDE tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DecodedTag {
    pub layer: String,
    pub module: String,
    pub importance: u8,
    pub features: Vec<String>,
    pub scale: Option<String>,
}

/// The bracketed tag of a code entry.
///
/// `ScaleOnly` is the reduced form produced by stripping A-D from a tag and
/// keeping the E code alone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum EntryTag {
    Full(DecodedTag),
    ScaleOnly(String),
}

impl EntryTag {
    /// The tag string as written inside the brackets.
    pub fn raw(&self) -> String {
        match self {
            Self::Full(decoded) => tag::encode_tag(decoded),
            Self::ScaleOnly(code) => code.clone(),
        }
    }

    pub fn decoded(&self) -> Option<&DecodedTag> {
        match self {
            Self::Full(decoded) => Some(decoded),
            Self::ScaleOnly(_) => None,
        }
    }

    pub fn importance(&self) -> Option<u8> {
        self.decoded().map(|d| d.importance)
    }

    pub fn scale(&self) -> Option<&str> {
        match self {
            Self::Full(decoded) => decoded.scale.as_deref(),
            Self::ScaleOnly(code) => Some(code),
        }
    }
}

/// One source file's index record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CodeEntry {
    pub path: String,
    pub tag: Option<EntryTag>,
    /// F: business role of the file.
    pub function: String,
    /// R: related files, as repo-relative paths or path prefixes.
    pub relations: Vec<String>,
    /// A: exposed APIs.
    pub api: String,
    /// S: synopsis of implementation details.
    pub synopsis: String,
}

impl CodeEntry {
    /// An untagged entry with every semantic element empty.
    pub fn new(path: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            tag: None,
            function: String::new(),
            relations: Vec::new(),
            api: String::new(),
            synopsis: String::new(),
        }
    }

    pub fn decoded(&self) -> Option<&DecodedTag> {
        self.tag.as_ref().and_then(EntryTag::decoded)
    }

    pub fn importance(&self) -> Option<u8> {
        self.tag.as_ref().and_then(EntryTag::importance)
    }

    /// Returns the entry with canonical path and references and trimmed,
    /// sentinel-free element text.
    pub fn normalize(self) -> Result<Self, ModelError> {
        let path = entry_path(&self.path)?;
        let mut relations = Vec::with_capacity(self.relations.len());
        for r in &self.relations {
            let r = canonical_path(r.trim()).map_err(|_| ModelError::InvalidReference(r.clone()))?;
            check_path(&r).map_err(|_| ModelError::InvalidReference(r.clone()))?;
            relations.push(r);
        }
        Ok(Self {
            path,
            tag: self.tag,
            function: normalize_element("F", &self.function, false)?,
            relations,
            api: normalize_element("A", &self.api, false)?,
            synopsis: normalize_element("S", &self.synopsis, true)?,
        })
    }

    /// Checks the tag against a dictionary.
    pub fn check_tag(&self, dict: &TagDictionary) -> Result<(), TagError> {
        match &self.tag {
            None => Ok(()),
            Some(EntryTag::Full(decoded)) => tag::check_decoded(decoded, dict),
            Some(EntryTag::ScaleOnly(code)) => {
                if dict.contains(Dimension::E, code) {
                    Ok(())
                } else {
                    Err(TagError::UnknownCode {
                        dimension: Dimension::E,
                        code: code.clone(),
                    })
                }
            }
        }
    }
}

/// Four-dimension table tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TableTag {
    pub domain: String,
    pub ttype: String,
    pub scale: String,
    pub features: Vec<String>,
}

/// One database table's index record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TableEntry {
    pub name: String,
    pub tag: Option<TableTag>,
    /// Comma-separated field-level description.
    pub fields_text: String,
}

impl TableEntry {
    pub fn normalize(self) -> Result<Self, ModelError> {
        let name_ok = !self.name.is_empty() && self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !name_ok {
            return Err(ModelError::InvalidTableName(self.name));
        }
        Ok(Self {
            fields_text: normalize_element("table fields", &self.fields_text, true)?,
            ..self
        })
    }

    pub fn check_tag(&self, dict: &TagDictionary) -> Result<(), TagError> {
        match &self.tag {
            None => Ok(()),
            Some(t) => tag::check_table_tag(t, dict),
        }
    }
}

/// Project metadata and tag vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    pub project: String,
    pub overview: Vec<String>,
    pub stack: String,
    pub dictionary: TagDictionary,
}

impl Default for Header {
    fn default() -> Self {
        Self {
            version: 1,
            project: String::new(),
            overview: Vec::new(),
            stack: String::new(),
            dictionary: TagDictionary::default(),
        }
    }
}

impl Header {
    fn normalize(self) -> Result<Self, ModelError> {
        if self.version < 1 {
            return Err(ModelError::InvalidVersion(self.version));
        }
        let overview = self
            .overview
            .iter()
            .map(|l| normalize_text("overview", l))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            project: normalize_text("project", &self.project)?,
            stack: normalize_text("stack", &self.stack)?,
            overview,
            ..self
        })
    }
}

/// A complete index document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Index {
    header: Header,
    code_entries: Vec<CodeEntry>,
    table_entries: Vec<TableEntry>,
}

impl Index {
    /// Normalizes every component and checks the document invariants.
    pub fn new(
        header: Header,
        code_entries: Vec<CodeEntry>,
        table_entries: Vec<TableEntry>,
    ) -> Result<Self, ModelError> {
        let header = header.normalize()?;
        let dict = &header.dictionary;

        let mut seen = HashSet::new();
        let code_entries = code_entries
            .into_iter()
            .map(|e| {
                let e = e.normalize()?;
                e.check_tag(dict).map_err(|source| ModelError::Tag {
                    subject: e.path.clone(),
                    source,
                })?;
                if !seen.insert(e.path.clone()) {
                    return Err(ModelError::DuplicatePath(e.path));
                }
                Ok(e)
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut seen = HashSet::new();
        let table_entries = table_entries
            .into_iter()
            .map(|t| {
                let t = t.normalize()?;
                t.check_tag(dict).map_err(|source| ModelError::Tag {
                    subject: t.name.clone(),
                    source,
                })?;
                if !seen.insert(t.name.clone()) {
                    return Err(ModelError::DuplicateTable(t.name));
                }
                Ok(t)
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            header,
            code_entries,
            table_entries,
        })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn dictionary(&self) -> &TagDictionary {
        &self.header.dictionary
    }

    pub fn code_entries(&self) -> &[CodeEntry] {
        &self.code_entries
    }

    pub fn table_entries(&self) -> &[TableEntry] {
        &self.table_entries
    }

    pub fn entry(&self, path: &str) -> Option<&CodeEntry> {
        self.code_entries.iter().find(|e| e.path == path)
    }

    pub fn into_parts(self) -> (Header, Vec<CodeEntry>, Vec<TableEntry>) {
        (self.header, self.code_entries, self.table_entries)
    }

    /// Rebuilds the index with new code entries, keeping header and tables.
    pub fn with_code_entries(&self, code_entries: Vec<CodeEntry>) -> Result<Self, ModelError> {
        Self::new(self.header.clone(), code_entries, self.table_entries.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ChangeStatus {
    Added,
    Modified,
    Deleted,
    Renamed,
}

/// One line of a change listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChangeRecord {
    pub status: ChangeStatus,
    pub path: String,
    /// Destination path; present only for renames.
    pub new_path: Option<String>,
    /// Similarity score of a rename (100 = unchanged content).
    pub similarity: Option<u8>,
}

impl ChangeRecord {
    pub fn added(path: &str) -> Self {
        Self::simple(ChangeStatus::Added, path)
    }

    pub fn modified(path: &str) -> Self {
        Self::simple(ChangeStatus::Modified, path)
    }

    pub fn deleted(path: &str) -> Self {
        Self::simple(ChangeStatus::Deleted, path)
    }

    pub fn renamed(from: &str, to: &str) -> Self {
        Self {
            status: ChangeStatus::Renamed,
            path: from.to_string(),
            new_path: Some(to.to_string()),
            similarity: Some(100),
        }
    }

    fn simple(status: ChangeStatus, path: &str) -> Self {
        Self {
            status,
            path: path.to_string(),
            new_path: None,
            similarity: None,
        }
    }
}

/// An ordered list of file changes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChangeSet {
    records: Vec<ChangeRecord>,
}

impl ChangeSet {
    pub fn new(records: Vec<ChangeRecord>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(records.len());
        for mut r in records {
            r.path = entry_path(&r.path)?;
            if !seen.insert(r.path.clone()) {
                return Err(ModelError::DuplicateChange(r.path));
            }
            match (r.status, r.new_path.take()) {
                (ChangeStatus::Renamed, Some(to)) => {
                    let to = entry_path(&to)?;
                    if to == r.path {
                        return Err(ModelError::SelfRename(to));
                    }
                    if !seen.insert(to.clone()) {
                        return Err(ModelError::DuplicateChange(to));
                    }
                    r.new_path = Some(to);
                }
                (ChangeStatus::Renamed, None) => {
                    return Err(ModelError::InvalidPath(String::new()));
                }
                (_, _) => {
                    r.similarity = None;
                }
            }
            out.push(r);
        }
        Ok(Self { records: out })
    }

    pub fn records(&self) -> &[ChangeRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }
}
