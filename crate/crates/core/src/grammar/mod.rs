//! Reader and canonical writer for the line-oriented index format.
//!
//! ```text
//! #AOCI 1
//! #PROJECT <text>
//! #OVERVIEW <text>                      (repeatable)
//! #STACK <text>
//! #DIM <A|B|D|E> <code>=<label>,...
//! #DIM C <digit>,...
//! #BUDGET <digit>:<min>-<max> ...
//! #TDIM <DOMAIN|TYPE|SCALE|FEAT> <code>=<label>,...
//! @CODE
//! path[TAG]: F:<f> | R:<r1>,<r2> | A:<a> | S:<s>
//! @TABLES
//! name[DOMAIN-TYPE-SCALE-FEAT+FEAT]: <field description>
//! ```
//!
//! Header directives may repeat (`#DIM`, `#TDIM`, `#BUDGET` and `#OVERVIEW`
//! accumulate). The writer always emits them in the order above, one line
//! per dimension, with `-` for empty elements and LF line endings.

pub mod tag;

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Budget, CodeEntry, Dimension, EntryTag, Header, Index, ModelError, TableEntry, EMPTY_SENTINEL};
pub use tag::{decode_table_tag, decode_tag, encode_table_tag, encode_tag, TagError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ParseErrorKind {
    InvalidUtf8,
    MissingVersion,
    DuplicateDirective,
    UnknownDirective,
    MalformedDirective,
    UnexpectedLine,
    UnknownSection,
    DuplicateSection,
    MalformedEntry,
    InvalidValue,
    Tag,
    DuplicatePath,
    DuplicateTable,
}

/// A located parse failure. Line and column are 1-based; the column counts
/// characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

/// Where an entry came from in the source document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    /// Entry path or table name.
    pub subject: String,
    pub line: usize,
    /// Byte offset of the first byte of the line.
    pub start: usize,
    /// Byte offset one past the last byte of the line (excluding the LF).
    pub end: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    /// Abort on the first error.
    #[default]
    Strict,
    /// Skip offending lines and collect every error.
    Lenient,
}

#[derive(Debug, Clone)]
pub struct ParsedDocument {
    pub index: Index,
    pub code_spans: Vec<SourceSpan>,
    pub table_spans: Vec<SourceSpan>,
    /// Always empty in strict mode.
    pub errors: Vec<ParseError>,
}

/// Parses an index document, stopping at the first error.
pub fn parse_index(text: &str) -> Result<Index, ParseError> {
    parse_document(text, ParseMode::Strict).map(|doc| doc.index)
}

/// Parses raw bytes, reporting invalid UTF-8 as a located error.
pub fn parse_index_bytes(bytes: &[u8]) -> Result<Index, ParseError> {
    parse_index(decode_utf8(bytes)?)
}

pub fn decode_utf8(bytes: &[u8]) -> Result<&str, ParseError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let valid = &bytes[..e.valid_up_to()];
        let line_start = valid.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        // the prefix is valid UTF-8 by construction
        let partial = std::str::from_utf8(&valid[line_start..]).unwrap_or("");
        ParseError {
            line: valid.iter().filter(|b| **b == b'\n').count() + 1,
            column: partial.chars().count() + 1,
            kind: ParseErrorKind::InvalidUtf8,
            message: format!("invalid UTF-8 at byte {}", e.valid_up_to()),
        }
    })
}

pub fn parse_document(text: &str, mode: ParseMode) -> Result<ParsedDocument, ParseError> {
    let mut parser = Parser::new(mode);
    let mut offset = 0;
    for (i, raw) in text.split('\n').enumerate() {
        let start = offset;
        offset += raw.len() + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let ctx = LineCtx {
            number: i + 1,
            text: line,
            start,
        };
        if let Err(err) = parser.line(&ctx) {
            parser.report(err)?;
        }
    }
    parser.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Code,
    Tables,
}

struct LineCtx<'a> {
    number: usize,
    text: &'a str,
    start: usize,
}

impl LineCtx<'_> {
    /// Error pointing at `at`, which must be a subslice of the line.
    fn error_at(&self, at: &str, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        let byte = (at.as_ptr() as usize)
            .saturating_sub(self.text.as_ptr() as usize)
            .min(self.text.len());
        let byte = (0..=byte).rev().find(|b| self.text.is_char_boundary(*b)).unwrap_or(0);
        ParseError {
            line: self.number,
            column: self.text[..byte].chars().count() + 1,
            kind,
            message: message.into(),
        }
    }

    fn error(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        self.error_at(self.text.trim_start(), kind, message)
    }
}

struct Parser {
    mode: ParseMode,
    errors: Vec<ParseError>,
    header: Header,
    seen: HashSet<&'static str>,
    section: Section,
    code: Vec<CodeEntry>,
    tables: Vec<TableEntry>,
    code_spans: Vec<SourceSpan>,
    table_spans: Vec<SourceSpan>,
    paths: HashSet<String>,
    names: HashSet<String>,
}

fn split_word(s: &str) -> (&str, &str) {
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim()),
        None => (s, ""),
    }
}

impl Parser {
    fn new(mode: ParseMode) -> Self {
        Self {
            mode,
            errors: Vec::new(),
            header: Header::default(),
            seen: HashSet::new(),
            section: Section::Header,
            code: Vec::new(),
            tables: Vec::new(),
            code_spans: Vec::new(),
            table_spans: Vec::new(),
            paths: HashSet::new(),
            names: HashSet::new(),
        }
    }

    fn report(&mut self, err: ParseError) -> Result<(), ParseError> {
        match self.mode {
            ParseMode::Strict => Err(err),
            ParseMode::Lenient => {
                self.errors.push(err);
                Ok(())
            }
        }
    }

    fn line(&mut self, ctx: &LineCtx<'_>) -> Result<(), ParseError> {
        let trimmed = ctx.text.trim();
        if trimmed.starts_with('@') {
            return self.section_marker(ctx, trimmed);
        }
        match self.section {
            Section::Header if trimmed.starts_with('#') => self.directive(ctx, trimmed),
            Section::Header => Err(ctx.error(
                ParseErrorKind::UnexpectedLine,
                "expected a '#' directive or a section marker",
            )),
            Section::Code => self.code_line(ctx),
            Section::Tables => self.table_line(ctx),
        }
    }

    fn section_marker(&mut self, ctx: &LineCtx<'_>, marker: &str) -> Result<(), ParseError> {
        let (key, next) = match marker {
            "@CODE" => ("@CODE", Section::Code),
            "@TABLES" => ("@TABLES", Section::Tables),
            _ => {
                return Err(ctx.error(
                    ParseErrorKind::UnknownSection,
                    format!("unknown section marker {marker:?}"),
                ))
            }
        };
        if self.section == Section::Header && !self.seen.contains("#AOCI") {
            self.seen.insert("#AOCI");
            self.report(ParseError {
                line: 1,
                column: 1,
                kind: ParseErrorKind::MissingVersion,
                message: "missing '#AOCI <version>' header line".into(),
            })?;
        }
        if !self.seen.insert(key) {
            return Err(ctx.error(ParseErrorKind::DuplicateSection, format!("duplicate {key} section")));
        }
        self.section = next;
        Ok(())
    }

    fn once(&mut self, ctx: &LineCtx<'_>, name: &'static str) -> Result<(), ParseError> {
        if self.seen.insert(name) {
            Ok(())
        } else {
            Err(ctx.error(
                ParseErrorKind::DuplicateDirective,
                format!("duplicate {name} directive"),
            ))
        }
    }

    fn directive(&mut self, ctx: &LineCtx<'_>, line: &str) -> Result<(), ParseError> {
        let (name, rest) = split_word(line);
        let malformed = |msg: String| ctx.error_at(rest, ParseErrorKind::MalformedDirective, msg);
        let invalid = |e: ModelError| ctx.error_at(rest, ParseErrorKind::InvalidValue, e.to_string());
        match name {
            "#AOCI" => {
                self.once(ctx, "#AOCI")?;
                match rest.parse::<u32>() {
                    Ok(v) if v >= 1 => self.header.version = v,
                    _ => return Err(malformed(format!("invalid protocol version {rest:?}"))),
                }
            }
            "#PROJECT" => {
                self.once(ctx, "#PROJECT")?;
                self.header.project = rest.to_string();
            }
            "#STACK" => {
                self.once(ctx, "#STACK")?;
                self.header.stack = rest.to_string();
            }
            "#OVERVIEW" => self.header.overview.push(rest.to_string()),
            "#DIM" | "#TDIM" => {
                let (keyword, list) = split_word(rest);
                let dim = if name == "#DIM" {
                    Dimension::from_code_keyword(keyword)
                } else {
                    Dimension::from_table_keyword(keyword)
                };
                let Some(dim) = dim else {
                    return Err(malformed(format!("unknown dimension {keyword:?} for {name}")));
                };
                let dict = &mut self.header.dictionary;
                for item in list.split(',').map(str::trim).filter(|_| !list.is_empty()) {
                    if dim == Dimension::C {
                        let level = match item.as_bytes() {
                            [d @ b'0'..=b'9'] => d - b'0',
                            _ => return Err(malformed(format!("expected an importance digit, got {item:?}"))),
                        };
                        dict.add_importance(level).map_err(invalid)?;
                    } else {
                        let Some((code, label)) = item.split_once('=') else {
                            return Err(malformed(format!("expected <code>=<label>, got {item:?}")));
                        };
                        dict.add_code(dim, code.trim(), label.trim()).map_err(invalid)?;
                    }
                }
            }
            "#BUDGET" => {
                for item in rest.split_whitespace() {
                    let parsed = item.split_once(':').and_then(|(level, range)| {
                        let (min, max) = range.split_once('-')?;
                        Some((
                            level.parse::<u8>().ok()?,
                            min.parse::<u32>().ok()?,
                            max.parse::<u32>().ok()?,
                        ))
                    });
                    let Some((level, min, max)) = parsed else {
                        return Err(malformed(format!("expected <digit>:<min>-<max>, got {item:?}")));
                    };
                    let dict = &mut self.header.dictionary;
                    if dict.declared_budgets().contains_key(&level) {
                        return Err(ctx.error_at(
                            rest,
                            ParseErrorKind::DuplicateDirective,
                            format!("duplicate budget for importance {level}"),
                        ));
                    }
                    dict.set_budget(level, Budget { min, max }).map_err(invalid)?;
                }
            }
            _ => {
                return Err(ctx.error(
                    ParseErrorKind::UnknownDirective,
                    format!("unknown header directive {name:?}"),
                ))
            }
        }
        Ok(())
    }

    /// Splits `head: rest` and `head` into name and optional bracketed tag.
    fn split_head<'a>(ctx: &LineCtx<'a>) -> Result<(&'a str, Option<&'a str>, &'a str), ParseError> {
        let line = ctx.text.trim();
        let Some(colon) = line.find(':') else {
            return Err(ctx.error(ParseErrorKind::MalformedEntry, "missing ':' after the entry name"));
        };
        let head = line[..colon].trim();
        let body = &line[colon + 1..];
        let (name, tag) = match head.find('[') {
            Some(open) => {
                let Some(inner) = head[open + 1..].strip_suffix(']') else {
                    return Err(ctx.error_at(
                        &head[open..],
                        ParseErrorKind::MalformedEntry,
                        "tag must be closed by ']' right before ':'",
                    ));
                };
                (head[..open].trim_end(), Some(inner))
            }
            None if head.contains(']') => {
                return Err(ctx.error(ParseErrorKind::MalformedEntry, "unbalanced ']' in entry name"))
            }
            None => (head, None),
        };
        if name.is_empty() {
            return Err(ctx.error(ParseErrorKind::MalformedEntry, "empty entry name"));
        }
        Ok((name, tag, body))
    }

    fn code_line(&mut self, ctx: &LineCtx<'_>) -> Result<(), ParseError> {
        let (path, raw_tag, body) = Self::split_head(ctx)?;
        let tag = match raw_tag {
            None => None,
            Some(raw) => Some(
                tag::decode_entry_tag(raw, &self.header.dictionary)
                    .map_err(|e| ctx.error_at(raw, ParseErrorKind::Tag, e.to_string()))?,
            ),
        };

        let parts: Vec<&str> = body.splitn(4, '|').collect();
        if parts.len() != 4 {
            return Err(ctx.error_at(
                body,
                ParseErrorKind::MalformedEntry,
                "expected four elements 'F:… | R:… | A:… | S:…'",
            ));
        }
        let mut values = [""; 4];
        for ((part, label), slot) in parts.iter().zip(["F:", "R:", "A:", "S:"]).zip(values.iter_mut()) {
            let part = part.trim();
            let Some(value) = part.strip_prefix(label) else {
                return Err(ctx.error_at(
                    part,
                    ParseErrorKind::MalformedEntry,
                    format!("expected element {label}"),
                ));
            };
            *slot = value.trim();
        }
        let [function, relations, api, synopsis] = values;

        let relations = if relations.is_empty() || relations == EMPTY_SENTINEL {
            Vec::new()
        } else {
            let mut out = Vec::new();
            for r in relations.split(',').map(str::trim) {
                if r.is_empty() {
                    return Err(ctx.error_at(relations, ParseErrorKind::MalformedEntry, "empty relation reference"));
                }
                out.push(r.to_string());
            }
            out
        };

        let entry = CodeEntry {
            path: path.to_string(),
            tag,
            function: function.to_string(),
            relations,
            api: api.to_string(),
            synopsis: synopsis.to_string(),
        }
        .normalize()
        .map_err(|e| ctx.error_at(path, ParseErrorKind::InvalidValue, e.to_string()))?;

        if !self.paths.insert(entry.path.clone()) {
            return Err(ctx.error_at(
                path,
                ParseErrorKind::DuplicatePath,
                format!("duplicate entry for {:?}", entry.path),
            ));
        }
        self.code_spans.push(SourceSpan {
            subject: entry.path.clone(),
            line: ctx.number,
            start: ctx.start,
            end: ctx.start + ctx.text.len(),
        });
        self.code.push(entry);
        Ok(())
    }

    fn table_line(&mut self, ctx: &LineCtx<'_>) -> Result<(), ParseError> {
        let (name, raw_tag, body) = Self::split_head(ctx)?;
        let tag = match raw_tag {
            None => None,
            Some(raw) => Some(
                tag::decode_table_tag(raw, &self.header.dictionary)
                    .map_err(|e| ctx.error_at(raw, ParseErrorKind::Tag, e.to_string()))?,
            ),
        };
        let table = TableEntry {
            name: name.to_string(),
            tag,
            fields_text: body.trim().to_string(),
        }
        .normalize()
        .map_err(|e| ctx.error_at(name, ParseErrorKind::InvalidValue, e.to_string()))?;
        if !self.names.insert(table.name.clone()) {
            return Err(ctx.error_at(
                name,
                ParseErrorKind::DuplicateTable,
                format!("duplicate table {:?}", table.name),
            ));
        }
        self.table_spans.push(SourceSpan {
            subject: table.name.clone(),
            line: ctx.number,
            start: ctx.start,
            end: ctx.start + ctx.text.len(),
        });
        self.tables.push(table);
        Ok(())
    }

    fn finish(mut self) -> Result<ParsedDocument, ParseError> {
        if !self.seen.contains("#AOCI") {
            self.report(ParseError {
                line: 1,
                column: 1,
                kind: ParseErrorKind::MissingVersion,
                message: "missing '#AOCI <version>' header line".into(),
            })?;
        }
        let index = Index::new(self.header, self.code, self.tables).map_err(|e| ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::InvalidValue,
            message: e.to_string(),
        })?;
        Ok(ParsedDocument {
            index,
            code_spans: self.code_spans,
            table_spans: self.table_spans,
            errors: self.errors,
        })
    }
}

fn or_sentinel(text: &str) -> &str {
    if text.is_empty() {
        EMPTY_SENTINEL
    } else {
        text
    }
}

/// Canonical single-line form of a code entry (no trailing newline).
pub fn format_code_entry(entry: &CodeEntry) -> String {
    let mut out = String::with_capacity(64);
    out.push_str(&entry.path);
    if let Some(tag) = &entry.tag {
        let _ = write!(out, "[{}]", tag.raw());
    }
    let relations = if entry.relations.is_empty() {
        EMPTY_SENTINEL.to_string()
    } else {
        entry.relations.join(",")
    };
    let _ = write!(
        out,
        ": F:{} | R:{} | A:{} | S:{}",
        or_sentinel(&entry.function),
        relations,
        or_sentinel(&entry.api),
        or_sentinel(&entry.synopsis)
    );
    out
}

/// The semantic layer of an entry as written after `path[TAG]: `.
pub fn format_semantic_layer(entry: &CodeEntry) -> String {
    let line = format_code_entry(entry);
    let head = entry.path.len() + entry.tag.as_ref().map_or(0, |t| t.raw().len() + 2) + 2;
    line[head..].to_string()
}

pub fn format_table_entry(table: &TableEntry) -> String {
    let mut out = table.name.clone();
    if let Some(tag) = &table.tag {
        let _ = write!(out, "[{}]", encode_table_tag(tag));
    }
    let _ = write!(out, ": {}", or_sentinel(&table.fields_text));
    out
}

/// Header lines, each terminated by LF.
pub fn format_header(header: &Header) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "#AOCI {}", header.version);
    if !header.project.is_empty() {
        let _ = writeln!(out, "#PROJECT {}", header.project);
    }
    for line in &header.overview {
        if line.is_empty() {
            out.push_str("#OVERVIEW\n");
        } else {
            let _ = writeln!(out, "#OVERVIEW {line}");
        }
    }
    if !header.stack.is_empty() {
        let _ = writeln!(out, "#STACK {}", header.stack);
    }
    let dict = &header.dictionary;
    let pairs = |dim: Dimension| {
        dict.codes(dim)
            .iter()
            .map(|(c, l)| format!("{c}={l}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    for dim in Dimension::CODE {
        if dim == Dimension::C {
            if !dict.declared_importance().is_empty() {
                let levels: Vec<String> = dict.declared_importance().iter().map(u8::to_string).collect();
                let _ = writeln!(out, "#DIM C {}", levels.join(","));
            }
        } else if !dict.codes(dim).is_empty() {
            let _ = writeln!(out, "#DIM {} {}", dim.keyword(), pairs(dim));
        }
    }
    if !dict.declared_budgets().is_empty() {
        let budgets: Vec<String> = dict
            .declared_budgets()
            .iter()
            .rev()
            .map(|(level, b)| format!("{level}:{b}"))
            .collect();
        let _ = writeln!(out, "#BUDGET {}", budgets.join(" "));
    }
    for dim in Dimension::TABLE {
        if !dict.codes(dim).is_empty() {
            let _ = writeln!(out, "#TDIM {} {}", dim.keyword(), pairs(dim));
        }
    }
    out
}

/// Canonical text of a whole index.
pub fn serialize_index(index: &Index) -> String {
    let mut out = format_header(index.header());
    out.push_str("@CODE\n");
    for entry in index.code_entries() {
        out.push_str(&format_code_entry(entry));
        out.push('\n');
    }
    if !index.table_entries().is_empty() {
        out.push_str("@TABLES\n");
        for table in index.table_entries() {
            out.push_str(&format_table_entry(table));
            out.push('\n');
        }
    }
    out
}

/// Human-readable decomposition of a tag, one dimension per line.
pub fn describe_tag(tag: &EntryTag, dict: &crate::model::TagDictionary) -> Vec<String> {
    let label = |dim: Dimension, code: &str| dict.label(dim, code).unwrap_or("?").to_string();
    match tag {
        EntryTag::ScaleOnly(code) => vec![format!("E {code} {}", label(Dimension::E, code))],
        EntryTag::Full(d) => {
            let mut out = vec![
                format!("A {} {}", d.layer, label(Dimension::A, &d.layer)),
                format!("B {} {}", d.module, label(Dimension::B, &d.module)),
                format!("C {}", d.importance),
            ];
            out.extend(d.features.iter().map(|f| format!("D {f} {}", label(Dimension::D, f))));
            if let Some(s) = &d.scale {
                out.push(format!("E {s} {}", label(Dimension::E, s)));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{REFERENCE_HEADER, SAMPLE_AUTH, SAMPLE_CONFIG};

    fn doc(body: &str) -> String {
        format!("{REFERENCE_HEADER}@CODE\n{body}")
    }

    #[test]
    fn minimal_entry_renders_sentinels() {
        let mut e = CodeEntry::new("x.go");
        e.function = "util".into();
        e.synopsis = "helpers".into();
        assert_eq!(format_code_entry(&e), "x.go: F:util | R:- | A:- | S:helpers");
    }

    #[test]
    fn empty_code_section() {
        let idx = parse_index(&doc("")).unwrap();
        assert!(idx.code_entries().is_empty());
        assert!(idx.table_entries().is_empty());
    }

    #[test]
    fn parses_sample_entries() {
        let idx = parse_index(&doc(&format!("{SAMPLE_AUTH}\n{SAMPLE_CONFIG}\n"))).unwrap();
        let auth = &idx.code_entries()[0];
        assert_eq!(auth.path, "auth.go");
        assert_eq!(auth.tag.as_ref().unwrap().raw(), "WA9JM");
        assert_eq!(auth.relations, vec!["pkg/jwt", "model/user"]);
        assert_eq!(auth.api, "");
        let config = &idx.code_entries()[1];
        assert_eq!(config.relations, vec!["internal/config/config.go"]);
        assert_eq!(config.function, "main configuration");
    }

    #[test]
    fn tolerant_spacing_parses_to_canonical() {
        let idx = parse_index(&doc("a.go:  F:x|R: b.go , c |A:-|  S:y  \n")).unwrap();
        assert_eq!(
            format_code_entry(&idx.code_entries()[0]),
            "a.go: F:x | R:b.go,c | A:- | S:y"
        );
    }

    #[test]
    fn synopsis_may_contain_bars() {
        let idx = parse_index(&doc("a.ts: F:x | R:- | A:- | S:string | null union\n")).unwrap();
        assert_eq!(idx.code_entries()[0].synopsis, "string | null union");
    }

    #[test]
    fn scale_only_and_untagged_entries() {
        let idx = parse_index(&doc("a.go[M]: F:x | R:- | A:- | S:-\nb.go: F:- | R:- | A:- | S:-\n")).unwrap();
        assert_eq!(idx.code_entries()[0].tag, Some(EntryTag::ScaleOnly("M".into())));
        assert_eq!(idx.code_entries()[1].tag, None);
    }

    #[test]
    fn errors_are_located() {
        let text = doc("a.go[WA9QM]: F:x | R:- | A:- | S:-\n");
        let err = parse_index(&text).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Tag);
        assert_eq!(err.line, REFERENCE_HEADER.lines().count() + 2);
        assert_eq!(err.column, 6);

        let err = parse_index(&doc("a.go: F:x | R:-\n")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MalformedEntry);

        let err = parse_index(&doc("a.go: F:x | R:- | A:- | S:-\n./a.go: F:y | R:- | A:- | S:-\n")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicatePath);

        let err = parse_index("#PROJECT x\n@CODE\n").unwrap_err();
        assert_eq!((err.kind, err.line), (ParseErrorKind::MissingVersion, 1));

        let err = parse_index("#AOCI 1\n#FOO bar\n").unwrap_err();
        assert_eq!(
            (err.kind, err.line, err.column),
            (ParseErrorKind::UnknownDirective, 2, 1)
        );

        let err = parse_index("#AOCI 1\n@CODE\n@CODE\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateSection);

        let err = parse_index("#AOCI 1\n#DIM A W=Mid,W=Other\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::InvalidValue);
    }

    #[test]
    fn lenient_mode_collects_errors() {
        let text = doc("a.go: F:x\nb.go: F:- | R:- | A:- | S:-\nc.go[ZZ9]: F:- | R:- | A:- | S:-\n");
        assert!(parse_document(&text, ParseMode::Strict).is_err());
        let parsed = parse_document(&text, ParseMode::Lenient).unwrap();
        assert_eq!(parsed.errors.len(), 2);
        assert_eq!(parsed.index.code_entries().len(), 1);
        assert_eq!(parsed.code_spans[0].subject, "b.go");
    }

    #[test]
    fn spans_cover_entry_lines() {
        let text = doc(&format!("{SAMPLE_AUTH}\n"));
        let parsed = parse_document(&text, ParseMode::Strict).unwrap();
        let span = &parsed.code_spans[0];
        assert_eq!(&text[span.start..span.end], SAMPLE_AUTH);
    }

    #[test]
    fn invalid_utf8_is_located() {
        let err = parse_index_bytes(b"#AOCI 1\nab\xffc").unwrap_err();
        assert_eq!((err.kind, err.line, err.column), (ParseErrorKind::InvalidUtf8, 2, 3));
    }

    #[test]
    fn crlf_input_is_accepted() {
        let text = doc("a.go: F:x | R:- | A:- | S:-\n").replace('\n', "\r\n");
        let idx = parse_index(&text).unwrap();
        assert!(!serialize_index(&idx).contains('\r'));
    }

    #[test]
    fn header_round_trips() {
        let text = "#AOCI 2\n#PROJECT demo\n#OVERVIEW first\n#OVERVIEW\n#STACK Go\n#DIM A W=Middleware\n#DIM B A=Auth\n#DIM C 9,1\n#BUDGET 9:80-150 1:20-40\n@CODE\n";
        let idx = parse_index(text).unwrap();
        assert_eq!(idx.header().overview, vec!["first", ""]);
        assert_eq!(serialize_index(&idx), text);
    }

    #[test]
    fn semantic_layer_follows_head() {
        let idx = parse_index(&doc(&format!("{SAMPLE_CONFIG}\n"))).unwrap();
        let layer = format_semantic_layer(&idx.code_entries()[0]);
        assert!(layer.starts_with("F:main configuration | R:internal/config/config.go"));
    }
}
