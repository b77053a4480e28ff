//! Scaffolding rules and their line-oriented file format.
//!
//! ```text
//! [project]
//! name = AOCI Platform
//! stack = Go+Gin
//!
//! [layer]                 # first matching glob wins
//! **/middleware/** = W
//!
//! [module]
//! **/auth* = A
//!
//! [labels.A]              # optional labels for A, B and E codes
//! W = Middleware
//!
//! [size]                  # exclusive LOC upper bounds, last level open
//! T = 100
//! S = 300
//! M = 800
//! L = *
//!
//! [importance]            # cumulative fan-in rank quantiles
//! 9 = 0.05
//! 8 = 0.15
//! 7 = 0.30
//! 5 = 0.55
//! 3 = 0.80
//! 1 = 1.0
//!
//! [imports.go]            # replaces the built-in patterns for .go
//! pattern = ^\s*import\s+"([^"]+)"
//! separator = /
//! ```
//!
//! Lines starting with `#` or `;` are comments.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use globset::GlobMatcher;
use indexmap::IndexMap;
use regex::Regex;
use thiserror::Error;

use crate::filter::compile_glob;
use crate::model::{Dimension, TagDictionary, IMPORTANCE_LEVELS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rules line {line}: {message}")]
pub struct RulesError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct GlobRule {
    pub pattern: String,
    pub code: String,
    matcher: GlobMatcher,
}

impl GlobRule {
    pub fn new(pattern: &str, code: &str) -> Result<Self, String> {
        let matcher = compile_glob(pattern).map_err(|e| e.to_string())?.compile_matcher();
        Ok(Self {
            pattern: pattern.to_string(),
            code: code.to_string(),
            matcher,
        })
    }

    pub fn matches(&self, path: &str) -> bool {
        self.matcher.is_match(path)
    }
}

/// One code-scale level: files with fewer than `below` lines (or any size
/// when `below` is `None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeLevel {
    pub code: String,
    pub below: Option<u64>,
}

/// Line patterns whose first capture group is an imported module string.
#[derive(Debug, Clone)]
pub struct ImportExtractor {
    pub patterns: Vec<Regex>,
    /// Module path separator in the source language (`.` for Python).
    pub separator: char,
}

impl ImportExtractor {
    fn new(patterns: &[&str], separator: char) -> Self {
        Self {
            patterns: patterns
                .iter()
                .map(|p| Regex::new(p).expect("built-in pattern"))
                .collect(),
            separator,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaffoldRules {
    pub project: String,
    pub stack: String,
    pub layer_rules: Vec<GlobRule>,
    pub module_rules: Vec<GlobRule>,
    pub labels: BTreeMap<Dimension, IndexMap<String, String>>,
    pub size_levels: Vec<SizeLevel>,
    /// `(digit, cumulative upper bound)` from most to least important.
    pub importance_quantiles: Vec<(u8, f64)>,
    /// Keyed by file extension without the dot.
    pub import_extractors: BTreeMap<String, ImportExtractor>,
}

const GO_IMPORTS: &[&str] = &[
    r#"^\s*import\s+(?:[\w.]+\s+)?"([^"]+)""#,
    r#"^\s*(?:[\w.]+\s+)?"([^"]+)"\s*$"#,
];
const JS_IMPORTS: &[&str] = &[
    r#"^\s*import\s+(?:[^'"]*?\s+from\s+)?['"]([^'"]+)['"]"#,
    r#"^\s*export\s+[^'"]*?\s+from\s+['"]([^'"]+)['"]"#,
    r#"require\(\s*['"]([^'"]+)['"]\s*\)"#,
    r#"import\(\s*['"]([^'"]+)['"]\s*\)"#,
];
const PY_IMPORTS: &[&str] = &[r"^\s*from\s+(\.*[\w.]*)\s+import\b", r"^\s*import\s+([\w.]+)"];

static DEFAULT_EXTRACTORS: LazyLock<BTreeMap<String, ImportExtractor>> = LazyLock::new(|| {
    let mut map = BTreeMap::new();
    map.insert("go".to_string(), ImportExtractor::new(GO_IMPORTS, '/'));
    let js = ImportExtractor::new(JS_IMPORTS, '/');
    for ext in ["js", "jsx", "ts", "tsx", "mjs", "cjs", "vue"] {
        map.insert(ext.to_string(), js.clone());
    }
    map.insert("py".to_string(), ImportExtractor::new(PY_IMPORTS, '.'));
    map
});

impl Default for ScaffoldRules {
    fn default() -> Self {
        let import_extractors = DEFAULT_EXTRACTORS.clone();

        let mut labels = BTreeMap::new();
        labels.insert(
            Dimension::E,
            [("T", "Tiny"), ("S", "Small"), ("M", "Medium"), ("L", "Large")]
                .into_iter()
                .map(|(c, l)| (c.to_string(), l.to_string()))
                .collect(),
        );

        Self {
            project: String::new(),
            stack: String::new(),
            layer_rules: Vec::new(),
            module_rules: Vec::new(),
            labels,
            size_levels: vec![
                SizeLevel {
                    code: "T".into(),
                    below: Some(100),
                },
                SizeLevel {
                    code: "S".into(),
                    below: Some(300),
                },
                SizeLevel {
                    code: "M".into(),
                    below: Some(800),
                },
                SizeLevel {
                    code: "L".into(),
                    below: None,
                },
            ],
            importance_quantiles: vec![(9, 0.05), (8, 0.15), (7, 0.30), (5, 0.55), (3, 0.80), (1, 1.0)],
            import_extractors,
        }
    }
}

impl ScaffoldRules {
    pub fn parse(text: &str) -> Result<Self, RulesError> {
        let mut rules = Self::default();
        let mut section = String::new();
        let mut size: Option<Vec<SizeLevel>> = None;
        let mut quantiles: Option<Vec<(u8, f64)>> = None;
        let mut imports: BTreeMap<String, (Vec<Regex>, char)> = BTreeMap::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| RulesError { line: line_no, message };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                let known = matches!(section.as_str(), "project" | "layer" | "module" | "size" | "importance")
                    || section
                        .strip_prefix("labels.")
                        .is_some_and(|d| matches!(d, "A" | "B" | "E"))
                    || section.strip_prefix("imports.").is_some_and(|e| !e.is_empty());
                if !known {
                    return Err(err(format!("unknown section [{section}]")));
                }
                if let Some(ext) = section.strip_prefix("imports.") {
                    imports.entry(ext.to_string()).or_insert((Vec::new(), '/'));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected 'key = value', got {line:?}")));
            };
            let (key, value) = (key.trim(), value.trim());

            match section.as_str() {
                "" => return Err(err("entry outside of a section".into())),
                "project" => match key {
                    "name" => rules.project = value.to_string(),
                    "stack" => rules.stack = value.to_string(),
                    _ => return Err(err(format!("unknown project key {key:?}"))),
                },
                "layer" | "module" => {
                    let rule = GlobRule::new(key, value).map_err(err)?;
                    if section == "layer" {
                        rules.layer_rules.push(rule);
                    } else {
                        rules.module_rules.push(rule);
                    }
                }
                "size" => {
                    let below = if value == "*" {
                        None
                    } else {
                        Some(
                            value
                                .parse::<u64>()
                                .map_err(|_| err(format!("invalid line count {value:?}")))?,
                        )
                    };
                    size.get_or_insert_with(Vec::new).push(SizeLevel {
                        code: key.to_string(),
                        below,
                    });
                }
                "importance" => {
                    let digit = key
                        .parse::<u8>()
                        .map_err(|_| err(format!("invalid importance {key:?}")))?;
                    let bound = value
                        .parse::<f64>()
                        .map_err(|_| err(format!("invalid quantile {value:?}")))?;
                    quantiles.get_or_insert_with(Vec::new).push((digit, bound));
                }
                s if s.starts_with("labels.") => {
                    let dim = match &s["labels.".len()..] {
                        "A" => Dimension::A,
                        "B" => Dimension::B,
                        _ => Dimension::E,
                    };
                    rules
                        .labels
                        .entry(dim)
                        .or_default()
                        .insert(key.to_string(), value.to_string());
                }
                s => {
                    let ext = &s["imports.".len()..];
                    let slot = imports.get_mut(ext).expect("section registered");
                    match key {
                        "pattern" => {
                            let re = Regex::new(value).map_err(|e| err(format!("invalid pattern: {e}")))?;
                            if re.captures_len() < 2 {
                                return Err(err("import pattern needs a capture group".into()));
                            }
                            slot.0.push(re);
                        }
                        "separator" => {
                            let mut chars = value.chars();
                            match (chars.next(), chars.next()) {
                                (Some(c), None) => slot.1 = c,
                                _ => return Err(err(format!("separator must be one character, got {value:?}"))),
                            }
                        }
                        _ => return Err(err(format!("unknown imports key {key:?}"))),
                    }
                }
            }
        }

        if let Some(size) = size {
            rules.size_levels = size;
        }
        if let Some(q) = quantiles {
            rules.importance_quantiles = q;
        }
        for (ext, (patterns, separator)) in imports {
            rules
                .import_extractors
                .insert(ext, ImportExtractor { patterns, separator });
        }
        rules.check().map_err(|message| RulesError { line: 0, message })?;
        Ok(rules)
    }

    /// Checks size thresholds, quantile partition and code validity.
    pub fn check(&self) -> Result<(), String> {
        let n = self.size_levels.len();
        if n != 4 {
            return Err(format!("[size] needs exactly four levels, got {n}"));
        }
        for (i, level) in self.size_levels.iter().enumerate() {
            match (level.below, i + 1 == n) {
                (None, true) => {}
                (Some(_), false) => {}
                (None, false) => return Err(format!("size level {:?} must have a bound", level.code)),
                (Some(_), true) => return Err(format!("last size level {:?} must be '*'", level.code)),
            }
        }
        let bounds: Vec<u64> = self.size_levels.iter().filter_map(|l| l.below).collect();
        if bounds.windows(2).any(|w| w[0] >= w[1]) || bounds.first() == Some(&0) {
            return Err("size thresholds must be positive and strictly increasing".into());
        }

        let q = &self.importance_quantiles;
        if q.is_empty() {
            return Err("[importance] must not be empty".into());
        }
        for (digit, _) in q {
            if !IMPORTANCE_LEVELS.contains(digit) {
                return Err(format!("importance {digit} is not on the 9/8/7/5/3/1 scale"));
            }
        }
        if q.windows(2).any(|w| w[0].0 <= w[1].0 || w[0].1 >= w[1].1) {
            return Err("importance levels must decrease while quantile bounds increase".into());
        }
        if q[0].1 <= 0.0 || q.last().map(|l| l.1) != Some(1.0) {
            return Err("quantile bounds must lie in (0, 1] and end at 1.0".into());
        }
        self.dictionary().map(|_| ()).map_err(|e| e.to_string())
    }

    /// Tag dictionary covering every code the rules can assign.
    pub fn dictionary(&self) -> Result<TagDictionary, crate::model::ModelError> {
        let mut dict = TagDictionary::new();
        let label = |dim: Dimension, code: &str| -> String {
            self.labels
                .get(&dim)
                .and_then(|m| m.get(code))
                .cloned()
                .unwrap_or_else(|| code.to_string())
        };
        for (dim, rules) in [(Dimension::A, &self.layer_rules), (Dimension::B, &self.module_rules)] {
            for r in rules {
                if !dict.contains(dim, &r.code) {
                    dict.add_code(dim, &r.code, &label(dim, &r.code))?;
                }
            }
        }
        for level in &self.size_levels {
            dict.add_code(Dimension::E, &level.code, &label(Dimension::E, &level.code))?;
        }
        for (digit, _) in &self.importance_quantiles {
            dict.add_importance(*digit)?;
        }
        Ok(dict)
    }

    pub fn layer_for(&self, path: &str) -> Option<&GlobRule> {
        self.layer_rules.iter().find(|r| r.matches(path))
    }

    pub fn module_for(&self, path: &str) -> Option<&GlobRule> {
        self.module_rules.iter().find(|r| r.matches(path))
    }

    pub fn scale_for(&self, loc: u64) -> &str {
        self.size_levels
            .iter()
            .find(|l| l.below.is_none_or(|b| loc < b))
            .map(|l| l.code.as_str())
            .expect("last size level is open")
    }

    /// Importance for a file whose fan-in rank quantile is `quantile`
    /// (0 = most imported). Files nobody imports get the lowest level.
    pub fn importance_for(&self, fan_in: usize, quantile: f64) -> u8 {
        let lowest = self.importance_quantiles.last().expect("non-empty").0;
        if fan_in == 0 {
            return lowest;
        }
        self.importance_quantiles
            .iter()
            .find(|(_, bound)| quantile < *bound)
            .map_or(lowest, |(digit, _)| *digit)
    }
}
