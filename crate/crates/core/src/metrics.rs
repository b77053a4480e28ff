//! Token estimation, index statistics and the two deterministic answer
//! scores (file localization and entity F1).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::grammar::{format_code_entry, format_semantic_layer, format_table_entry};
use crate::model::{canonical_path, CodeEntry, EntryTag, Index, ModelError};

/// Environment variable selecting the default estimator for the CLI.
pub const ESTIMATOR_ENV: &str = "AOCI_ESTIMATOR";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenEstimator {
    /// `ceil(chars / 4)`
    #[default]
    Chars4,
    /// `ceil(words * 4 / 3)`
    Words13,
}

impl TokenEstimator {
    pub fn estimate(self, text: &str) -> u64 {
        match self {
            Self::Chars4 => (text.chars().count() as u64).div_ceil(4),
            Self::Words13 => (text.split_whitespace().count() as u64 * 4).div_ceil(3),
        }
    }
}

impl FromStr for TokenEstimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chars4" => Ok(Self::Chars4),
            "words13" => Ok(Self::Words13),
            other => Err(format!("unknown estimator {other:?} (expected chars4 or words13)")),
        }
    }
}

impl fmt::Display for TokenEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Chars4 => "chars4",
            Self::Words13 => "words13",
        })
    }
}

pub fn estimate_tokens(text: &str, estimator: TokenEstimator) -> u64 {
    estimator.estimate(text)
}

/// Tokens of an entry's semantic layer, the quantity budgets constrain.
pub fn semantic_tokens(entry: &CodeEntry, estimator: TokenEstimator) -> u64 {
    estimator.estimate(&format_semantic_layer(entry))
}

/// Tokens of every entry line in the index; the header is not counted.
pub fn index_tokens(index: &Index, estimator: TokenEstimator) -> u64 {
    let code: u64 = index
        .code_entries()
        .iter()
        .map(|e| estimator.estimate(&format_code_entry(e)))
        .sum();
    let tables: u64 = index
        .table_entries()
        .iter()
        .map(|t| estimator.estimate(&format_table_entry(t)))
        .sum();
    code + tables
}

/// 1 when both paths are equal after canonicalization, else 0.
pub fn score_where(predicted: &str, truth: &str) -> Result<u8, ModelError> {
    let predicted = canonical_path(predicted.trim())?;
    let truth = canonical_path(truth.trim())?;
    Ok(u8::from(predicted == truth))
}

/// Entity normalization: trim, strip surrounding quotes and backticks,
/// lower-case.
pub fn normalize_entity(raw: &str) -> String {
    raw.trim()
        .trim_matches(|c| matches!(c, '"' | '\'' | '`'))
        .trim()
        .to_lowercase()
}

fn entity_set<I, S>(items: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    items
        .into_iter()
        .map(|s| normalize_entity(s.as_ref()))
        .filter(|s| !s.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhatScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of predicted entities against ground truth.
///
/// Both sets empty scores 1.0; exactly one empty scores 0.0.
pub fn score_what<P, T, S1, S2>(predicted: P, truth: T) -> WhatScore
where
    P: IntoIterator<Item = S1>,
    T: IntoIterator<Item = S2>,
    S1: AsRef<str>,
    S2: AsRef<str>,
{
    let predicted = entity_set(predicted);
    let truth = entity_set(truth);
    match (predicted.is_empty(), truth.is_empty()) {
        (true, true) => {
            return WhatScore {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            }
        }
        (true, false) | (false, true) => {
            return WhatScore {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            }
        }
        _ => {}
    }
    let hits = predicted.intersection(&truth).count();
    let (p, t) = (predicted.len(), truth.len());
    // 2PR/(P+R) reduces to 2h/(p+t); one division keeps the result correctly rounded.
    let f1 = (2 * hits) as f64 / (p + t) as f64;
    let precision = hits as f64 / p as f64;
    let recall = hits as f64 / t as f64;
    WhatScore { precision, recall, f1 }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BudgetCompliance {
    pub within: usize,
    pub below: usize,
    pub above: usize,
    /// Entries without an importance digit.
    pub unbudgeted: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IndexStats {
    pub code_entries: usize,
    pub table_entries: usize,
    pub untagged: usize,
    pub scale_only: usize,
    pub by_layer: BTreeMap<String, usize>,
    pub by_module: BTreeMap<String, usize>,
    pub by_importance: BTreeMap<u8, usize>,
    /// Occurrences of each D code; an entry may count towards several.
    pub by_feature: BTreeMap<String, usize>,
    pub by_scale: BTreeMap<String, usize>,
    /// Full tags that carry no E code.
    pub scale_absent: usize,
    pub total_tokens: u64,
    pub tokens_by_importance: BTreeMap<u8, u64>,
    pub budget: BudgetCompliance,
    pub repo_loc: Option<u64>,
    /// Index tokens per repository line.
    pub compression_ratio: Option<f64>,
}

pub fn index_stats(index: &Index, repo_loc: Option<u64>, estimator: TokenEstimator) -> IndexStats {
    let dict = index.dictionary();
    let mut stats = IndexStats {
        code_entries: index.code_entries().len(),
        table_entries: index.table_entries().len(),
        total_tokens: index_tokens(index, estimator),
        repo_loc,
        ..IndexStats::default()
    };
    for entry in index.code_entries() {
        match &entry.tag {
            None => stats.untagged += 1,
            Some(EntryTag::ScaleOnly(code)) => {
                stats.scale_only += 1;
                *stats.by_scale.entry(code.clone()).or_default() += 1;
            }
            Some(EntryTag::Full(d)) => {
                *stats.by_layer.entry(d.layer.clone()).or_default() += 1;
                *stats.by_module.entry(d.module.clone()).or_default() += 1;
                *stats.by_importance.entry(d.importance).or_default() += 1;
                for f in &d.features {
                    *stats.by_feature.entry(f.clone()).or_default() += 1;
                }
                match &d.scale {
                    Some(s) => *stats.by_scale.entry(s.clone()).or_default() += 1,
                    None => stats.scale_absent += 1,
                }
                *stats.tokens_by_importance.entry(d.importance).or_default() +=
                    estimator.estimate(&format_code_entry(entry));
            }
        }
        match entry.importance().and_then(|c| dict.budget_for(c)) {
            None => stats.budget.unbudgeted += 1,
            Some(budget) => {
                let tokens = semantic_tokens(entry, estimator);
                if tokens < u64::from(budget.min) {
                    stats.budget.below += 1;
                } else if tokens > u64::from(budget.max) {
                    stats.budget.above += 1;
                } else {
                    stats.budget.within += 1;
                }
            }
        }
    }
    stats.compression_ratio = repo_loc
        .filter(|loc| *loc > 0)
        .map(|loc| stats.total_tokens as f64 / loc as f64);
    stats
}

impl IndexStats {
    /// Plain-text table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}{}", "code entries", self.code_entries);
        let _ = writeln!(out, "{:<22}{}", "table entries", self.table_entries);
        let _ = writeln!(out, "{:<22}{}", "untagged", self.untagged);
        let _ = writeln!(out, "{:<22}{}", "scale-only tags", self.scale_only);
        let _ = writeln!(out, "{:<22}{}", "tags without E", self.scale_absent);
        let _ = writeln!(out, "{:<22}{}", "estimated tokens", self.total_tokens);
        if let Some(loc) = self.repo_loc {
            let _ = writeln!(out, "{:<22}{}", "repository LOC", loc);
        }
        if let Some(ratio) = self.compression_ratio {
            let _ = writeln!(out, "{:<22}{:.4}", "tokens per LOC", ratio);
        }
        let b = &self.budget;
        let _ = writeln!(
            out,
            "{:<22}within {} / below {} / above {} / none {}",
            "budget", b.within, b.below, b.above, b.unbudgeted
        );
        let mut section = |title: &str, rows: Vec<(String, String)>| {
            if rows.is_empty() {
                return;
            }
            let _ = writeln!(out, "{title}");
            for (k, v) in rows {
                let _ = writeln!(out, "  {k:<20}{v}");
            }
        };
        let rows = |m: &BTreeMap<String, usize>| m.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
        section(
            "importance",
            self.by_importance
                .iter()
                .rev()
                .map(|(k, v)| {
                    let tokens = self.tokens_by_importance.get(k).copied().unwrap_or(0);
                    (k.to_string(), format!("{v} entries, {tokens} tokens"))
                })
                .collect(),
        );
        section("layer (A)", rows(&self.by_layer));
        section("module (B)", rows(&self.by_module));
        section("feature (D)", rows(&self.by_feature));
        section("scale (E)", rows(&self.by_scale));
        out
    }
}
