//! Structural ablation variants: strip tags or semantic elements from every
//! code entry while staying inside the index grammar.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::grammar::{format_code_entry, format_table_entry};
use crate::metrics::{index_tokens, TokenEstimator};
use crate::model::{CodeEntry, EntryTag, Index};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AblationVariant {
    /// Remove the whole tag, keep F/R/A/S.
    WoAbcde,
    /// Keep only the E code of the tag; tags without one are removed.
    WoAbcd,
    WoR,
    WoS,
    /// Empty all four semantic elements, keep the tag.
    WoFras,
}

impl AblationVariant {
    pub const ALL: [Self; 5] = [Self::WoAbcde, Self::WoAbcd, Self::WoR, Self::WoS, Self::WoFras];

    pub fn name(self) -> &'static str {
        match self {
            Self::WoAbcde => "wo-ABCDE",
            Self::WoAbcd => "wo-ABCD",
            Self::WoR => "wo-R",
            Self::WoS => "wo-S",
            Self::WoFras => "wo-FRAS",
        }
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|v| v.name()).collect();
            format!("unknown variant {s:?} (expected one of {})", names.join(", "))
        })
    }
}

fn ablate_entry(mut entry: CodeEntry, variant: AblationVariant) -> CodeEntry {
    match variant {
        AblationVariant::WoAbcde => entry.tag = None,
        AblationVariant::WoAbcd => {
            entry.tag = entry
                .tag
                .as_ref()
                .and_then(EntryTag::scale)
                .map(|code| EntryTag::ScaleOnly(code.to_string()));
        }
        AblationVariant::WoR => entry.relations.clear(),
        AblationVariant::WoS => entry.synopsis.clear(),
        AblationVariant::WoFras => {
            entry.function.clear();
            entry.relations.clear();
            entry.api.clear();
            entry.synopsis.clear();
        }
    }
    entry
}

/// Applies `variant` to every code entry. With `include_tables`, wo-ABCDE
/// also strips table tags; other variants never touch tables.
pub fn apply_ablation(index: &Index, variant: AblationVariant, include_tables: bool) -> Index {
    let (header, code, mut tables) = index.clone().into_parts();
    let code = code.into_iter().map(|e| ablate_entry(e, variant)).collect();
    if include_tables && variant == AblationVariant::WoAbcde {
        for t in &mut tables {
            t.tag = None;
        }
    }
    Index::new(header, code, tables).expect("ablation keeps entries valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub original_tokens: u64,
    pub ablated_tokens: u64,
    /// `original - ablated`; negative if the second index is larger.
    pub reduction: i64,
    /// `ablated / original`, 1.0 for two empty indexes.
    pub ratio: f64,
    /// Entries (code and table, matched by position) whose line changed.
    pub entries_affected: usize,
}

pub fn ablation_report(original: &Index, ablated: &Index, estimator: TokenEstimator) -> AblationReport {
    let original_tokens = index_tokens(original, estimator);
    let ablated_tokens = index_tokens(ablated, estimator);
    let lines = |i: &Index| -> Vec<String> {
        i.code_entries()
            .iter()
            .map(format_code_entry)
            .chain(i.table_entries().iter().map(format_table_entry))
            .collect()
    };
    let (a, b) = (lines(original), lines(ablated));
    let entries_affected = a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    AblationReport {
        original_tokens,
        ablated_tokens,
        reduction: original_tokens as i64 - ablated_tokens as i64,
        ratio: if original_tokens == 0 {
            1.0
        } else {
            ablated_tokens as f64 / original_tokens as f64
        },
        entries_affected,
    }
}

impl AblationReport {
    pub fn to_table(&self) -> String {
        format!(
            "original tokens  {}\nablated tokens   {}\nreduction        {} ({:.1}%)\nentries affected {}\n",
            self.original_tokens,
            self.ablated_tokens,
            self.reduction,
            (1.0 - self.ratio) * 100.0,
            self.entries_affected
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_index;
    use crate::reference::{sample_document, REFERENCE_HEADER, SAMPLE_AUTH};
    use crate::serialize_index;

    fn sample() -> Index {
        parse_index(&sample_document()).unwrap()
    }

    fn auth_line(i: &Index) -> String {
        format_code_entry(i.entry("auth.go").unwrap())
    }

    #[test]
    fn variant_names() {
        for v in AblationVariant::ALL {
            assert_eq!(v.name().parse::<AblationVariant>(), Ok(v));
        }
        assert!("wo-abcd".parse::<AblationVariant>().is_err());
    }

    #[test]
    fn sample_variants() {
        let i = sample();
        let line = |v| auth_line(&apply_ablation(&i, v, false));
        assert!(line(AblationVariant::WoAbcd).starts_with("auth.go[M]: F:JWT authentication middleware | R:"));
        assert_eq!(line(AblationVariant::WoFras), "auth.go[WA9JM]: F:- | R:- | A:- | S:-");
        assert!(line(AblationVariant::WoAbcde).starts_with("auth.go: F:JWT"));
        assert!(line(AblationVariant::WoR).contains(" | R:- | "));
        assert!(line(AblationVariant::WoS).ends_with(" | S:-"));
        assert_eq!(SAMPLE_AUTH, auth_line(&i));
    }

    #[test]
    fn scale_less_tags_lose_the_bracket() {
        let text = format!("{REFERENCE_HEADER}@CODE\nx.go[HC1]: F:util | R:- | A:- | S:helpers\n");
        let i = parse_index(&text).unwrap();
        let out = apply_ablation(&i, AblationVariant::WoAbcd, false);
        assert_eq!(
            format_code_entry(&out.code_entries()[0]),
            "x.go: F:util | R:- | A:- | S:helpers"
        );
    }

    #[test]
    fn tables_only_with_flag() {
        let i = sample();
        let kept = apply_ablation(&i, AblationVariant::WoAbcde, false);
        assert_eq!(kept.table_entries(), i.table_entries());
        let stripped = apply_ablation(&i, AblationVariant::WoAbcde, true);
        assert!(stripped.table_entries()[0].tag.is_none());
        assert!(parse_index(&serialize_index(&stripped)).is_ok());
    }

    #[test]
    fn reports() {
        let i = sample();
        let same = ablation_report(&i, &i, TokenEstimator::Chars4);
        assert_eq!((same.reduction, same.entries_affected), (0, 0));
        let fras = ablation_report(
            &i,
            &apply_ablation(&i, AblationVariant::WoFras, false),
            TokenEstimator::Chars4,
        );
        assert!(fras.reduction > 0 && fras.ratio < 1.0);
        assert_eq!(fras.entries_affected, 3);
    }
}
