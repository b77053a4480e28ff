//! Dictionary-driven codec for concatenated ABCDE tags and dash-separated
//! table tags.
//!
//! Code tags carry no separators, so decoding leans on two facts: codes
//! never contain digits, which makes the single importance digit an anchor,
//! and each dimension's codes are matched longest-first against the
//! project dictionary.

use thiserror::Error;

use crate::model::{DecodedTag, Dimension, EntryTag, TableTag, TagDictionary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("tag {tag:?} must contain exactly one importance digit, found {digits}")]
    MalformedTag { tag: String, digits: usize },
    #[error("importance {0} is not declared in dimension C")]
    InvalidImportance(u8),
    #[error("unknown {dimension} code {code:?}")]
    UnknownCode { dimension: Dimension, code: String },
    #[error("table tag {0:?} must have exactly four dash-separated parts")]
    MalformedTableTag(String),
    #[error("tag {0:?} does not decode back to the same components")]
    Ambiguous(String),
}

fn unknown(dimension: Dimension, code: &str) -> TagError {
    TagError::UnknownCode {
        dimension,
        code: code.to_string(),
    }
}

fn longest_prefix<'d>(dict: &'d TagDictionary, dim: Dimension, s: &str) -> Option<&'d str> {
    dict.codes(dim)
        .keys()
        .filter(|c| s.starts_with(c.as_str()))
        .max_by_key(|c| c.len())
        .map(String::as_str)
}

fn longest_suffix<'d>(dict: &'d TagDictionary, dim: Dimension, s: &str) -> Option<&'d str> {
    dict.codes(dim)
        .keys()
        .filter(|c| s.ends_with(c.as_str()))
        .max_by_key(|c| c.len())
        .map(String::as_str)
}

/// Splits `s` into D codes, taking the longest match at each step.
/// On failure returns the unparsed residue.
fn greedy_features<'s>(dict: &TagDictionary, s: &'s str) -> Result<Vec<String>, &'s str> {
    let mut rest = s;
    let mut out = Vec::new();
    while !rest.is_empty() {
        match longest_prefix(dict, Dimension::D, rest) {
            Some(code) => {
                out.push(code.to_string());
                rest = &rest[code.len()..];
            }
            None => return Err(rest),
        }
    }
    Ok(out)
}

/// Decodes a concatenated tag such as `WA9JM`.
pub fn decode_tag(tag: &str, dict: &TagDictionary) -> Result<DecodedTag, TagError> {
    let digits: Vec<(usize, char)> = tag.char_indices().filter(|(_, c)| c.is_ascii_digit()).collect();
    let [(pos, digit)] = digits[..] else {
        return Err(TagError::MalformedTag {
            tag: tag.to_string(),
            digits: digits.len(),
        });
    };
    let importance = digit as u8 - b'0';
    if !dict.importance_levels().contains(&importance) {
        return Err(TagError::InvalidImportance(importance));
    }

    let prefix = &tag[..pos];
    let layer = longest_prefix(dict, Dimension::A, prefix).ok_or_else(|| unknown(Dimension::A, prefix))?;
    let module = &prefix[layer.len()..];
    if !dict.contains(Dimension::B, module) {
        return Err(unknown(Dimension::B, module));
    }

    let suffix = &tag[pos + 1..];
    let (features, scale) = decode_suffix(suffix, dict)?;
    Ok(DecodedTag {
        layer: layer.to_string(),
        module: module.to_string(),
        importance,
        features,
        scale,
    })
}

fn decode_suffix(suffix: &str, dict: &TagDictionary) -> Result<(Vec<String>, Option<String>), TagError> {
    if suffix.is_empty() {
        return Ok((Vec::new(), None));
    }
    if let Some(scale) = longest_suffix(dict, Dimension::E, suffix) {
        let middle = &suffix[..suffix.len() - scale.len()];
        if let Ok(features) = greedy_features(dict, middle) {
            return Ok((features, Some(scale.to_string())));
        }
    }
    // retry with E absent
    greedy_features(dict, suffix)
        .map(|features| (features, None))
        .map_err(|residue| unknown(Dimension::D, residue))
}

/// Decodes the bracketed tag of a code entry: a full ABCDE tag, or a bare
/// E code when the tag has no importance digit.
pub fn decode_entry_tag(raw: &str, dict: &TagDictionary) -> Result<EntryTag, TagError> {
    if !raw.chars().any(|c| c.is_ascii_digit()) && dict.contains(Dimension::E, raw) {
        return Ok(EntryTag::ScaleOnly(raw.to_string()));
    }
    decode_tag(raw, dict).map(EntryTag::Full)
}

/// Concatenates the components of a decoded tag.
pub fn encode_tag(decoded: &DecodedTag) -> String {
    let mut out = String::new();
    out.push_str(&decoded.layer);
    out.push_str(&decoded.module);
    out.push_str(&decoded.importance.to_string());
    for f in &decoded.features {
        out.push_str(f);
    }
    if let Some(scale) = &decoded.scale {
        out.push_str(scale);
    }
    out
}

/// Checks that every component is declared and that the encoded tag decodes
/// back to the same components.
pub fn check_decoded(decoded: &DecodedTag, dict: &TagDictionary) -> Result<(), TagError> {
    if !dict.importance_levels().contains(&decoded.importance) {
        return Err(TagError::InvalidImportance(decoded.importance));
    }
    let components = [(Dimension::A, &decoded.layer), (Dimension::B, &decoded.module)]
        .into_iter()
        .chain(decoded.features.iter().map(|f| (Dimension::D, f)))
        .chain(decoded.scale.iter().map(|s| (Dimension::E, s)));
    for (dim, code) in components {
        if !dict.contains(dim, code) {
            return Err(unknown(dim, code));
        }
    }
    let raw = encode_tag(decoded);
    match decode_tag(&raw, dict) {
        Ok(back) if back == *decoded => Ok(()),
        _ => Err(TagError::Ambiguous(raw)),
    }
}

/// Decodes a table tag such as `U-M-M-GUID+SD`. An empty fourth part means
/// no features.
pub fn decode_table_tag(tag: &str, dict: &TagDictionary) -> Result<TableTag, TagError> {
    let parts: Vec<&str> = tag.split('-').collect();
    let [domain, ttype, scale, features] = parts[..] else {
        return Err(TagError::MalformedTableTag(tag.to_string()));
    };
    for (dim, code) in [
        (Dimension::TableDomain, domain),
        (Dimension::TableType, ttype),
        (Dimension::TableScale, scale),
    ] {
        if !dict.contains(dim, code) {
            return Err(unknown(dim, code));
        }
    }
    let features = if features.is_empty() {
        Vec::new()
    } else {
        features
            .split('+')
            .map(|f| {
                if dict.contains(Dimension::TableFeature, f) {
                    Ok(f.to_string())
                } else {
                    Err(unknown(Dimension::TableFeature, f))
                }
            })
            .collect::<Result<_, _>>()?
    };
    Ok(TableTag {
        domain: domain.to_string(),
        ttype: ttype.to_string(),
        scale: scale.to_string(),
        features,
    })
}

pub fn encode_table_tag(tag: &TableTag) -> String {
    format!("{}-{}-{}-{}", tag.domain, tag.ttype, tag.scale, tag.features.join("+"))
}

pub fn check_table_tag(tag: &TableTag, dict: &TagDictionary) -> Result<(), TagError> {
    let back = decode_table_tag(&encode_table_tag(tag), dict)?;
    if back != *tag {
        return Err(TagError::Ambiguous(encode_table_tag(tag)));
    }
    Ok(())
}
