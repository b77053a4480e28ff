//! Line-pattern import extraction and resolution to repository references.

use std::collections::HashSet;

use super::rules::ScaffoldRules;
use crate::validator::RefResolver;

/// File extension without the dot, if any.
pub fn extension(path: &str) -> Option<&str> {
    let name = path.rsplit('/').next().unwrap_or(path);
    match name.rfind('.') {
        Some(0) | None => None,
        Some(i) => Some(&name[i + 1..]),
    }
}

/// Raw module strings imported by `text`, in source order.
pub fn imported_modules(path: &str, text: &str, rules: &ScaffoldRules) -> Vec<String> {
    let Some(extractor) = extension(path).and_then(|ext| rules.import_extractors.get(ext)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for line in text.lines() {
        for re in &extractor.patterns {
            for caps in re.captures_iter(line) {
                if let Some(m) = caps.get(1) {
                    out.push(m.as_str().to_string());
                }
            }
        }
    }
    out
}

/// Resolves the imports of `path` to references that designate files in
/// `repo`. Unresolvable imports and self references are dropped; order of
/// first occurrence is kept.
pub fn extract_relations(path: &str, text: &str, repo: &RefResolver, rules: &ScaffoldRules) -> Vec<String> {
    let separator = extension(path)
        .and_then(|ext| rules.import_extractors.get(ext))
        .map_or('/', |x| x.separator);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for module in imported_modules(path, text, rules) {
        if let Some(reference) = resolve_module(path, &module, separator, repo) {
            if seen.insert(reference.clone()) {
                out.push(reference);
            }
        }
    }
    out
}

fn resolve_module(importer: &str, module: &str, separator: char, repo: &RefResolver) -> Option<String> {
    let dir = importer.rsplit_once('/').map_or("", |(d, _)| d);
    let candidates: Vec<String> = if separator != '/' {
        // Dotted module paths, leading dots climb from the importer's package.
        let trimmed = module.trim_start_matches(separator);
        let ups = module.len() - trimmed.len();
        if trimmed.is_empty() {
            return None;
        }
        let rel = trimmed.replace(separator, "/");
        if ups > 0 {
            vec![join(dir, &"../".repeat(ups - 1), &rel)?]
        } else {
            suffixes(&rel)
        }
    } else if module.starts_with("./") || module.starts_with("../") {
        vec![join(dir, "", module)?]
    } else {
        suffixes(module.trim_start_matches('/'))
    };

    candidates.into_iter().find(|c| {
        usable(c) && {
            let hits = repo.resolve(c);
            !hits.is_empty() && hits != [importer]
        }
    })
}

/// "a/b/c" → ["a/b/c", "b/c", "c"]: module roots such as a Go module name
/// are not part of repo-relative paths.
fn suffixes(module: &str) -> Vec<String> {
    let segments: Vec<&str> = module.split('/').filter(|s| !s.is_empty()).collect();
    (0..segments.len()).map(|i| segments[i..].join("/")).collect()
}

/// Joins a relative module path onto a directory, folding `.` and `..`.
fn join(dir: &str, extra: &str, rel: &str) -> Option<String> {
    let mut parts: Vec<&str> = dir.split('/').filter(|s| !s.is_empty()).collect();
    for seg in extra.split('/').chain(rel.split('/')) {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop()?;
            }
            s => parts.push(s),
        }
    }
    (!parts.is_empty()).then(|| parts.join("/"))
}

fn usable(reference: &str) -> bool {
    !reference.is_empty()
        && !reference
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '[' | ']' | '|' | ':' | ','))
}
