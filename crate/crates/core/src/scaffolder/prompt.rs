//! Prompt packs: the handoff bundle an external model completes.

use std::fs;
use std::io;
use std::path::Path;

use super::DraftEntry;
use crate::grammar::{format_code_entry, format_header};
use crate::model::Index;

pub const PROMPT_SUFFIX: &str = ".prompt.txt";

const INSTRUCTIONS: &str = "\
Rewrite the ENTRY line for the SOURCE file above and return that single line only.
- Keep the path, the bracketed tag and the R element unchanged.
- Replace F with the file's business role in a few words.
- Replace A with the exposed APIs as a comma-separated list, or - if none.
- Replace S with the high-entropy implementation details a reader could not guess from the path.
- Keep the text of F, A and S together within the BUDGET token range.
- Do not use the '|' character in F or A.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPack {
    pub path: String,
    pub file_name: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptPackOutput {
    pub packs: Vec<PromptPack>,
    /// `(path, reason)` for drafts whose source could not be loaded.
    pub skipped: Vec<(String, String)>,
}

/// `middleware/auth.go` → `middleware__auth.go.prompt.txt`.
pub fn pack_file_name(path: &str) -> String {
    let mut name: String = path
        .replace('/', "__")
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    name.push_str(PROMPT_SUFFIX);
    name
}

/// Budget range text for an entry's importance, e.g. `80-150`.
fn budget_text(index: &Index, draft: &DraftEntry) -> String {
    draft
        .entry
        .importance()
        .and_then(|c| index.dictionary().budget_for(c))
        .map_or_else(|| "unbudgeted".to_string(), |b| b.to_string())
}

pub fn emit_prompt_pack<F>(index: &Index, drafts: &[DraftEntry], mut load_source: F) -> PromptPackOutput
where
    F: FnMut(&str) -> io::Result<String>,
{
    let dictionary = format_header(index.header());
    let mut out = PromptPackOutput::default();
    for draft in drafts {
        let path = &draft.entry.path;
        let source = match load_source(path) {
            Ok(s) => s,
            Err(e) => {
                out.skipped.push((path.clone(), e.to_string()));
                continue;
            }
        };
        let entry = index.entry(path).unwrap_or(&draft.entry);
        let mut text = String::new();
        for (title, body) in [
            ("DICTIONARY", dictionary.trim_end()),
            ("ENTRY", &format_code_entry(entry)),
            ("BUDGET", &budget_text(index, draft)),
            ("SOURCE", source.trim_end_matches('\n')),
            ("INSTRUCTIONS", INSTRUCTIONS),
        ] {
            text.push_str("=== ");
            text.push_str(title);
            text.push_str(" ===\n");
            text.push_str(body);
            text.push_str("\n\n");
        }
        text.pop();
        out.packs.push(PromptPack {
            path: path.clone(),
            file_name: pack_file_name(path),
            text,
        });
    }
    out
}

/// Writes each pack under `dir`, creating it if needed.
pub fn write_prompt_packs(dir: &Path, packs: &[PromptPack]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for pack in packs {
        fs::write(dir.join(&pack.file_name), &pack.text)?;
    }
    Ok(())
}
