//! Include/exclude glob filtering over repo-relative paths.

use globset::{Glob, GlobBuilder, GlobSet, GlobSetBuilder};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("invalid glob {pattern:?}: {source}")]
pub struct GlobError {
    pub pattern: String,
    #[source]
    pub source: globset::Error,
}

/// Compiles a glob where `*` does not cross `/` and `**` does.
pub fn compile_glob(pattern: &str) -> Result<Glob, GlobError> {
    GlobBuilder::new(pattern)
        .literal_separator(true)
        .build()
        .map_err(|source| GlobError {
            pattern: pattern.to_string(),
            source,
        })
}

fn compile_set<S: AsRef<str>>(patterns: &[S]) -> Result<GlobSet, GlobError> {
    let mut builder = GlobSetBuilder::new();
    for p in patterns {
        builder.add(compile_glob(p.as_ref())?);
    }
    builder.build().map_err(|source| GlobError {
        pattern: String::new(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct PathFilter {
    include: Option<GlobSet>,
    exclude: GlobSet,
}

impl PathFilter {
    /// An empty include list admits every path.
    pub fn new<S: AsRef<str>>(include: &[S], exclude: &[S]) -> Result<Self, GlobError> {
        Ok(Self {
            include: if include.is_empty() {
                None
            } else {
                Some(compile_set(include)?)
            },
            exclude: compile_set(exclude)?,
        })
    }

    pub fn allow_all() -> Self {
        Self {
            include: None,
            exclude: GlobSet::empty(),
        }
    }

    pub fn matches(&self, path: &str) -> bool {
        self.include.as_ref().is_none_or(|set| set.is_match(path)) && !self.exclude.is_match(path)
    }
}
