//! Toolkit for AOCI repository indexes: a compact, line-oriented document
//! that describes every file of a code base (and its database tables) with
//! a short structural tag plus four semantic elements.
//!
//! The crate parses and canonically serializes index files, validates them
//! against their own tag dictionary and the repository tree, drafts entries
//! for a repository, keeps an index current from a change listing, produces
//! reduced variants for experiments, and scores answers.

pub mod ablation;
pub mod digest;
pub mod filter;
pub mod grammar;
pub mod incremental;
pub mod metrics;
pub mod model;
pub mod reference;
pub mod scaffolder;
pub mod validator;

pub use grammar::{parse_index, serialize_index, ParseError};
pub use model::{
    canonical_path, ChangeRecord, ChangeSet, ChangeStatus, CodeEntry, DecodedTag, EntryTag, Header, Index, ModelError,
    TableEntry, TableTag, TagDictionary,
};
