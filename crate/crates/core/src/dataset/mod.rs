//! Architect/builder record ingestion, cleaning rules, corpus statistics and
//! clarifying-question categories.

mod clean;
mod questions;
mod records;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

pub use clean::{clean, CleanConfig, CleanOutcome, RejectReason};
pub use questions::{categorize_question, CqCategory, QuestionCategorizer};
pub use records::{
    load_records, parse_records, records_to_json, ArchitectRecord, BuilderRecord, Perspective,
    Record, RecordMeta, Role, RoleFilter, SchemaIssue, Split,
};
pub use stats::{build_report, compute_stats, game_durations, DatasetStats, SplitCounts, StatsReport};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}", schema_summary(.0))]
    Schema(Vec<SchemaIssue>),
    #[error("malformed input: {0}")]
    Format(String),
}

fn schema_summary(issues: &[SchemaIssue]) -> String {
    match issues {
        [] => "schema error".into(),
        [one] => one.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
    }
}

/// Whitespace tokens with punctuation stripped from both ends; tokens that are
/// pure punctuation vanish.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
}

pub fn word_count(text: &str) -> usize {
    tokenize(text).count()
}
