use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{word_count, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CleanConfig {
    /// Instructions with fewer words are rejected.
    pub min_words: usize,
    /// An annotator who submits the same instruction this many times is dropped entirely.
    pub repetition_threshold: usize,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_words: 5,
            repetition_threshold: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "camelCase")]
pub enum RejectReason {
    ShortInstruction { words: usize },
    RepeatedInstructions { annotator: String },
    MissingQuestion,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::ShortInstruction { words } => {
                write!(f, "instruction has only {words} words")
            }
            RejectReason::RepeatedInstructions { annotator } => {
                write!(f, "annotator {annotator} repeats the same instruction")
            }
            RejectReason::MissingQuestion => {
                f.write_str("ambiguous instruction without a clarifying question")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleanOutcome {
    pub kept: Vec<Record>,
    pub rejected: Vec<(Record, RejectReason)>,
}

/// Annotators with some instruction text submitted at least `threshold` times.
fn repeating_annotators(records: &[Record], threshold: usize) -> BTreeSet<String> {
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for r in records {
        if let (Record::Architect(a), Some(who)) = (r, r.meta().annotator_id.as_deref()) {
            *counts.entry((who, a.command.trim())).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter(|(_, n)| *n >= threshold)
        .map(|((who, _), _)| who.to_string())
        .collect()
}

/// Applies the quality filters. Rejections are data, never errors; order is preserved.
pub fn clean(records: Vec<Record>, config: &CleanConfig) -> CleanOutcome {
    let repeaters = repeating_annotators(&records, config.repetition_threshold);
    let mut out = CleanOutcome::default();
    for r in records {
        let reason = if let Some(who) = r
            .meta()
            .annotator_id
            .as_ref()
            .filter(|a| repeaters.contains(*a))
        {
            Some(RejectReason::RepeatedInstructions {
                annotator: who.clone(),
            })
        } else if let Record::Architect(a) = &r {
            let words = word_count(&a.command);
            if words < config.min_words {
                Some(RejectReason::ShortInstruction { words })
            } else if a.is_ambiguous() && a.clarification_question.is_none() {
                Some(RejectReason::MissingQuestion)
            } else {
                None
            }
        } else {
            None
        };
        match reason {
            Some(reason) => out.rejected.push((r, reason)),
            None => out.kept.push(r),
        }
    }
    out
}
