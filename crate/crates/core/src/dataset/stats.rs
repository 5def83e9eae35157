use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::{clean, word_count, CleanConfig, Record, Split};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SplitCounts {
    pub total: usize,
    pub clear: usize,
    pub ambiguous: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetStats {
    pub target_structures: usize,
    pub completed_games: usize,
    pub instruction_count: usize,
    pub clarifying_question_count: usize,
    pub median_game_duration_minutes: f64,
    pub avg_turns_per_game: f64,
    pub avg_instruction_words: f64,
    pub avg_question_words: f64,
    pub avg_questions_per_game: f64,
    pub clear_count: usize,
    pub ambiguous_count: usize,
    pub train: SplitCounts,
    pub test: SplitCounts,
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Per-game duration in minutes from first to last record timestamp. Games with
/// fewer than two timestamped records are left out.
pub fn game_durations(records: &[Record]) -> BTreeMap<i64, f64> {
    let mut spans: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
    for r in records {
        if let Some(t) = r.meta().timestamp {
            let e = spans
                .entry(r.game_id())
                .or_insert((f64::INFINITY, f64::NEG_INFINITY, 0));
            e.0 = e.0.min(t);
            e.1 = e.1.max(t);
            e.2 += 1;
        }
    }
    spans
        .into_iter()
        .filter(|(_, (_, _, n))| *n >= 2)
        .map(|(g, (lo, hi, _))| (g, (hi - lo) / 60.0))
        .collect()
}

/// Corpus statistics. Every field is a sum or count reduction, so the result
/// does not depend on record order.
pub fn compute_stats(records: &[Record], durations: &BTreeMap<i64, f64>) -> DatasetStats {
    let mut games: BTreeMap<i64, usize> = BTreeMap::new();
    let mut structures = BTreeSet::new();
    let mut s = DatasetStats::default();
    let mut instruction_words = 0usize;
    let mut question_words = 0usize;

    for r in records {
        *games.entry(r.game_id()).or_default() += 1;
        if let Some(id) = &r.meta().structure_id {
            structures.insert(id.clone());
        }
        if let Some(q) = r.question() {
            s.clarifying_question_count += 1;
            question_words += word_count(q);
        }
        if let Record::Architect(a) = r {
            s.instruction_count += 1;
            instruction_words += word_count(&a.command);
            let ambiguous = a.is_ambiguous();
            if ambiguous {
                s.ambiguous_count += 1;
            } else {
                s.clear_count += 1;
            }
            let bucket = match a.meta.split {
                Some(Split::Train) => Some(&mut s.train),
                Some(Split::Test) => Some(&mut s.test),
                None => None,
            };
            if let Some(b) = bucket {
                b.total += 1;
                if ambiguous {
                    b.ambiguous += 1;
                } else {
                    b.clear += 1;
                }
            }
        }
    }

    s.target_structures = structures.len();
    s.completed_games = games.len();
    s.avg_turns_per_game = mean(games.values().sum::<usize>() as f64, games.len());
    s.avg_instruction_words = mean(instruction_words as f64, s.instruction_count);
    s.avg_question_words = mean(question_words as f64, s.clarifying_question_count);
    s.avg_questions_per_game = mean(s.clarifying_question_count as f64, games.len());
    let kept_games: Vec<f64> = durations
        .iter()
        .filter(|(g, _)| games.contains_key(g))
        .map(|(_, d)| *d)
        .collect();
    s.median_game_duration_minutes = median(kept_games);
    s
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsReport {
    /// Over cleaned records.
    pub stats: DatasetStats,
    pub raw_instruction_count: usize,
    pub raw_avg_instruction_words: f64,
    pub rejected: usize,
}

/// Cleans `raw` and computes statistics, keeping the raw instruction length for comparison.
pub fn build_report(raw: Vec<Record>, config: &CleanConfig) -> StatsReport {
    let raw_stats = compute_stats(&raw, &BTreeMap::new());
    let durations = game_durations(&raw);
    let outcome = clean(raw, config);
    StatsReport {
        stats: compute_stats(&outcome.kept, &durations),
        raw_instruction_count: raw_stats.instruction_count,
        raw_avg_instruction_words: raw_stats.avg_instruction_words,
        rejected: outcome.rejected.len(),
    }
}

impl StatsReport {
    /// Two aligned plain-text tables: the multi-turn overview and the
    /// instruction/question overview.
    pub fn to_table(&self) -> String {
        let s = &self.stats;
        let rows: Vec<(String, String)> = vec![
            ("Target Structures".into(), s.target_structures.to_string()),
            ("Completed Games".into(), s.completed_games.to_string()),
            (
                "Median Dur of Completed Games".into(),
                format!("{:.0} mins", s.median_game_duration_minutes),
            ),
            (
                "Avg. Turns of Completed Games".into(),
                format!("{:.2}", s.avg_turns_per_game),
            ),
            ("No. Instructions".into(), s.instruction_count.to_string()),
            (
                "Avg. Len of Instructions".into(),
                format!("{:.2} words", s.avg_instruction_words),
            ),
            (
                "No. Clarifying Questions".into(),
                s.clarifying_question_count.to_string(),
            ),
            (
                "Avg. Clarifying Questions per Game".into(),
                format!("{:.2}", s.avg_questions_per_game),
            ),
        ];
        let mut out = String::new();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &rows {
            let _ = writeln!(out, "{k:<width$} | {v}");
        }
        out.push('\n');

        let split = |total: usize, train: usize, test: usize| format!("{total} ({train}/{test})");
        let left = [
            ("Total", split(s.instruction_count, s.train.total, s.test.total)),
            ("Clear", split(s.clear_count, s.train.clear, s.test.clear)),
            (
                "Ambiguous",
                split(s.ambiguous_count, s.train.ambiguous, s.test.ambiguous),
            ),
        ];
        let right = [
            ("Instructions", format!("{:.2}", s.avg_instruction_words)),
            ("Clarifying Questions", format!("{:.2}", s.avg_question_words)),
            ("", String::new()),
        ];
        let _ = writeln!(
            out,
            "{:<10} {:<22} | {:<20} {}",
            "Instructions", "(train/test)", "Avg. Length", "(in words)"
        );
        for ((lk, lv), (rk, rv)) in left.iter().zip(right.iter()) {
            let _ = writeln!(out, "{lk:<10} {lv:<22} | {rk:<20} {rv}");
        }
        let _ = writeln!(
            out,
            "\nraw instructions: {} (avg {:.2} words), rejected records: {}",
            self.raw_instruction_count, self.raw_avg_instruction_words, self.rejected
        );
        out
    }
}
