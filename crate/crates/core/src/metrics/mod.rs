//! Evaluation math: shift-searched grid F1, task-weighted averages, macro-F1,
//! MRR and human-evaluation tallies.

mod classify;
mod grid_f1;
mod rank;
mod tally;

use thiserror::Error;

pub use crate::voxel::{diff, Change, GridDelta};
pub use classify::{macro_f1, BinaryOutcome, Clarity};
pub use grid_f1::{
    argmax_intersection, grid_f1, DEFAULT_SHIFT_RADIUS, grid_f1_delta, leaderboard_row, weighted_average,
    LeaderboardRow, ScoreReport, Shift, ShiftWindow,
};
pub use rank::{mrr, RankedPool};
pub use tally::{format_percent, render_tally, tally_human_eval, AgentTally, GameOutcome, Winner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no inputs to average")]
    EmptyInput,
    #[error("pool {0} does not contain its relevant question")]
    RelevantMissing(usize),
    #[error("report {0} has a zero or negative weight")]
    BadWeight(usize),
}

#[cfg(test)]
mod tests;
