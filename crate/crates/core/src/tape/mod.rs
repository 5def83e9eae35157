//! Line-oriented builder action tapes: parsing, canonical serialization,
//! replay against the voxel rules, and verification of recorded ending states.
//!
//! Grammar, one event per line: `<step> <kind> <payload>`, where kind is
//! `set_look (pitch, yaw)`, `pos_change (x, y, z)`, `action <name> [args...]`
//! or `block_change (x, y, z, oldId, newId)`. Coordinates are world frame.

mod format;
mod replay;

use thiserror::Error;

use crate::dataset::BuilderRecord;
use crate::voxel::{Rules, WorldState};

pub use format::{parse_tape, serialize_tape, Tape, TapeEvent, TapeEventKind};
pub use replay::{
    action_from_tape, action_to_tape, replay, verify_ending_state, ReplayOptions, Replayer,
    TapeRecorder, Verification, POSITION_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TapeError {
    #[error("tape line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("replay diverged at step {step}: {reason}")]
    ReplayDivergence { step: u64, reason: String },
}

/// Replays the record's tape from `start` and compares against its ending state.
pub fn verify_builder_record(
    record: &BuilderRecord,
    start: WorldState,
    rules: &Rules,
) -> Result<Verification, TapeError> {
    verify_ending_state(&record.tape, start, &record.world_ending_state, rules)
}

#[cfg(test)]
mod tests;
