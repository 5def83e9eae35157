use builderkit_core::voxel::{Avatar, BlockGrid, Rules, WorldState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{apply_event, EventError, GameEvent};

/// Persisted record of one finished session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionLog {
    pub session_id: String,
    pub task_id: String,
    pub agent_id: String,
    pub completion_code: String,
    pub initial_grid: BlockGrid,
    pub target_grid: BlockGrid,
    pub final_grid: BlockGrid,
    /// Builder actions taken over the whole game.
    pub builder_steps: u64,
    pub success: bool,
    pub events: Vec<GameEvent>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogError {
    #[error("event {index} has seq {found}, expected {expected}")]
    SeqGap { index: usize, expected: u64, found: u64 },
    #[error("event {index} belongs to session {found}")]
    ForeignEvent { index: usize, found: String },
    #[error("event seq {seq}: {source}")]
    Rejected {
        seq: u64,
        #[source]
        source: EventError,
    },
}

/// Replays the log from its initial grid and a fresh avatar; seq must run
/// gaplessly from 1.
pub fn replay_log(log: &SessionLog, rules: &Rules) -> Result<WorldState, LogError> {
    let mut state = WorldState::new(log.initial_grid.clone(), Avatar::default());
    state.avatar = Rules::settle(&state.grid, state.avatar);
    for (index, e) in log.events.iter().enumerate() {
        let expected = index as u64 + 1;
        if e.seq != expected {
            return Err(LogError::SeqGap {
                index,
                expected,
                found: e.seq,
            });
        }
        if e.session_id != log.session_id {
            return Err(LogError::ForeignEvent {
                index,
                found: e.session_id.clone(),
            });
        }
        apply_event(rules, &mut state, &e.event).map_err(|source| LogError::Rejected {
            seq: e.seq,
            source,
        })?;
    }
    Ok(state)
}
