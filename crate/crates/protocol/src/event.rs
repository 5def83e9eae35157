use builderkit_core::voxel::{ActionError, Avatar, BlockId, Coord, Rules, WorldState, WALK_Y};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Role;

/// Who concluded a game. `Server` covers time caps, disconnects and shutdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reporter {
    Architect,
    Builder,
    Server,
}

/// The seven event kinds of a game session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum EventKind {
    PlayerJoined {
        role: Role,
    },
    ChatMessage {
        role: Role,
        text: String,
    },
    PlayerMove {
        pos: [f64; 3],
        pitch: f64,
        yaw: f64,
    },
    BlockPlaced {
        coord: Coord,
        block_id: BlockId,
    },
    BlockRemoved {
        coord: Coord,
    },
    TurnEnded {
        role: Role,
        /// Set when the server ended the turn because the step budget ran out.
        #[serde(default)]
        forced: bool,
    },
    GameEnded {
        success: bool,
        reporter: Reporter,
    },
}

impl EventKind {
    /// Builder actions that count toward the per-turn step budget.
    pub fn is_builder_step(&self) -> bool {
        matches!(
            self,
            EventKind::PlayerMove { .. } | EventKind::BlockPlaced { .. } | EventKind::BlockRemoved { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PlayerJoined { .. } => "playerJoined",
            EventKind::ChatMessage { .. } => "chatMessage",
            EventKind::PlayerMove { .. } => "playerMove",
            EventKind::BlockPlaced { .. } => "blockPlaced",
            EventKind::BlockRemoved { .. } => "blockRemoved",
            EventKind::TurnEnded { .. } => "turnEnded",
            EventKind::GameEnded { .. } => "gameEnded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GameEvent {
    pub session_id: String,
    pub seq: u64,
    pub event: EventKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EventError {
    #[error(transparent)]
    Rule(#[from] ActionError),
    #[error("position {0:?} is outside the walkable volume")]
    BadPosition([f64; 3]),
    #[error("height {y} is not within one block of the column height {ground}")]
    BadHeight { y: f64, ground: f64 },
}

/// Applies the world effect of `event` to `state`. Chat, joins and turn
/// changes leave the world untouched. On error `state` is unchanged.
pub fn apply_event(rules: &Rules, state: &mut WorldState, event: &EventKind) -> Result<(), EventError> {
    match event {
        EventKind::PlayerMove { pos, pitch, yaw } => {
            let avatar = Avatar {
                pos: *pos,
                pitch: *pitch,
                yaw: *yaw,
            };
            if !avatar.is_valid() {
                return Err(EventError::BadPosition(*pos));
            }
            let cell = avatar.cell();
            let ground = Rules::column_height(&state.grid, cell.x, cell.z).min(WALK_Y.1);
            let y = pos[1];
            if y < ground - 1e-9 || y > ground + 1.0 + 1e-9 {
                return Err(EventError::BadHeight { y, ground });
            }
            state.avatar = avatar;
        }
        EventKind::BlockPlaced { coord, block_id } => {
            *state = rules.place_block(state, *coord, *block_id)?;
        }
        EventKind::BlockRemoved { coord } => {
            *state = rules.remove_block(state, *coord)?;
        }
        EventKind::PlayerJoined { .. }
        | EventKind::ChatMessage { .. }
        | EventKind::TurnEnded { .. }
        | EventKind::GameEnded { .. } => {}
    }
    Ok(())
}
