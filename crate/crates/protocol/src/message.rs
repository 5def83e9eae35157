use std::fmt;

use builderkit_core::voxel::{BlockGrid, BlockId, Coord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{GameEvent, Role};

/// Something a participant asks the server to do in a session. The server
/// fills in the sender's role and the sequence number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Proposal {
    Chat { text: String },
    PlayerMove { pos: [f64; 3], pitch: f64, yaw: f64 },
    BlockPlaced { coord: Coord, block_id: BlockId },
    BlockRemoved { coord: Coord },
    EndTurn,
    EndGame { success: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum ClientMessage {
    /// Registers a builder agent under `agent_id`; also reattaches it to a live session.
    Hello { agent_id: String },
    /// A human redeems a join code and becomes the architect.
    Join { join_code: String, human_id: String },
    /// A human reattaches to a session after losing the connection.
    Resume { session_id: String, human_id: String },
    Propose {
        session_id: String,
        proposal: Proposal,
        /// Echoed back on rejection so clients can match replies.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ref: Option<u64>,
    },
    /// Asks for every event with seq ≥ `from_seq`.
    Resync { session_id: String, from_seq: u64 },
    Ping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ErrorCode {
    BadMessage,
    WrongPhase,
    RuleViolation,
    SessionEnded,
    UnknownSession,
    NotParticipant,
    InvalidCode,
    CodeAlreadyUsed,
    AgentUnavailable,
    DuplicateAgentId,
    NotRegistered,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

/// What a participant is shown about the task. Builders never see the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskView {
    pub initial_grid: BlockGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_grid: Option<BlockGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum ServerMessage {
    Welcome {
        agent_id: String,
    },
    SessionStarted {
        session_id: String,
        role: Role,
        task: TaskView,
        step_budget: u32,
    },
    Event(GameEvent),
    Rejected {
        session_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ref: Option<u64>,
        code: ErrorCode,
        detail: String,
    },
    Completion {
        session_id: String,
        completion_code: String,
        success: bool,
    },
    Error {
        code: ErrorCode,
        detail: String,
    },
    Heartbeat,
    Pong,
}

/// One JSON document plus the trailing newline.
pub fn encode_line<T: Serialize>(msg: &T) -> String {
    let mut s = serde_json::to_string(msg).expect("wire messages always serialize");
    s.push('\n');
    s
}

pub fn decode_line<T: DeserializeOwned>(line: &str) -> Result<T, serde_json::Error> {
    serde_json::from_str(line.trim_end_matches(['\r', '\n']))
}
