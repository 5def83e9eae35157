//! Newline-delimited JSON wire protocol shared by the game server, the agent
//! toolkit and the browser client.
//!
//! Every line on the stream is one [`ClientMessage`] or [`ServerMessage`].
//! Accepted events come back as [`ServerMessage::Event`] to both parties; the
//! echo doubles as the acknowledgement for the sender.

mod event;
mod log;
mod message;

pub use event::{apply_event, EventError, EventKind, GameEvent, Reporter};
pub use log::{replay_log, LogError, SessionLog};
pub use message::{
    decode_line, encode_line, ClientMessage, ErrorCode, Proposal, ServerMessage, TaskView,
};

pub use builderkit_core::dataset::Role;

/// Seconds between server heartbeats.
pub const HEARTBEAT_SECS: u64 = 10;
