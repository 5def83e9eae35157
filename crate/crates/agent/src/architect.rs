//! Scripted stand-in for a human architect: joins with a code, optionally
//! sends fixed messages first, then describes the remaining difference to the
//! target in the command grammar until the grid matches.

use std::collections::VecDeque;
use std::time::Duration;

use builderkit_core::voxel::{BlockGrid, Rules};
use builderkit_protocol::{ClientMessage, EventKind, Proposal, Role, ServerMessage};

use crate::conn::{AgentError, Connection};
use crate::grammar::render_command;
use crate::plan::diff_edits;
use crate::runner::Mirror;

#[derive(Debug, Clone)]
pub struct ScriptedArchitect {
    pub human_id: String,
    /// Sent verbatim, one per architect turn, before any generated command.
    pub preface: Vec<String>,
    /// Architect turns after which the game is ended as a failure.
    pub max_turns: u32,
    pub rules: Rules,
    pub read_timeout: Option<Duration>,
}

impl Default for ScriptedArchitect {
    fn default() -> Self {
        ScriptedArchitect {
            human_id: "scripted-architect".into(),
            preface: Vec::new(),
            max_turns: 8,
            rules: Rules::default(),
            read_timeout: Some(Duration::from_secs(30)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectReport {
    pub session_id: String,
    pub completion_code: String,
    pub success: bool,
    pub instructions: Vec<String>,
    /// Builder chat lines, i.e. clarifying questions.
    pub builder_messages: Vec<String>,
    pub final_grid: BlockGrid,
}

impl ScriptedArchitect {
    pub fn play(&self, endpoint: &str, join_code: &str) -> Result<ArchitectReport, AgentError> {
        let mut conn = Connection::open(endpoint)?;
        conn.set_read_timeout(self.read_timeout)?;
        conn.send(&ClientMessage::Join {
            join_code: join_code.to_string(),
            human_id: self.human_id.clone(),
        })?;
        let (mut mirror, target) = loop {
            match conn.recv()? {
                ServerMessage::SessionStarted {
                    session_id,
                    task,
                    step_budget,
                    ..
                } => {
                    let target = task
                        .target_grid
                        .ok_or_else(|| AgentError::Protocol("architect view without a target".into()))?;
                    break (Mirror::new(session_id, task.initial_grid, step_budget), target);
                }
                ServerMessage::Error { code, detail } => return Err(AgentError::Server { code, detail }),
                _ => {}
            }
        };
        let mut preface: VecDeque<String> = self.preface.iter().cloned().collect();
        let mut instructions = Vec::new();
        let mut turns = 0;
        let mut acted_in = None;
        loop {
            match conn.recv()? {
                ServerMessage::Event(e) if e.session_id == mirror.session_id => {
                    mirror.apply(&self.rules, &e)?;
                    if let EventKind::GameEnded { .. } = e.event {
                        continue;
                    }
                }
                ServerMessage::Completion {
                    session_id,
                    completion_code,
                    success,
                } if session_id == mirror.session_id => {
                    let builder_messages = mirror
                        .chat
                        .iter()
                        .filter(|c| c.role == Role::Builder)
                        .map(|c| c.text.clone())
                        .collect();
                    conn.close();
                    return Ok(ArchitectReport {
                        session_id,
                        completion_code,
                        success,
                        instructions,
                        builder_messages,
                        final_grid: mirror.world.grid,
                    });
                }
                ServerMessage::Rejected { code, detail, .. } => return Err(AgentError::Server { code, detail }),
                _ => continue,
            }
            if mirror.turn != Some(Role::Architect) || acted_in == Some(mirror.turn_index) {
                continue;
            }
            acted_in = Some(mirror.turn_index);
            let propose = |p: Proposal| ClientMessage::Propose {
                session_id: mirror.session_id.clone(),
                proposal: p,
                client_ref: None,
            };
            let edits = diff_edits(&mirror.world.grid, &target);
            if edits.is_empty() {
                conn.send(&propose(Proposal::EndGame { success: true }))?;
                continue;
            }
            if turns >= self.max_turns {
                conn.send(&propose(Proposal::EndGame { success: false }))?;
                continue;
            }
            turns += 1;
            let text = match preface.pop_front() {
                Some(text) => text,
                None => render_command(&edits, &self.rules.palette)
                    .ok_or_else(|| AgentError::Protocol("target uses a block without a color name".into()))?,
            };
            instructions.push(text.clone());
            conn.send(&propose(Proposal::Chat { text }))?;
            conn.send(&propose(Proposal::EndTurn))?;
        }
    }
}
