//! Turn-based session state machine. Pure: no I/O, no clocks beyond the
//! timestamps passed in.

use builderkit_core::voxel::{Avatar, BlockGrid, Rules, WorldState};
use builderkit_protocol::{
    apply_event, ErrorCode, EventKind, GameEvent, Proposal, Reporter, Role, SessionLog,
};
use serde::{Deserialize, Serialize};

/// A building task: the grid a session starts from and the grid to reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Task {
    pub id: String,
    pub initial_grid: BlockGrid,
    pub target_grid: BlockGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "phase", rename_all = "camelCase")]
pub enum Phase {
    Created,
    ArchitectTurn,
    BuilderTurn,
    Ended { success: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refusal {
    pub code: ErrorCode,
    pub detail: String,
}

impl Refusal {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        Refusal {
            code,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub task_id: String,
    pub agent_id: String,
    pub architect_id: String,
    pub initial_grid: BlockGrid,
    pub target_grid: BlockGrid,
    pub phase: Phase,
    pub world: WorldState,
    pub events: Vec<GameEvent>,
    pub step_budget: u32,
    /// Builder steps taken in the current builder turn.
    pub turn_steps: u32,
    pub total_steps: u64,
    pub turn_index: u32,
    pub started_ms: u64,
}

impl Session {
    pub fn new(
        id: String,
        task: &Task,
        agent_id: String,
        architect_id: String,
        step_budget: u32,
        now_ms: u64,
    ) -> Self {
        let avatar = Rules::settle(&task.initial_grid, Avatar::default());
        Session {
            id,
            task_id: task.id.clone(),
            agent_id,
            architect_id,
            world: WorldState::new(task.initial_grid.clone(), avatar),
            initial_grid: task.initial_grid.clone(),
            target_grid: task.target_grid.clone(),
            phase: Phase::Created,
            events: Vec::new(),
            step_budget,
            turn_steps: 0,
            total_steps: 0,
            turn_index: 0,
            started_ms: now_ms,
        }
    }

    pub fn is_ended(&self) -> bool {
        matches!(self.phase, Phase::Ended { .. })
    }

    fn push(&mut self, event: EventKind) -> GameEvent {
        let e = GameEvent {
            session_id: self.id.clone(),
            seq: self.events.len() as u64 + 1,
            event,
        };
        self.events.push(e.clone());
        e
    }

    /// Both players are present: announce them and hand the first turn to the architect.
    pub fn start(&mut self) -> Vec<GameEvent> {
        if self.phase != Phase::Created {
            return Vec::new();
        }
        let out = vec![
            self.push(EventKind::PlayerJoined {
                role: Role::Architect,
            }),
            self.push(EventKind::PlayerJoined {
                role: Role::Builder,
            }),
        ];
        self.phase = Phase::ArchitectTurn;
        out
    }

    fn current_role(&self) -> Option<Role> {
        match self.phase {
            Phase::ArchitectTurn => Some(Role::Architect),
            Phase::BuilderTurn => Some(Role::Builder),
            _ => None,
        }
    }

    fn require_turn(&self, role: Role, what: &str) -> Result<(), Refusal> {
        if self.current_role() == Some(role) {
            Ok(())
        } else {
            Err(Refusal::new(
                ErrorCode::WrongPhase,
                format!("{role} cannot {what} in phase {:?}", self.phase),
            ))
        }
    }

    fn end_turn(&mut self, role: Role, forced: bool) -> GameEvent {
        let e = self.push(EventKind::TurnEnded { role, forced });
        self.phase = match role {
            Role::Architect => Phase::BuilderTurn,
            Role::Builder => Phase::ArchitectTurn,
        };
        self.turn_steps = 0;
        self.turn_index += 1;
        e
    }

    /// Validates and applies one proposal from `role`, returning the accepted events.
    pub fn propose(
        &mut self,
        rules: &Rules,
        role: Role,
        proposal: &Proposal,
    ) -> Result<Vec<GameEvent>, Refusal> {
        if self.is_ended() {
            return Err(Refusal::new(ErrorCode::SessionEnded, "game is over"));
        }
        match proposal {
            Proposal::Chat { text } => {
                self.require_turn(role, "chat")?;
                if text.trim().is_empty() {
                    return Err(Refusal::new(ErrorCode::BadMessage, "empty chat message"));
                }
                Ok(vec![self.push(EventKind::ChatMessage {
                    role,
                    text: text.clone(),
                })])
            }
            Proposal::PlayerMove { .. } | Proposal::BlockPlaced { .. } | Proposal::BlockRemoved { .. } => {
                if role != Role::Builder {
                    return Err(Refusal::new(ErrorCode::WrongPhase, "only the builder acts in the world"));
                }
                self.require_turn(role, "act")?;
                let event = match *proposal {
                    Proposal::PlayerMove { pos, pitch, yaw } => EventKind::PlayerMove { pos, pitch, yaw },
                    Proposal::BlockPlaced { coord, block_id } => EventKind::BlockPlaced { coord, block_id },
                    Proposal::BlockRemoved { coord } => EventKind::BlockRemoved { coord },
                    _ => unreachable!(),
                };
                apply_event(rules, &mut self.world, &event)
                    .map_err(|e| Refusal::new(ErrorCode::RuleViolation, e.to_string()))?;
                let mut out = vec![self.push(event)];
                self.turn_steps += 1;
                self.total_steps += 1;
                if self.turn_steps >= self.step_budget {
                    out.push(self.end_turn(Role::Builder, true));
                }
                Ok(out)
            }
            Proposal::EndTurn => {
                self.require_turn(role, "end the turn")?;
                Ok(vec![self.end_turn(role, false)])
            }
            Proposal::EndGame { success } => {
                if role != Role::Architect {
                    return Err(Refusal::new(ErrorCode::WrongPhase, "only the architect ends the game"));
                }
                self.require_turn(role, "end the game")?;
                Ok(vec![self.finish(*success, Reporter::Architect)])
            }
        }
    }

    fn finish(&mut self, success: bool, reporter: Reporter) -> GameEvent {
        let e = self.push(EventKind::GameEnded { success, reporter });
        self.phase = Phase::Ended { success };
        e
    }

    /// Server-side conclusion (time cap, disconnect, shutdown). `None` if already ended.
    pub fn seal(&mut self) -> Option<GameEvent> {
        if self.is_ended() {
            None
        } else {
            Some(self.finish(false, Reporter::Server))
        }
    }

    pub fn success(&self) -> bool {
        matches!(self.phase, Phase::Ended { success: true })
    }

    pub fn to_log(&self, completion_code: &str) -> SessionLog {
        SessionLog {
            session_id: self.id.clone(),
            task_id: self.task_id.clone(),
            agent_id: self.agent_id.clone(),
            completion_code: completion_code.to_string(),
            initial_grid: self.initial_grid.clone(),
            target_grid: self.target_grid.clone(),
            final_grid: self.world.grid.clone(),
            builder_steps: self.total_steps,
            success: self.success(),
            events: self.events.clone(),
        }
    }

    /// Chat lines by role, in order.
    pub fn chat(&self, role: Role) -> Vec<String> {
        self.events
            .iter()
            .filter_map(|e| match &e.event {
                EventKind::ChatMessage { role: r, text } if *r == role => Some(text.clone()),
                _ => None,
            })
            .collect()
    }
}
