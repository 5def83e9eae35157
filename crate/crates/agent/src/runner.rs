//! Toolkit event loop: mirrors each session locally, hands builder turns to
//! the policy and streams its actions as proposals.

use builderkit_core::voxel::{Avatar, BlockGrid, BuildAction, Rules, WorldState};
use builderkit_protocol::{
    apply_event, ClientMessage, EventKind, GameEvent, Proposal, Role, ServerMessage,
};

use crate::conn::{AgentError, Connection};
use crate::policy::{AgentObservation, ChatEntry, Policy};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub rules: Rules,
    /// Return after this many sessions end; otherwise run until the server closes.
    pub max_sessions: Option<usize>,
    /// Policy re-invocations allowed per turn after a rejected action.
    pub max_desyncs_per_turn: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            rules: Rules::default(),
            max_sessions: None,
            max_desyncs_per_turn: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSummary {
    pub session_id: String,
    pub success: bool,
    pub builder_steps: u64,
    pub desyncs: u32,
    pub final_grid: BlockGrid,
}

/// Local copy of one session, kept in step with the server's event stream.
#[derive(Debug, Clone)]
pub struct Mirror {
    pub session_id: String,
    pub initial: BlockGrid,
    pub world: WorldState,
    pub chat: Vec<ChatEntry>,
    pub next_seq: u64,
    pub turn: Option<Role>,
    pub ended: Option<bool>,
    pub turn_index: u32,
    pub step_budget: u32,
    pub turn_steps: u32,
    pub total_steps: u64,
}

impl Mirror {
    pub fn new(session_id: String, initial: BlockGrid, step_budget: u32) -> Self {
        let world = WorldState::new(initial.clone(), Rules::settle(&initial, Avatar::default()));
        Mirror {
            session_id,
            initial,
            world,
            chat: Vec::new(),
            next_seq: 1,
            turn: None,
            ended: None,
            turn_index: 0,
            step_budget,
            turn_steps: 0,
            total_steps: 0,
        }
    }

    pub fn reset(&mut self) {
        *self = Mirror::new(self.session_id.clone(), self.initial.clone(), self.step_budget);
    }

    /// Applies the next event. Events already seen are ignored; a gap or an
    /// event the local rules reject is reported as a desync.
    pub fn apply(&mut self, rules: &Rules, e: &GameEvent) -> Result<bool, AgentError> {
        if e.seq < self.next_seq {
            return Ok(false);
        }
        if e.seq > self.next_seq {
            return Err(AgentError::Desync(format!("expected seq {}, got {}", self.next_seq, e.seq)));
        }
        apply_event(rules, &mut self.world, &e.event).map_err(|err| AgentError::Desync(err.to_string()))?;
        self.next_seq += 1;
        match &e.event {
            EventKind::PlayerJoined { .. } => self.turn = Some(Role::Architect),
            EventKind::ChatMessage { role, text } => self.chat.push(ChatEntry {
                role: *role,
                text: text.clone(),
            }),
            EventKind::TurnEnded { role, .. } => {
                self.turn_steps = 0;
                self.turn_index += 1;
                self.turn = Some(match role {
                    Role::Architect => Role::Builder,
                    Role::Builder => Role::Architect,
                });
            }
            EventKind::GameEnded { success, .. } => {
                self.turn = None;
                self.ended = Some(*success);
            }
            EventKind::PlayerMove { .. } | EventKind::BlockPlaced { .. } | EventKind::BlockRemoved { .. } => {
                self.turn_steps += 1;
                self.total_steps += 1;
            }
        }
        Ok(true)
    }

    pub fn observation(&self) -> AgentObservation {
        AgentObservation {
            world_state: self.world.clone(),
            chat_history: self.chat.clone(),
            turn_index: self.turn_index,
            step_budget_remaining: self.step_budget.saturating_sub(self.turn_steps),
        }
    }
}

/// Proposal that makes the server reproduce `action` from `state`, if the
/// action is legal locally.
pub fn to_proposal(rules: &Rules, state: &WorldState, action: &BuildAction) -> Option<Proposal> {
    let next = rules.apply_action(state, action).ok()?;
    Some(match *action {
        BuildAction::PlaceBlock { coord, block } => Proposal::BlockPlaced { coord, block_id: block },
        BuildAction::BreakBlock { coord } => Proposal::BlockRemoved { coord },
        BuildAction::Move { .. } | BuildAction::SetLook { .. } | BuildAction::Jump => Proposal::PlayerMove {
            pos: next.avatar.pos,
            pitch: next.avatar.pitch,
            yaw: next.avatar.yaw,
        },
    })
}

struct Agent<'a> {
    conn: &'a mut Connection,
    opts: &'a RunOptions,
    mirror: Option<Mirror>,
    next_ref: u64,
    desyncs: u32,
}

enum Step {
    /// An event was applied to the mirror.
    Event,
    Rejected(Option<u64>),
    Other,
}

impl Agent<'_> {
    fn session_id(&self) -> String {
        self.mirror.as_ref().map(|m| m.session_id.clone()).unwrap_or_default()
    }

    fn pump(&mut self) -> Result<Step, AgentError> {
        let msg = self.conn.recv()?;
        match msg {
            ServerMessage::SessionStarted {
                session_id,
                task,
                step_budget,
                ..
            } => {
                self.mirror = Some(Mirror::new(session_id, task.initial_grid, step_budget));
                self.desyncs = 0;
                Ok(Step::Other)
            }
            ServerMessage::Event(e) => {
                let Some(m) = self.mirror.as_mut() else {
                    return Ok(Step::Other);
                };
                if e.session_id != m.session_id {
                    return Ok(Step::Other);
                }
                match m.apply(&self.opts.rules, &e) {
                    Ok(_) => Ok(Step::Event),
                    Err(err) => {
                        log::warn!("{err}; resyncing");
                        self.resync()?;
                        Ok(Step::Event)
                    }
                }
            }
            ServerMessage::Rejected { client_ref, code, detail, .. } => {
                log::warn!("proposal rejected: {code}: {detail}");
                Ok(Step::Rejected(client_ref))
            }
            ServerMessage::Error { code, detail } => {
                log::warn!("server error: {code}: {detail}");
                Ok(Step::Other)
            }
            _ => Ok(Step::Other),
        }
    }

    /// Rebuilds the mirror from the full event history; the trailing ping marks the end of the replay.
    fn resync(&mut self) -> Result<(), AgentError> {
        let Some(m) = self.mirror.as_mut() else {
            return Ok(());
        };
        self.desyncs += 1;
        m.reset();
        let session_id = m.session_id.clone();
        self.conn.send(&ClientMessage::Resync { session_id, from_seq: 1 })?;
        self.conn.send(&ClientMessage::Ping)?;
        loop {
            match self.conn.recv()? {
                ServerMessage::Pong => return Ok(()),
                ServerMessage::Event(e) => {
                    if let Some(m) = self.mirror.as_mut() {
                        if e.session_id == m.session_id {
                            m.apply(&self.opts.rules, &e)?;
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn our_turn(&self) -> bool {
        self.mirror.as_ref().is_some_and(|m| m.turn == Some(Role::Builder))
    }

    /// Sends one proposal and waits for its echo or rejection. `Ok(false)` on rejection.
    fn propose(&mut self, proposal: Proposal) -> Result<bool, AgentError> {
        self.next_ref += 1;
        let client_ref = self.next_ref;
        let before = self.mirror.as_ref().map_or(0, |m| m.next_seq);
        self.conn.send(&ClientMessage::Propose {
            session_id: self.session_id(),
            proposal,
            client_ref: Some(client_ref),
        })?;
        loop {
            match self.pump()? {
                Step::Rejected(Some(r)) if r == client_ref => return Ok(false),
                Step::Event if self.mirror.as_ref().is_some_and(|m| m.next_seq > before) => return Ok(true),
                _ => {}
            }
        }
    }

    fn play_turn(&mut self, policy: &mut dyn Policy) -> Result<(), AgentError> {
        let mut retries = 0;
        while self.our_turn() {
            let m = self.mirror.as_ref().expect("our turn implies a session");
            let turn = m.turn_index;
            let mut decision = policy.decide(&m.observation());
            let remaining = m.step_budget.saturating_sub(m.turn_steps) as usize;
            let truncated = decision.actions.len() > remaining;
            decision.actions.truncate(remaining);
            if let Some(text) = decision.message.take().filter(|t| !t.trim().is_empty()) {
                self.propose(Proposal::Chat { text })?;
            }
            let mut rejected = false;
            for action in &decision.actions {
                if !self.our_turn() || self.mirror.as_ref().is_some_and(|m| m.turn_index != turn) {
                    return Ok(());
                }
                let m = self.mirror.as_ref().expect("session");
                let Some(p) = to_proposal(&self.opts.rules, &m.world, action) else {
                    log::warn!("policy chose an illegal action {action:?}; skipping");
                    continue;
                };
                if !self.propose(p)? {
                    rejected = true;
                    break;
                }
            }
            let exhausted = self.mirror.as_ref().is_some_and(|m| m.turn_steps >= m.step_budget);
            // The server ends an exhausted turn itself; a late EndTurn could land in the next one.
            while exhausted && self.our_turn() && self.mirror.as_ref().is_some_and(|m| m.turn_index == turn) {
                self.pump()?;
            }
            if !self.our_turn() || self.mirror.as_ref().is_some_and(|m| m.turn_index != turn) {
                return Ok(());
            }
            if rejected {
                self.resync()?;
                retries += 1;
                if retries <= self.opts.max_desyncs_per_turn {
                    continue;
                }
            } else if !(decision.end_turn || truncated || decision.actions.is_empty()) {
                continue;
            }
            self.propose(Proposal::EndTurn)?;
            return Ok(());
        }
        Ok(())
    }
}

/// Serves builder turns with `policy` until `max_sessions` sessions end or the server closes the connection.
pub fn run_agent(
    conn: &mut Connection,
    policy: &mut dyn Policy,
    opts: &RunOptions,
) -> Result<Vec<SessionSummary>, AgentError> {
    let mut agent = Agent {
        conn,
        opts,
        mirror: None,
        next_ref: 0,
        desyncs: 0,
    };
    let mut done = Vec::new();
    loop {
        if opts.max_sessions.is_some_and(|n| done.len() >= n) {
            return Ok(done);
        }
        match agent.pump() {
            Ok(_) => {}
            Err(AgentError::Closed) => return Ok(done),
            Err(e) => return Err(e),
        }
        if agent.our_turn() {
            match agent.play_turn(policy) {
                Ok(()) => {}
                Err(AgentError::Closed) => return Ok(done),
                Err(e) => return Err(e),
            }
        }
        if let Some(m) = agent.mirror.as_ref().filter(|m| m.ended.is_some()) {
            done.push(SessionSummary {
                session_id: m.session_id.clone(),
                success: m.ended == Some(true),
                builder_steps: m.total_steps,
                desyncs: agent.desyncs,
                final_grid: m.world.grid.clone(),
            });
            agent.mirror = None;
        }
    }
}
