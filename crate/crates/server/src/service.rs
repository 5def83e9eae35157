//! Session orchestration. Synchronous core shared by the stream, WebSocket
//! and admin HTTP front ends.
//!
//! Lock order: session map, then one session, then the registry. The registry
//! lock is never held while taking a session lock.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use builderkit_core::dataset::Record;
use builderkit_core::metrics::{GameOutcome, Winner};
use builderkit_core::voxel::{BlockGrid, Rules};
use builderkit_protocol::{
    ClientMessage, ErrorCode, GameEvent, Role, ServerMessage, SessionLog, TaskView,
};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::mpsc::UnboundedSender;

use crate::clock::Clock;
use crate::codes::CodeGen;
use crate::collection::{Collection, CollectionError, CollectionStats, NewCollectionGame, Submission, TurnAssignment};
use crate::session::{Phase, Refusal, Session, Task};
use crate::storage::{IndexRow, Storage, StorageError};
use crate::ServerConfig;

pub type ConnId = u64;
pub type Outbox = UnboundedSender<ServerMessage>;

/// Participant-facing labels for the two games of a comparison.
pub const SLOT_LABELS: [&str; 2] = ["Agent 1", "Agent 2"];

#[derive(Debug, Error)]
pub enum AdminError {
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("task {0} already exists")]
    DuplicateTask(String),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("a comparison needs two distinct agents")]
    SameAgent,
    #[error("not found: {0}")]
    NotFound(String),
    #[error("both games must end before a verdict")]
    GamesNotFinished,
    #[error("verdict already recorded")]
    AlreadyDecided,
    #[error("winner must be one of \"Agent 1\" or \"Agent 2\"")]
    BadVerdict,
    #[error(transparent)]
    Collection(#[from] CollectionError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

#[derive(Debug, Clone)]
enum ConnKind {
    Unbound,
    Agent(String),
    Human,
}

struct Conn {
    tx: Outbox,
    kind: ConnKind,
}

#[derive(Debug, Default)]
struct AgentEntry {
    conn: Option<ConnId>,
    session: Option<String>,
}

#[derive(Debug, Clone)]
struct JoinCode {
    agent_id: String,
    task_id: String,
    used: bool,
    comparison: Option<(String, usize)>,
}

#[derive(Debug, Clone)]
struct Comparison {
    hit_id: String,
    task_id: String,
    agents: [String; 2],
    codes: [String; 2],
    ended: [bool; 2],
    verdict: Option<GameOutcome>,
    feedback: BTreeMap<String, String>,
}

#[derive(Default)]
struct Registry {
    conns: HashMap<ConnId, Conn>,
    agents: BTreeMap<String, AgentEntry>,
    tasks: BTreeMap<String, Task>,
    codes: HashMap<String, JoinCode>,
    comparisons: BTreeMap<String, Comparison>,
    next_conn: ConnId,
    next_session: u64,
    next_task: u64,
    next_hit: u64,
}

struct Seat {
    conn: Option<(ConnId, Outbox)>,
    lost_ms: Option<u64>,
}

impl Seat {
    fn new(conn: ConnId, tx: Outbox) -> Self {
        Seat {
            conn: Some((conn, tx)),
            lost_ms: None,
        }
    }

    fn send(&self, msg: ServerMessage) {
        if let Some((_, tx)) = &self.conn {
            let _ = tx.send(msg);
        }
    }

    fn is(&self, conn: ConnId) -> bool {
        self.conn.as_ref().is_some_and(|(c, _)| *c == conn)
    }
}

struct Live {
    session: Session,
    architect: Seat,
    builder: Seat,
    comparison: Option<(String, usize)>,
    completion_code: Option<String>,
}

impl Live {
    fn broadcast(&self, events: &[GameEvent]) {
        for e in events {
            self.architect.send(ServerMessage::Event(e.clone()));
            self.builder.send(ServerMessage::Event(e.clone()));
        }
    }

    fn role_of(&self, conn: ConnId) -> Option<Role> {
        if self.architect.is(conn) {
            Some(Role::Architect)
        } else if self.builder.is(conn) {
            Some(Role::Builder)
        } else {
            None
        }
    }

    fn started_message(&self, role: Role) -> ServerMessage {
        let s = &self.session;
        ServerMessage::SessionStarted {
            session_id: s.id.clone(),
            role,
            task: TaskView {
                initial_grid: s.initial_grid.clone(),
                target_grid: (role == Role::Architect).then(|| s.target_grid.clone()),
            },
            step_budget: s.step_budget,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentStatus {
    pub agent_id: String,
    pub connected: bool,
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionSnapshot {
    pub session_id: String,
    pub task_id: String,
    pub phase: String,
    pub success: Option<bool>,
    pub grid: BlockGrid,
    pub last_seq: u64,
    pub turn_index: u32,
    pub builder_steps: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonGame {
    pub label: String,
    pub join_code: String,
    pub ended: bool,
}

/// What a comparison participant may see: labels, codes, progress. No agent ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonView {
    pub hit_id: String,
    pub task_id: String,
    pub games: Vec<ComparisonGame>,
    pub verdict_open: bool,
    pub decided: bool,
}

/// Returned to the administrator who created the comparison; includes the slot mapping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonCreated {
    #[serde(flatten)]
    pub view: ComparisonView,
    pub assignment: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServiceStats {
    pub tasks: usize,
    pub agents_registered: usize,
    pub agents_connected: usize,
    pub sessions_live: usize,
    pub sessions_ended: usize,
    pub comparisons: usize,
    pub outcomes: usize,
    pub collection: CollectionStats,
    pub records: usize,
}

pub struct Service {
    config: ServerConfig,
    rules: Rules,
    clock: Arc<dyn Clock>,
    codes: CodeGen,
    storage: Arc<dyn Storage>,
    registry: Mutex<Registry>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Live>>>>,
    collection: Mutex<Collection>,
}

fn refuse(tx: &Outbox, code: ErrorCode, detail: impl Into<String>) {
    let _ = tx.send(ServerMessage::Error {
        code,
        detail: detail.into(),
    });
}

impl Service {
    pub fn new(
        config: ServerConfig,
        rules: Rules,
        clock: Arc<dyn Clock>,
        storage: Arc<dyn Storage>,
    ) -> Self {
        let codes = CodeGen::new(config.seed);
        Service {
            config,
            rules,
            clock,
            codes,
            storage,
            registry: Mutex::new(Registry::default()),
            sessions: RwLock::new(BTreeMap::new()),
            collection: Mutex::new(Collection::default()),
        }
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn storage(&self) -> &Arc<dyn Storage> {
        &self.storage
    }

    fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<Live>>> {
        self.sessions.read().get(id).cloned()
    }

    // ---- connections ----------------------------------------------------

    pub fn open_conn(&self, tx: Outbox) -> ConnId {
        let mut r = self.registry.lock();
        r.next_conn += 1;
        let id = r.next_conn;
        r.conns.insert(
            id,
            Conn {
                tx,
                kind: ConnKind::Unbound,
            },
        );
        id
    }

    pub fn close_conn(&self, conn: ConnId) {
        let now = self.now();
        let kind = {
            let mut r = self.registry.lock();
            let Some(c) = r.conns.remove(&conn) else {
                return;
            };
            if let ConnKind::Agent(id) = &c.kind {
                if let Some(a) = r.agents.get_mut(id) {
                    a.conn = None;
                }
            }
            c.kind
        };
        if matches!(kind, ConnKind::Unbound) {
            return;
        }
        let sessions: Vec<_> = self.sessions.read().values().cloned().collect();
        for s in sessions {
            let mut guard = s.lock();
            let live = &mut *guard;
            let ended = live.session.is_ended();
            for seat in [&mut live.architect, &mut live.builder] {
                if seat.is(conn) {
                    seat.conn = None;
                    if !ended {
                        seat.lost_ms = Some(now);
                    }
                }
            }
        }
    }

    fn outbox(&self, conn: ConnId) -> Option<Outbox> {
        self.registry.lock().conns.get(&conn).map(|c| c.tx.clone())
    }

    /// Entry point for every decoded client message.
    pub fn handle(&self, conn: ConnId, msg: ClientMessage) {
        let Some(tx) = self.outbox(conn) else {
            return;
        };
        match msg {
            ClientMessage::Ping => {
                let _ = tx.send(ServerMessage::Pong);
            }
            ClientMessage::Hello { agent_id } => self.hello(conn, &tx, agent_id),
            ClientMessage::Join {
                join_code,
                human_id,
            } => {
                if let Err(r) = self.join(conn, &tx, &join_code, &human_id) {
                    refuse(&tx, r.code, r.detail);
                }
            }
            ClientMessage::Resume {
                session_id,
                human_id,
            } => self.resume(conn, &tx, &session_id, &human_id),
            ClientMessage::Propose {
                session_id,
                proposal,
                client_ref,
            } => {
                let result = match self.session(&session_id) {
                    None => Err(Refusal::new(ErrorCode::UnknownSession, session_id.clone())),
                    Some(s) => self.propose(&s, conn, &proposal),
                };
                if let Err(r) = result {
                    let _ = tx.send(ServerMessage::Rejected {
                        session_id,
                        client_ref,
                        code: r.code,
                        detail: r.detail,
                    });
                }
            }
            ClientMessage::Resync {
                session_id,
                from_seq,
            } => match self.session(&session_id) {
                None => refuse(&tx, ErrorCode::UnknownSession, session_id),
                Some(s) => {
                    let live = s.lock();
                    if live.role_of(conn).is_none() {
                        refuse(&tx, ErrorCode::NotParticipant, session_id);
                        return;
                    }
                    for e in live.session.events.iter().filter(|e| e.seq >= from_seq) {
                        let _ = tx.send(ServerMessage::Event(e.clone()));
                    }
                }
            },
        }
    }

    fn hello(&self, conn: ConnId, tx: &Outbox, agent_id: String) {
        let live_session = {
            let mut r = self.registry.lock();
            if !matches!(r.conns.get(&conn).map(|c| &c.kind), Some(ConnKind::Unbound)) {
                refuse(tx, ErrorCode::BadMessage, "connection already identified");
                return;
            }
            let entry = r.agents.entry(agent_id.clone()).or_default();
            if entry.conn.is_some() {
                refuse(tx, ErrorCode::DuplicateAgentId, agent_id);
                return;
            }
            entry.conn = Some(conn);
            let session = entry.session.clone();
            if let Some(c) = r.conns.get_mut(&conn) {
                c.kind = ConnKind::Agent(agent_id.clone());
            }
            session
        };
        let _ = tx.send(ServerMessage::Welcome { agent_id });
        if let Some(s) = live_session.and_then(|id| self.session(&id)) {
            let mut live = s.lock();
            live.builder = Seat::new(conn, tx.clone());
            let _ = tx.send(live.started_message(Role::Builder));
            for e in &live.session.events {
                let _ = tx.send(ServerMessage::Event(e.clone()));
            }
        }
    }

    fn join(&self, conn: ConnId, tx: &Outbox, code: &str, human_id: &str) -> Result<(), Refusal> {
        let now = self.now();
        let (session_id, task, agent_id, agent_tx, agent_conn, comparison) = {
            let mut r = self.registry.lock();
            if matches!(r.conns.get(&conn).map(|c| &c.kind), Some(ConnKind::Agent(_))) {
                return Err(Refusal::new(ErrorCode::BadMessage, "agents cannot join as architect"));
            }
            let jc = r
                .codes
                .get(code)
                .cloned()
                .ok_or_else(|| Refusal::new(ErrorCode::InvalidCode, "unknown join code"))?;
            if jc.used {
                return Err(Refusal::new(ErrorCode::CodeAlreadyUsed, "join code already used"));
            }
            let agent = r.agents.get(&jc.agent_id);
            let agent_conn = match agent {
                Some(AgentEntry {
                    conn: Some(c),
                    session: None,
                }) => *c,
                _ => {
                    return Err(Refusal::new(
                        ErrorCode::AgentUnavailable,
                        "the agent for this code is not available",
                    ))
                }
            };
            let agent_tx = r
                .conns
                .get(&agent_conn)
                .map(|c| c.tx.clone())
                .ok_or_else(|| Refusal::new(ErrorCode::AgentUnavailable, "agent disconnected"))?;
            let task = r
                .tasks
                .get(&jc.task_id)
                .cloned()
                .ok_or_else(|| Refusal::new(ErrorCode::InvalidCode, "task no longer exists"))?;
            r.next_session += 1;
            let session_id = format!("s-{}", r.next_session);
            r.codes.get_mut(code).expect("present").used = true;
            if let Some(a) = r.agents.get_mut(&jc.agent_id) {
                a.session = Some(session_id.clone());
            }
            if let Some(c) = r.conns.get_mut(&conn) {
                c.kind = ConnKind::Human;
            }
            (session_id, task, jc.agent_id, agent_tx, agent_conn, jc.comparison)
        };
        let session = Session::new(
            session_id.clone(),
            &task,
            agent_id,
            human_id.to_string(),
            self.config.step_budget,
            now,
        );
        let live = Arc::new(Mutex::new(Live {
            session,
            architect: Seat::new(conn, tx.clone()),
            builder: Seat::new(agent_conn, agent_tx),
            comparison,
            completion_code: None,
        }));
        self.sessions.write().insert(session_id, live.clone());
        let mut live = live.lock();
        live.architect.send(live.started_message(Role::Architect));
        live.builder.send(live.started_message(Role::Builder));
        let events = live.session.start();
        live.broadcast(&events);
        Ok(())
    }

    fn resume(&self, conn: ConnId, tx: &Outbox, session_id: &str, human_id: &str) {
        let Some(s) = self.session(session_id) else {
            refuse(tx, ErrorCode::UnknownSession, session_id);
            return;
        };
        {
            let mut r = self.registry.lock();
            if let Some(c) = r.conns.get_mut(&conn) {
                c.kind = ConnKind::Human;
            }
        }
        let mut live = s.lock();
        if live.session.architect_id != human_id {
            refuse(tx, ErrorCode::NotParticipant, session_id);
            return;
        }
        live.architect = Seat::new(conn, tx.clone());
        let _ = tx.send(live.started_message(Role::Architect));
        for e in &live.session.events {
            let _ = tx.send(ServerMessage::Event(e.clone()));
        }
        if let Some(code) = &live.completion_code {
            let _ = tx.send(ServerMessage::Completion {
                session_id: session_id.to_string(),
                completion_code: code.clone(),
                success: live.session.success(),
            });
        }
    }

    fn propose(
        &self,
        s: &Arc<Mutex<Live>>,
        conn: ConnId,
        proposal: &builderkit_protocol::Proposal,
    ) -> Result<(), Refusal> {
        let mut live = s.lock();
        let role = live
            .role_of(conn)
            .ok_or_else(|| Refusal::new(ErrorCode::NotParticipant, "not a player in this session"))?;
        let events = live.session.propose(&self.rules, role, proposal)?;
        live.broadcast(&events);
        if live.session.is_ended() {
            self.conclude(&mut live);
        }
        Ok(())
    }

    /// Seals a session that just emitted GameEnded: persist the log, issue the
    /// completion code, free the agent and advance any comparison.
    fn conclude(&self, live: &mut Live) {
        let code = self.codes.code();
        live.completion_code = Some(code.clone());
        let log = live.session.to_log(&code);
        let row = IndexRow {
            session_id: log.session_id.clone(),
            task_id: log.task_id.clone(),
            completion_code: code.clone(),
            instructions: live.session.chat(Role::Architect),
            questions: live.session.chat(Role::Builder),
            success: log.success,
            hit_id: live.comparison.as_ref().map(|(h, _)| h.clone()),
        };
        if let Err(e) = self.storage.put_log(&log, &row) {
            tracing::error!(session = %log.session_id, error = %e, "failed to persist session log");
        }
        live.architect.send(ServerMessage::Completion {
            session_id: log.session_id.clone(),
            completion_code: code,
            success: log.success,
        });
        let mut r = self.registry.lock();
        if let Some(a) = r.agents.get_mut(&live.session.agent_id) {
            if a.session.as_deref() == Some(&live.session.id) {
                a.session = None;
            }
        }
        if let Some((hit, slot)) = &live.comparison {
            if let Some(c) = r.comparisons.get_mut(hit) {
                c.ended[*slot] = true;
            }
        }
    }

    fn seal(&self, live: &mut Live) {
        if let Some(e) = live.session.seal() {
            live.broadcast(&[e]);
            self.conclude(live);
        }
    }

    /// Enforces the wall-clock cap and the disconnect grace period.
    pub fn tick(&self) {
        let now = self.now();
        let cap = self.config.session_cap_minutes * 60_000;
        let grace = self.config.lease_minutes * 60_000;
        let sessions: Vec<_> = self.sessions.read().values().cloned().collect();
        for s in sessions {
            let mut live = s.lock();
            if live.session.is_ended() {
                continue;
            }
            let expired = now.saturating_sub(live.session.started_ms) >= cap;
            let lost = [&live.architect, &live.builder]
                .iter()
                .any(|seat| seat.lost_ms.is_some_and(|t| now.saturating_sub(t) >= grace));
            if expired || lost {
                tracing::info!(session = %live.session.id, expired, lost, "sealing session");
                self.seal(&mut live);
            }
        }
    }

    /// Seals every live session; used on shutdown.
    pub fn shutdown(&self) {
        let sessions: Vec<_> = self.sessions.read().values().cloned().collect();
        for s in sessions {
            self.seal(&mut s.lock());
        }
    }

    // ---- admin ------------------------------------------------------------

    pub fn create_task(&self, id: Option<String>, initial: BlockGrid, target: BlockGrid) -> Result<Task, AdminError> {
        if initial == target {
            return Err(AdminError::InvalidTask("target equals the initial grid".into()));
        }
        let mut r = self.registry.lock();
        let id = match id {
            Some(id) if r.tasks.contains_key(&id) => return Err(AdminError::DuplicateTask(id)),
            Some(id) => id,
            None => loop {
                r.next_task += 1;
                let id = format!("task-{}", r.next_task);
                if !r.tasks.contains_key(&id) {
                    break id;
                }
            },
        };
        let task = Task {
            id: id.clone(),
            initial_grid: initial,
            target_grid: target,
        };
        r.tasks.insert(id, task.clone());
        Ok(task)
    }

    pub fn tasks(&self) -> Vec<Task> {
        self.registry.lock().tasks.values().cloned().collect()
    }

    pub fn task(&self, id: &str) -> Option<Task> {
        self.registry.lock().tasks.get(id).cloned()
    }

    pub fn agents(&self) -> Vec<AgentStatus> {
        self.registry
            .lock()
            .agents
            .iter()
            .map(|(id, a)| AgentStatus {
                agent_id: id.clone(),
                connected: a.conn.is_some(),
                session_id: a.session.clone(),
            })
            .collect()
    }

    fn mint_locked(&self, r: &mut Registry, agent_id: &str, task_id: &str, comparison: Option<(String, usize)>) -> Result<String, AdminError> {
        if !r.agents.contains_key(agent_id) {
            return Err(AdminError::UnknownAgent(agent_id.to_string()));
        }
        if !r.tasks.contains_key(task_id) {
            return Err(AdminError::UnknownTask(task_id.to_string()));
        }
        let code = self.codes.code();
        r.codes.insert(
            code.clone(),
            JoinCode {
                agent_id: agent_id.to_string(),
                task_id: task_id.to_string(),
                used: false,
                comparison,
            },
        );
        Ok(code)
    }

    pub fn mint_join_code(&self, agent_id: &str, task_id: &str) -> Result<String, AdminError> {
        let mut r = self.registry.lock();
        self.mint_locked(&mut r, agent_id, task_id, None)
    }

    pub fn create_comparison(&self, task_id: &str, x: &str, y: &str) -> Result<ComparisonCreated, AdminError> {
        if x == y {
            return Err(AdminError::SameAgent);
        }
        let mut r = self.registry.lock();
        if !r.tasks.contains_key(task_id) {
            return Err(AdminError::UnknownTask(task_id.to_string()));
        }
        for a in [x, y] {
            if !r.agents.contains_key(a) {
                return Err(AdminError::UnknownAgent(a.to_string()));
            }
        }
        let agents = if self.codes.coin() {
            [y.to_string(), x.to_string()]
        } else {
            [x.to_string(), y.to_string()]
        };
        r.next_hit += 1;
        let hit_id = format!("hit-{}", r.next_hit);
        let c0 = self.mint_locked(&mut r, &agents[0], task_id, Some((hit_id.clone(), 0)))?;
        let c1 = self.mint_locked(&mut r, &agents[1], task_id, Some((hit_id.clone(), 1)))?;
        let c = Comparison {
            hit_id: hit_id.clone(),
            task_id: task_id.to_string(),
            agents: agents.clone(),
            codes: [c0, c1],
            ended: [false, false],
            verdict: None,
            feedback: BTreeMap::new(),
        };
        let view = comparison_view(&c);
        r.comparisons.insert(hit_id, c);
        Ok(ComparisonCreated {
            view,
            assignment: SLOT_LABELS
                .iter()
                .zip(agents)
                .map(|(l, a)| (l.to_string(), a))
                .collect(),
        })
    }

    pub fn comparison(&self, hit_id: &str) -> Option<ComparisonView> {
        self.registry.lock().comparisons.get(hit_id).map(comparison_view)
    }

    /// Records the participant's verdict once both games have ended.
    pub fn submit_verdict(
        &self,
        hit_id: &str,
        winner: &str,
        feedback: BTreeMap<String, String>,
    ) -> Result<GameOutcome, AdminError> {
        let outcome = {
            let mut r = self.registry.lock();
            let c = r
                .comparisons
                .get_mut(hit_id)
                .ok_or_else(|| AdminError::NotFound(hit_id.to_string()))?;
            if c.verdict.is_some() {
                return Err(AdminError::AlreadyDecided);
            }
            if !c.ended.iter().all(|e| *e) {
                return Err(AdminError::GamesNotFinished);
            }
            let winner = match SLOT_LABELS.iter().position(|l| *l == winner) {
                Some(0) => Winner::AgentA,
                Some(_) => Winner::AgentB,
                None => return Err(AdminError::BadVerdict),
            };
            let outcome = GameOutcome {
                hit_id: c.hit_id.clone(),
                agent_a: c.agents[0].clone(),
                agent_b: c.agents[1].clone(),
                task_id: c.task_id.clone(),
                winner,
            };
            c.verdict = Some(outcome.clone());
            c.feedback = feedback;
            outcome
        };
        self.storage.put_outcome(&outcome)?;
        Ok(outcome)
    }

    pub fn log_by_code(&self, code: &str) -> Result<Option<SessionLog>, AdminError> {
        Ok(self.storage.log_by_code(code)?)
    }

    pub fn outcomes(&self) -> Result<Vec<GameOutcome>, AdminError> {
        Ok(self.storage.outcomes()?)
    }

    pub fn snapshot(&self, session_id: &str) -> Option<SessionSnapshot> {
        let s = self.session(session_id)?;
        let live = s.lock();
        let (phase, success) = match live.session.phase {
            Phase::Created => ("created", None),
            Phase::ArchitectTurn => ("architectTurn", None),
            Phase::BuilderTurn => ("builderTurn", None),
            Phase::Ended { success } => ("ended", Some(success)),
        };
        Some(SessionSnapshot {
            session_id: live.session.id.clone(),
            task_id: live.session.task_id.clone(),
            phase: phase.into(),
            success,
            grid: live.session.world.grid.clone(),
            last_seq: live.session.events.len() as u64,
            turn_index: live.session.turn_index,
            builder_steps: live.session.total_steps,
        })
    }

    pub fn stats(&self) -> Result<ServiceStats, AdminError> {
        let (tasks, agents_registered, agents_connected, comparisons) = {
            let r = self.registry.lock();
            (
                r.tasks.len(),
                r.agents.len(),
                r.agents.values().filter(|a| a.conn.is_some()).count(),
                r.comparisons.len(),
            )
        };
        let (mut live, mut ended) = (0, 0);
        for s in self.sessions.read().values() {
            if s.lock().session.is_ended() {
                ended += 1;
            } else {
                live += 1;
            }
        }
        Ok(ServiceStats {
            tasks,
            agents_registered,
            agents_connected,
            sessions_live: live,
            sessions_ended: ended,
            comparisons,
            outcomes: self.storage.outcomes()?.len(),
            collection: self.collection.lock().stats(self.now()),
            records: self.storage.records()?.len(),
        })
    }

    // ---- collection mode ----------------------------------------------------

    pub fn create_collection_game(&self, spec: NewCollectionGame) -> i64 {
        self.collection.lock().create_game(spec)
    }

    pub fn next_open_turn(&self, annotator: &str) -> Option<TurnAssignment> {
        let lease = self.config.lease_minutes * 60_000;
        self.collection.lock().next_open_turn(annotator, self.now(), lease)
    }

    /// Stores the records a submission completes and returns their ids.
    pub fn submit_single_turn(&self, assignment_id: &str, submission: Submission) -> Result<Vec<usize>, AdminError> {
        let records = self
            .collection
            .lock()
            .submit(assignment_id, submission, self.now(), &self.rules)?;
        let mut ids = Vec::with_capacity(records.len());
        for r in &records {
            ids.push(self.storage.put_record(r)?);
        }
        Ok(ids)
    }

    pub fn records(&self) -> Result<Vec<Record>, AdminError> {
        Ok(self.storage.records()?)
    }
}

fn comparison_view(c: &Comparison) -> ComparisonView {
    ComparisonView {
        hit_id: c.hit_id.clone(),
        task_id: c.task_id.clone(),
        games: (0..2)
            .map(|i| ComparisonGame {
                label: SLOT_LABELS[i].to_string(),
                join_code: c.codes[i].clone(),
                ended: c.ended[i],
            })
            .collect(),
        verdict_open: c.ended.iter().all(|e| *e) && c.verdict.is_none(),
        decided: c.verdict.is_some(),
    }
}
