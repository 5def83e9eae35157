//! Asynchronous turn-taking for data collection: open architect/builder turns
//! are leased to eligible annotators one at a time per game.

use std::collections::BTreeMap;

use builderkit_core::dataset::{ArchitectRecord, BuilderRecord, Record, RecordMeta, Role};
use builderkit_core::tape::{replay, verify_ending_state, ReplayOptions, Tape};
use builderkit_core::voxel::{Avatar, BlockGrid, Rules, WorldState, WORLD_GROUND_Y};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CollectionMode {
    /// Architect and builder turns alternate until the architect finishes.
    MultiTurn,
    /// One ideation turn (act, then describe) followed by one execution turn.
    SingleTurn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NewCollectionGame {
    pub mode: CollectionMode,
    #[serde(default)]
    pub initial_grid: BlockGrid,
    #[serde(default)]
    pub target_grid: Option<BlockGrid>,
    #[serde(default)]
    pub structure_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TurnKind {
    Instruction,
    Ideation,
    Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatLine {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TurnAssignment {
    pub assignment_id: String,
    pub game_id: i64,
    pub role: Role,
    pub kind: TurnKind,
    pub world: BlockGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BlockGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    pub history: Vec<ChatLine>,
    pub lease_expires_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Submission {
    Instruction {
        text: String,
    },
    /// Architect declares the multi-turn game complete.
    Finish,
    Ideation {
        tape: Tape,
        instruction: String,
    },
    Execution {
        #[serde(default)]
        tape: Option<Tape>,
        #[serde(default)]
        ending_state: Option<BlockGrid>,
        #[serde(default)]
        ambiguous: bool,
        #[serde(default)]
        question: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CollectionError {
    #[error("unknown assignment {0}")]
    UnknownAssignment(String),
    #[error("lease expired")]
    LeaseExpired,
    #[error("ambiguous instruction needs a clarifying question")]
    MissingQuestion,
    #[error("{0} submission does not fit a {1:?} turn")]
    WrongKind(&'static str, TurnKind),
    #[error("validation failed: {0}")]
    Validation(String),
}

#[derive(Debug, Clone)]
struct Lease {
    assignment_id: String,
    annotator: String,
    expires_ms: u64,
}

#[derive(Debug, Clone)]
struct PendingInstruction {
    step_id: i64,
    text: String,
    annotator: String,
    timestamp: f64,
}

#[derive(Debug, Clone)]
struct Game {
    id: i64,
    mode: CollectionMode,
    world: BlockGrid,
    target: Option<BlockGrid>,
    structure_id: Option<String>,
    next: TurnKind,
    next_step: i64,
    roles: BTreeMap<String, Role>,
    lease: Option<Lease>,
    pending: Option<PendingInstruction>,
    history: Vec<ChatLine>,
    finished: bool,
}

impl Game {
    fn role(&self) -> Role {
        match self.next {
            TurnKind::Instruction | TurnKind::Ideation => Role::Architect,
            TurnKind::Execution => Role::Builder,
        }
    }

    fn step(&mut self) -> i64 {
        self.next_step += 1;
        self.next_step
    }

    fn meta(&self, annotator: &str, timestamp: f64) -> RecordMeta {
        RecordMeta {
            annotator_id: Some(annotator.to_string()),
            timestamp: Some(timestamp),
            split: None,
            structure_id: self.structure_id.clone(),
        }
    }

    fn start_state(&self) -> WorldState {
        WorldState::new(self.world.clone(), Rules::settle(&self.world, Avatar::default()))
    }
}

#[derive(Debug, Default)]
pub struct Collection {
    games: BTreeMap<i64, Game>,
    next_assignment: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CollectionStats {
    pub games: usize,
    pub open: usize,
    pub leased: usize,
    pub finished: usize,
}

fn world_avatar(s: &WorldState) -> Avatar {
    let [x, y, z] = s.avatar.pos;
    Avatar {
        pos: [x, y + WORLD_GROUND_Y as f64, z],
        ..s.avatar
    }
}

impl Collection {
    pub fn create_game(&mut self, spec: NewCollectionGame) -> i64 {
        let id = self.games.keys().next_back().copied().unwrap_or(0) + 1;
        let next = match spec.mode {
            CollectionMode::MultiTurn => TurnKind::Instruction,
            CollectionMode::SingleTurn => TurnKind::Ideation,
        };
        self.games.insert(
            id,
            Game {
                id,
                mode: spec.mode,
                world: spec.initial_grid,
                target: spec.target_grid,
                structure_id: spec.structure_id,
                next,
                next_step: 0,
                roles: BTreeMap::new(),
                lease: None,
                pending: None,
                history: Vec::new(),
                finished: false,
            },
        );
        id
    }

    pub fn stats(&self, now_ms: u64) -> CollectionStats {
        let leased = |g: &Game| g.lease.as_ref().is_some_and(|l| l.expires_ms > now_ms);
        CollectionStats {
            games: self.games.len(),
            open: self.games.values().filter(|g| !g.finished && !leased(g)).count(),
            leased: self.games.values().filter(|g| !g.finished && leased(g)).count(),
            finished: self.games.values().filter(|g| g.finished).count(),
        }
    }

    /// Leases the first open turn, in game order, that `annotator` may take.
    /// An annotator who played one role in a game is never offered the other.
    pub fn next_open_turn(&mut self, annotator: &str, now_ms: u64, lease_ms: u64) -> Option<TurnAssignment> {
        self.next_assignment += 1;
        let assignment_id = format!("asg-{}", self.next_assignment);
        let game = self.games.values_mut().find(|g| {
            let free = g.lease.as_ref().is_none_or(|l| l.expires_ms <= now_ms);
            let excluded = g.roles.get(annotator).is_some_and(|r| *r != g.role());
            !g.finished && free && !excluded
        })?;
        let expires_ms = now_ms + lease_ms;
        game.lease = Some(Lease {
            assignment_id: assignment_id.clone(),
            annotator: annotator.to_string(),
            expires_ms,
        });
        let role = game.role();
        Some(TurnAssignment {
            assignment_id,
            game_id: game.id,
            role,
            kind: game.next,
            world: game.world.clone(),
            target: if role == Role::Architect { game.target.clone() } else { None },
            instruction: game.pending.as_ref().map(|p| p.text.clone()),
            history: game.history.clone(),
            lease_expires_ms: expires_ms,
        })
    }

    /// Applies a submission for a leased turn and returns the records it completes.
    pub fn submit(
        &mut self,
        assignment_id: &str,
        submission: Submission,
        now_ms: u64,
        rules: &Rules,
    ) -> Result<Vec<Record>, CollectionError> {
        let game = self
            .games
            .values_mut()
            .find(|g| g.lease.as_ref().is_some_and(|l| l.assignment_id == assignment_id))
            .ok_or_else(|| CollectionError::UnknownAssignment(assignment_id.to_string()))?;
        let lease = game.lease.clone().expect("found by lease");
        if lease.expires_ms <= now_ms {
            game.lease = None;
            return Err(CollectionError::LeaseExpired);
        }
        let timestamp = now_ms as f64 / 1000.0;
        let who = lease.annotator.clone();
        let played = game.role();
        let records = match (game.next, submission) {
            (TurnKind::Instruction, Submission::Instruction { text }) => {
                if text.trim().is_empty() {
                    return Err(CollectionError::Validation("empty instruction".into()));
                }
                let step_id = game.step();
                game.history.push(ChatLine { role: Role::Architect, text: text.clone() });
                game.pending = Some(PendingInstruction { step_id, text, annotator: who.clone(), timestamp });
                game.next = TurnKind::Execution;
                Vec::new()
            }
            (TurnKind::Instruction, Submission::Finish) => {
                game.finished = true;
                Vec::new()
            }
            (TurnKind::Ideation, Submission::Ideation { tape, instruction }) => {
                if instruction.trim().is_empty() {
                    return Err(CollectionError::Validation("empty instruction".into()));
                }
                let start = game.start_state();
                let end = replay(&tape, start.clone(), rules, ReplayOptions::default())
                    .map_err(|e| CollectionError::Validation(e.to_string()))?;
                let step_id = game.step();
                let record = Record::Builder(BuilderRecord {
                    game_id: game.id,
                    step_id,
                    avatar: world_avatar(&end),
                    world_ending_state: end.grid.clone(),
                    tape,
                    clarification_question: None,
                    meta: game.meta(&who, timestamp),
                });
                let step_id = game.step();
                game.history.push(ChatLine { role: Role::Architect, text: instruction.clone() });
                game.pending = Some(PendingInstruction { step_id, text: instruction, annotator: who.clone(), timestamp });
                game.next = TurnKind::Execution;
                vec![record]
            }
            (TurnKind::Execution, Submission::Execution { tape, ending_state, ambiguous, question }) => {
                let pending = game.pending.clone().expect("execution follows an instruction");
                let question = question.filter(|q| !q.trim().is_empty());
                let instruction = |clear: bool, q: Option<String>| {
                    Record::Architect(ArchitectRecord {
                        game_id: game.id,
                        step_id: pending.step_id,
                        perspective: None,
                        command: pending.text.clone(),
                        is_clear: Some(clear),
                        clarification_question: q,
                        meta: game.meta(&pending.annotator, pending.timestamp),
                    })
                };
                let out = if ambiguous {
                    let q = question.ok_or(CollectionError::MissingQuestion)?;
                    let rec = instruction(false, Some(q.clone()));
                    game.history.push(ChatLine { role: Role::Builder, text: q });
                    vec![rec]
                } else {
                    let tape = tape.ok_or_else(|| CollectionError::Validation("execution needs a tape".into()))?;
                    let start = game.start_state();
                    let end = match &ending_state {
                        Some(ending) => {
                            let v = verify_ending_state(&tape, start, ending, rules)
                                .map_err(|e| CollectionError::Validation(e.to_string()))?;
                            if !v.verified() {
                                return Err(CollectionError::Validation(format!(
                                    "tape does not reach the ending state at {} cells",
                                    v.mismatches.len()
                                )));
                            }
                            v.replayed
                        }
                        None => replay(&tape, start, rules, ReplayOptions::default())
                            .map_err(|e| CollectionError::Validation(e.to_string()))?,
                    };
                    let arch = instruction(true, None);
                    let step_id = game.step();
                    let build = Record::Builder(BuilderRecord {
                        game_id: game.id,
                        step_id,
                        avatar: world_avatar(&end),
                        world_ending_state: end.grid.clone(),
                        tape,
                        clarification_question: None,
                        meta: game.meta(&who, timestamp),
                    });
                    if game.mode == CollectionMode::MultiTurn {
                        game.world = end.grid;
                    }
                    vec![arch, build]
                };
                game.pending = None;
                match game.mode {
                    CollectionMode::MultiTurn => game.next = TurnKind::Instruction,
                    CollectionMode::SingleTurn => game.finished = true,
                }
                out
            }
            (kind, sub) => {
                let name = match sub {
                    Submission::Instruction { .. } => "instruction",
                    Submission::Finish => "finish",
                    Submission::Ideation { .. } => "ideation",
                    Submission::Execution { .. } => "execution",
                };
                return Err(CollectionError::WrongKind(name, kind));
            }
        };
        game.roles.insert(who, played);
        game.lease = None;
        Ok(records)
    }
}
