//! Policy interface between the toolkit event loop and a builder agent, plus
//! the reference policies.

use builderkit_core::tape::{action_from_tape, Tape, TapeEventKind};
use builderkit_core::voxel::{BlockGrid, BuildAction, Rules, WorldState};
use builderkit_protocol::Role;
use serde::{Deserialize, Serialize};

use crate::grammar::{clarifying_question, parse_command};
use crate::plan::{diff_edits, plan_edits};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatEntry {
    pub role: Role,
    pub text: String,
}

/// What a builder sees at each decision point of its turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentObservation {
    pub world_state: WorldState,
    pub chat_history: Vec<ChatEntry>,
    pub turn_index: u32,
    pub step_budget_remaining: u32,
}

impl AgentObservation {
    pub fn latest_instruction(&self) -> Option<&str> {
        self.chat_history
            .iter()
            .rev()
            .find(|e| e.role == Role::Architect)
            .map(|e| e.text.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentDecision {
    pub actions: Vec<BuildAction>,
    pub end_turn: bool,
    /// Chat line sent before the actions, e.g. a clarifying question.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl AgentDecision {
    pub fn end() -> Self {
        AgentDecision {
            end_turn: true,
            ..Default::default()
        }
    }

    pub fn ask(question: String) -> Self {
        AgentDecision {
            actions: Vec::new(),
            end_turn: true,
            message: Some(question),
        }
    }
}

pub trait Policy {
    fn decide(&mut self, obs: &AgentObservation) -> AgentDecision;
}

impl<F: FnMut(&AgentObservation) -> AgentDecision> Policy for F {
    fn decide(&mut self, obs: &AgentObservation) -> AgentDecision {
        self(obs)
    }
}

/// Ends every builder turn without acting.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoOp;

impl Policy for NoOp {
    fn decide(&mut self, _: &AgentObservation) -> AgentDecision {
        AgentDecision::end()
    }
}

/// Plays back a fixed action list, as much as each turn's budget allows.
#[derive(Debug, Clone)]
pub struct TapeReplay {
    actions: Vec<BuildAction>,
    cursor: usize,
}

impl TapeReplay {
    pub fn new(actions: Vec<BuildAction>) -> Self {
        TapeReplay { actions, cursor: 0 }
    }

    /// Keeps the tape's `action` and `set_look` events; observations are dropped.
    pub fn from_tape(tape: &Tape) -> Self {
        let actions = tape
            .events
            .iter()
            .filter_map(|e| match &e.kind {
                TapeEventKind::Action { name, args } => action_from_tape(name, args),
                TapeEventKind::SetLook { pitch, yaw } => Some(BuildAction::SetLook {
                    pitch: *pitch,
                    yaw: *yaw,
                }),
                _ => None,
            })
            .collect();
        TapeReplay::new(actions)
    }

    /// Action list that turns `start` into `target`, or `None` if some edit cannot be planned.
    pub fn to_target(rules: &Rules, start: &WorldState, target: &BlockGrid) -> Option<Self> {
        plan_edits(rules, start, &diff_edits(&start.grid, target)).ok().map(TapeReplay::new)
    }

    pub fn remaining(&self) -> usize {
        self.actions.len() - self.cursor
    }
}

impl Policy for TapeReplay {
    fn decide(&mut self, obs: &AgentObservation) -> AgentDecision {
        let n = self.remaining().min(obs.step_budget_remaining as usize);
        let actions = self.actions[self.cursor..self.cursor + n].to_vec();
        self.cursor += n;
        AgentDecision {
            actions,
            end_turn: true,
            message: None,
        }
    }
}

/// Reference builder: executes the latest architect message if it follows the
/// command grammar, otherwise asks a clarifying question.
#[derive(Debug, Clone, Default)]
pub struct GrammarBuilder {
    pub rules: Rules,
}

impl GrammarBuilder {
    pub fn new(rules: Rules) -> Self {
        GrammarBuilder { rules }
    }

    pub fn decide(&self, obs: &AgentObservation) -> AgentDecision {
        let Some(text) = obs.latest_instruction() else {
            return AgentDecision::ask("What should I build?".into());
        };
        let edits = match parse_command(text, &self.rules.palette) {
            Ok(edits) => edits,
            Err(e) => return AgentDecision::ask(clarifying_question(&e)),
        };
        match plan_edits(&self.rules, &obs.world_state, &edits) {
            Ok(actions) if actions.len() <= obs.step_budget_remaining as usize => AgentDecision {
                actions,
                end_turn: true,
                message: None,
            },
            Ok(actions) => AgentDecision::ask(format!(
                "That takes {} steps but I only have {} left. Could you split it up?",
                actions.len(),
                obs.step_budget_remaining
            )),
            Err(e) => AgentDecision::ask(format!("I can't do that: {e}. What should I do instead?")),
        }
    }
}

impl Policy for GrammarBuilder {
    fn decide(&mut self, obs: &AgentObservation) -> AgentDecision {
        GrammarBuilder::decide(self, obs)
    }
}

/// [`GrammarBuilder`] with the default palette.
pub fn grammar_builder(obs: &AgentObservation) -> AgentDecision {
    GrammarBuilder::default().decide(obs)
}
