//! Client toolkit for builder agents: connection handling, a local session
//! mirror, the policy interface and deterministic reference agents.

pub mod admin;
pub mod architect;
pub mod conn;
pub mod grammar;
pub mod plan;
pub mod policy;
pub mod runner;

pub use admin::AdminClient;
pub use architect::{ArchitectReport, ScriptedArchitect};
pub use conn::{AgentError, Connection};
pub use grammar::{parse_command, render_command, ParseError};
pub use plan::{diff_edits, plan_edits, Edit, PlanError};
pub use policy::{grammar_builder, AgentDecision, AgentObservation, ChatEntry, GrammarBuilder, NoOp, Policy, TapeReplay};
pub use runner::{run_agent, to_proposal, Mirror, RunOptions, SessionSummary};
